#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace condlim {

// One experiment, as read from a JSON config or assembled from CLI flags.
struct ExperimentConfig {
  std::string experiment;  // normalize | variance | spectrum | survive | duality | harmonic | mu | cclt | cllt | llt | exit_tail
  std::string model;       // path to a model file
  std::string observable = "f";
  std::string method = "auto";
  std::vector<int> n;      // single n or ladder
  double t = 0.0;
  std::vector<double> t_grid;
  double a = 0.0, b = 1.0;    // t-interval
  double ap = 0.0, bp = 1.0;  // target window
  std::string anchor;         // empty: stationary
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  int cap = 100000;
  int depth = 0;
  int word_length = 2;
  double tol = 1e-12;
  double epsilon = 0.1;
  double grid_h = 0.0;
  int test_functions = 20;
  std::uint64_t budget_states = 0;  // 0: keep the default / environment value
  std::string output;               // CSV path; empty: no file
};

// Strict: unknown keys and wrong types are ConfigErrors (malformed JSON reports line and column).
ExperimentConfig parse_config(const std::string& json_text);
nlohmann::ordered_json config_to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);

// "7", "1..20", "64:4096:x2", "10:100:10", "1,2,5".
std::vector<int> parse_int_list(const std::string& s);
// "-2:5:0.1" or "0.5,1,2".
std::vector<double> parse_grid(const std::string& s);

struct RunReport {
  nlohmann::ordered_json config;
  std::string model_hash;  // git blob SHA-1 of the model file
  double wall_seconds = 0.0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::ordered_json summary;
  std::vector<std::string> warnings;

  std::string csv() const;
  nlohmann::ordered_json to_json() const;
};

// Dispatches to the module operation; writes the CSV (and <output>.json) atomically.
RunReport run(const ExperimentConfig& config);

std::string git_blob_sha1(const std::string& content);
// Shortest round-trip form with 17 significant digits.
std::string format_number(double x);

}  // namespace condlim
