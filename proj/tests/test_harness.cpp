#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "condlim/error.hpp"
#include "condlim/examples.hpp"
#include "condlim/harness.hpp"
#include "condlim/model_io.hpp"

using namespace condlim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  fs::path d = fs::temp_directory_path() / ("condlim_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

int cli(const std::string& args) {
  std::string cmd = std::string(CONDLIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("integer lists") {
  CHECK(parse_int_list("7") == std::vector<int>{7});
  CHECK(parse_int_list("1..4") == std::vector<int>{1, 2, 3, 4});
  CHECK(parse_int_list("64:512:x2") == std::vector<int>{64, 128, 256, 512});
  CHECK(parse_int_list("10:35:10") == std::vector<int>{10, 20, 30});
  CHECK(parse_int_list("1,2,5") == std::vector<int>{1, 2, 5});
  CHECK_THROWS_AS(parse_int_list(""), ConfigError);
  CHECK_THROWS_AS(parse_int_list("5..1"), ConfigError);
  CHECK_THROWS_AS(parse_int_list("1:10:x1"), ConfigError);
  CHECK_THROWS_AS(parse_int_list("a,b"), ConfigError);
}

TEST_CASE("real grids") {
  std::vector<double> g = parse_grid("-1:1:0.5");
  REQUIRE(g.size() == 5);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(parse_grid("0.5,1,2") == std::vector<double>{0.5, 1.0, 2.0});
  CHECK_THROWS_AS(parse_grid("0:1:0"), ConfigError);
}

TEST_CASE("strict config parsing") {
  ExperimentConfig c = parse_config(R"({"experiment": "variance", "model": "m.json", "n": [4, 8]})");
  CHECK(c.experiment == "variance");
  CHECK(c.n == std::vector<int>{4, 8});
  CHECK_THROWS_AS(parse_config(R"({"experiment": "variance", "modle": "m.json"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "variance", "model": 3})"), ConfigError);
  try {
    parse_config("{\n  \"experiment\": \"variance\",\n  \"model\": \n}");
    FAIL("malformed JSON accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  // Roundtrip through JSON.
  ExperimentConfig back = parse_config(config_to_json(c).dump());
  CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("git blob hashes and number formatting") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("model files roundtrip") {
  for (const ExampleModel& e : shipped_examples()) {
    CAPTURE(e.name);
    ModelFile back = parse_model(model_to_json(e.file));
    CHECK(back.spec == e.file.spec);
    REQUIRE(back.functions.size() == e.file.functions.size());
    for (const auto& [name, fn] : e.file.functions) CHECK((model_function(back, name) - fn).sup_norm() == 0.0);
  }
  CHECK_THROWS_AS(parse_model(R"({"alphabet_size": 2, "transition": [[1, 1], [1, 1]], "functions": [
      {"name": "psi", "past_depth": 0, "future_depth": 1, "values": {"0": 1.0}}]})"),
                  ConfigError);
}

TEST_CASE("shipped examples are normalized and centred") {
  for (const ExampleModel& e : shipped_examples()) {
    CAPTURE(e.name);
    GibbsModel m = gibbs_model(e.file);
    CHECK(m.normalization_error <= 1e-10);
    const RealFunction& f = model_function(e.file, "f");
    RealFunction fe = f.extended(std::max(f.past_depth(), 0), std::max(f.future_depth(), m.psi.future_depth()));
    CHECK(std::abs(m.expectation(f.future_only() ? f : fe.shifted(fe.past_depth()))) <= 1e-12);
  }
}

TEST_CASE("runs are deterministic and write their outputs") {
  fs::path d = scratch_dir();
  std::vector<std::string> paths = ship_examples((d / "models").string());
  REQUIRE(paths.size() == 3);
  ExperimentConfig c;
  c.experiment = "survive";
  c.model = (d / "models" / "golden.json").string();
  c.method = "mc";
  c.n = {1, 5, 10};
  c.anchor = "010";
  c.samples = 20000;
  c.seed = 9;
  RunReport a = run(c), b = run(c);
  CHECK(a.csv() == b.csv());
  CHECK(a.model_hash == git_blob_sha1(read_file(c.model)));
  c.output = (d / "out.csv").string();
  RunReport r = run(c);
  CHECK(read_file(c.output) == a.csv());
  auto js = nlohmann::json::parse(read_file(c.output + ".json"));
  CHECK(js["csv_schema"] == "survive/1");
  CHECK(js["columns"].size() == a.columns.size());
  c.seed = 10;
  CHECK(run(c).csv() != a.csv());
  fs::remove_all(d);
}

TEST_CASE("CLI exit codes") {
  fs::path d = scratch_dir();
  REQUIRE(cli("ship-examples --dir " + (d / "m").string()) == 0);
  const std::string golden = (d / "m" / "golden.json").string(), srw = (d / "m" / "srw.json").string();
  CHECK(cli("variance --model " + golden) == 0);
  CHECK(cli("variance --model " + (d / "missing.json").string()) == 2);
  CHECK(cli("variance --model " + golden + " --bogus 1") == 2);
  CHECK(cli("survive --model " + golden + " --n 1..40 --anchor 010 --method exact --budget-states 1000") == 3);
  CHECK(cli("llt --model " + srw + " --n 64:1024:x2 --window 0 1") == 4);
  fs::remove_all(d);
}
