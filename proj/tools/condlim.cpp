#include <CLI11.hpp>

#include <iostream>

#include "condlim/error.hpp"
#include "condlim/examples.hpp"
#include "condlim/harness.hpp"
#include "condlim/model_io.hpp"

using namespace condlim;

namespace {

struct Flags {
  ExperimentConfig cfg;
  std::string n, n_ladder, t_grid, config_path, dir = "models";
  std::vector<double> interval, window;
  bool json = false;
};

void add_common(CLI::App* sc, Flags& f) {
  sc->add_option("--model", f.cfg.model, "model JSON file")->required();
  sc->add_option("--observable", f.cfg.observable, "function name in the model file");
  sc->add_option("--method", f.cfg.method, "auto|exact|dp|grid|mc");
  sc->add_option("--n", f.n, "n, a range 1..N, a ladder lo:hi:xK or lo:hi:step, or a list");
  sc->add_option("--n-ladder", f.n_ladder, "n ladder, e.g. 64:4096:x2");
  sc->add_option("--t", f.cfg.t, "starting level t");
  sc->add_option("--t-grid", f.t_grid, "t grid lo:hi:step or list");
  sc->add_option("--interval", f.interval, "t-interval a b")->expected(2);
  sc->add_option("--window", f.window, "target window a' b'")->expected(2);
  sc->add_option("--anchor", f.cfg.anchor, "future word z as digits (default: stationary)");
  sc->add_option("--samples", f.cfg.samples, "Monte Carlo trajectories");
  sc->add_option("--seed", f.cfg.seed, "64-bit seed");
  sc->add_option("--workers", f.cfg.workers, "worker threads");
  sc->add_option("--cap", f.cfg.cap, "stopped-MC step cap");
  sc->add_option("--depth", f.cfg.depth, "normalization table depth");
  sc->add_option("--word-length", f.cfg.word_length, "cylinder length for mu");
  sc->add_option("--tol", f.cfg.tol, "normalization tolerance");
  sc->add_option("--epsilon", f.cfg.epsilon, "LLT smoothing scale");
  sc->add_option("--grid-h", f.cfg.grid_h, "grid spacing for the GRID oracle");
  sc->add_option("--test-functions", f.cfg.test_functions, "duality test functions");
  sc->add_option("--budget-states", f.cfg.budget_states, "enumeration budget");
  sc->add_option("--output", f.cfg.output, "CSV output path (report goes to <path>.json)");
  sc->add_flag("--json", f.json, "print the run report as JSON on standard output");
}

void finish_flags(Flags& f) {
  if (!f.n.empty()) f.cfg.n = parse_int_list(f.n);
  if (!f.n_ladder.empty()) f.cfg.n = parse_int_list(f.n_ladder);
  if (!f.t_grid.empty()) f.cfg.t_grid = parse_grid(f.t_grid);
  if (f.interval.size() == 2) {
    f.cfg.a = f.interval[0];
    f.cfg.b = f.interval[1];
  }
  if (f.window.size() == 2) {
    f.cfg.ap = f.window[0];
    f.cfg.bp = f.window[1];
  }
}

int emit(const RunReport& rep, const Flags& f) {
  if (f.json)
    std::cout << rep.to_json().dump(2) << "\n";
  else if (f.cfg.output.empty())
    std::cout << rep.csv();
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"condlim: conditioned limit theorems on subshifts of finite type"};
  app.require_subcommand(1);
  Flags f;
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"normalize", "normalize the potential"},
      {"variance", "asymptotic variance and martingale decomposition"},
      {"spectrum", "leading eigenvalue of the perturbed operator on a t-grid"},
      {"survive", "survival probabilities of the reversed walk"},
      {"duality", "both sides of the duality identity"},
      {"harmonic", "harmonic function on a t-grid"},
      {"mu", "cylinder masses of the conditioned past measure"},
      {"cclt", "conditioned CLT against the Rayleigh law"},
      {"cllt", "conditioned LLT scaling"},
      {"llt", "unconditioned LLT remainder decay"},
      {"exit-tail", "integrated exit-time tail against its asymptotic"}};
  std::string chosen;
  for (const auto& [name, help] : kinds) {
    CLI::App* sc = app.add_subcommand(name, help);
    add_common(sc, f);
    sc->callback([&chosen, name = name] { chosen = name; });
  }
  CLI::App* run_sc = app.add_subcommand("run", "run an experiment from a JSON config");
  run_sc->add_option("--config", f.config_path, "config file")->required();
  run_sc->add_flag("--json", f.json, "print the run report as JSON on standard output");
  run_sc->callback([&] { chosen = "run"; });
  CLI::App* ship = app.add_subcommand("ship-examples", "write the shipped example models");
  ship->add_option("--dir", f.dir, "output directory");
  ship->callback([&] { chosen = "ship-examples"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::kConfig);
  }

  try {
    if (chosen == "ship-examples") {
      for (const auto& p : ship_examples(f.dir)) std::cout << p << "\n";
      return 0;
    }
    if (chosen == "run") {
      ExperimentConfig cfg = parse_config(read_file(f.config_path));
      f.cfg = cfg;
      return emit(run(cfg), f);
    }
    finish_flags(f);
    f.cfg.experiment = chosen == "exit-tail" ? "exit_tail" : chosen;
    return emit(run(f.cfg), f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
