#include "condlim/examples.hpp"

#include <cmath>
#include <filesystem>
#include <map>

#include "condlim/error.hpp"

namespace condlim {

namespace {

RealFunction from_table(const SubshiftSpec& spec, int m, int d, const std::map<std::string, double>& values) {
  return RealFunction::generate(spec, m, d, [&](const int* w) {
    std::string key = window_key(w, m, d);
    if (m == 0) key.erase(0, 1);
    auto it = values.find(key);
    if (it == values.end()) throw InvalidModel("example table misses window " + key);
    return it->second;
  });
}

RealFunction centred(const RealFunction& psi0, const RealFunction& f) {
  GibbsModel g = normalize_potential(psi0);
  return f - g.expectation(f);
}

ExampleModel srw() {
  SubshiftSpec spec = SubshiftSpec::full(2);
  ExampleModel e{"srw", "full 2-shift, psi = 0 (normalizes to log 2), f = +1 on x0 = 0 and -1 on x0 = 1", {spec, {}}};
  e.file.functions.emplace("psi", RealFunction::constant(spec, 0.0));
  e.file.functions.emplace("f", from_table(spec, 0, 1, {{"0", 1.0}, {"1", -1.0}}));
  return e;
}

ExampleModel golden() {
  Eigen::MatrixXi M(2, 2);
  M << 1, 1, 1, 0;
  SubshiftSpec spec(2, M);
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  // Parry potential on (x0, x1): the normalized weights e^{-psi} are the backward
  // transition probabilities of the Parry measure.
  RealFunction psi = from_table(spec, 0, 2, {{"00", std::log(phi)}, {"01", 0.0}, {"10", 2.0 * std::log(phi)}});
  RealFunction f0 = from_table(spec, 0, 3,
                               {{"000", 1.0}, {"001", std::sqrt(5.0)}, {"010", -1.0}, {"100", 0.0}, {"101", phi}});
  ExampleModel e{"golden", "golden-mean shift, Parry potential, centred depth-3 observable with values 1, sqrt5, -1, 0, (1+sqrt5)/2",
                 {spec, {}}};
  e.file.functions.emplace("psi", psi);
  e.file.functions.emplace("f", centred(psi, f0));
  return e;
}

ExampleModel three() {
  Eigen::MatrixXi M(3, 3);
  M << 1, 1, 0, 0, 1, 1, 1, 1, 1;
  SubshiftSpec spec(3, M);
  RealFunction psi = from_table(
      spec, 0, 2, {{"00", 0.7}, {"01", 1.3}, {"11", 0.4}, {"12", 1.1}, {"20", 0.9}, {"21", 1.6}, {"22", 0.5}});
  RealFunction f0 = RealFunction::generate(spec, 1, 2, [](const int* w) {
    return std::sin(1.7 * (9 * w[0] + 3 * w[1] + w[2]) + 0.3);
  });
  ExampleModel e{"three", "3-symbol shift, non-symmetric transitions, generic depth-2 potential, centred two-sided observable",
                 {spec, {}}};
  e.file.functions.emplace("psi", psi);
  e.file.functions.emplace("f", centred(psi, f0));
  return e;
}

}  // namespace

std::vector<ExampleModel> shipped_examples() { return {srw(), golden(), three()}; }

ExampleModel shipped_example(const std::string& name) {
  for (auto& e : shipped_examples())
    if (e.name == name) return e;
  throw ConfigError("no shipped example named \"" + name + "\"");
}

std::vector<std::string> ship_examples(const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& e : shipped_examples()) {
    std::string p = (std::filesystem::path(dir) / (e.name + ".json")).string();
    write_file_atomic(p, model_to_json(e.file));
    paths.push_back(p);
  }
  return paths;
}

}  // namespace condlim
