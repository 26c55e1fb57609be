#include <doctest.h>

#include <cmath>

#include "condlim/examples.hpp"
#include "condlim/past_measure.hpp"

using namespace condlim;

namespace {

struct Ex {
  GibbsModel model;
  RealFunction f;
};

Ex load(const std::string& name) {
  ExampleModel e = shipped_example(name);
  return {gibbs_model(e.file), model_function(e.file, "f")};
}

double binomial_half(int n) {
  double c = 1.0;
  for (int i = 1; i <= n / 2; ++i) c = c * (n - n / 2 + i) / i;
  return c / std::ldexp(1.0, n);
}

Word prepend(const Word& a, int b) {
  Word out = a;
  out.symbols.insert(out.symbols.begin(), b);
  out.origin_offset = a.origin_offset - 1;
  return out;
}

}  // namespace

TEST_CASE("past measure is a consistent family") {
  Ex e = load("three");
  for (const Word& z : enumerate_words(e.model.spec, 2)) {
    PastMeasure pm = make_past_measure(e.model, z);
    double total = 0.0;
    for (int b = 0; b < 3; ++b) total += past_cylinder_mass(pm, Word{{b}, -1});
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (const Word& a0 : enumerate_words(e.model.spec, 3)) {
      Word a{a0.symbols, -3};
      double sum = 0.0;
      for (int b = 0; b < 3; ++b) sum += past_cylinder_mass(pm, prepend(a, b));
      CHECK(sum == doctest::Approx(past_cylinder_mass(pm, a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("anchor must be admissible and long enough") {
  Ex e = load("golden");
  CHECK_THROWS_AS(make_past_measure(e.model, Word{{1, 1}, 0}), PreconditionFailed);
  CHECK_NOTHROW(make_past_measure(e.model, Word{{0, 1, 0}, 0}));
}

TEST_CASE("ballot numbers for the simple random walk") {
  Ex e = load("srw");
  PastMeasure pm = make_past_measure(e.model, Word{{1}, 0});
  for (int n = 1; n <= 20; ++n) {
    CAPTURE(n);
    SurvivalValue s = survival_exact(pm, e.f, 0.0, n);
    CHECK(s.survival == binomial_half(n));
    // Optional stopping with S_τ = -1: E[S_n; τ > n] = P(τ <= n).
    CHECK(s.value == doctest::Approx(1.0 - binomial_half(n)).epsilon(1e-14));
  }
}

TEST_CASE("exact enumeration equals the lattice DP") {
  Ex e = load("three");
  RealFunction g = RealFunction::generate(e.model.spec, 1, 2, [](const int* w) { return (w[0] + 2 * w[1] + w[2]) % 3 - 1.0; });
  for (const Word& z : enumerate_words(e.model.spec, 2)) {
    PastMeasure pm = make_past_measure(e.model, z);
    for (double t : {0.0, 0.5, 2.0}) {
      for (int n : {1, 5, 12}) {
        for (ExitIndexing idx : {ExitIndexing::kAfterN, ExitIndexing::kAfterNMinus1}) {
          SurvivalValue a = survival_exact(pm, g, t, n, idx), b = survival_dp(pm, g, t, n, idx);
          CHECK(std::abs(a.survival - b.survival) <= 1e-12);
          CHECK(std::abs(a.value - b.value) <= 1e-12);
          CHECK(std::abs(a.sum - b.sum) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("lattice DP rejects non-lattice observables") {
  Ex e = load("golden");
  PastMeasure pm = make_past_measure(e.model, Word{{0, 1, 0}, 0});
  CHECK_THROWS_AS(survival_dp(pm, e.f, 0.0, 5), NotLattice);
}

TEST_CASE("Monte Carlo agrees with enumeration") {
  Ex e = load("golden");
  PastMeasure pm = make_past_measure(e.model, Word{{0, 0, 1}, 0});
  std::vector<int> ladder{1, 4, 9, 14};
  McOptions mc;
  mc.samples = 200000;
  mc.seed = 11;
  McSurvival s = survival_mc(pm, e.f, 0.3, ladder, mc);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    SurvivalValue ex = survival_exact(pm, e.f, 0.3, ladder[i]);
    CHECK(std::abs(s.survival[i].estimate - ex.survival) <= 4.0 * s.survival[i].std_error + 1e-12);
    CHECK(std::abs(s.value[i].estimate - ex.value) <= 4.0 * s.value[i].std_error + 1e-12);
  }
  // Worker count never changes the result.
  mc.workers = 3;
  McSurvival s3 = survival_mc(pm, e.f, 0.3, ladder, mc);
  for (std::size_t i = 0; i < ladder.size(); ++i) CHECK(s3.survival[i].estimate == s.survival[i].estimate);
}

TEST_CASE("grid oracle converges to enumeration") {
  // With few distinct paths the |r(h) - r(h/2)| error is only a heuristic, so
  // this checks convergence at a fine spacing rather than the reported error.
  Ex e = load("golden");
  WalkChain chain(e.model, e.f, Word{{0, 1, 0}, 0});
  for (double t : {0.0, 0.37, 1.2}) {
    CAPTURE(t);
    SeriesOptions so;
    so.method = Method::kGrid;
    so.grid_h = 1e-3;
    SurvivalSeries g = survival_series(chain, t, {6, 12}, so);
    std::vector<SurvivalValue> ex = enumerate_survival(chain, t, 12);
    CHECK(g.method == "GRID");
    for (std::size_t i = 0; i < 2; ++i) {
      auto n = static_cast<std::size_t>(g.n[i]);
      CHECK(std::abs(g.value[i].estimate - ex[n].value) <= 1e-4);
      CHECK(std::abs(g.survival[i].estimate - ex[n].survival) <= 1e-4);
      CHECK(std::abs(g.sum[i].estimate - ex[n].sum) <= 1e-4);
    }
  }
}

TEST_CASE("grid kills targets just below zero") {
  // From t = -0.75 every first step ends below zero, between grid points.
  Ex e = load("srw");
  WalkChain chain(e.model, 0.5 * e.f, Word{{1}, 0});
  SeriesOptions so;
  so.method = Method::kGrid;
  so.grid_h = 0.3;
  SurvivalSeries s = survival_series(chain, -0.75, {1, 3}, so);
  CHECK(s.survival[0].estimate == 0.0);
  CHECK(s.value[1].estimate == 0.0);
}

TEST_CASE("duality identity holds exactly") {
  for (const char* name : {"srw", "golden", "three"}) {
    CAPTURE(name);
    Ex e = load(name);
    std::vector<DualityTerm> F{{1.0, Word{{0}, 0}, {0.0, 1.0}, Word{{1}, 0}, {-0.5, 2.0}},
                               {-0.7, Word{{1, 0}, -1}, {-1.0, 0.5}, Word{}, {0.2, 0.9}},
                               {0.4, Word{}, {0.0, 3.0}, Word{{0}, 2}, {0.0, 3.0}}};
    for (int n = 1; n <= 7; ++n) {
      DualityResult d = duality_check(e.model, e.f, F, n);
      CHECK(d.abs_diff <= 1e-10);
    }
    CHECK(std::abs(duality_check(e.model, e.f, F, 3).lhs) > 1e-3);
  }
}

TEST_CASE("density between conditional past measures") {
  Ex e = load("three");
  Word y{{0, 1}, -2}, z{{2, 0}, 0}, zp{{2, 2}, 0};
  CHECK(density_theta(e.model, y, z, z) == 0.0);
  CHECK(density_theta(e.model, y, z, zp) == doctest::Approx(-density_theta(e.model, y, zp, z)));
}

TEST_CASE("method names roundtrip") {
  for (Method m : {Method::kAuto, Method::kExact, Method::kDp, Method::kGrid, Method::kMc})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("bogus"), ConfigError);
}

TEST_CASE("sampled trajectories are reproducible") {
  Ex e = load("golden");
  PastMeasure pm = make_past_measure(e.model, Word{{0, 1, 0}, 0});
  PhiloxStream a(9, 1, 3), b(9, 1, 3);
  TrajectoryState x = sample_past(pm, e.f, 0.5, 50, a), y = sample_past(pm, e.f, 0.5, 50, b);
  CHECK(x.past == y.past);
  CHECK(x.sums == y.sums);
  CHECK(x.steps <= 50);
  for (std::size_t i = 0; i + 1 < x.past.size(); ++i) CHECK(e.model.spec.allowed(x.past[i + 1], x.past[i]));
}
