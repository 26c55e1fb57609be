#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "condlim/examples.hpp"
#include "condlim/harmonic.hpp"

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

// Harmonic function of the simple random walk killed below 0.
double srw_v(double t) { return t < 0 ? 0.0 : std::floor(t) + 1.0; }

}  // namespace

TEST_CASE("integrated functionals agree across oracles") {
  Ex srw = load("srw");
  WalkChain fc = forward_chain(srw.model, srw.f);
  LevelQuery q;
  q.integrated = true;
  q.a = 0.0;
  q.b = 2.5;
  q.window = true;
  q.wa = 0.0;
  q.wb = 1.0;
  q.n_max = 10;
  IntegratedResult en = integrated_functionals(fc, q, Method::kExact);
  IntegratedResult dp = integrated_functionals(fc, q, Method::kDp);
  for (int k = 0; k < 10; ++k) {
    CAPTURE(k);
    const LevelRow &a = en.rows[static_cast<std::size_t>(k)], &b = dp.rows[static_cast<std::size_t>(k)];
    CHECK(std::abs(a.surv_post - b.surv_post) <= 1e-12);
    CHECK(std::abs(a.value_post - b.value_post) <= 1e-12);
    CHECK(std::abs(a.sum_pre - b.sum_pre) <= 1e-12);
    CHECK(std::abs(a.window_pre - b.window_pre) <= 1e-12);
  }

  Ex golden = load("golden");
  WalkChain gc = forward_chain(golden.model, golden.f);
  q.b = 1.0;
  q.n_max = 8;
  IntegratedResult ge = integrated_functionals(gc, q, Method::kExact);
  IntegratedResult gg = integrated_functionals(gc, q, Method::kGrid, 1e-3);
  for (int k = 0; k < 8; ++k) {
    CAPTURE(k);
    const LevelRow &a = ge.rows[static_cast<std::size_t>(k)], &b = gg.rows[static_cast<std::size_t>(k)];
    CHECK(std::abs(a.surv_post - b.surv_post) <= 1e-3);
    CHECK(std::abs(a.value_post - b.value_post) <= 1e-3);
    CHECK(std::abs(a.window_pre - b.window_pre) <= 1e-3);
  }
}

TEST_CASE("finite-n harmonic values increase and stay bounded") {
  Ex e = load("three");
  MartingaleData md = martingale_part(e.model, e.f);
  PastMeasure pm = make_past_measure(e.model, Word{{0, 1}, 0});
  for (double t : {0.0, 0.8, 2.0}) {
    double prev = -1.0;
    for (int n : {4, 8, 16, 32}) {
      // g0 = f0 is a martingale, so V̌_n(t) = t + E[-(t + Š_τ) 1{τ <= n}] grows with n.
      FiniteN v = harmonic_finite_n(pm, md.f0, t, n);
      CHECK(v.value >= prev - 1e-12);
      CHECK(v.value <= std::max(t, 0.0) + md.bound_constant() + 1e-12);
      prev = v.value;
    }
  }
}

TEST_CASE("stopped Monte Carlo recovers the ballot harmonic function") {
  Ex e = load("srw");
  for (double t : {0.0, 0.5, 2.25}) {
    CAPTURE(t);
    StoppedMc s = harmonic_stopped_mc(e.model, e.f, Word{{0}, 0}, t, 40000, 20000, 5);
    CHECK(std::abs(s.value.estimate - srw_v(t)) <= 4.0 * s.value.std_error + s.bias_bound + 1e-12);
    CHECK(s.exited > 0);
  }
}

TEST_CASE("exact harmonic function has zero residual") {
  Ex e = load("srw");
  HarmonicOracle V = [](const Word&, double t) { return srw_v(t); };
  ResidualReport r = harmonicity_residual(e.model, e.f, V, enumerate_words(e.model.spec, 1), {0.0, 0.5, 1.0, 2.5, 7.0});
  CHECK(r.max_residual <= 1e-12);
  CHECK(r.points == 10);
  // A non-harmonic candidate is detected.
  HarmonicOracle W = [](const Word&, double t) { return t + 1.0; };
  CHECK(harmonicity_residual(e.model, e.f, W, enumerate_words(e.model.spec, 1), {0.5}).max_residual > 0.1);
}

TEST_CASE("conditioned past measure is a probability measure") {
  Ex e = load("srw");
  PastMeasure pm = make_past_measure(e.model, Word{{0}, 0});
  DepthOracle V = [](const Word&, double t, int) { return srw_v(t); };
  for (double t : {0.0, 0.5, 3.0}) {
    for (int depth = 1; depth <= 6; ++depth) {
      double total = 0.0;
      for (const Word& a : enumerate_words(e.model.spec, depth))
        total += mu_minus_cylinder_mass(pm, e.f, t, Word{a.symbols, -depth}, V);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("tabulated harmonic function") {
  TabulatedHarmonic tab(1, {0.0, 1.0, 2.0});
  tab.set(Word{{0}, 0}, {1.0, 2.0, 3.0});
  CHECK(tab(Word{{0}, 0}, 1.0) == 2.0);
  CHECK_THROWS_AS(tab(Word{{0}, 0}, 0.5), GridNotClosed);
  TabulatedHarmonic lin(1, {0.0, 1.0, 2.0}, true);
  lin.set(Word{{0}, 0}, {1.0, 2.0, 4.0});
  CHECK(lin(Word{{0}, 0}, 1.5) == doctest::Approx(3.0));
}

TEST_CASE("Richardson limit removes the n^-1/2 term") {
  IntegratedResult r;
  r.rows.resize(64);
  r.err.resize(64);
  for (int n = 1; n <= 64; ++n) {
    r.rows[static_cast<std::size_t>(n - 1)].value_post = 3.0 - 2.0 / std::sqrt(static_cast<double>(n));
    r.err[static_cast<std::size_t>(n - 1)].value_post = 1e-3;
  }
  Extrapolated x = extrapolate_harmonic(r, 64);
  CHECK(x.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x.error == doctest::Approx(1e-3 * (8.0 + 4.0) / 4.0));
  CHECK(extrapolate_harmonic(r, 3).value == r.rows[2].value_post);
}

TEST_CASE("exit tail integral is the exact survival mass") {
  Ex e = load("srw");
  ExitTailResult et = exit_tail_experiment(e.model, e.f, 0.0, 1.0, {4, 16, 64}, Method::kDp);
  // On [0, 1) the walk survives n steps iff the ±1 walk from 0 does.
  for (const ExitTailRow& r : et.rows) {
    double c = 1.0;
    for (int i = 1; i <= r.n / 2; ++i) c = c * (r.n - r.n / 2 + i) / i;
    CHECK(r.integral == doctest::Approx(c / std::ldexp(1.0, r.n)).epsilon(1e-12));
  }
  // V̂ = floor(t) + 1 = 1 on [0, 1).
  CHECK(std::abs(et.v_integral - 1.0) <= 5e-3);
  CHECK(et.sigma2 == doctest::Approx(1.0));
}

TEST_CASE("quasi-invariance limits are reported from n >= 4") {
  Ex e = load("srw");
  std::vector<BasisElement> basis{{Word{}, {0.0, 1.0}}, {Word{{0}, 0}, {0.5, 2.0}}};
  auto rows = quasi_invariance_residual(e.model, e.f, basis, {2, 64, 256}, Method::kDp);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    if (r.n < 4) {
      CHECK(std::isnan(r.limit_residual));
    } else {
      CHECK(r.limit_residual <= 0.05 * std::abs(r.lhs_limit) + 1e-3);
    }
  }
}

TEST_CASE("Rayleigh distribution and KS distance") {
  CHECK(rayleigh_cdf(0.0) == 0.0);
  CHECK(rayleigh_cdf(-1.0) == 0.0);
  CHECK(rayleigh_cdf(1.0) == doctest::Approx(1.0 - std::exp(-0.5)));
  const int N = 1000;
  std::vector<double> q;
  for (int i = 0; i < N; ++i) q.push_back(std::sqrt(-2.0 * std::log(1.0 - (i + 0.5) / N)));
  std::reverse(q.begin(), q.end());
  CHECK(ks_distance_rayleigh(q) == doctest::Approx(0.5 / N).epsilon(1e-9));
}

TEST_CASE("conditioned CLT needs survivors") {
  Ex e = load("golden");
  CHECK_THROWS_AS(conditioned_clt_experiment(e.model, e.f, 0.0, 1.0, 400, 50, 3), TooFewSurvivors);
}
