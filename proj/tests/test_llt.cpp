#include <doctest.h>

#include <cmath>
#include <numbers>

#include "condlim/cohomology.hpp"
#include "condlim/examples.hpp"
#include "condlim/llt.hpp"

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

constexpr double kPiTest = std::numbers::pi;

Word first_word(const SubshiftSpec& s, int len) { return enumerate_words(s, len).front(); }

}  // namespace

TEST_CASE("Fejer kernel") {
  FejerKernel k = make_kernel(0.1);
  CHECK(k.scale == doctest::Approx(0.1));
  CHECK(std::abs(k.grid_mass + k.tail_mass - 1.0) <= 1e-10);
  for (double u : {0.003, 0.05, 1.7}) CHECK(k.density(u) == doctest::Approx(k.density(-u)));
  CHECK(k.cdf(0.0) == doctest::Approx(0.5));
  CHECK(k.hat(0.0) == 1.0);
  CHECK(k.hat(1.0 / k.scale) == 0.0);
  CHECK(k.hat(0.5 / k.scale) == doctest::Approx(0.5));
  // ρ_{ε²} puts at most 2ε outside [-ε, ε].
  for (double eps : {0.05, 0.1, 0.2}) {
    FejerKernel k2 = make_kernel(eps * eps);
    CHECK(2.0 * (1.0 - k2.cdf(eps)) <= 2.0 * eps);
  }
}

TEST_CASE("band-limited target") {
  Ex e = load("golden");
  RealFunction base = RealFunction::generate(e.model.spec, 0, 1, [](const int* w) { return 1.0 + w[0]; });
  BandLimitedTarget F = make_target(base, 0.0, 1.0, 0.1);
  CHECK(F.support_bound() == doctest::Approx(100.0));
  CHECK(F.profile_hat(0.0).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(F.profile_hat(101.0)) == 0.0);
  FourierSupportCheck fc = fourier_support_check(F);
  CHECK(fc.max_outside < 1e-8);
  // Tails of P beyond the tapered half of the window hold about 4ε²/(π·500) of mass.
  CHECK(fc.max_inside_error < 4.0 * 0.01 / (kPiTest * 500.0) * 1.2);
  std::vector<double> us;
  for (int i = 0; i <= 40; ++i) us.push_back(2.5 * i);
  NormDominationCheck nd = norm_domination_check(F, us);
  CHECK(nd.holds);
  CHECK(nd.max_ratio <= 1.0 + 1e-12);
  // P is the window smoothed at scale ε², so it sits between the shrunk and grown windows.
  std::vector<double> ts;
  for (int i = -20; i <= 40; ++i) ts.push_back(0.05 * i);
  auto inner = [](double t) { return (t >= 0.2 && t < 0.8) ? 0.9 : 0.0; };
  auto outer = [](double t) { return (t >= -0.2 && t < 1.2) ? 1.0 : 0.05; };
  auto P = [&](double t) { return F.profile(t); };
  CHECK(epsilon_dominated(inner, P, 0.1, ts));
  CHECK(epsilon_dominated(P, outer, 0.1, ts));
  CHECK_FALSE(epsilon_dominated(outer, P, 0.1, ts));
}

TEST_CASE("Gaussian main term against a Gaussian profile") {
  const double s = 0.7, sigma2 = 0.3;
  auto prof = [s](double u) { return std::exp(-0.5 * u * u / (s * s)); };
  for (int n : {1, 10, 100}) {
    double got = gaussian_main_term(prof, sigma2, n, -40.0, 40.0, 1e-3);
    double want = std::sqrt(n) * s / std::sqrt(sigma2 * n + s * s);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("Fourier oracle matches enumeration") {
  Ex e = load("golden");
  RealFunction base = RealFunction::generate(e.model.spec, 0, 1, [](const int* w) { return 1.0 + w[0]; });
  BandLimitedTarget F = make_target(base, 0.0, 1.0, 0.1);
  Word z = first_word(e.model.spec, 3);
  for (int n : {4, 10, 14}) {
    CAPTURE(n);
    LltOptions fo, eo;
    eo.oracle = LltOracle::kEnum;
    LltPoint a = llt_evaluate(e.model, e.f, F, n, z, fo), b = llt_evaluate(e.model, e.f, F, n, z, eo);
    CHECK(a.oracle == "FOURIER");
    CHECK(b.oracle == "ENUM");
    CHECK(std::abs(a.lhs - b.lhs) <= 1e-6);
    CHECK(a.main == b.main);
  }
}

TEST_CASE("zero target gives zero") {
  Ex e = load("golden");
  BandLimitedTarget F = make_target(RealFunction::constant(e.model.spec, 0.0), 0.0, 1.0, 0.1);
  LltPoint p = llt_evaluate(e.model, e.f, F, 20, first_word(e.model.spec, 3));
  CHECK(std::abs(p.lhs) <= 1e-12);
  CHECK(p.main == 0.0);
}

TEST_CASE("lattice observables are gated") {
  Ex e = load("srw");
  BandLimitedTarget F = make_target(RealFunction::constant(e.model.spec, 1.0), 0.0, 1.0, 0.1);
  CHECK_THROWS_AS(llt_evaluate(e.model, e.f, F, 10, Word{{0}, 0}), ArithmeticObservable);
  LltOptions o;
  o.gate = false;
  CHECK_NOTHROW(llt_evaluate(e.model, e.f, F, 10, Word{{0}, 0}, o));
  Ex three = load("three");
  CHECK_THROWS_AS(llt_evaluate(three.model, three.f, F, 10, Word{{0, 0}, 0}), PastDependence);
}

TEST_CASE("main term is a cohomology invariant") {
  Ex e = load("golden");
  RealFunction u = RealFunction::generate(e.model.spec, 0, 2, [](const int* w) { return 0.4 * w[0] - 0.3 * w[1]; });
  RealFunction g2 = e.f + u.shifted(1) - u;
  BandLimitedTarget F = make_target(RealFunction::constant(e.model.spec, 1.0), -0.5, 0.5, 0.1);
  Word z = first_word(e.model.spec, 4);
  LltPoint a = llt_evaluate(e.model, e.f, F, 30, z), b = llt_evaluate(e.model, g2, F, 30, z);
  CHECK(a.main == doctest::Approx(b.main).epsilon(1e-9));
}

TEST_CASE("remainder fit flags low signal") {
  std::vector<LltPoint> clean, noisy;
  for (int n : {64, 128, 256, 512}) {
    LltPoint p;
    p.n = n;
    p.remainder = 3.0 / std::sqrt(static_cast<double>(n));
    clean.push_back(p);
    p.remainder = (n == 128 || n == 512) ? 1e-3 : 1e-1;
    noisy.push_back(p);
  }
  LltFit a = fit_remainders(clean);
  CHECK(a.fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_FALSE(a.low_signal);
  CHECK(fit_remainders(noisy).low_signal);
  CHECK_THROWS_AS(fit_remainders({clean.front()}), PreconditionFailed);
}
