#include <doctest.h>

#include <cmath>
#include <numbers>

#include "condlim/cohomology.hpp"
#include "condlim/examples.hpp"
#include "condlim/transfer.hpp"

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

double ruelle_one_defect(const GibbsModel& m) {
  return (apply_ruelle(m.psi, RealFunction::constant(m.spec, 1.0)) - 1.0).sup_norm();
}

}  // namespace

TEST_CASE("normalization on every shipped model") {
  for (const char* name : {"srw", "golden", "three"}) {
    CAPTURE(name);
    Ex e = load(name);
    CHECK(ruelle_one_defect(e.model) <= 1e-10);
    CHECK(e.model.normalization_error <= 1e-10);
    CHECK(e.model.nu_plus.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pressure of known potentials") {
  CHECK(load("srw").model.lambda == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Golden mean shift with ψ0 = 0: pressure −log φ in the e^{-ψ} convention.
  Eigen::MatrixXi M(2, 2);
  M << 1, 1, 1, 0;
  SubshiftSpec s(2, M);
  GibbsModel g = normalize_potential(RealFunction::constant(s, 0.0));
  CHECK(std::abs(g.lambda) == doctest::Approx(std::log(std::numbers::phi)).epsilon(1e-10));
  CHECK(ruelle_one_defect(g) <= 1e-10);
}

TEST_CASE("normalization is idempotent and cohomology invariant") {
  Ex e = load("three");
  GibbsModel again = normalize_potential(e.model.psi);
  CHECK((again.psi - e.model.psi).sup_norm() <= 1e-10);
  CHECK(std::abs(again.lambda) <= 1e-10);
  // ψ + u∘T − u + c normalizes to the same ψ.
  RealFunction u = RealFunction::generate(e.model.spec, 0, 2, [](const int* w) { return 0.3 * w[0] - 0.2 * w[1]; });
  RealFunction psi2 = e.model.psi + u.shifted(1) - u + 0.7;
  GibbsModel n2 = normalize_potential(psi2);
  CHECK((n2.psi.extended(0, 3) - e.model.psi.extended(0, 3)).sup_norm() <= 1e-9);
  CHECK(std::abs(n2.lambda) == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("Gibbs cylinder masses are consistent") {
  Ex e = load("golden");
  for (const Word& w : enumerate_words(e.model.spec, 3)) {
    double sum = 0.0;
    for (int b = 0; b < 2; ++b) {
      Word wb = w;
      wb.symbols.push_back(b);
      sum += gibbs_cylinder_mass(e.model, wb);
    }
    CHECK(sum == doctest::Approx(gibbs_cylinder_mass(e.model, w)).epsilon(1e-12));
  }
  // Parry measure of [0] is φ²/(1+φ²).
  double phi2 = std::numbers::phi * std::numbers::phi;
  CHECK(gibbs_cylinder_mass(e.model, Word{{0}, 0}) == doctest::Approx(phi2 / (1.0 + phi2)).epsilon(1e-12));
}

TEST_CASE("reverse model describes the same measure") {
  Ex e = load("three");
  GibbsModel r = reverse_model(e.model);
  CHECK(ruelle_one_defect(r) <= 1e-10);
  for (const Word& w : enumerate_words(e.model.spec, 4)) {
    Word rw{std::vector<int>(w.symbols.rbegin(), w.symbols.rend()), 0};
    CHECK(gibbs_cylinder_mass(r, rw) == doctest::Approx(gibbs_cylinder_mass(e.model, w)).epsilon(1e-10));
  }
}

TEST_CASE("perturbed eigenvalue on the simple random walk") {
  Ex e = load("srw");
  for (double t : {0.1, 0.7, 1.5, 2.9}) {
    CAPTURE(t);
    SpectralData sd = perturbed_spectrum(e.model, e.f, t);
    CHECK(std::abs(sd.lambda - std::complex<double>(std::cos(t), 0.0)) <= 1e-12);
    SpectralData neg = perturbed_spectrum(e.model, e.f, -t);
    CHECK(std::abs(neg.lambda - std::conj(sd.lambda)) <= 1e-12);
  }
}

TEST_CASE("variance scales quadratically") {
  Ex e = load("golden");
  double s1 = variance_from_lambda(e.model, e.f).sigma2;
  double s2 = variance_from_lambda(e.model, 2.0 * e.f).sigma2;
  CHECK(s2 == doctest::Approx(4.0 * s1).epsilon(1e-8));
  CHECK(s1 == doctest::Approx(0.1853243594).epsilon(1e-8));
}

TEST_CASE("spectral radius probe separates lattice from non-lattice") {
  Ex srw = load("srw");
  auto at_pi = spectral_radius_probe(srw.model, srw.f, {std::numbers::pi});
  CHECK(at_pi[0].radius >= 1.0 - 1e-9);
  auto at_half_pi = spectral_radius_probe(srw.model, srw.f, {std::numbers::pi / 2});
  CHECK(at_half_pi[0].radius < 0.1);
  Ex golden = load("golden");
  for (const auto& p : spectral_radius_probe(golden.model, golden.f, {1.0, 2.0, 3.0})) CHECK(p.radius < 0.999);
  double worst = 0.0;
  for (const auto& p : spectral_radius_probe(golden.model, golden.f, default_probe_grid())) worst = std::max(worst, p.radius);
  CHECK(worst < 0.999);
}

TEST_CASE("eigenvalue is a cohomology invariant") {
  Ex e = load("golden");
  RealFunction u = RealFunction::generate(e.model.spec, 0, 2, [](const int* w) { return std::cos(w[0] + 2.0 * w[1]); });
  RealFunction f2 = e.f + u.shifted(1) - u;
  for (double t : {0.4, 1.7}) {
    auto a = perturbed_spectrum(e.model, e.f, t).lambda, b = perturbed_spectrum(e.model, f2, t).lambda;
    CHECK(std::abs(a - b) <= 1e-10);
  }
}

TEST_CASE("spectral preconditions") {
  Ex e = load("golden");
  CHECK_THROWS_AS(perturbed_spectrum(e.model, e.f + 1.0, 0.5), NonZeroMean);
  Ex three = load("three");
  CHECK_THROWS_AS(perturbed_spectrum(three.model, three.f, 0.5), PastDependence);
}
