#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <vector>

#include "condlim/shift.hpp"

namespace condlim {

// Ruelle operator g ↦ Σ_{Ty=x} e^{-ψ(y)} g(y) on functions of the first
// `depth` coordinates. Row w holds the weights of its k one-step preimages.
template <typename Scalar>
class TransferMatrix {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  TransferMatrix(const CylinderFunction<Scalar>& potential, int depth);

  int depth() const { return depth_; }
  const WindowSpace& space() const { return *space_; }
  const Sparse& matrix() const { return mat_; }

  Vector apply(const Vector& g) const { return mat_ * g; }
  Vector apply_transpose(const Vector& mu) const { return mat_.transpose() * mu; }

  Vector lift(const CylinderFunction<Scalar>& g) const;
  CylinderFunction<Scalar> as_function(const Vector& v) const {
    return CylinderFunction<Scalar>(space_->spec(), 0, depth_, v);
  }
  Vector ones() const;

 private:
  int depth_;
  std::shared_ptr<const WindowSpace> space_;
  Sparse mat_;
};

// ℒ_ψ g at depth max(d_ψ, d_g).
template <typename Scalar>
CylinderFunction<Scalar> apply_ruelle(const CylinderFunction<Scalar>& psi, const CylinderFunction<Scalar>& g);

// ψ + i t f as a complex potential.
ComplexFunction perturbed_potential(const RealFunction& psi, const RealFunction& f, double t);

struct GibbsModel {
  SubshiftSpec spec;
  RealFunction psi;  // normalized, future-only
  double lambda = 0.0;
  RealFunction h;  // log of the Perron eigenfunction of the input potential
  int depth = 1;   // depth of the nu_plus table
  Eigen::VectorXd nu_plus;
  double normalization_error = 0.0;
  int iterations = 0;

  // ν⁺-masses of all cylinders [w] with |w| = length, dense over the window space.
  Eigen::VectorXd mass_table(int length) const;
  double mass(std::span<const int> word) const;
  // ν(f) for a (possibly two-sided) cylinder function, via shift invariance.
  double expectation(const RealFunction& f) const;
};

struct NormalizeOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  int depth = 0;  // 0: depth of the potential
};

GibbsModel normalize_potential(const RealFunction& psi0, const NormalizeOptions& opts = {});
double gibbs_cylinder_mass(const GibbsModel& model, const Word& w);

// Model of ι_*ν on the transposed subshift: one-step weights are the backward
// conditional probabilities of ν.
GibbsModel reverse_model(const GibbsModel& model);

struct SpectralOptions {
  double tol = 1e-13;
  int max_iter = 100000;
  double gap_tol = 1e-6;
  double t_bound = 10.0;
  int radius_iter = 200;
  bool check_mean = true;
};

struct SpectralData {
  double t = 0.0;
  std::complex<double> lambda;
  ComplexFunction right;       // phase fixed: largest-modulus entry real positive
  Eigen::VectorXcd left;       // left eigenvector on the same window table, <left, right> = 1
  double residual_radius = 0.0;
  int depth = 1;
  int iterations = 0;
};

SpectralData perturbed_spectrum(const GibbsModel& model, const RealFunction& f, double t,
                                const SpectralOptions& opts = {});

struct VarianceFit {
  double sigma2 = 0.0;
  double residual = 0.0;  // rms of the even-polynomial fit
  std::vector<double> grid;
};

// Default grid: t = ±0.02 j, j = 0..5.
VarianceFit variance_from_lambda(const GibbsModel& model, const RealFunction& f, std::vector<double> grid = {});

struct RadiusProbe {
  double t = 0.0;
  double radius = 0.0;
};

std::vector<RadiusProbe> spectral_radius_probe(const GibbsModel& model, const RealFunction& f,
                                               const std::vector<double>& t_grid, int n = 200);

// Default probe grid used by the arithmeticity gates: t = 0.5, 0.52, ..., <= 8π.
// Near t = 0 every radius is close to 1 (|λ_t| ≈ 1 − σ²t²/2), so the grid starts away from it.
std::vector<double> default_probe_grid();

}  // namespace condlim
