#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "condlim/numeric.hpp"
#include "condlim/past_measure.hpp"
#include "condlim/shift.hpp"
#include "condlim/transfer.hpp"

namespace condlim {

// ρ_s(u) = ρ(u/s)/s with ρ(u) = (1 − cos u)/(π u²), the Fourier transform of
// (1 − |t|)₊ normalized to a probability density; ρ̂_s(t) = (1 − s|t|)₊.
struct FejerKernel {
  double scale = 0.0;
  double density(double u) const;
  double cdf(double u) const;
  double hat(double t) const;
  // Quadrature grid on [-X, X] with spacing scale/8; X is a multiple of 2π·scale
  // so that the kernel and its derivative vanish at the ends.
  std::vector<double> u, values;
  double grid_mass = 0.0;  // trapezoid mass on the grid
  double tail_mass = 0.0;  // exact mass outside [-X, X]
};

FejerKernel make_kernel(double epsilon);

// F(z', t) = base(z') · P(t) with P = 1_[lo,hi) * ρ_{ε²}, so P̂ vanishes outside [-1/ε², 1/ε²].
struct BandLimitedTarget {
  RealFunction base;
  Interval window;
  double epsilon = 0.1;

  double profile(double t) const;
  std::complex<double> profile_hat(double u) const;  // ∫ P(t) e^{-iut} dt
  double support_bound() const { return 1.0 / (epsilon * epsilon); }
  // ∫ ‖F(·,t)‖_α dt = ‖base‖_α ∫ P, since P >= 0.
  double norm_integral(double alpha = 0.5) const;
};

BandLimitedTarget make_target(const RealFunction& base, double lo, double hi, double epsilon);

// Trapezoid values of P on a uniform grid with spacing <= ε²/8 over [-X, X] (X centred on the window).
struct ProfileGrid {
  double step = 0.0;
  double lo = 0.0;
  std::vector<double> values;
};
ProfileGrid sample_profile(const BandLimitedTarget& F, double half_width);

struct FourierSupportCheck {
  double max_outside = 0.0;    // max |F̂(·,u)| on [(1+margin)/ε², 3/ε²]
  double mass_outside = 0.0;   // ∫ |F̂| over the same range
  double max_inside_error = 0.0;  // numeric vs closed form inside the support
  double margin = 0.0;
};

// F̂ from the sampled profile with a cosine taper at the ends of the sampling window.
FourierSupportCheck fourier_support_check(const BandLimitedTarget& F, double half_width = 1000.0, double margin = 0.05,
                                          int frequencies = 200);

struct NormDominationCheck {
  double max_ratio = 0.0;  // max_u ‖F̂(·,u)‖ / ∫‖F(·,t)‖dt
  bool holds = false;
};
NormDominationCheck norm_domination_check(const BandLimitedTarget& F, const std::vector<double>& u_grid,
                                          double alpha = 0.5);

// f ≤_ε g on a grid: f(t) <= g(t + v) for all grid t and |v| <= ε (v sampled with v_points points).
bool epsilon_dominated(const std::function<double(double)>& f, const std::function<double(double)>& g, double epsilon,
                       const std::vector<double>& t_grid, int v_points = 41);

// √n ∫ N_{σ²n}(u) P(u) du by compensated trapezoid quadrature on [lo, hi].
double gaussian_main_term(const std::function<double(double)>& profile, double sigma2, int n, double lo, double hi,
                          double step);

enum class LltOracle { kFourier, kEnum };

struct LltOptions {
  LltOracle oracle = LltOracle::kFourier;
  bool gate = true;
  std::vector<double> probe_grid;  // empty: default grid
};

struct LltPoint {
  int n = 0;
  double lhs = 0.0;        // √n E_{ν_z⁻}[F((T^{-n} y·z)₊, Š_n g)]
  double main = 0.0;       // ν⁺(base) √n ∫ N_{σ²n}(u) P(u) du
  double remainder = 0.0;  // |lhs − main|
  std::string oracle;
};

LltPoint llt_evaluate(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F, int n, const Word& z,
                      const LltOptions& opts = {});

struct LltFit {
  std::vector<LltPoint> points;
  LineFit fit;
  bool low_signal = false;  // R² < 0.5
  double probe_max = 0.0;
};

LltFit remainder_decay_fit(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F,
                           const std::vector<int>& n_ladder, const Word& z, const LltOptions& opts = {});
// Fit on given points (log remainder against log n).
LltFit fit_remainders(std::vector<LltPoint> points);

}  // namespace condlim
