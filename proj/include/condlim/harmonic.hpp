#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "condlim/cohomology.hpp"
#include "condlim/numeric.hpp"
#include "condlim/past_measure.hpp"
#include "condlim/walk.hpp"

namespace condlim {

// Forward walk t + S_n f under ν: the reversed model's past chain for reverse(f)
// with a stationary anchor. Absolute step p+1 draws x_p.
WalkChain forward_chain(const GibbsModel& model, const RealFunction& f);
// Reversed walk t + Š_n g under ν (stationary anchor on the model itself).
WalkChain backward_chain(const GibbsModel& model, const RealFunction& g);

// t-integrated (or point) functionals by any oracle. For ENUM and MC the rows are
// exact/unbiased per path (t-integral done in closed form); err holds grid
// differences (GRID) or standard errors (MC).
struct IntegratedResult {
  std::vector<LevelRow> rows;
  std::vector<LevelRow> err;
  std::string method;
  std::string note;
};

IntegratedResult integrated_functionals(const WalkChain& chain, const LevelQuery& q, Method m, double grid_h = 0.0,
                                        const McOptions& mc = {});

// V̌_n at one t.
struct FiniteN {
  double value = 0.0;
  double step_change = 0.0;    // |V̌_n − V̌_{n-1}|
  double method_error = 0.0;   // grid difference or MC standard error
  int n = 0;
  std::string method;
};

FiniteN harmonic_finite_n(const WalkChain& chain, double t, int n, const SeriesOptions& opts = {});
// Also checks V̌_n <= max{t,0} + c with c from the martingale decomposition of g.
FiniteN harmonic_finite_n(const PastMeasure& pm, const RealFunction& g, double t, int n, const SeriesOptions& opts = {});

struct StoppedMc {
  EstimateCI value;
  double capped_fraction = 0.0;
  double bias_bound = 0.0;
  std::int64_t exited = 0;
};

// Mean of −Š_τ̌ g0 over trajectories with τ̌ <= cap.
StoppedMc harmonic_stopped_mc(const GibbsModel& model, const RealFunction& g, const Anchor& anchor, double t,
                              std::int64_t N, int cap, std::uint64_t seed = 1, int workers = 1);

struct HarmonicFunction {
  Anchor anchor;
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> errors;
  std::string method;  // FINITE_N (with the oracle) or STOPPED_MC
  int n = 0;
};

HarmonicFunction harmonic_on_grid(const GibbsModel& model, const RealFunction& g, const Anchor& anchor,
                                  const std::vector<double>& t_grid, int n, const SeriesOptions& opts);
HarmonicFunction harmonic_on_grid_mc(const GibbsModel& model, const RealFunction& g, const Anchor& anchor,
                                     const std::vector<double>& t_grid, std::int64_t N, int cap, std::uint64_t seed = 1,
                                     int workers = 1);

using HarmonicOracle = std::function<double(const Word& z, double t)>;

// V̌ known only on a t-grid per anchor key; off-grid lookups throw GridNotClosed
// unless interpolation is on (the interpolation error is then tracked).
class TabulatedHarmonic {
 public:
  TabulatedHarmonic(int key_length, std::vector<double> t_grid, bool interpolate = false);
  void set(const Word& z, std::vector<double> values);
  double operator()(const Word& z, double t);
  double interpolation_error() const { return interp_err_; }

 private:
  int key_length_;
  std::vector<double> grid_;
  bool interpolate_;
  std::map<std::vector<int>, std::vector<double>> table_;
  double interp_err_ = 0.0;
};

struct ResidualReport {
  double max_residual = 0.0;
  Word worst_z;
  double worst_t = 0.0;
  int points = 0;
};

// max over anchors z and t of |V̌(z,t) − Σ_b e^{-ψ(b·z)} 1{t + g(b·z) >= 0} V̌(b·z, t + g(b·z))|.
ResidualReport harmonicity_residual(const GibbsModel& model, const RealFunction& g, const HarmonicOracle& V,
                                    const std::vector<Word>& anchors, const std::vector<double>& t_grid);

// Oracle V̌(z,t) = V̌_n(z,t) of a finite-n functional computed on demand.
HarmonicOracle finite_n_oracle(const GibbsModel& model, const RealFunction& g, int n, const SeriesOptions& opts = {});

// Cylinder mass of μ̌^{g,-}_{z,t}: e^{-S_nψ(a·z)} V(a·z, t + Š_n g) / V(z, t) when the
// walk stays non-negative along a (Š_k g over the last k symbols of a), else 0.
// V receives |a| so that finite-N families can use V̌_{N-|a|}.
using DepthOracle = std::function<double(const Word& z, double t, int depth)>;
double mu_minus_cylinder_mass(const PastMeasure& pm, const RealFunction& g, double t, const Word& a, const DepthOracle& V);

struct BasisElement {
  Word cylinder;  // on x, coordinates >= 0 (empty: no constraint)
  Interval t;
};

struct HarmonicMeasureEstimate {
  std::vector<BasisElement> basis;
  std::vector<int> n;
  std::vector<std::vector<double>> value;  // [basis][n]: ∫φ S_n f 1{τ>n} dν dt
  std::vector<std::vector<double>> error;
  std::vector<std::vector<double>> cauchy_gap;  // |value_n − value_{previous n}|, 0 for the first
  std::string method;
};

HarmonicMeasureEstimate harmonic_measure_estimate(const GibbsModel& model, const RealFunction& f,
                                                  const std::vector<BasisElement>& basis,
                                                  const std::vector<int>& n_ladder, Method method, double grid_h = 0.0);

struct QuasiInvarianceRow {
  std::size_t basis = 0;
  int n = 0;
  double lhs = 0.0, rhs = 0.0, residual = 0.0, cauchy_gap = 0.0, oracle_error = 0.0;
  // Both sides converge like n^{-1/2}; the limits are extrapolated from n and n/4
  // (NaN for n < 4).
  double lhs_limit = NAN, rhs_limit = NAN, limit_residual = NAN;
};

// lhs = ∫φ dμ̂_n, rhs = ∫φ(T^{-1}x, t − f(T^{-1}x)) 1{t>=0} dμ̂_n, evaluated through the
// exact substitution x -> Tx, which turns rhs into ∫φ (S_{n+1}f − f) 1{τ > n+1}.
std::vector<QuasiInvarianceRow> quasi_invariance_residual(const GibbsModel& model, const RealFunction& f,
                                                          const std::vector<BasisElement>& basis,
                                                          const std::vector<int>& n_ladder, Method method,
                                                          double grid_h = 0.0);

// V̂ − V̂_n decays like n^{-1/2} (the overshoot of walks still alive at n), so the
// limit is estimated from n and m = n/4 by eliminating that term.
struct Extrapolated {
  double value = 0.0, error = 0.0;
};
Extrapolated extrapolate_harmonic(const IntegratedResult& r, int n);

struct ExitTailRow {
  int n = 0;
  double integral = 0.0;  // ∫_a^b ν(τ_t > n) dt
  double error = 0.0;
  double scaled_ratio = 0.0;
};

struct ExitTailResult {
  std::vector<ExitTailRow> rows;
  double v_integral = 0.0;  // ∫_a^b V̂(t) dt, extrapolated from the largest n and n/4
  double v_error = 0.0;
  double v_integral_raw = 0.0;  // ∫_a^b V̂_n(t) dt at the largest n
  double sigma2 = 0.0;
  std::string method;
};

ExitTailResult exit_tail_experiment(const GibbsModel& model, const RealFunction& f, double a, double b,
                                    const std::vector<int>& n_ladder, Method method, double grid_h = 0.0,
                                    const McOptions& mc = {});

struct CltResult {
  double ks = 0.0;
  std::int64_t survivors = 0;
  std::int64_t samples = 0;
  double mean = 0.0;       // of S_n f/(σ√n) over survivors
  double mean_se = 0.0;
  std::vector<double> bin_lo, bin_density, rayleigh_density;
  double sigma = 0.0;
};

double rayleigh_cdf(double u);
double ks_distance_rayleigh(std::vector<double> sample);

CltResult conditioned_clt_experiment(const GibbsModel& model, const RealFunction& f, double a, double b, int n,
                                     std::int64_t N, std::uint64_t seed = 1, int workers = 1);

struct CllRow {
  int n = 0;
  double p = 0.0;       // ∫_a^b ν(t + S_n f ∈ [a',b'], τ_t > n−1) dt
  double error = 0.0;
  double tau_eq_n = 0.0;  // ∫_a^b ν(τ_t = n) dt
};

struct CllResult {
  std::vector<CllRow> rows;
  double slope = 0.0, slope_se = 0.0;
  double v_integral = 0.0, v_check_integral = 0.0;  // extrapolated as in ExitTailResult
  double v_integral_raw = 0.0, v_check_integral_raw = 0.0;
  double prefactor_ratio = 0.0;
  double sigma2 = 0.0;
  double probe_max = 0.0;
  std::string method;
};

struct CllOptions {
  Method method = Method::kAuto;
  double grid_h = 0.0;
  bool gate = true;
  std::vector<double> probe_grid;  // empty: default grid
};

CllResult conditioned_llt_experiment(const GibbsModel& model, const RealFunction& f, double a, double b, double ap,
                                     double bp, const std::vector<int>& n_ladder, const CllOptions& opts = {});

}  // namespace condlim
