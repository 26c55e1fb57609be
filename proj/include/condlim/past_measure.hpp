#pragma once

#include <string>
#include <vector>

#include "condlim/numeric.hpp"
#include "condlim/shift.hpp"
#include "condlim/transfer.hpp"
#include "condlim/walk.hpp"

namespace condlim {

// ν_z⁻ for a fixed future z (z[0] = z_0).
struct PastMeasure {
  GibbsModel model;
  Word z;
};

PastMeasure make_past_measure(const GibbsModel& model, const Word& z);

// exp(-S_n ψ(a·z)) for a = (a_{-n}, ..., a_{-1}); 0 if a·z is inadmissible.
double past_cylinder_mass(const PastMeasure& pm, const Word& a);

enum class Method { kAuto, kExact, kDp, kGrid, kMc };
std::string method_name(Method m);
Method parse_method(const std::string& s);

SurvivalValue survival_exact(const PastMeasure& pm, const RealFunction& g, double t, int n,
                             ExitIndexing idx = ExitIndexing::kAfterN);
SurvivalValue survival_dp(const PastMeasure& pm, const RealFunction& g, double t, int n,
                          ExitIndexing idx = ExitIndexing::kAfterN);
McSurvival survival_mc(const PastMeasure& pm, const RealFunction& g, double t, const std::vector<int>& n_ladder,
                       const McOptions& opts);
TrajectoryState sample_past(const PastMeasure& pm, const RealFunction& g, double t, int horizon, PhiloxStream& rng);

// Level-DP query: start at a point t or from Lebesgue measure on [a, b).
struct LevelQuery {
  bool integrated = false;
  double t = 0.0;
  double a = 0.0, b = 1.0;
  bool window = false;  // also read mass with t + S_n in [wa, wb]
  double wa = 0.0, wb = 0.0;
  int n_max = 1;
  bool grid = false;  // false: exact lattice levels
  double h = 0.0;     // grid spacing (grid mode)
  double max_position = INFINITY;  // grid mode: mass above is dropped and reported
  std::vector<std::pair<int, int>> step_symbols;  // (absolute step, symbol) constraints
};

// Functionals after step n, before (pre: τ > n-1) and after (post: τ > n) killing.
// For integrated queries every quantity is integrated over t.
struct LevelRow {
  int n = 0;
  double surv_pre = 0, surv_post = 0;
  double value_pre = 0, value_post = 0;  // (t + S_n) weighted
  double sum_pre = 0, sum_post = 0;      // S_n weighted
  double first_post = 0;                 // first increment weighted
  double window_pre = 0, window_post = 0;
};

struct LevelResult {
  std::vector<LevelRow> rows;  // rows[n-1] for n = 1..n_max
  double leaked = 0.0;
  double delta = 0.0;  // level spacing used
};

LevelResult run_levels(const WalkChain& chain, const LevelQuery& q);

struct SeriesOptions {
  Method method = Method::kAuto;
  ExitIndexing indexing = ExitIndexing::kAfterN;
  double grid_h = 0.0;  // 0: 1e-2 * max |increment|
  McOptions mc;
};

struct SurvivalSeries {
  std::vector<int> n;
  std::vector<EstimateCI> survival, value, sum;
  std::string method;
  std::string note;
};

// Survival functionals for a chain at each n of the ladder. GRID runs at h and
// h/2 and reports the difference as the error.
SurvivalSeries survival_series(const WalkChain& chain, double t, const std::vector<int>& ns, const SeriesOptions& opts);

// θ(y, z, z') = Σ_{k>=1} ψ(T^{-k}(y·z)) − ψ(T^{-k}(y·z')); y = (y_{-|y|}, ..., y_{-1}).
double density_theta(const GibbsModel& model, const Word& y, const Word& z, const Word& zp);

struct Interval {
  double lo = 0.0, hi = 0.0;  // [lo, hi)
  double length() const { return hi > lo ? hi - lo : 0.0; }
};

// c · 1_A(x) 1_I(t) 1_B(x') 1_J(t'); A and B are cylinders given by words placed at their origin_offset.
struct DualityTerm {
  double coef = 1.0;
  Word A;
  Interval I;
  Word B;
  Interval J;
};

struct DualityResult {
  double lhs = 0.0, rhs = 0.0, abs_diff = 0.0;
};

// Both sides of the duality identity by enumeration of ν-cylinders with exact interval lengths.
DualityResult duality_check(const GibbsModel& model, const RealFunction& g, const std::vector<DualityTerm>& F, int n);

}  // namespace condlim
