#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "condlim/numeric.hpp"
#include "condlim/rng.hpp"
#include "condlim/shift.hpp"
#include "condlim/transfer.hpp"

namespace condlim {

// The future z fixing ν_z⁻, or "draw z from ν⁺", which turns ν_z⁻ into ν.
struct StationaryAnchor {};
using Anchor = std::variant<Word, StationaryAnchor>;

// Reversed walk t + Š_j g under ν_z⁻ as a Markov chain on windows of the most
// recent W symbols. State u = (x_{-j}, ..., x_{-j+W-1}); adding b at
// coordinate -j-1 moves to (b, u_0, ..., u_{W-2}) with probability e^{-ψ(b·u)}.
// With g of past depth m, the first m symbols only fill the window (warmup)
// and the k-th increment g(T^{-k}x) is produced by symbol k+m.
class WalkChain {
 public:
  WalkChain(const GibbsModel& model, const RealFunction& g, const Anchor& anchor,
            const RealFunction* aux = nullptr);

  int k() const { return k_; }
  int window() const { return W_; }
  int warmup() const { return warmup_; }
  std::size_t num_states() const { return initial_.size(); }
  const WindowSpace& space() const { return *space_; }

  // Transition slot s*k + b.
  std::int64_t next(std::size_t s, int b) const { return next_[s * static_cast<std::size_t>(k_) + static_cast<std::size_t>(b)]; }
  double prob(std::size_t s, int b) const { return prob_[s * static_cast<std::size_t>(k_) + static_cast<std::size_t>(b)]; }
  double inc(std::size_t s, int b) const { return inc_[s * static_cast<std::size_t>(k_) + static_cast<std::size_t>(b)]; }
  double aux(std::size_t s, int b) const { return aux_[s * static_cast<std::size_t>(k_) + static_cast<std::size_t>(b)]; }
  const std::vector<double>& initial() const { return initial_; }
  bool has_aux() const { return has_aux_; }
  double max_abs_increment() const { return max_inc_; }
  // Increment values over all transitions that can carry mass.
  std::vector<double> increment_values() const;

  // Cumulative tables for sampling.
  int sample_symbol(std::size_t s, double u) const;
  std::size_t sample_initial(double u) const;

 private:
  int k_, W_, warmup_;
  bool has_aux_ = false;
  std::shared_ptr<const WindowSpace> space_;
  std::vector<std::int64_t> next_;
  std::vector<double> prob_, inc_, aux_, cum_;
  std::vector<double> initial_, initial_cum_;
  std::vector<std::size_t> initial_support_;
  double max_inc_ = 0.0;
};

enum class ExitIndexing { kAfterN, kAfterNMinus1 };

// Functionals at step n: P(survive), E[(t+S_n)1], E[S_n 1].
struct SurvivalValue {
  double survival = 0.0;
  double value = 0.0;
  double sum = 0.0;
};

// Exhaustive enumeration: entry n (0..n_max) holds the functionals for τ > n
// (kAfterN) or τ > n-1 (kAfterNMinus1, entry 0 unused).
std::vector<SurvivalValue> enumerate_survival(const WalkChain& chain, double t, int n_max,
                                              ExitIndexing idx = ExitIndexing::kAfterN);

// Visits every admissible extension of the anchor by `symbols` steps; the path
// lists generated symbols oldest-first (path[0] is the first one drawn).
void enumerate_paths(const WalkChain& chain, int symbols,
                     const std::function<void(std::size_t initial_state, const std::vector<int>& path,
                                              double weight)>& visit);

struct LatticeInfo {
  bool lattice = false;
  double delta = 0.0;
  double beta = 0.0;  // increment v = beta + delta * q
};
LatticeInfo detect_lattice(const WalkChain& chain, double tol = 1e-12);

// Read-only view of level masses at one step, before killing.
struct LevelView {
  int step = 0;              // post-warmup step k
  std::int64_t lo = 0;       // level index of column 0
  std::int64_t threshold = 0;  // levels below are killed after this view
  std::size_t levels = 0;
  std::size_t states = 0;
  const std::vector<std::vector<double>>* channels = nullptr;  // [channel][state * levels + i]
  double channel_sum(int c, std::int64_t from_level) const;
  template <typename Fn>
  void for_each(int c, Fn&& fn) const {  // fn(level, mass)
    const auto& v = (*channels)[static_cast<std::size_t>(c)];
    for (std::size_t s = 0; s < states; ++s)
      for (std::size_t i = 0; i < levels; ++i) {
        double m = v[s * levels + i];
        if (m != 0.0) fn(lo + static_cast<std::int64_t>(i), m);
      }
  }
};

// Forward propagation of level masses. Exact lattice mode moves mass by whole
// levels of size h; grid mode splits each increment linearly between the two
// neighbouring grid levels. Channel 0 is mass; extra channels carry weighted
// copies (channel 2, if present, is multiplied by the first increment).
class LevelEngine {
 public:
  LevelEngine(const WalkChain& chain, double h, bool exact, double beta, int channels);

  // Initial weights per level (same for every anchor state): weights[c][i] at level lo + i.
  void seed(std::int64_t lo, const std::vector<std::vector<double>>& weights);
  void set_max_level(std::int64_t top) { max_level_ = top; }
  // Grid mode: the killing boundary sits at threshold(k) − frac levels, frac in [0, 1).
  void set_threshold_fraction(double frac) { thr_frac_ = frac; }
  // Only symbol `symbol` may be drawn at absolute step `step` (warmup steps count).
  void constrain(int step, int symbol) { constraints_.emplace_back(step, symbol); }
  void run(int n, const std::function<std::int64_t(int)>& threshold,
           const std::function<void(const LevelView&)>& on_step);

  double leaked() const { return leaked_; }
  double h() const { return h_; }

 private:
  const WalkChain& chain_;
  double h_;
  bool exact_;
  double beta_;
  int nch_;
  std::vector<std::int64_t> q_;
  std::vector<double> r_;
  std::int64_t lo_ = 0;
  std::size_t levels_ = 0;
  std::vector<std::vector<double>> ch_, scratch_;
  std::int64_t max_level_ = INT64_MAX;
  double thr_frac_ = 0.0;
  std::vector<std::pair<int, int>> constraints_;
  double leaked_ = 0.0;
};

struct McOptions {
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::uint32_t experiment = 0;
  int workers = 1;
  bool splitting = false;
  ExitIndexing indexing = ExitIndexing::kAfterN;
};

struct McSurvival {
  std::vector<int> n;
  std::vector<EstimateCI> survival, value, sum;
  std::string note;
};

McSurvival survival_mc(const WalkChain& chain, double t, const std::vector<int>& n_ladder, const McOptions& opts);

struct TrajectoryState {
  std::vector<int> past;      // y_{-1}, y_{-2}, ... in drawing order
  std::vector<double> sums;   // Š_j g for j = 1..steps
  double running_min = 0.0;   // min_j Š_j g (0 before the first step)
  int steps = 0;
  int exit_time = 0;          // 0 if no exit before the horizon
  std::uint64_t stream = 0;
};

TrajectoryState sample_past(const WalkChain& chain, double t, int horizon, PhiloxStream& rng, std::uint64_t stream = 0);

// All words on coordinates [lo, hi) with their ν-masses, built right to left.
void for_each_nu_word(const GibbsModel& model, int lo, int hi,
                      const std::function<void(const Word&, double mass)>& visit);

}  // namespace condlim
