#include "condlim/walk.hpp"

#include <algorithm>
#include <cmath>

#include "condlim/parallel.hpp"

namespace condlim {

WalkChain::WalkChain(const GibbsModel& model, const RealFunction& g, const Anchor& anchor, const RealFunction* aux)
    : k_(model.spec.alphabet_size()) {
  if (!(g.spec() == model.spec)) throw PreconditionFailed("observable lives on a different subshift");
  if (aux && !aux->future_only()) throw PastDependence("auxiliary observable must be future-only");
  const int dpsi = model.psi.future_depth();
  const int M = g.past_depth(), d = g.future_depth();
  const int da = aux ? aux->future_depth() : 1;
  warmup_ = M;
  W_ = std::max({dpsi - 1, M + d - 1, aux ? M + da - 1 : 1, 1});
  has_aux_ = aux != nullptr;
  space_ = window_space(model.spec, W_);
  const std::size_t S = space_->size(), K = static_cast<std::size_t>(k_);
  next_.assign(S * K, -1);
  prob_.assign(S * K, 0.0);
  inc_.assign(S * K, 0.0);
  aux_.assign(S * K, 0.0);
  cum_.assign(S * K, 0.0);
  std::vector<int> bu(static_cast<std::size_t>(W_) + 1);
  for (std::size_t s : space_->admissible()) {
    space_->decode(s, bu.data() + 1);
    double c = 0.0;
    int last = -1;
    for (int b = 0; b < k_; ++b) {
      if (!model.spec.allowed(b, bu[1])) continue;
      bu[0] = b;
      std::size_t slot = s * K + static_cast<std::size_t>(b);
      next_[slot] = static_cast<std::int64_t>(space_->encode(bu.data()));
      prob_[slot] = std::exp(-model.psi.at(model.psi.space().encode(bu.data())));
      inc_[slot] = g.at(g.space().encode(bu.data()));
      if (aux) aux_[slot] = aux->at(aux->space().encode(bu.data() + M));
      max_inc_ = std::max(max_inc_, std::abs(inc_[slot]));
      c += prob_[slot];
      cum_[slot] = c;
      last = b;
    }
    if (last >= 0) cum_[s * K + static_cast<std::size_t>(last)] = 2.0;  // absorbs rounding
  }

  initial_.assign(S, 0.0);
  if (const Word* z = std::get_if<Word>(&anchor)) {
    const int need = std::max({dpsi - 1, d - 1, da - 1, 1});
    if (z->origin_offset != 0) throw PreconditionFailed("anchor word must start at coordinate 0");
    if (z->size() < need) throw WindowOutOfRange("anchor needs at least " + std::to_string(need) + " symbols");
    if (!model.spec.admissible(z->symbols)) throw PreconditionFailed("anchor word is inadmissible");
    // Pad with the first admissible continuation; padded coordinates are never read.
    std::vector<int> zz = z->symbols;
    while (static_cast<int>(zz.size()) < W_) {
      int c = 0;
      while (!model.spec.allowed(zz.back(), c)) ++c;
      zz.push_back(c);
    }
    initial_[space_->encode(zz.data())] = 1.0;
  } else {
    Eigen::VectorXd m = model.mass_table(W_);
    for (std::size_t s : space_->admissible()) initial_[s] = m[static_cast<Eigen::Index>(s)];
  }
  double c = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    if (initial_[s] > 0.0) {
      c += initial_[s];
      initial_support_.push_back(s);
      initial_cum_.push_back(c);
    }
  }
  if (!initial_cum_.empty()) initial_cum_.back() = 2.0;
}

std::vector<double> WalkChain::increment_values() const {
  std::vector<double> v;
  for (std::size_t i = 0; i < next_.size(); ++i)
    if (next_[i] >= 0 && prob_[i] > 0.0) v.push_back(inc_[i]);
  return v;
}

int WalkChain::sample_symbol(std::size_t s, double u) const {
  const std::size_t K = static_cast<std::size_t>(k_);
  for (std::size_t b = 0; b < K; ++b) {
    std::size_t slot = s * K + b;
    if (next_[slot] >= 0 && u < cum_[slot]) return static_cast<int>(b);
  }
  return k_ - 1;
}

std::size_t WalkChain::sample_initial(double u) const {
  auto it = std::upper_bound(initial_cum_.begin(), initial_cum_.end(), u);
  return initial_support_[static_cast<std::size_t>(it - initial_cum_.begin())];
}

std::vector<SurvivalValue> enumerate_survival(const WalkChain& chain, double t, int n_max, ExitIndexing idx) {
  if (n_max < 0) throw PreconditionFailed("n must be non-negative");
  const int M = chain.warmup(), K = chain.k();
  check_budget(checked_power(K, M + n_max), "enumeration of " + std::to_string(n_max) + "-step pasts");
  struct Acc {
    CompensatedSum<double> s, v, u;
  };
  std::vector<Acc> pre(static_cast<std::size_t>(n_max) + 1), post(static_cast<std::size_t>(n_max) + 1);
  std::function<void(std::size_t, int, double, double)> dfs = [&](std::size_t s, int j, double S, double w) {
    for (int b = 0; b < K; ++b) {
      std::int64_t nx = chain.next(s, b);
      double p = chain.prob(s, b);
      if (nx < 0 || p == 0.0) continue;
      double w2 = w * p;
      int j2 = j + 1;
      if (j2 <= M) {
        if (n_max > 0 || j2 < M) dfs(static_cast<std::size_t>(nx), j2, S, w2);
        continue;
      }
      int k2 = j2 - M;
      double S2 = S + chain.inc(s, b);
      auto& a = pre[static_cast<std::size_t>(k2)];
      a.s.add(w2);
      a.v.add(w2 * (t + S2));
      a.u.add(w2 * S2);
      if (t + S2 < 0.0) continue;
      auto& q = post[static_cast<std::size_t>(k2)];
      q.s.add(w2);
      q.v.add(w2 * (t + S2));
      q.u.add(w2 * S2);
      if (k2 < n_max) dfs(static_cast<std::size_t>(nx), j2, S2, w2);
    }
  };
  const auto& init = chain.initial();
  if (n_max > 0)
    for (std::size_t s = 0; s < init.size(); ++s)
      if (init[s] > 0.0) dfs(s, 0, 0.0, init[s]);
  std::vector<SurvivalValue> out(static_cast<std::size_t>(n_max) + 1);
  out[0] = {1.0, t, 0.0};
  for (int n = 1; n <= n_max; ++n) {
    const Acc& a = idx == ExitIndexing::kAfterN ? post[static_cast<std::size_t>(n)] : pre[static_cast<std::size_t>(n)];
    out[static_cast<std::size_t>(n)] = {a.s.value(), a.v.value(), a.u.value()};
  }
  return out;
}

void enumerate_paths(const WalkChain& chain, int symbols,
                     const std::function<void(std::size_t, const std::vector<int>&, double)>& visit) {
  const int K = chain.k();
  check_budget(checked_power(K, symbols), "path enumeration");
  std::vector<int> path;
  path.reserve(static_cast<std::size_t>(symbols));
  std::size_t root = 0;
  std::function<void(std::size_t, double)> dfs = [&](std::size_t s, double w) {
    if (static_cast<int>(path.size()) == symbols) {
      visit(root, path, w);
      return;
    }
    for (int b = 0; b < K; ++b) {
      std::int64_t nx = chain.next(s, b);
      double p = chain.prob(s, b);
      if (nx < 0 || p == 0.0) continue;
      path.push_back(b);
      dfs(static_cast<std::size_t>(nx), w * p);
      path.pop_back();
    }
  };
  const auto& init = chain.initial();
  for (std::size_t s = 0; s < init.size(); ++s)
    if (init[s] > 0.0) {
      root = s;
      dfs(s, init[s]);
    }
}

LatticeInfo detect_lattice(const WalkChain& chain, double tol) {
  std::vector<double> v = chain.increment_values();
  LatticeInfo info;
  if (v.empty()) return info;
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return {true, 1.0, 0.0};
  double d = real_gcd(v, tol * scale, 1e-6 * scale);
  if (d > 0.0) return {true, d, 0.0};
  std::vector<double> diffs;
  for (double x : v) diffs.push_back(x - v[0]);
  d = real_gcd(diffs, tol * scale, 1e-6 * scale);
  if (d > 0.0) return {true, d, v[0]};
  return info;
}

double LevelView::channel_sum(int c, std::int64_t from_level) const {
  CompensatedSum<double> s;
  const auto& v = (*channels)[static_cast<std::size_t>(c)];
  for (std::size_t st = 0; st < states; ++st)
    for (std::size_t i = 0; i < levels; ++i)
      if (lo + static_cast<std::int64_t>(i) >= from_level) s.add(v[st * levels + i]);
  return s.value();
}

LevelEngine::LevelEngine(const WalkChain& chain, double h, bool exact, double beta, int channels)
    : chain_(chain), h_(h), exact_(exact), beta_(beta), nch_(channels) {
  if (!(h > 0.0)) throw PreconditionFailed("level spacing must be positive");
  const std::size_t slots = chain.num_states() * static_cast<std::size_t>(chain.k());
  q_.assign(slots, 0);
  r_.assign(slots, 0.0);
  for (std::size_t s = 0; s < chain.num_states(); ++s)
    for (int b = 0; b < chain.k(); ++b) {
      std::size_t slot = s * static_cast<std::size_t>(chain.k()) + static_cast<std::size_t>(b);
      if (chain.next(s, b) < 0) continue;
      double v = chain.inc(s, b);
      if (exact) {
        double q = std::round((v - beta) / h);
        if (std::abs(q * h + beta - v) > 1e-9 * std::max(1.0, std::abs(v)))
          throw NotLattice("increment " + std::to_string(v) + " is off the lattice");
        q_[slot] = static_cast<std::int64_t>(q);
      } else {
        double x = v / h;
        double q = std::floor(x);
        q_[slot] = static_cast<std::int64_t>(q);
        r_[slot] = x - q;
      }
    }
}

void LevelEngine::seed(std::int64_t lo, const std::vector<std::vector<double>>& weights) {
  const std::size_t S = chain_.num_states();
  lo_ = lo;
  levels_ = weights[0].size();
  ch_.assign(static_cast<std::size_t>(nch_), std::vector<double>(S * levels_, 0.0));
  const auto& init = chain_.initial();
  for (int c = 0; c < nch_; ++c) {
    if (static_cast<std::size_t>(c) >= weights.size()) continue;
    for (std::size_t s = 0; s < S; ++s)
      if (init[s] > 0.0)
        for (std::size_t i = 0; i < levels_; ++i) ch_[static_cast<std::size_t>(c)][s * levels_ + i] = init[s] * weights[static_cast<std::size_t>(c)][i];
  }
}

void LevelEngine::run(int n, const std::function<std::int64_t(int)>& threshold,
                      const std::function<void(const LevelView&)>& on_step) {
  const std::size_t S = chain_.num_states();
  const int K = chain_.k();
  const int M = chain_.warmup();
  check_budget(static_cast<std::uint64_t>(S) * std::max<std::size_t>(levels_, 1), "level DP");
  std::int64_t qmin = 0, qmax = 0;
  bool first = true;
  for (std::size_t slot = 0; slot < q_.size(); ++slot) {
    if (chain_.next(slot / static_cast<std::size_t>(K), static_cast<int>(slot % static_cast<std::size_t>(K))) < 0) continue;
    if (first) {
      qmin = qmax = q_[slot];
      first = false;
    }
    qmin = std::min(qmin, q_[slot]);
    qmax = std::max(qmax, q_[slot]);
  }
  const std::int64_t spill = exact_ ? 0 : 1;

  for (int j = 1; j <= M + n; ++j) {
    const bool warm = j <= M;
    const int k = j - M;
    const std::int64_t dlo = warm ? 0 : qmin;
    const std::size_t L = levels_;
    const std::size_t L2 = warm ? L : L + static_cast<std::size_t>(qmax - qmin + spill);
    int only = -1;
    for (const auto& [step, sym] : constraints_)
      if (step == j) only = sym;
    std::vector<std::vector<double>>& nc = scratch_;
    nc.resize(static_cast<std::size_t>(nch_));
    for (auto& v : nc) v.assign(S * L2, 0.0);
    // Grid mode decides killing on the unsplit position: a target just below the
    // threshold goes entirely to the level under it instead of leaking above.
    const std::int64_t thr_next = warm || exact_ ? INT64_MIN : threshold(k);
    for (std::size_t s = 0; s < S; ++s) {
      for (int b = 0; b < K; ++b) {
        std::int64_t nx = chain_.next(s, b);
        double p = chain_.prob(s, b);
        if (nx < 0 || p == 0.0 || (only >= 0 && b != only)) continue;
        std::size_t slot = s * static_cast<std::size_t>(K) + static_cast<std::size_t>(b);
        std::size_t shift = warm ? 0 : static_cast<std::size_t>(q_[slot] - qmin);
        double r = warm ? 0.0 : r_[slot];
        double inc = chain_.inc(s, b);
        for (int c = 0; c < nch_; ++c) {
          const double* src = ch_[static_cast<std::size_t>(c == 2 && k == 1 ? 0 : c)].data() + s * L;
          double* dst = nc[static_cast<std::size_t>(c)].data() + static_cast<std::size_t>(nx) * L2 + shift;
          double f = p * ((c == 2 && k == 1) ? inc : 1.0);
          if (r == 0.0) {
            for (std::size_t i = 0; i < L; ++i) dst[i] += f * src[i];
          } else {
            double a = f * (1.0 - r), bb = f * r;
            for (std::size_t i = 0; i < L; ++i) {
              dst[i] += a * src[i];
              dst[i + 1] += bb * src[i];
            }
            std::int64_t ik = thr_next == INT64_MIN ? -1 : thr_next - 1 - lo_ - q_[slot];
            if (ik >= 0 && ik < static_cast<std::int64_t>(L)) {
              std::size_t i = static_cast<std::size_t>(ik);
              if (r < 1.0 - thr_frac_) {
                dst[i] += bb * src[i];
                dst[i + 1] -= bb * src[i];
              } else {
                dst[i] -= a * src[i];
                dst[i + 1] += a * src[i];
              }
            }
          }
        }
      }
    }
    ch_.swap(nc);
    lo_ += dlo;
    levels_ = L2;
    if (warm) continue;

    std::int64_t thr = threshold(k);
    LevelView view{k, lo_, thr, levels_, S, &ch_};
    on_step(view);

    // Kill below the threshold, drop mass above the top level, and trim.
    std::int64_t keep_lo = std::max(lo_, thr);
    std::int64_t keep_hi = std::min<std::int64_t>(lo_ + static_cast<std::int64_t>(levels_) - 1, max_level_);
    for (std::size_t s = 0; s < S; ++s)
      for (std::int64_t lv = keep_hi + 1; lv < lo_ + static_cast<std::int64_t>(levels_); ++lv)
        leaked_ += ch_[0][s * levels_ + static_cast<std::size_t>(lv - lo_)];
    // Shrink further to the occupied range.
    std::int64_t occ_lo = keep_hi + 1, occ_hi = keep_lo - 1;
    for (std::int64_t lv = keep_lo; lv <= keep_hi; ++lv) {
      bool any = false;
      for (int c = 0; c < nch_ && !any; ++c)
        for (std::size_t s = 0; s < S && !any; ++s) any = ch_[static_cast<std::size_t>(c)][s * levels_ + static_cast<std::size_t>(lv - lo_)] != 0.0;
      if (any) {
        occ_lo = std::min(occ_lo, lv);
        occ_hi = std::max(occ_hi, lv);
      }
    }
    if (occ_lo > occ_hi) occ_lo = occ_hi = keep_lo;
    std::size_t L3 = static_cast<std::size_t>(occ_hi - occ_lo + 1);
    std::vector<std::vector<double>>& kc = scratch_;
    for (auto& v : kc) v.assign(S * L3, 0.0);
    for (int c = 0; c < nch_; ++c)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = 0; i < L3; ++i) {
          std::int64_t lv = occ_lo + static_cast<std::int64_t>(i);
          if (lv < lo_ || lv >= lo_ + static_cast<std::int64_t>(levels_)) continue;
          if (lv < keep_lo || lv > keep_hi) continue;
          kc[static_cast<std::size_t>(c)][s * L3 + i] = ch_[static_cast<std::size_t>(c)][s * levels_ + static_cast<std::size_t>(lv - lo_)];
        }
    ch_.swap(kc);
    lo_ = occ_lo;
    levels_ = L3;
    check_budget(static_cast<std::uint64_t>(S) * levels_, "level DP");
  }
}

namespace {

struct Recorder {
  const std::vector<int>& ladder;
  std::vector<double> surv, val, sum;
  explicit Recorder(const std::vector<int>& l) : ladder(l), surv(l.size(), 0.0), val(l.size(), 0.0), sum(l.size(), 0.0) {}
};

// Runs one trajectory (or one splitting tree) and adds weighted contributions.
void run_trajectory(const WalkChain& chain, double t, const std::vector<int>& ladder, const std::vector<int>& checkpoints,
                    ExitIndexing idx, PhiloxStream& rng, std::size_t s, double S, int j, double w, std::size_t ladder_pos,
                    std::size_t cp_pos, Recorder& rec) {
  const int M = chain.warmup();
  const int n_max = ladder.back();
  while (j < M + n_max) {
    int b = chain.sample_symbol(s, rng.uniform());
    double inc = chain.inc(s, b);
    s = static_cast<std::size_t>(chain.next(s, b));
    ++j;
    if (j <= M) continue;
    int k = j - M;
    S += inc;
    bool dead = t + S < 0.0;
    while (ladder_pos < ladder.size() && ladder[ladder_pos] == k) {
      bool counts = idx == ExitIndexing::kAfterNMinus1 || !dead;
      if (counts) {
        rec.surv[ladder_pos] += w;
        rec.val[ladder_pos] += w * (t + S);
        rec.sum[ladder_pos] += w * S;
      }
      ++ladder_pos;
    }
    if (dead) return;
    if (cp_pos < checkpoints.size() && checkpoints[cp_pos] == k) {
      for (int copy = 0; copy < 2; ++copy)
        run_trajectory(chain, t, ladder, checkpoints, idx, rng, s, S, j, 0.5 * w, ladder_pos, cp_pos + 1, rec);
      return;
    }
  }
}

}  // namespace

McSurvival survival_mc(const WalkChain& chain, double t, const std::vector<int>& n_ladder, const McOptions& opts) {
  if (opts.samples < 1) throw PreconditionFailed("survival_mc needs N >= 1");
  if (n_ladder.empty()) throw PreconditionFailed("empty n ladder");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  const int n_max = ladder.back();
  std::vector<int> checkpoints;
  if (opts.splitting)
    for (int q = 1; q <= 3; ++q)
      if (n_max * q / 4 >= 1 && n_max * q / 4 < n_max) checkpoints.push_back(n_max * q / 4);

  const std::int64_t block = 1024;
  const std::int64_t blocks = (opts.samples + block - 1) / block;
  const std::size_t nl = ladder.size();
  std::vector<std::vector<RunningStats>> per_block(static_cast<std::size_t>(blocks), std::vector<RunningStats>(3 * nl));
  parallel_blocks(blocks, opts.workers, [&](std::int64_t bi) {
    auto& st = per_block[static_cast<std::size_t>(bi)];
    std::int64_t lo = bi * block, hi = std::min(opts.samples, lo + block);
    for (std::int64_t i = lo; i < hi; ++i) {
      PhiloxStream rng(opts.seed, opts.experiment, static_cast<std::uint64_t>(i));
      std::size_t s0 = chain.sample_initial(rng.uniform());
      Recorder rec(ladder);
      run_trajectory(chain, t, ladder, checkpoints, opts.indexing, rng, s0, 0.0, 0, 1.0, 0, 0, rec);
      for (std::size_t l = 0; l < nl; ++l) {
        st[3 * l].add(rec.surv[l]);
        st[3 * l + 1].add(rec.val[l]);
        st[3 * l + 2].add(rec.sum[l]);
      }
    }
  });
  std::vector<RunningStats> tot(3 * nl);
  for (auto& st : per_block)
    for (std::size_t i = 0; i < 3 * nl; ++i) tot[i].merge(st[i]);
  McSurvival out;
  out.n = ladder;
  std::string method = opts.splitting ? "MC-SPLIT" : "MC";
  for (std::size_t l = 0; l < nl; ++l) {
    out.survival.push_back({tot[3 * l].mean, tot[3 * l].stderr_of_mean(), opts.samples, method});
    out.value.push_back({tot[3 * l + 1].mean, tot[3 * l + 1].stderr_of_mean(), opts.samples, method});
    out.sum.push_back({tot[3 * l + 2].mean, tot[3 * l + 2].stderr_of_mean(), opts.samples, method});
  }
  if (opts.splitting)
    out.note = "multilevel splitting (factor 2 at n/4, n/2, 3n/4); standard errors from per-root tree totals";
  return out;
}

TrajectoryState sample_past(const WalkChain& chain, double t, int horizon, PhiloxStream& rng, std::uint64_t stream) {
  if (horizon < 1) throw PreconditionFailed("horizon must be >= 1");
  TrajectoryState st;
  st.stream = stream;
  const int M = chain.warmup();
  std::size_t s = chain.sample_initial(rng.uniform());
  double S = 0.0;
  for (int j = 1; j <= M + horizon; ++j) {
    int b = chain.sample_symbol(s, rng.uniform());
    double inc = chain.inc(s, b);
    s = static_cast<std::size_t>(chain.next(s, b));
    st.past.push_back(b);
    if (j <= M) continue;
    S += inc;
    st.sums.push_back(S);
    st.running_min = st.steps == 0 ? S : std::min(st.running_min, S);
    st.steps = j - M;
    if (t + S < 0.0) {
      st.exit_time = st.steps;
      break;
    }
  }
  return st;
}

void for_each_nu_word(const GibbsModel& model, int lo, int hi, const std::function<void(const Word&, double)>& visit) {
  const int L = hi - lo;
  if (L < 1) throw PreconditionFailed("empty coordinate range");
  const int D = model.depth;
  Word w;
  w.origin_offset = lo;
  w.symbols.assign(static_cast<std::size_t>(L), 0);
  if (L <= D) {
    auto sp = window_space(model.spec, L);
    Eigen::VectorXd m = model.mass_table(L);
    for (std::size_t i : sp->admissible()) {
      sp->decode(i, w.symbols.data());
      visit(w, m[static_cast<Eigen::Index>(i)]);
    }
    return;
  }
  auto sp = window_space(model.spec, D);
  const RealFunction& psi = model.psi;
  std::function<void(int, double)> dfs = [&](int p, double mass) {
    if (p < 0) {
      visit(w, mass);
      return;
    }
    for (int b = 0; b < model.spec.alphabet_size(); ++b) {
      if (!model.spec.allowed(b, w.symbols[static_cast<std::size_t>(p) + 1])) continue;
      w.symbols[static_cast<std::size_t>(p)] = b;
      dfs(p - 1, mass * std::exp(-psi.at(psi.space().encode(w.symbols.data() + p))));
    }
  };
  for (std::size_t i : sp->admissible()) {
    sp->decode(i, w.symbols.data() + (L - D));
    dfs(L - D - 1, model.nu_plus[static_cast<Eigen::Index>(i)]);
  }
}

}  // namespace condlim
