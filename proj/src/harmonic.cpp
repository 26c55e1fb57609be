#include "condlim/harmonic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "condlim/error.hpp"
#include "condlim/parallel.hpp"

namespace condlim {

WalkChain forward_chain(const GibbsModel& model, const RealFunction& f) {
  return WalkChain(reverse_model(model), reverse(f), StationaryAnchor{});
}

WalkChain backward_chain(const GibbsModel& model, const RealFunction& g) {
  return WalkChain(model, g, StationaryAnchor{});
}

namespace {

constexpr std::array<double LevelRow::*, 9> kFields = {
    &LevelRow::surv_pre,  &LevelRow::surv_post, &LevelRow::value_pre,  &LevelRow::value_post, &LevelRow::sum_pre,
    &LevelRow::sum_post,  &LevelRow::first_post, &LevelRow::window_pre, &LevelRow::window_post};

double overlap_len(double l1, double r1, double l2, double r2) {
  return std::max(0.0, std::min(r1, r2) - std::max(l1, l2));
}

// Adds one path's contribution (increments S_1..S_n, first increment f1) to the
// per-n field values in out[(n-1)*9 + field].
void path_functionals(const LevelQuery& q, const std::vector<double>& S, double weight, std::vector<double>& out) {
  const double f1 = S.empty() ? 0.0 : S[0];
  double cmax = -INFINITY;  // max_{k<n} (-S_k)
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double s = S[i];
    double* o = out.data() + i * kFields.size();
    auto add = [&](double lo_pre, double lo_post) {
      if (q.integrated) {
        double lp = std::max(q.a, lo_pre), lq = std::max(q.a, lo_post);
        double len_pre = std::max(0.0, q.b - lp), len_post = std::max(0.0, q.b - lq);
        o[0] += weight * len_pre;
        o[1] += weight * len_post;
        if (len_pre > 0) o[2] += weight * (0.5 * (q.b * q.b - lp * lp) + s * len_pre);
        if (len_post > 0) o[3] += weight * (0.5 * (q.b * q.b - lq * lq) + s * len_post);
        o[4] += weight * s * len_pre;
        o[5] += weight * s * len_post;
        o[6] += weight * f1 * len_post;
        if (q.window) {
          if (len_pre > 0) o[7] += weight * overlap_len(lp, q.b, q.wa - s, q.wb - s);
          if (len_post > 0) o[8] += weight * overlap_len(lq, q.b, q.wa - s, q.wb - s);
        }
      } else {
        bool pre = q.t >= lo_pre, post = q.t >= lo_post;
        bool in_window = q.window && q.t + s >= q.wa && q.t + s <= q.wb;
        if (pre) {
          o[0] += weight;
          o[2] += weight * (q.t + s);
          o[4] += weight * s;
          if (in_window) o[7] += weight;
        }
        if (post) {
          o[1] += weight;
          o[3] += weight * (q.t + s);
          o[5] += weight * s;
          o[6] += weight * f1;
          if (in_window) o[8] += weight;
        }
      }
    };
    const double pre = cmax;
    cmax = std::max(cmax, -s);
    add(pre, cmax);
  }
}

std::vector<LevelRow> to_rows(const std::vector<double>& v, int n_max) {
  std::vector<LevelRow> rows(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    LevelRow& r = rows[static_cast<std::size_t>(n - 1)];
    r.n = n;
    for (std::size_t f = 0; f < kFields.size(); ++f) r.*kFields[f] = v[static_cast<std::size_t>(n - 1) * kFields.size() + f];
  }
  return rows;
}

bool constraints_hold(const LevelQuery& q, const std::vector<int>& path) {
  for (const auto& [step, sym] : q.step_symbols) {
    if (step < 1 || step > static_cast<int>(path.size())) continue;
    if (path[static_cast<std::size_t>(step - 1)] != sym) return false;
  }
  return true;
}

Method resolve(const WalkChain& chain, const LevelQuery& q, Method m) {
  if (m != Method::kAuto) return m;
  LatticeInfo li = detect_lattice(chain);
  if (li.lattice) {
    if (!q.integrated) return Method::kDp;
    double r = li.beta / li.delta;
    if (std::abs(r - std::round(r)) <= 1e-9) return Method::kDp;
  }
  return Method::kGrid;
}

}  // namespace

IntegratedResult integrated_functionals(const WalkChain& chain, const LevelQuery& q_in, Method m_in, double grid_h,
                                        const McOptions& mc) {
  LevelQuery q = q_in;
  if (q.n_max < 1) throw PreconditionFailed("n must be >= 1");
  const Method m = resolve(chain, q, m_in);
  IntegratedResult out;
  out.method = method_name(m);
  const int M = chain.warmup();
  const std::size_t nf = kFields.size();
  switch (m) {
    case Method::kDp: {
      q.grid = false;
      out.rows = run_levels(chain, q).rows;
      out.err.assign(out.rows.size(), LevelRow{});
      break;
    }
    case Method::kGrid: {
      const double h = grid_h > 0 ? grid_h : 1e-2 * std::max(chain.max_abs_increment(), 1e-12);
      q.grid = true;
      if (!std::isfinite(q.max_position)) {
        double top = std::max(q.integrated ? q.b : q.t, 0.0);
        if (q.window) top = std::max(top, q.wb);
        q.max_position = top + chain.max_abs_increment() * (12.0 * std::sqrt(static_cast<double>(q.n_max)) + 2.0);
      }
      q.h = h;
      LevelResult coarse = run_levels(chain, q);
      q.h = h / 2;
      LevelResult fine = run_levels(chain, q);
      out.rows = fine.rows;
      out.err.resize(out.rows.size());
      for (std::size_t i = 0; i < out.rows.size(); ++i) {
        out.err[i].n = out.rows[i].n;
        for (auto fld : kFields) out.err[i].*fld = std::abs(fine.rows[i].*fld - coarse.rows[i].*fld);
      }
      std::ostringstream note;
      note << "grid spacing " << h / 2 << "; error = |r(h) - r(h/2)|";
      if (fine.leaked > 0) note << "; mass above truncation " << fine.leaked;
      out.note = note.str();
      break;
    }
    case Method::kExact: {
      std::vector<double> acc(static_cast<std::size_t>(q.n_max) * nf, 0.0);
      std::vector<double> S;
      enumerate_paths(chain, M + q.n_max, [&](std::size_t s0, const std::vector<int>& path, double w) {
        if (!constraints_hold(q, path)) return;
        S.clear();
        std::size_t s = s0;
        double sum = 0.0;
        for (std::size_t j = 0; j < path.size(); ++j) {
          int b = path[j];
          if (static_cast<int>(j) >= M) {
            sum += chain.inc(s, b);
            S.push_back(sum);
          }
          s = static_cast<std::size_t>(chain.next(s, b));
        }
        path_functionals(q, S, w, acc);
      });
      out.rows = to_rows(acc, q.n_max);
      out.err.assign(out.rows.size(), LevelRow{});
      break;
    }
    case Method::kMc: {
      if (mc.samples < 2) throw PreconditionFailed("MC needs N >= 2");
      const std::int64_t block = 1024;
      const std::int64_t blocks = (mc.samples + block - 1) / block;
      const std::size_t cells = static_cast<std::size_t>(q.n_max) * nf;
      std::vector<std::vector<RunningStats>> per_block(static_cast<std::size_t>(blocks),
                                                       std::vector<RunningStats>(cells));
      parallel_blocks(blocks, mc.workers, [&](std::int64_t bi) {
        auto& st = per_block[static_cast<std::size_t>(bi)];
        std::vector<double> one(cells), S;
        std::vector<int> path;
        std::int64_t lo = bi * block, hi = std::min(mc.samples, lo + block);
        for (std::int64_t i = lo; i < hi; ++i) {
          PhiloxStream rng(mc.seed, mc.experiment, static_cast<std::uint64_t>(i));
          std::size_t s = chain.sample_initial(rng.uniform());
          path.clear();
          S.clear();
          double sum = 0.0;
          for (int j = 0; j < M + q.n_max; ++j) {
            int b = chain.sample_symbol(s, rng.uniform());
            path.push_back(b);
            if (j >= M) {
              sum += chain.inc(s, b);
              S.push_back(sum);
            }
            s = static_cast<std::size_t>(chain.next(s, b));
          }
          std::fill(one.begin(), one.end(), 0.0);
          if (constraints_hold(q, path)) path_functionals(q, S, 1.0, one);
          for (std::size_t c = 0; c < cells; ++c) st[c].add(one[c]);
        }
      });
      std::vector<RunningStats> total(cells);
      for (const auto& b : per_block)
        for (std::size_t c = 0; c < cells; ++c) total[c].merge(b[c]);
      std::vector<double> mean(cells), se(cells);
      for (std::size_t c = 0; c < cells; ++c) {
        mean[c] = total[c].mean;
        se[c] = total[c].stderr_of_mean();
      }
      out.rows = to_rows(mean, q.n_max);
      out.err = to_rows(se, q.n_max);
      out.note = std::to_string(mc.samples) + " trajectories";
      break;
    }
    case Method::kAuto: break;
  }
  return out;
}

FiniteN harmonic_finite_n(const WalkChain& chain, double t, int n, const SeriesOptions& opts) {
  if (n < 1) throw PreconditionFailed("n must be >= 1");
  std::vector<int> ns = n >= 2 ? std::vector<int>{n - 1, n} : std::vector<int>{n};
  SurvivalSeries s = survival_series(chain, t, ns, opts);
  FiniteN out;
  out.n = n;
  out.method = s.method;
  out.value = s.value.back().estimate;
  out.method_error = s.value.back().std_error;
  out.step_change = ns.size() == 2 ? std::abs(s.value[1].estimate - s.value[0].estimate) : 0.0;
  return out;
}

FiniteN harmonic_finite_n(const PastMeasure& pm, const RealFunction& g, double t, int n, const SeriesOptions& opts) {
  WalkChain chain(pm.model, g, pm.z);
  FiniteN out = harmonic_finite_n(chain, t, n, opts);
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  MartingaleData md = martingale_part(pm.model, g, mo);
  double c = md.bound_constant();
  double slack = 1e-9 + 4.0 * out.method_error;
  if (out.value > std::max(t, 0.0) + c + slack) {
    std::ostringstream msg;
    msg << "V_n(" << t << ") = " << out.value << " exceeds max{t,0} + c = " << std::max(t, 0.0) + c;
    throw PreconditionFailed(msg.str());
  }
  return out;
}

StoppedMc harmonic_stopped_mc(const GibbsModel& model, const RealFunction& g, const Anchor& anchor, double t,
                              std::int64_t N, int cap, std::uint64_t seed, int workers) {
  if (N < 2) throw PreconditionFailed("stopped MC needs N >= 2");
  if (cap < 1000) throw PreconditionFailed("stopped MC cap must be >= 1000");
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  MartingaleData md = martingale_part(model, g, mo);
  if (md.shift != 0) throw PastDependence("stopped MC needs g depending on the future only");
  const RealFunction& g0 = md.f0;
  WalkChain chain(model, g, anchor, &g0);
  const int M = chain.warmup();
  const std::int64_t block = 1024;
  const std::int64_t blocks = (N + block - 1) / block;
  struct Block {
    RunningStats stats;
    std::int64_t capped = 0;
  };
  std::vector<Block> per_block(static_cast<std::size_t>(blocks));
  parallel_blocks(blocks, workers, [&](std::int64_t bi) {
    Block& bl = per_block[static_cast<std::size_t>(bi)];
    std::int64_t lo = bi * block, hi = std::min(N, lo + block);
    for (std::int64_t i = lo; i < hi; ++i) {
      PhiloxStream rng(seed, 7u, static_cast<std::uint64_t>(i));
      std::size_t s = chain.sample_initial(rng.uniform());
      double S = 0.0, A = 0.0;
      bool exited = false;
      for (int j = 1; j <= M + cap; ++j) {
        int b = chain.sample_symbol(s, rng.uniform());
        if (j > M) {
          S += chain.inc(s, b);
          A += chain.aux(s, b);
        }
        s = static_cast<std::size_t>(chain.next(s, b));
        if (j > M && t + S < 0.0) {
          exited = true;
          break;
        }
      }
      if (exited)
        bl.stats.add(-A);
      else
        ++bl.capped;
    }
  });
  RunningStats total;
  std::int64_t capped = 0;
  for (const auto& bl : per_block) {
    total.merge(bl.stats);
    capped += bl.capped;
  }
  StoppedMc out;
  out.exited = total.count;
  out.value = {total.mean, total.stderr_of_mean(), total.count, "STOPPED_MC"};
  out.capped_fraction = static_cast<double>(capped) / static_cast<double>(N);
  double B = std::abs(t) + g.sup_norm() + 2.0 * md.h.sup_norm();
  out.bias_bound = 2.0 * B * out.capped_fraction;
  return out;
}

HarmonicFunction harmonic_on_grid(const GibbsModel& model, const RealFunction& g, const Anchor& anchor,
                                  const std::vector<double>& t_grid, int n, const SeriesOptions& opts) {
  WalkChain chain(model, g, anchor);
  HarmonicFunction hf;
  hf.anchor = anchor;
  hf.t = t_grid;
  hf.n = n;
  for (double t : t_grid) {
    FiniteN v = harmonic_finite_n(chain, t, n, opts);
    hf.values.push_back(v.value);
    hf.errors.push_back(v.method_error + v.step_change);
    hf.method = "FINITE_N/" + v.method;
  }
  return hf;
}

HarmonicFunction harmonic_on_grid_mc(const GibbsModel& model, const RealFunction& g, const Anchor& anchor,
                                     const std::vector<double>& t_grid, std::int64_t N, int cap, std::uint64_t seed,
                                     int workers) {
  HarmonicFunction hf;
  hf.anchor = anchor;
  hf.t = t_grid;
  hf.n = cap;
  hf.method = "STOPPED_MC";
  // Common random numbers across t keep the estimated profile smooth.
  for (double t : t_grid) {
    StoppedMc r = harmonic_stopped_mc(model, g, anchor, t, N, cap, seed, workers);
    hf.values.push_back(r.value.estimate);
    hf.errors.push_back(r.value.std_error + r.bias_bound);
  }
  return hf;
}

TabulatedHarmonic::TabulatedHarmonic(int key_length, std::vector<double> t_grid, bool interpolate)
    : key_length_(key_length), grid_(std::move(t_grid)), interpolate_(interpolate) {
  if (key_length_ < 1) throw PreconditionFailed("key length must be >= 1");
  if (grid_.empty() || !std::is_sorted(grid_.begin(), grid_.end())) throw PreconditionFailed("t-grid must be sorted");
}

void TabulatedHarmonic::set(const Word& z, std::vector<double> values) {
  if (z.size() < key_length_) throw WindowOutOfRange("anchor shorter than the table key");
  if (values.size() != grid_.size()) throw PreconditionFailed("values do not match the t-grid");
  table_[std::vector<int>(z.symbols.begin(), z.symbols.begin() + key_length_)] = std::move(values);
}

double TabulatedHarmonic::operator()(const Word& z, double t) {
  if (z.size() < key_length_) throw WindowOutOfRange("anchor shorter than the table key");
  auto it = table_.find(std::vector<int>(z.symbols.begin(), z.symbols.begin() + key_length_));
  if (it == table_.end()) throw PreconditionFailed("no values tabulated for this anchor");
  const auto& v = it->second;
  auto pos = std::lower_bound(grid_.begin(), grid_.end(), t - 1e-9);
  if (pos != grid_.end() && std::abs(*pos - t) <= 1e-9) return v[static_cast<std::size_t>(pos - grid_.begin())];
  if (!interpolate_ || pos == grid_.begin() || pos == grid_.end()) {
    std::ostringstream msg;
    msg << "t = " << t << " is off the tabulated grid";
    throw GridNotClosed(msg.str());
  }
  auto i = static_cast<std::size_t>(pos - grid_.begin());
  double x0 = grid_[i - 1], x1 = grid_[i];
  double w = (t - x0) / (x1 - x0);
  interp_err_ = std::max(interp_err_, 0.5 * std::abs(v[i] - v[i - 1]));
  return (1.0 - w) * v[i - 1] + w * v[i];
}

ResidualReport harmonicity_residual(const GibbsModel& model, const RealFunction& g, const HarmonicOracle& V,
                                    const std::vector<Word>& anchors, const std::vector<double>& t_grid) {
  if (!g.future_only()) throw PastDependence("harmonicity needs g depending on the future only");
  const RealFunction& psi = model.psi;
  ResidualReport rep;
  for (const Word& z : anchors) {
    if (z.origin_offset != 0) throw PreconditionFailed("anchor word must start at coordinate 0");
    for (double t : t_grid) {
      double lhs = V(z, t);
      CompensatedSum<double> rhs;
      for (int b = 0; b < model.spec.alphabet_size(); ++b) {
        if (!model.spec.allowed(b, z.symbols.front())) continue;
        Word bz;
        bz.symbols.push_back(b);
        bz.symbols.insert(bz.symbols.end(), z.symbols.begin(), z.symbols.end());
        bz.origin_offset = -1;
        if (bz.size() < std::max(psi.future_depth(), g.future_depth()))
          throw WindowOutOfRange("anchor too short for the potential or observable");
        double w = std::exp(-psi.evaluate(bz, -1));
        double gv = g.evaluate(bz, -1);
        if (t + gv < 0.0) continue;
        bz.origin_offset = 0;
        rhs.add(w * V(bz, t + gv));
      }
      double r = std::abs(lhs - rhs.value());
      ++rep.points;
      if (r >= rep.max_residual) {
        rep.max_residual = r;
        rep.worst_z = z;
        rep.worst_t = t;
      }
    }
  }
  return rep;
}

HarmonicOracle finite_n_oracle(const GibbsModel& model, const RealFunction& g, int n, const SeriesOptions& opts) {
  return [model, g, n, opts](const Word& z, double t) {
    WalkChain chain(model, g, z);
    return harmonic_finite_n(chain, t, n, opts).value;
  };
}

double mu_minus_cylinder_mass(const PastMeasure& pm, const RealFunction& g, double t, const Word& a,
                              const DepthOracle& V) {
  if (!g.future_only()) throw PastDependence("μ̌ cylinders need g depending on the future only");
  const int n = a.size();
  Word az;
  az.symbols = a.symbols;
  az.symbols.insert(az.symbols.end(), pm.z.symbols.begin(), pm.z.symbols.end());
  if (!pm.model.spec.admissible(az.symbols)) return 0.0;
  if (n > 0 && pm.z.size() < g.future_depth() - 1)
    throw WindowOutOfRange("anchor too short for the observable");
  double v0 = V(pm.z, t, 0);
  if (!(v0 > 1e-14)) throw ZeroHarmonic("V(z, t) vanishes; the conditioned measure is undefined");
  // Š_k g over the last k symbols of a: the window at index n-k of a·z.
  double S = 0.0;
  for (int k = 1; k <= n; ++k) {
    S += g.at(g.space().encode(az.symbols.data() + (n - k)));
    if (t + S < 0.0) return 0.0;
  }
  double mass = past_cylinder_mass(pm, a);
  if (mass == 0.0) return 0.0;
  return mass * V(az, t + S, n) / v0;
}

HarmonicMeasureEstimate harmonic_measure_estimate(const GibbsModel& model, const RealFunction& f,
                                                  const std::vector<BasisElement>& basis,
                                                  const std::vector<int>& n_ladder, Method method, double grid_h) {
  if (n_ladder.empty()) throw PreconditionFailed("empty n ladder");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  WalkChain fc = forward_chain(model, f);
  HarmonicMeasureEstimate est;
  est.basis = basis;
  est.n = ladder;
  for (const BasisElement& e : basis) {
    LevelQuery q;
    q.integrated = true;
    q.a = e.t.lo;
    q.b = e.t.hi;
    q.n_max = ladder.back();
    for (int p = 0; p < e.cylinder.size(); ++p)
      q.step_symbols.emplace_back(e.cylinder.origin_offset + p + 1, e.cylinder.symbols[static_cast<std::size_t>(p)]);
    IntegratedResult r = integrated_functionals(fc, q, method, grid_h);
    est.method = r.method;
    std::vector<double> v, err, gap;
    for (int n : ladder) {
      const std::size_t i = static_cast<std::size_t>(n - 1);
      gap.push_back(v.empty() ? 0.0 : std::abs(r.rows[i].sum_post - v.back()));
      v.push_back(r.rows[i].sum_post);
      err.push_back(r.err[i].sum_post);
    }
    est.value.push_back(v);
    est.error.push_back(err);
    est.cauchy_gap.push_back(gap);
  }
  return est;
}

std::vector<QuasiInvarianceRow> quasi_invariance_residual(const GibbsModel& model, const RealFunction& f,
                                                          const std::vector<BasisElement>& basis,
                                                          const std::vector<int>& n_ladder, Method method,
                                                          double grid_h) {
  if (n_ladder.empty()) throw PreconditionFailed("empty n ladder");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  WalkChain fc = forward_chain(model, f);
  std::vector<QuasiInvarianceRow> out;
  for (std::size_t bi = 0; bi < basis.size(); ++bi) {
    const BasisElement& e = basis[bi];
    LevelQuery q;
    q.integrated = true;
    q.a = e.t.lo;
    q.b = e.t.hi;
    q.n_max = ladder.back() + 1;
    for (int p = 0; p < e.cylinder.size(); ++p)
      q.step_symbols.emplace_back(e.cylinder.origin_offset + p + 1, e.cylinder.symbols[static_cast<std::size_t>(p)]);
    IntegratedResult r = integrated_functionals(fc, q, method, grid_h);
    double prev = NAN;
    for (int n : ladder) {
      const LevelRow& a = r.rows[static_cast<std::size_t>(n - 1)];
      const LevelRow& b = r.rows[static_cast<std::size_t>(n)];
      const LevelRow& ea = r.err[static_cast<std::size_t>(n - 1)];
      const LevelRow& eb = r.err[static_cast<std::size_t>(n)];
      QuasiInvarianceRow row;
      row.basis = bi;
      row.n = n;
      row.lhs = a.sum_post;
      row.rhs = b.sum_post - b.first_post;
      row.residual = std::abs(row.lhs - row.rhs);
      row.cauchy_gap = std::isnan(prev) ? 0.0 : std::abs(row.lhs - prev);
      row.oracle_error = ea.sum_post + eb.sum_post + eb.first_post;
      if (const int m = n / 4; m >= 1) {
        const LevelRow& am = r.rows[static_cast<std::size_t>(m - 1)];
        const LevelRow& bm = r.rows[static_cast<std::size_t>(m)];
        const double sn = std::sqrt(static_cast<double>(n)), sm = std::sqrt(static_cast<double>(m));
        row.lhs_limit = (sn * row.lhs - sm * am.sum_post) / (sn - sm);
        row.rhs_limit = (sn * row.rhs - sm * (bm.sum_post - bm.first_post)) / (sn - sm);
        row.limit_residual = std::abs(row.lhs_limit - row.rhs_limit);
      }
      prev = row.lhs;
      out.push_back(row);
    }
  }
  return out;
}

Extrapolated extrapolate_harmonic(const IntegratedResult& r, int n) {
  const auto& rn = r.rows[static_cast<std::size_t>(n - 1)];
  const auto& en = r.err[static_cast<std::size_t>(n - 1)];
  const int m = n / 4;
  if (m < 1) return {rn.value_post, en.value_post};
  const auto& rm = r.rows[static_cast<std::size_t>(m - 1)];
  const auto& em = r.err[static_cast<std::size_t>(m - 1)];
  const double sn = std::sqrt(static_cast<double>(n)), sm = std::sqrt(static_cast<double>(m));
  return {(sn * rn.value_post - sm * rm.value_post) / (sn - sm),
          (sn * en.value_post + sm * em.value_post) / (sn - sm)};
}

ExitTailResult exit_tail_experiment(const GibbsModel& model, const RealFunction& f, double a, double b,
                                    const std::vector<int>& n_ladder, Method method, double grid_h,
                                    const McOptions& mc) {
  if (n_ladder.empty()) throw PreconditionFailed("empty n ladder");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  MartingaleData md = martingale_part(model, f);
  WalkChain fc = forward_chain(model, f);
  LevelQuery q;
  q.integrated = true;
  q.a = a;
  q.b = b;
  q.n_max = ladder.back();
  IntegratedResult r = integrated_functionals(fc, q, method, grid_h, mc);
  ExitTailResult out;
  out.method = r.method;
  out.sigma2 = md.sigma2;
  Extrapolated v = extrapolate_harmonic(r, ladder.back());
  out.v_integral = v.value;
  out.v_error = v.error;
  out.v_integral_raw = r.rows.back().value_post;
  const double sigma = std::sqrt(md.sigma2);
  for (int n : ladder) {
    const std::size_t i = static_cast<std::size_t>(n - 1);
    ExitTailRow row;
    row.n = n;
    row.integral = r.rows[i].surv_post;
    row.error = r.err[i].surv_post;
    double pred = 2.0 / (sigma * std::sqrt(2.0 * std::numbers::pi * n)) * out.v_integral;
    row.scaled_ratio = pred > 0 ? row.integral / pred : NAN;
    out.rows.push_back(row);
  }
  return out;
}

double rayleigh_cdf(double u) { return u <= 0 ? 0.0 : 1.0 - std::exp(-0.5 * u * u); }

double ks_distance_rayleigh(std::vector<double> sample) {
  if (sample.empty()) throw PreconditionFailed("empty sample");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double F = rayleigh_cdf(sample[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / N), std::abs(F - static_cast<double>(i + 1) / N)});
  }
  return d;
}

CltResult conditioned_clt_experiment(const GibbsModel& model, const RealFunction& f, double a, double b, int n,
                                     std::int64_t N, std::uint64_t seed, int workers) {
  if (n < 1) throw PreconditionFailed("n must be >= 1");
  if (!(b > a)) throw PreconditionFailed("empty t-interval");
  MartingaleData md = martingale_part(model, f);
  const double sigma = std::sqrt(md.sigma2);
  WalkChain fc = forward_chain(model, f);
  const int M = fc.warmup();
  const double scale = 1.0 / (sigma * std::sqrt(static_cast<double>(n)));
  const std::int64_t block = 1024;
  const std::int64_t blocks = (N + block - 1) / block;
  std::vector<std::vector<double>> per_block(static_cast<std::size_t>(blocks));
  parallel_blocks(blocks, workers, [&](std::int64_t bi) {
    auto& out = per_block[static_cast<std::size_t>(bi)];
    std::int64_t lo = bi * block, hi = std::min(N, lo + block);
    for (std::int64_t i = lo; i < hi; ++i) {
      PhiloxStream rng(seed, 11u, static_cast<std::uint64_t>(i));
      double t = a + (b - a) * rng.uniform();
      std::size_t s = fc.sample_initial(rng.uniform());
      double S = 0.0;
      bool alive = true;
      for (int j = 1; j <= M + n; ++j) {
        int sym = fc.sample_symbol(s, rng.uniform());
        if (j > M) S += fc.inc(s, sym);
        s = static_cast<std::size_t>(fc.next(s, sym));
        if (j > M && t + S < 0.0) {
          alive = false;
          break;
        }
      }
      if (alive) out.push_back(S * scale);
    }
  });
  std::vector<double> sample;
  for (auto& v : per_block) sample.insert(sample.end(), v.begin(), v.end());
  CltResult res;
  res.samples = N;
  res.survivors = static_cast<std::int64_t>(sample.size());
  res.sigma = sigma;
  if (res.survivors < 1000)
    throw TooFewSurvivors("only " + std::to_string(res.survivors) + " survivors out of " + std::to_string(N));
  RunningStats st;
  for (double u : sample) st.add(u);
  res.mean = st.mean;
  res.mean_se = st.stderr_of_mean();
  const double bw = 0.1;
  const int bins = 40;
  std::vector<double> counts(bins, 0.0);
  for (double u : sample) {
    int k = static_cast<int>(std::floor(u / bw));
    if (k >= 0 && k < bins) counts[static_cast<std::size_t>(k)] += 1.0;
  }
  for (int k = 0; k < bins; ++k) {
    double lo = k * bw;
    res.bin_lo.push_back(lo);
    res.bin_density.push_back(counts[static_cast<std::size_t>(k)] / (static_cast<double>(sample.size()) * bw));
    double mid = lo + 0.5 * bw;
    res.rayleigh_density.push_back(mid * std::exp(-0.5 * mid * mid));
  }
  res.ks = ks_distance_rayleigh(std::move(sample));
  return res;
}

CllResult conditioned_llt_experiment(const GibbsModel& model, const RealFunction& f, double a, double b, double ap,
                                     double bp, const std::vector<int>& n_ladder, const CllOptions& opts) {
  if (n_ladder.size() < 2) throw PreconditionFailed("the slope fit needs at least two n");
  if (!(b > a) || !(bp > ap)) throw PreconditionFailed("empty interval");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  CllResult out;
  if (opts.gate) {
    auto grid = opts.probe_grid.empty() ? default_probe_grid() : opts.probe_grid;
    auto probes = spectral_radius_probe(model, f, grid);
    double worst_t = 0.0;
    for (const auto& p : probes)
      if (p.radius > out.probe_max) {
        out.probe_max = p.radius;
        worst_t = p.t;
      }
    if (out.probe_max >= 0.999) {
      std::ostringstream msg;
      msg << "spectral radius of the twisted operator reaches " << out.probe_max << " at t = " << worst_t
          << "; the observable looks arithmetic";
      throw ArithmeticObservable(msg.str());
    }
  }
  MartingaleData md = martingale_part(model, f);
  out.sigma2 = md.sigma2;
  WalkChain fc = forward_chain(model, f);
  LevelQuery q;
  q.integrated = true;
  q.a = a;
  q.b = b;
  q.window = true;
  q.wa = ap;
  q.wb = bp;
  q.n_max = ladder.back();
  IntegratedResult r = integrated_functionals(fc, q, opts.method, opts.grid_h);
  out.method = r.method;
  std::vector<double> lx, ly;
  for (int n : ladder) {
    const std::size_t i = static_cast<std::size_t>(n - 1);
    CllRow row;
    row.n = n;
    row.p = r.rows[i].window_pre;
    row.error = r.err[i].window_pre;
    row.tau_eq_n = r.rows[i].surv_pre - r.rows[i].surv_post;
    out.rows.push_back(row);
    if (row.p > 0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(row.p));
    }
  }
  out.v_integral = extrapolate_harmonic(r, ladder.back()).value;
  out.v_integral_raw = r.rows.back().value_post;
  WalkChain bc = backward_chain(model, -f);
  LevelQuery qb;
  qb.integrated = true;
  qb.a = ap;
  qb.b = bp;
  qb.n_max = ladder.back();
  IntegratedResult rb = integrated_functionals(bc, qb, opts.method, opts.grid_h);
  out.v_check_integral = extrapolate_harmonic(rb, ladder.back()).value;
  out.v_check_integral_raw = rb.rows.back().value_post;
  if (lx.size() >= 2) {
    LineFit fit = fit_line(lx, ly);
    out.slope = fit.slope;
    out.slope_se = fit.slope_se;
  } else {
    out.slope = NAN;
  }
  const double s = std::sqrt(md.sigma2);
  const double nmax = static_cast<double>(ladder.back());
  double pred = 2.0 / (std::sqrt(2.0 * std::numbers::pi) * s * s * s) * out.v_integral * out.v_check_integral;
  out.prefactor_ratio = pred > 0 ? out.rows.back().p * std::pow(nmax, 1.5) / pred : NAN;
  return out;
}

}  // namespace condlim
