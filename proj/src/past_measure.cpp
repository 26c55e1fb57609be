#include "condlim/past_measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace condlim {

PastMeasure make_past_measure(const GibbsModel& model, const Word& z) {
  const int need = std::max(model.psi.future_depth() - 1, 1);
  if (z.origin_offset != 0) throw PreconditionFailed("anchor word must start at coordinate 0");
  if (z.size() < need) throw WindowOutOfRange("anchor needs at least " + std::to_string(need) + " symbols");
  if (!model.spec.admissible(z.symbols)) throw PreconditionFailed("anchor word is inadmissible");
  return {model, z};
}

double past_cylinder_mass(const PastMeasure& pm, const Word& a) {
  const RealFunction& psi = pm.model.psi;
  std::vector<int> az = a.symbols;
  az.insert(az.end(), pm.z.symbols.begin(), pm.z.symbols.end());
  if (!pm.model.spec.admissible(az)) return 0.0;
  const int n = a.size();
  if (n > 0 && pm.z.size() < psi.future_depth() - 1)
    throw WindowOutOfRange("anchor too short for the potential");
  CompensatedSum<double> s;
  for (int j = 0; j < n; ++j) s.add(psi.at(psi.space().encode(az.data() + j)));
  return std::exp(-s.value());
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kAuto: return "AUTO";
    case Method::kExact: return "ENUM";
    case Method::kDp: return "DP";
    case Method::kGrid: return "GRID";
    case Method::kMc: return "MC";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "AUTO") return Method::kAuto;
  if (u == "EXACT" || u == "ENUM") return Method::kExact;
  if (u == "DP") return Method::kDp;
  if (u == "GRID") return Method::kGrid;
  if (u == "MC") return Method::kMc;
  throw ConfigError("unknown method '" + s + "' (exact|dp|grid|mc|auto)");
}

SurvivalValue survival_exact(const PastMeasure& pm, const RealFunction& g, double t, int n, ExitIndexing idx) {
  WalkChain chain(pm.model, g, pm.z);
  return enumerate_survival(chain, t, n, idx)[static_cast<std::size_t>(n)];
}

SurvivalValue survival_dp(const PastMeasure& pm, const RealFunction& g, double t, int n, ExitIndexing idx) {
  if (n < 1) throw PreconditionFailed("survival_dp needs n >= 1");
  WalkChain chain(pm.model, g, pm.z);
  LevelQuery q;
  q.t = t;
  q.n_max = n;
  LevelRow r = run_levels(chain, q).rows.back();
  if (idx == ExitIndexing::kAfterN) return {r.surv_post, r.value_post, r.sum_post};
  return {r.surv_pre, r.value_pre, r.sum_pre};
}

McSurvival survival_mc(const PastMeasure& pm, const RealFunction& g, double t, const std::vector<int>& n_ladder,
                       const McOptions& opts) {
  WalkChain chain(pm.model, g, pm.z);
  return survival_mc(chain, t, n_ladder, opts);
}

TrajectoryState sample_past(const PastMeasure& pm, const RealFunction& g, double t, int horizon, PhiloxStream& rng) {
  WalkChain chain(pm.model, g, pm.z);
  return sample_past(chain, t, horizon, rng);
}

namespace {

// ∫_lo^hi of hat_i(t) and of t·hat_i(t), hat_i(t) = max(0, 1 - |t/h - i|).
std::pair<double, double> hat_moments(std::int64_t i, double h, double lo, double hi) {
  double m0 = 0.0, m1 = 0.0;
  auto piece = [&](double l, double r, double alpha, double beta) {  // ∫ (alpha + beta t) over [l, r]
    l = std::max(l, lo);
    r = std::min(r, hi);
    if (r <= l) return;
    m0 += alpha * (r - l) + beta * (r * r - l * l) / 2.0;
    m1 += alpha * (r * r - l * l) / 2.0 + beta * (r * r * r - l * l * l) / 3.0;
  };
  double c = static_cast<double>(i) * h;
  piece(c - h, c, 1.0 - static_cast<double>(i), 1.0 / h);
  piece(c, c + h, 1.0 + static_cast<double>(i), -1.0 / h);
  return {m0, m1};
}

double overlap(double l1, double r1, double l2, double r2) { return std::max(0.0, std::min(r1, r2) - std::max(l1, l2)); }

struct RowAcc {
  CompensatedSum<double> sp, sq, vp, vq, tp, tq, fq, wp, wq;
};

}  // namespace

LevelResult run_levels(const WalkChain& chain, const LevelQuery& q) {
  if (q.n_max < 1) throw PreconditionFailed("n must be >= 1");
  if (q.integrated && !(q.b > q.a)) throw PreconditionFailed("empty t-interval");
  const int nch = 3;
  LevelResult res;
  std::vector<RowAcc> acc(static_cast<std::size_t>(q.n_max));

  // One engine run. pos(k, L) gives the representative position, wfrac(L, k) the
  // fraction of a level's mass inside the readout window.
  auto drive = [&](LevelEngine& eng, const std::function<std::int64_t(int)>& thr,
                   const std::function<double(int, std::int64_t)>& pos,
                   const std::function<double(int, std::int64_t)>& wfrac) {
    for (const auto& [st, sym] : q.step_symbols) eng.constrain(st, sym);
    eng.run(q.n_max, thr, [&](const LevelView& v) {
      RowAcc& a = acc[static_cast<std::size_t>(v.step - 1)];
      const auto& ch = *v.channels;
      for (std::size_t s = 0; s < v.states; ++s)
        for (std::size_t i = 0; i < v.levels; ++i) {
          double m = ch[0][s * v.levels + i];
          double tw = ch[1][s * v.levels + i];
          double fw = ch[2][s * v.levels + i];
          if (m == 0.0 && tw == 0.0 && fw == 0.0) continue;
          std::int64_t L = v.lo + static_cast<std::int64_t>(i);
          double x = pos(v.step, L);
          double w = q.window ? wfrac(v.step, L) : 0.0;
          a.sp.add(m);
          a.vp.add(m * x);
          a.tp.add(tw);
          a.wp.add(m * w);
          if (L >= v.threshold) {
            a.sq.add(m);
            a.vq.add(m * x);
            a.tq.add(tw);
            a.fq.add(fw);
            a.wq.add(m * w);
          }
        }
    });
    res.leaked += eng.leaked();
  };

  if (!q.grid) {
    LatticeInfo li = detect_lattice(chain);
    if (!li.lattice) throw NotLattice("increments are not on an affine lattice");
    const double d = li.delta;
    res.delta = d;
    if (!q.integrated) {
      LevelEngine eng(chain, d, true, li.beta, nch);
      eng.seed(0, {{1.0}, {q.t}, {1.0}});
      auto pos = [&](int k, std::int64_t L) { return q.t + k * li.beta + static_cast<double>(L) * d; };
      drive(
          eng,
          [&](int k) { return static_cast<std::int64_t>(std::ceil((-q.t - k * li.beta) / d - 1e-9)); }, pos,
          [&](int k, std::int64_t L) {
            double x = pos(k, L);
            return (x >= q.wa && x <= q.wb) ? 1.0 : 0.0;
          });
    } else {
      double r = li.beta / d;
      if (std::abs(r - std::round(r)) > 1e-9)
        throw NotLattice("t-integration needs increments on a lattice through 0 (use grid)");
      // Pieces of [a, b) cut by the lattice; pieces with the same offset range share a run.
      std::map<std::pair<double, double>, std::vector<std::int64_t>> groups;
      for (auto i = static_cast<std::int64_t>(std::floor(q.a / d)); static_cast<double>(i) * d < q.b; ++i) {
        double u1 = std::max(q.a - static_cast<double>(i) * d, 0.0);
        double u2 = std::min(q.b - static_cast<double>(i) * d, d);
        if (u2 > u1) groups[{u1, u2}].push_back(i);
      }
      for (const auto& [uu, levels] : groups) {
        const double u1 = uu.first, u2 = uu.second, len = u2 - u1, mid = 0.5 * (u1 + u2);
        const std::int64_t lo = levels.front();
        const std::size_t span = static_cast<std::size_t>(levels.back() - lo + 1);
        std::vector<std::vector<double>> w(3, std::vector<double>(span, 0.0));
        for (std::int64_t i : levels) {
          std::size_t j = static_cast<std::size_t>(i - lo);
          w[0][j] = len;
          w[1][j] = len * (static_cast<double>(i) * d + mid);
          w[2][j] = len;
        }
        LevelEngine eng(chain, d, true, 0.0, nch);
        eng.seed(lo, w);
        drive(
            eng, [](int) { return std::int64_t{0}; },
            [&](int, std::int64_t L) { return mid + static_cast<double>(L) * d; },
            [&](int, std::int64_t L) {
              double base = static_cast<double>(L) * d;
              return overlap(u1, u2, q.wa - base, q.wb - base) / len;
            });
      }
    }
  } else {
    const double h = q.h;
    if (!(h > 0.0)) throw PreconditionFailed("grid spacing must be positive");
    res.delta = h;
    LevelEngine eng(chain, h, false, 0.0, nch);
    if (std::isfinite(q.max_position)) eng.set_max_level(static_cast<std::int64_t>(std::floor(q.max_position / h)));
    std::vector<std::vector<double>> w(3);
    std::int64_t lo;
    if (q.integrated) {
      lo = static_cast<std::int64_t>(std::floor(q.a / h));
      auto hi = static_cast<std::int64_t>(std::ceil(q.b / h));
      for (std::int64_t i = lo; i <= hi; ++i) {
        auto [m0, m1] = hat_moments(i, h, q.a, q.b);
        w[0].push_back(m0);
        w[1].push_back(m1);
        w[2].push_back(m0);
      }
      eng.seed(lo, w);
      drive(
          eng, [](int) { return std::int64_t{0}; }, [&](int, std::int64_t L) { return static_cast<double>(L) * h; },
          [&](int, std::int64_t L) { return hat_moments(L, h, q.wa, q.wb).first / h; });
    } else {
      // Grid through t, so the start is exact; the boundary t + Lh = 0 falls between levels.
      const double tau = -q.t / h;
      const auto thr = static_cast<std::int64_t>(std::ceil(tau));
      eng.set_threshold_fraction(static_cast<double>(thr) - tau);
      if (std::isfinite(q.max_position))
        eng.set_max_level(static_cast<std::int64_t>(std::floor((q.max_position - q.t) / h)));
      eng.seed(0, {{1.0}, {q.t}, {1.0}});
      drive(
          eng, [thr](int) { return thr; }, [&](int, std::int64_t L) { return q.t + static_cast<double>(L) * h; },
          [&](int, std::int64_t L) { return hat_moments(L, h, q.wa - q.t, q.wb - q.t).first / h; });
    }
  }

  res.rows.resize(static_cast<std::size_t>(q.n_max));
  for (int k = 1; k <= q.n_max; ++k) {
    RowAcc& a = acc[static_cast<std::size_t>(k - 1)];
    LevelRow& r = res.rows[static_cast<std::size_t>(k - 1)];
    r.n = k;
    r.surv_pre = a.sp.value();
    r.surv_post = a.sq.value();
    r.value_pre = a.vp.value();
    r.value_post = a.vq.value();
    r.sum_pre = r.value_pre - a.tp.value();
    r.sum_post = r.value_post - a.tq.value();
    r.first_post = a.fq.value();
    r.window_pre = a.wp.value();
    r.window_post = a.wq.value();
  }
  return res;
}

SurvivalSeries survival_series(const WalkChain& chain, double t, const std::vector<int>& ns_in,
                               const SeriesOptions& opts) {
  if (ns_in.empty()) throw PreconditionFailed("empty n list");
  std::vector<int> ns = ns_in;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.front() < 1) throw PreconditionFailed("n must be >= 1");
  const int n_max = ns.back();
  Method m = opts.method;
  if (m == Method::kAuto) {
    if (detect_lattice(chain).lattice)
      m = Method::kDp;
    else if (checked_power(chain.k(), chain.warmup() + n_max) <= (std::uint64_t{1} << 24))
      m = Method::kExact;
    else
      m = Method::kGrid;
  }
  SurvivalSeries out;
  out.n = ns;
  out.method = method_name(m);
  const bool post = opts.indexing == ExitIndexing::kAfterN;
  auto push = [&](double s, double v, double u, double es, double ev, double eu, std::int64_t samples) {
    out.survival.push_back({s, es, samples, out.method});
    out.value.push_back({v, ev, samples, out.method});
    out.sum.push_back({u, eu, samples, out.method});
  };
  switch (m) {
    case Method::kExact: {
      auto v = enumerate_survival(chain, t, n_max, opts.indexing);
      for (int n : ns) {
        const SurvivalValue& s = v[static_cast<std::size_t>(n)];
        push(s.survival, s.value, s.sum, 0, 0, 0, 0);
      }
      break;
    }
    case Method::kDp: {
      LevelQuery q;
      q.t = t;
      q.n_max = n_max;
      auto rows = run_levels(chain, q).rows;
      for (int n : ns) {
        const LevelRow& r = rows[static_cast<std::size_t>(n - 1)];
        if (post)
          push(r.surv_post, r.value_post, r.sum_post, 0, 0, 0, 0);
        else
          push(r.surv_pre, r.value_pre, r.sum_pre, 0, 0, 0, 0);
      }
      break;
    }
    case Method::kGrid: {
      double h = opts.grid_h > 0 ? opts.grid_h : 1e-2 * std::max(chain.max_abs_increment(), 1e-12);
      LevelQuery q;
      q.t = t;
      q.n_max = n_max;
      q.grid = true;
      q.max_position = std::max(t, 0.0) + chain.max_abs_increment() * (12.0 * std::sqrt(static_cast<double>(n_max)) + 2.0);
      q.h = h;
      auto coarse = run_levels(chain, q);
      q.h = h / 2;
      auto fine = run_levels(chain, q);
      for (int n : ns) {
        const LevelRow& c = coarse.rows[static_cast<std::size_t>(n - 1)];
        const LevelRow& f = fine.rows[static_cast<std::size_t>(n - 1)];
        if (post)
          push(f.surv_post, f.value_post, f.sum_post, std::abs(f.surv_post - c.surv_post),
               std::abs(f.value_post - c.value_post), std::abs(f.sum_post - c.sum_post), 0);
        else
          push(f.surv_pre, f.value_pre, f.sum_pre, std::abs(f.surv_pre - c.surv_pre), std::abs(f.value_pre - c.value_pre),
               std::abs(f.sum_pre - c.sum_pre), 0);
      }
      out.note = "grid spacing " + std::to_string(h / 2) + "; error = |r(h) - r(h/2)|";
      if (fine.leaked > 0) out.note += "; mass above truncation " + std::to_string(fine.leaked);
      break;
    }
    case Method::kMc: {
      McOptions mo = opts.mc;
      mo.indexing = opts.indexing;
      McSurvival mc = survival_mc(chain, t, ns, mo);
      out.survival = mc.survival;
      out.value = mc.value;
      out.sum = mc.sum;
      out.note = mc.note;
      break;
    }
    case Method::kAuto: break;
  }
  return out;
}

double density_theta(const GibbsModel& model, const Word& y, const Word& z, const Word& zp) {
  if (z.symbols.empty() || zp.symbols.empty()) throw PreconditionFailed("empty anchor");
  if (z.symbols[0] != zp.symbols[0]) throw AnchorMismatch("z_0 != z'_0");
  const RealFunction& psi = model.psi;
  const int dpsi = psi.future_depth();
  const int terms = dpsi - 1;  // k >= dpsi reads only y
  if (y.size() < terms) throw WindowOutOfRange("y needs at least " + std::to_string(terms) + " symbols");
  if (z.size() < terms || zp.size() < terms) throw WindowOutOfRange("anchors too short for the potential");
  std::vector<int> a = y.symbols, b = y.symbols;
  a.insert(a.end(), z.symbols.begin(), z.symbols.end());
  b.insert(b.end(), zp.symbols.begin(), zp.symbols.end());
  if (!model.spec.admissible(a) || !model.spec.admissible(b)) throw PreconditionFailed("y·z or y·z' inadmissible");
  const int ny = y.size();
  double theta = 0.0;
  for (int k = 1; k <= terms; ++k) {
    int off = ny - k;
    theta += psi.at(psi.space().encode(a.data() + off)) - psi.at(psi.space().encode(b.data() + off));
  }
  return theta;
}

namespace {

bool matches(const Word& x, const Word& cyl, int shift) {
  for (int p = 0; p < cyl.size(); ++p) {
    int c = cyl.origin_offset + p + shift - x.origin_offset;
    if (c < 0 || c >= x.size()) throw WindowOutOfRange("cylinder outside the enumerated range");
    if (x.symbols[static_cast<std::size_t>(c)] != cyl.symbols[static_cast<std::size_t>(p)]) return false;
  }
  return true;
}

}  // namespace

DualityResult duality_check(const GibbsModel& model, const RealFunction& g, const std::vector<DualityTerm>& F, int n) {
  if (n < 1) throw PreconditionFailed("duality needs n >= 1");
  const int m = g.past_depth(), d = g.future_depth();
  auto eval = [&](const Word& x, int lo_coord) {  // g on the window starting at coordinate lo_coord
    return g.at(g.space().encode(x.symbols.data() + (lo_coord - x.origin_offset)));
  };
  auto range = [&](int lo, int hi, int shiftA, int shiftB) {
    for (const auto& term : F) {
      if (term.A.size()) {
        lo = std::min(lo, term.A.origin_offset + shiftA);
        hi = std::max(hi, term.A.end_coordinate() + shiftA);
      }
      if (term.B.size()) {
        lo = std::min(lo, term.B.origin_offset + shiftB);
        hi = std::max(hi, term.B.end_coordinate() + shiftB);
      }
    }
    return std::pair<int, int>{lo, hi};
  };
  const int k = model.spec.alphabet_size();

  // LHS: ∫∫ F(x, t, T^{-n}x, t + Š_n g(x)) 1{τ̌_t^g(x) > n-1} ν(dx) dt.
  CompensatedSum<double> lhs;
  {
    auto [lo, hi] = range(-n - m, d - 1, 0, -n);
    check_budget(checked_power(k, hi - lo), "duality enumeration");
    for_each_nu_word(model, lo, hi, [&](const Word& x, double mass) {
      double S = 0.0, cmin = -INFINITY;
      for (int j = 1; j <= n; ++j) {
        S += eval(x, -j - m);
        if (j <= n - 1) cmin = std::max(cmin, -S);
      }
      for (const auto& term : F) {
        if (!matches(x, term.A, 0) || !matches(x, term.B, -n)) continue;
        double l = std::max({term.I.lo, term.J.lo - S, cmin});
        double r = std::min(term.I.hi, term.J.hi - S);
        if (r > l) lhs.add(term.coef * mass * (r - l));
      }
    });
  }
  // RHS: ∫∫ F(Tⁿx, u − S_n g(x), x, u) 1{τ_u^{-g}(x) > n-1} ν(dx) du.
  CompensatedSum<double> rhs;
  {
    auto [lo, hi] = range(-m, n - 1 + d, n, 0);
    check_budget(checked_power(k, hi - lo), "duality enumeration");
    for_each_nu_word(model, lo, hi, [&](const Word& x, double mass) {
      double S = 0.0, cmin = -INFINITY;
      for (int j = 0; j < n; ++j) {
        S += eval(x, j - m);
        if (j + 1 <= n - 1) cmin = std::max(cmin, S);
      }
      for (const auto& term : F) {
        if (!matches(x, term.A, n) || !matches(x, term.B, 0)) continue;
        double l = std::max({term.J.lo, term.I.lo + S, cmin});
        double r = std::min(term.J.hi, term.I.hi + S);
        if (r > l) rhs.add(term.coef * mass * (r - l));
      }
    });
  }
  DualityResult out{lhs.value(), rhs.value(), 0.0};
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace condlim
