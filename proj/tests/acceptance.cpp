// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all)
// CONDLIM_CCLT_PROFILE=full|reduced|both selects the conditioned-CLT profile (default both).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "condlim/cohomology.hpp"
#include "condlim/examples.hpp"
#include "condlim/harmonic.hpp"
#include "condlim/llt.hpp"
#include "condlim/past_measure.hpp"
#include "condlim/transfer.hpp"

using namespace condlim;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Loaded {
  std::string name;
  GibbsModel model;
  RealFunction f;
};

std::vector<Loaded> load_all() {
  std::vector<Loaded> out;
  for (const auto& ex : shipped_examples())
    out.push_back({ex.name, gibbs_model(ex.file), model_function(ex.file, "f")});
  return out;
}

const Loaded& find(const std::vector<Loaded>& all, const std::string& name) {
  for (const auto& l : all)
    if (l.name == name) return l;
  throw std::runtime_error("no model " + name);
}

Word word(std::vector<int> s, int offset = 0) { return Word{std::move(s), offset}; }

int anchor_depth(const GibbsModel& m, const RealFunction& g) {
  return std::max(m.psi.future_depth(), g.future_depth());
}

MartingaleData martingale(const GibbsModel& m, const RealFunction& f) {
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  return martingale_part(m, f, mo);
}

// Integer-valued observables for the lattice oracle comparisons.
RealFunction lattice_observable(const Loaded& l) {
  if (l.name == "srw") return l.f;
  return RealFunction::generate(l.model.spec, 0, 2, [](const int* w) { return static_cast<double>((3 * w[0] + w[1]) % 4) - 1.5; });
}

// ---------------------------------------------------------------------------

void criterion1(const std::vector<Loaded>& all, Outcome& o) {
  double duality = 0.0, side = 0.0, norm = 0.0, lf0 = 0.0, mart = 0.0, kolm = 0.0, refine = 0.0;
  for (const auto& l : all) {
    const GibbsModel& m = l.model;
    const int k = m.spec.alphabet_size();
    // Duality with 20 random step-function test functions.
    std::vector<DualityTerm> F;
    for (int i = 0; i < 20; ++i) {
      PhiloxStream rng(17, 3u, static_cast<std::uint64_t>(i));
      DualityTerm term;
      term.coef = 2.0 * rng.uniform() - 1.0;
      for (Word* w : {&term.A, &term.B}) {
        int len = 1 + static_cast<int>(rng.uniform() * 2);
        for (int p = 0; p < len; ++p) w->symbols.push_back(static_cast<int>(rng.uniform() * k));
      }
      double lo = -1.0 + 2.0 * rng.uniform();
      term.I = {lo, lo + 0.1 + 2.0 * rng.uniform()};
      lo = -1.0 + 2.0 * rng.uniform();
      term.J = {lo, lo + 0.1 + 2.0 * rng.uniform()};
      F.push_back(term);
    }
    for (int n = 1; n <= 10; ++n) {
      DualityResult d = duality_check(m, l.f, F, n);
      duality = std::max(duality, d.abs_diff);
      side = std::max(side, std::abs(d.lhs));
    }

    RealFunction one = RealFunction::constant(m.spec, 1.0);
    norm = std::max(norm, (apply_ruelle(m.psi, one) - 1.0).sup_norm());

    MartingaleData md = martingale(m, l.f);
    lf0 = std::max(lf0, apply_ruelle(m.psi, md.f0).sup_norm());
    for (int n = 1; n <= 3; ++n) mart = std::max(mart, martingale_increment_defect(m, md.f0, n));

    // ν_z⁻ masses: Σ_b ν_z⁻[b·a] = ν_z⁻[a] for |a| < 5; total mass 1.
    const int D = anchor_depth(m, md.f0);
    for (const Word& z : enumerate_words(m.spec, D)) {
      PastMeasure pm = make_past_measure(m, z);
      for (int len = 0; len <= 4; ++len) {
        for (const Word& a0 : len == 0 ? std::vector<Word>{Word{}} : enumerate_words(m.spec, len)) {
          Word a = a0;
          a.origin_offset = -len;
          double parent = len == 0 ? 1.0 : past_cylinder_mass(pm, a);
          double sum = 0.0;
          for (int b = 0; b < k; ++b) {
            Word ba = a;
            ba.symbols.insert(ba.symbols.begin(), b);
            ba.origin_offset = -len - 1;
            sum += past_cylinder_mass(pm, ba);
          }
          kolm = std::max(kolm, std::abs(sum - parent));
        }
      }
    }

    // μ̌ masses with the finite-N family V̌_{N-|a|} (exact enumeration): refinement and total mass.
    const int N = 8;
    SeriesOptions so;
    so.method = Method::kExact;
    DepthOracle V = [&](const Word& z, double t, int depth) {
      WalkChain chain(m, md.f0, z);
      return harmonic_finite_n(chain, t, N - depth, so).value;
    };
    const Word z = enumerate_words(m.spec, D).front();
    PastMeasure pm = make_past_measure(m, z);
    for (double t : {0.0, 0.7}) {
      for (int len = 0; len <= 3; ++len) {
        for (const Word& a0 : len == 0 ? std::vector<Word>{Word{}} : enumerate_words(m.spec, len)) {
          Word a = a0;
          a.origin_offset = -len;
          double parent = len == 0 ? 1.0 : mu_minus_cylinder_mass(pm, md.f0, t, a, V);
          double sum = 0.0;
          for (int b = 0; b < k; ++b) {
            Word ba = a;
            ba.symbols.insert(ba.symbols.begin(), b);
            ba.origin_offset = -len - 1;
            double mass = mu_minus_cylinder_mass(pm, md.f0, t, ba, V);
            o.check(mass >= 0.0, "negative mu mass");
            sum += mass;
          }
          refine = std::max(refine, std::abs(sum - parent));
        }
      }
    }
  }
  o.detail << "duality " << duality << " (max |side| " << side << "), normalization " << norm << ", |L f0| " << lf0 << ", martingale identity "
           << mart << ", nu_z Kolmogorov " << kolm << ", mu refinement " << refine;
  o.check(duality <= 1e-10, "duality");
  o.check(norm <= 1e-10, "normalization");
  o.check(lf0 <= 1e-10, "L f0");
  o.check(mart <= 1e-10, "martingale identity");
  o.check(kolm <= 1e-10, "nu_z consistency");
  o.check(refine <= 1e-10, "mu refinement");
}

void criterion2(const std::vector<Loaded>& all, Outcome& o) {
  double exact_dp = 0.0, worst_z = 0.0;
  int comparisons = 0;
  for (const auto& l : all) {
    RealFunction g = lattice_observable(l);
    const int D = anchor_depth(l.model, g);
    const Word z = enumerate_words(l.model.spec, D).back();
    PastMeasure pm = make_past_measure(l.model, z);
    for (double t : {0.0, 1.5}) {
      std::vector<int> ladder;
      for (int n = 1; n <= 18; ++n) {
        SurvivalValue e = survival_exact(pm, g, t, n), d = survival_dp(pm, g, t, n);
        exact_dp = std::max({exact_dp, std::abs(e.survival - d.survival), std::abs(e.value - d.value),
                             std::abs(e.sum - d.sum)});
        ladder.push_back(n);
      }
      McOptions mc;
      mc.samples = 1000000;
      mc.seed = 5;
      McSurvival s = survival_mc(pm, g, t, ladder, mc);
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        double ex = survival_exact(pm, g, t, ladder[i]).survival;
        double se = s.survival[i].std_error;
        double zscore = se > 0 ? std::abs(s.survival[i].estimate - ex) / se : (s.survival[i].estimate == ex ? 0.0 : 1e9);
        worst_z = std::max(worst_z, zscore);
        ++comparisons;
      }
    }
  }
  o.detail << "max |exact - dp| " << exact_dp << " (n <= 18), max MC z-score " << worst_z << " over " << comparisons
           << " comparisons at N = 1e6";
  o.check(exact_dp <= 1e-12, "exact vs dp");
  o.check(worst_z <= 4.0, "MC within 4 SE");
}

void criterion3(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& srw = find(all, "srw");
  PastMeasure pm = make_past_measure(srw.model, word({0}));
  double worst = 0.0;
  for (int n = 1; n <= 20; ++n) {
    double c = 1.0;
    for (int i = 1; i <= n / 2; ++i) c = c * (n - n / 2 + i) / i;
    double closed = c / std::ldexp(1.0, n);
    worst = std::max(worst, std::abs(survival_exact(pm, srw.f, 0.0, n).survival - closed));
  }
  StoppedMc v0 = harmonic_stopped_mc(srw.model, srw.f, StationaryAnchor{}, 0.0, 100000, 100000, 3);
  StoppedMc v15 = harmonic_stopped_mc(srw.model, srw.f, StationaryAnchor{}, 1.5, 100000, 100000, 4);
  o.detail << "max |survival - C(n,n/2)/2^n| " << worst << "; V(0) = " << v0.value.estimate << " (bias bound "
           << v0.bias_bound << "), V(1.5) = " << v15.value.estimate << " (bias bound " << v15.bias_bound << ")";
  o.check(worst <= 1e-15, "ballot closed form");
  o.check(std::abs(v0.value.estimate - 1.0) <= 0.01, "V(0)");
  o.check(std::abs(v15.value.estimate - 2.0) <= 0.02, "V(1.5)");
}

void criterion4(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& srw = find(all, "srw");
  std::vector<int> ladder{125, 250, 500, 1000, 2000};
  ExitTailResult r = exit_tail_experiment(srw.model, srw.f, 0.0, 1.0, ladder, Method::kDp);
  o.detail << "V integral " << r.v_integral << " (n = 2000 alone " << r.v_integral_raw << "); ratios";
  for (const auto& row : r.rows) o.detail << " " << row.n << ":" << row.scaled_ratio;
  o.check(std::abs(r.rows.back().scaled_ratio - 1.0) <= 0.1, "ratio at n = 2000");
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    o.check(std::abs(r.rows[i].scaled_ratio - 1.0) <= 1.2 * std::abs(r.rows[i - 1].scaled_ratio - 1.0),
            "monotone trend at n = " + std::to_string(r.rows[i].n));
}

void criterion5(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& golden = find(all, "golden");
  const char* env = std::getenv("CONDLIM_CCLT_PROFILE");
  std::string profile = env ? env : "both";
  if (profile == "reduced" || profile == "both") {
    auto t0 = std::chrono::steady_clock::now();
    CltResult r = conditioned_clt_experiment(golden.model, golden.f, 0.0, 1.0, 400, 200000, 21);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail << "reduced n = 400: KS " << r.ks << " with " << r.survivors << " survivors (" << secs << " s); ";
    o.check(r.ks <= 0.05, "reduced KS");
    o.check(secs < 180.0, "reduced runtime");
  }
  if (profile == "full" || profile == "both") {
    CltResult r = conditioned_clt_experiment(golden.model, golden.f, 0.0, 1.0, 2500, 600000, 22);
    o.detail << "full n = 2500: KS " << r.ks << " with " << r.survivors << " survivors, mean " << r.mean << " +- "
             << r.mean_se << " (Rayleigh " << std::sqrt(std::numbers::pi / 2) << ")";
    o.check(r.survivors >= 10000, "survivor count");
    o.check(r.ks <= 0.02, "full KS");
  }
}

void criterion6(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& golden = find(all, "golden");
  CllResult r = conditioned_llt_experiment(golden.model, golden.f, 0.0, 1.0, 0.0, 1.0, {256, 512, 1024, 2048, 4096});
  o.detail << "slope " << r.slope << " (se " << r.slope_se << "), prefactor ratio " << r.prefactor_ratio
           << ", probe max " << r.probe_max << ", method " << r.method;
  o.check(r.slope >= -1.65 && r.slope <= -1.35, "slope band");
  o.check(r.prefactor_ratio >= 0.5 && r.prefactor_ratio <= 2.0, "prefactor band");
}

void criterion7(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& golden = find(all, "golden");
  BandLimitedTarget F = make_target(RealFunction::constant(golden.model.spec, 1.0), 0.0, 1.0, 0.1);
  const Word z = enumerate_words(golden.model.spec, anchor_depth(golden.model, golden.f)).front();
  LltFit r = remainder_decay_fit(golden.model, golden.f, F, {64, 128, 256, 512, 1024, 2048, 4096}, z);
  o.detail << "slope " << r.fit.slope << " (se " << r.fit.slope_se << "), R^2 " << r.fit.r2 << "; n*remainder";
  for (const auto& p : r.points) o.detail << " " << p.n << ":" << p.n * p.remainder;
  o.check(r.fit.slope >= -0.75 && r.fit.slope <= -0.25, "slope band");
  o.check(r.fit.r2 >= 0.5, "R^2");
}

void criterion8(const std::vector<Loaded>& all, Outcome& o) {
  const Loaded& srw = find(all, "srw");
  double cos_err = 0.0;
  for (double t = 0.1; t < 3.1; t += 0.25)
    cos_err = std::max(cos_err, std::abs(perturbed_spectrum(srw.model, srw.f, t).lambda - std::complex<double>(std::cos(t), 0.0)));
  o.detail << "max |lambda_t - cos t| " << cos_err << "; sigma2 (fit / nu(f0^2) / Green-Kubo):";
  o.check(cos_err <= 1e-12, "lambda_t = cos t");
  double coh = 0.0;
  for (const auto& l : all) {
    double fit = variance_from_lambda(l.model, l.f).sigma2;
    double mart = martingale(l.model, l.f).sigma2;
    double gk = green_kubo_variance(l.model, l.f).sigma2;
    o.detail << " " << l.name << " " << fit << "/" << mart << "/" << gk;
    o.check(std::abs(fit - mart) <= 1e-6 && std::abs(fit - gk) <= 1e-6 && std::abs(mart - gk) <= 1e-6,
            "sigma2 agreement on " + l.name);
    RealFunction u = RealFunction::generate(l.model.spec, 0, 2, [](const int* w) { return std::sin(1.0 + w[0] - 2.0 * w[1]); });
    RealFunction f1 = promote_to_future(l.f).h;
    RealFunction f2 = f1 + u.shifted(1) - u;
    for (double t : {0.3, 1.0, 2.0})
      coh = std::max(coh, std::abs(perturbed_spectrum(l.model, f1, t).lambda - perturbed_spectrum(l.model, f2, t).lambda));
  }
  o.detail << "; cohomology invariance " << coh;
  o.check(coh <= 1e-10, "cohomology invariance");
}

// V̌_n for g0 = f0 (martingale, future-only) on anchors of length D and a t-grid.
// For a martingale g0, 0 <= V̌ − V̌_n <= ‖g0‖ P(τ̌ > n), which is the truncation error used below.
void criterion9(const std::vector<Loaded>& all, Outcome& o) {
  for (const auto& l : all) {
    const GibbsModel& m = l.model;
    MartingaleData md = martingale(m, l.f);
    const RealFunction& g0 = md.f0;
    const double c = md.bound_constant(), gn = g0.sup_norm();
    const int n = l.name == "srw" ? 400 : 150;
    SeriesOptions so;
    so.method = Method::kAuto;
    struct Val {
      double v, err;
    };
    std::map<std::pair<std::vector<int>, double>, Val> cache;
    auto V = [&](const Word& z, double t) {
      auto key = std::make_pair(z.symbols, t);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
      WalkChain chain(m, g0, z);
      SurvivalSeries s = survival_series(chain, t, {n}, so);
      Val v{s.value[0].estimate, s.value[0].std_error + gn * (s.survival[0].estimate + s.survival[0].std_error)};
      cache.emplace(key, v);
      return v;
    };
    std::vector<double> grid;
    for (double t = -c - 1.0; t <= 3.0 + 1e-9; t += 0.5) grid.push_back(t);
    const int D = anchor_depth(m, g0);
    double worst_res = 0.0, worst_ratio = 0.0, worst_mono = 0.0, worst_bound = 0.0, below = 0.0;
    for (const Word& z : enumerate_words(m.spec, D)) {
      double prev = -INFINITY;
      for (double t : grid) {
        Val lhs = V(z, t);
        worst_mono = std::max(worst_mono, prev - lhs.v - lhs.err);
        prev = lhs.v;
        worst_bound = std::max({worst_bound, std::max(t - c, 0.0) - lhs.v - lhs.err, lhs.v - std::max(t, 0.0) - c - lhs.err});
        if (t < -c) below = std::max(below, std::abs(lhs.v));
        double rhs = 0.0, err = lhs.err;
        for (int b = 0; b < m.spec.alphabet_size(); ++b) {
          if (!m.spec.allowed(b, z.symbols.front())) continue;
          Word bz = z;
          bz.symbols.insert(bz.symbols.begin(), b);
          bz.origin_offset = -1;
          double p = std::exp(-m.psi.evaluate(bz, -1)), gv = g0.evaluate(bz, -1);
          if (t + gv < 0.0) continue;
          bz.origin_offset = 0;
          Val child = V(bz, t + gv);
          rhs += p * child.v;
          err += p * child.err;
        }
        double res = std::abs(lhs.v - rhs);
        worst_res = std::max(worst_res, res);
        worst_ratio = std::max(worst_ratio, res / err);
      }
    }
    o.detail << l.name << ": c " << c << ", residual " << worst_res << " (max residual/error " << worst_ratio
             << "), monotonicity violation " << std::max(worst_mono, 0.0) << ", bound violation "
             << std::max(worst_bound, 0.0) << ", |V| below -c " << below << "; ";
    o.check(worst_ratio <= 1.0, "harmonicity residual on " + l.name);
    o.check(worst_mono <= 0.0, "monotonicity on " + l.name);
    o.check(worst_bound <= 0.0, "two-sided bound on " + l.name);
    o.check(below == 0.0, "vanishing below -c on " + l.name);
  }
}

void criterion10(const std::vector<Loaded>& all, Outcome& o) {
  for (const auto& l : all) {
    std::vector<BasisElement> basis{{Word{}, {0.0, 1.0}}, {word({0}), {0.0, 2.0}}, {word({1}), {0.5, 1.5}}};
    std::vector<int> ladder{32, 128, 512};
    std::vector<QuasiInvarianceRow> rows = quasi_invariance_residual(l.model, l.f, basis, ladder, Method::kAuto);
    o.detail << l.name << " (n = " << ladder.back() << "):";
    for (const auto& r : rows) {
      if (r.n != ladder.back()) continue;
      o.detail << " residual " << r.limit_residual << " (finite n " << r.residual << ") vs gap " << r.cauchy_gap << ";";
      o.check(r.limit_residual <= 2.0 * r.cauchy_gap, "basis " + std::to_string(r.basis) + " on " + l.name);
    }
    o.detail << " ";
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<void(const std::vector<Loaded>&, Outcome&)>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [id, fn] : criteria) selected.insert(id);

  const std::vector<Loaded> all = load_all();
  int failed = 0;
  for (int id : selected) {
    auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("criterion %d: unknown\n", id);
      ++failed;
      continue;
    }
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      it->second(all, o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
