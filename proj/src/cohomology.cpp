#include "condlim/cohomology.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>

#include "condlim/numeric.hpp"

namespace condlim {

Promoted promote_to_future(const RealFunction& g, int shift) {
  if (shift < 0) shift = g.past_depth();
  if (shift < g.past_depth()) throw PreconditionFailed("promotion shift smaller than past depth");
  return {g.shifted(shift), shift};
}

RealFunction demote(const RealFunction& h, int shift) {
  if (!h.future_only()) throw PastDependence("demote expects a future-only table");
  if (h.future_depth() <= shift) throw PreconditionFailed("demote would leave no future coordinate");
  // Same table, coordinates relabelled by -shift.
  return RealFunction(h.spec(), shift, h.future_depth() - shift, h.values());
}

TransferSolution solve_transfer_equation(const GibbsModel& model, const RealFunction& g, const TransferOptions& opts) {
  if (!g.future_only()) throw PastDependence("solve_transfer_equation needs a future-only g");
  double mean = model.expectation(g);
  if (std::abs(mean) > opts.mean_tol) throw NonZeroMean("nu+(g) = " + std::to_string(mean));
  const int D = std::max({model.depth, model.psi.future_depth(), g.future_depth()});
  TransferMatrix<double> op(model.psi, D);
  Eigen::VectorXd x = op.lift(g - mean);
  Eigen::VectorXd lg = op.apply(x);
  std::vector<CompensatedSum<double>> acc(static_cast<std::size_t>(x.size()));
  TransferSolution sol;
  double prev = x.cwiseAbs().maxCoeff();
  double ratio = 0.0;
  for (int n = 1; n <= opts.max_terms; ++n) {
    x = op.apply(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) acc[static_cast<std::size_t>(i)].add(x[i]);
    double nx = x.cwiseAbs().maxCoeff();
    sol.terms = n;
    if (prev > 0) ratio = std::max(ratio * 0.5, nx / prev);
    if (nx < opts.tol) {
      sol.contraction = std::min(ratio, 1.0);
      sol.tail_bound = ratio < 1.0 ? nx * ratio / (1.0 - ratio) : INFINITY;
      break;
    }
    if (n >= 50 && nx / prev >= 1.0 - 1e-6)
      throw NoConvergence("Neumann series contraction ratio " + std::to_string(nx / prev) + " too close to 1");
    prev = nx;
    if (n == opts.max_terms) throw NoConvergence("Neumann series did not reach tolerance");
  }
  Eigen::VectorXd h(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) h[i] = acc[static_cast<std::size_t>(i)].value();
  sol.residual = (h - op.apply(h) - lg).cwiseAbs().maxCoeff();
  sol.h = op.as_function(h).trimmed(0.0);
  return sol;
}

double martingale_increment_defect(const GibbsModel& model, const RealFunction& f0, int n) {
  if (!f0.future_only()) throw PastDependence("martingale part must be future-only");
  const SubshiftSpec& spec = model.spec;
  const int dz = std::max(model.psi.future_depth(), f0.future_depth());
  const int len = (n - 1) + dz;  // a (n-1 symbols) followed by the anchor window
  const int dpsi = model.psi.future_depth(), d0 = f0.future_depth();
  auto sp = window_space(spec, len);
  std::vector<int> u(static_cast<std::size_t>(len)), bu(static_cast<std::size_t>(len) + 1);
  double worst = 0.0;
  for (std::size_t i : sp->admissible()) {
    sp->decode(i, u.data());
    // Š_{n-1} f0 on a·z: term j reads from index (n-1) - j.
    CompensatedSum<double> rhs;
    for (int j = 1; j <= n - 1; ++j) rhs.add(f0.at(f0.space().encode(u.data() + (n - 1 - j))));
    CompensatedSum<double> lhs;
    std::copy(u.begin(), u.end(), bu.begin() + 1);
    for (int b = 0; b < spec.alphabet_size(); ++b) {
      if (!spec.allowed(b, u[0])) continue;
      bu[0] = b;
      double w = std::exp(-model.psi.at(model.psi.space().encode(bu.data())));
      double s = 0.0;
      for (int j = 1; j <= n; ++j) s += f0.at(f0.space().encode(bu.data() + (n - j)));
      lhs.add(w * s);
    }
    worst = std::max(worst, std::abs(lhs.value() - rhs.value()));
  }
  (void)dpsi;
  (void)d0;
  return worst;
}

MartingaleData martingale_part(const GibbsModel& model, const RealFunction& f, const MartingaleOptions& opts) {
  double mean = model.expectation(f);
  if (std::abs(mean) > opts.mean_tol) throw NonZeroMean("nu(f) = " + std::to_string(mean));
  const int m = f.past_depth();
  Promoted p = promote_to_future(f);
  TransferSolution sol = solve_transfer_equation(model, p.h, opts.transfer);

  MartingaleData md;
  md.shift = m;
  md.neumann_terms = sol.terms;
  md.tail_bound = sol.tail_bound;
  md.f0 = (p.h - sol.h.shifted(1) + sol.h).trimmed(1e-15 * std::max(1.0, p.h.sup_norm()));
  // f − f0 = H∘T − H with H = h − Σ_{j<m} f∘T^j.
  RealFunction H = sol.h;
  for (int j = 0; j < m; ++j) H = H - f.shifted(j);
  H = H.trimmed(0.0);
  double hi = -INFINITY, lo = INFINITY;
  for (std::size_t i : H.space().admissible()) {
    hi = std::max(hi, H.at(i));
    lo = std::min(lo, H.at(i));
  }
  md.h = H - 0.5 * (hi + lo);
  md.sigma2 = model.expectation(md.f0 * md.f0);
  md.is_coboundary = md.sigma2 < opts.cob_tol;
  for (int n = 1; n <= 3; ++n) md.martingale_defect = std::max(md.martingale_defect, martingale_increment_defect(model, md.f0, n));
  if (md.martingale_defect > 1e-10)
    throw NoConvergence("martingale identity violated by " + std::to_string(md.martingale_defect));
  if (md.is_coboundary && opts.throw_on_coboundary)
    throw IsCoboundary("sigma^2 = " + std::to_string(md.sigma2) + " below cob_tol");
  return md;
}

GreenKubo green_kubo_variance(const GibbsModel& model, const RealFunction& f) {
  const int Lf = f.window_length();
  const int L = std::max({Lf, model.depth, 2});
  const SubshiftSpec& spec = model.spec;
  auto sp = window_space(spec, L);
  Eigen::VectorXd pi = model.mass_table(L);
  Eigen::VectorXd pi_ext = model.mass_table(L + 1);
  const std::size_t k = static_cast<std::size_t>(spec.alphabet_size());
  const std::size_t tail = sp->power(L - 1);
  // Forward chain: w = (w0..w_{L-1}) -> (w1..w_{L-1}, c) with prob ν[w c]/ν[w].
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t w : sp->admissible()) {
    double pw = pi[static_cast<Eigen::Index>(w)];
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t ext = w * k + c;
      double pe = pi_ext[static_cast<Eigen::Index>(ext)];
      if (pe <= 0.0) continue;
      std::size_t next = (w % tail) * k + c;
      trip.emplace_back(static_cast<int>(w), static_cast<int>(next), pe / pw);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> P(static_cast<Eigen::Index>(sp->size()), static_cast<Eigen::Index>(sp->size()));
  P.setFromTriplets(trip.begin(), trip.end());
  RealFunction fe = f.extended(f.past_depth(), L - f.past_depth());
  double mean = model.expectation(f);
  Eigen::VectorXd F = fe.values();
  for (std::size_t i : sp->admissible()) F[static_cast<Eigen::Index>(i)] -= mean;
  Eigen::VectorXd piF = pi.cwiseProduct(F);
  double l1 = piF.cwiseAbs().sum();

  GreenKubo gk;
  CompensatedSum<double> s;
  s.add(piF.dot(F));
  Eigen::VectorXd u = F;
  double prev = u.cwiseAbs().maxCoeff();
  for (int n = 1; n <= 1000000; ++n) {
    u = P * u;
    double cn = piF.dot(u);
    s.add(2.0 * cn);
    gk.terms = n;
    double nu = u.cwiseAbs().maxCoeff();
    double r = prev > 0 ? nu / prev : 0.0;
    prev = nu;
    if (std::abs(cn) < 1e-14 && l1 * nu < 1e-14) {
      gk.tail_bound = r < 1.0 ? 2.0 * l1 * nu * r / (1.0 - r) : INFINITY;
      break;
    }
  }
  gk.sigma2 = s.value();
  return gk;
}

Truncation truncate_past(const GibbsModel& model, const RealFunction& g, int m) {
  const int M = g.past_depth();
  if (m < 0 || m > M) throw PreconditionFailed("truncation depth must lie in [0, past_depth]");
  if (m == M) return {g, 0.0};
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  MartingaleData md = martingale_part(model, g, mo);
  const RealFunction& H = md.h;
  if (m == 0) return {md.f0, 2.0 * H.sup_norm()};
  const int cut = H.past_depth() - m;
  if (cut <= 0) {
    RealFunction gm = (md.f0 + H.shifted(1) - H).trimmed(1e-15);
    return {gm, 0.0};
  }
  // Midrange of H over the cut coordinates for each kept window.
  const WindowSpace& sp = H.space();
  std::size_t stride = sp.power(H.window_length() - cut);
  std::map<std::size_t, std::pair<double, double>> range;
  for (std::size_t i : sp.admissible()) {
    auto [it, fresh] = range.try_emplace(i % stride, H.at(i), H.at(i));
    if (!fresh) {
      it->second.first = std::min(it->second.first, H.at(i));
      it->second.second = std::max(it->second.second, H.at(i));
    }
  }
  auto keep = window_space(H.spec(), H.window_length() - cut);
  double err = 0.0;
  RealFunction hm = RealFunction::generate(H.spec(), m, H.future_depth(), [&](const int* w) {
    auto& r = range.at(keep->encode(w));
    err = std::max(err, 0.5 * (r.second - r.first));
    return 0.5 * (r.first + r.second);
  });
  RealFunction gm = (md.f0 + hm.shifted(1) - hm).trimmed(0.0);
  return {gm, 2.0 * err};
}

}  // namespace condlim
