#include "condlim/llt.hpp"

#include <gsl/gsl_sf_expint.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "condlim/cohomology.hpp"
#include "condlim/error.hpp"

namespace condlim {

namespace {

constexpr double kPi = std::numbers::pi;

// CDF of ρ: 1/2 + (Si(x) − (1 − cos x)/x)/π.
double fejer_cdf(double x) {
  if (std::abs(x) < 1e-8) return 0.5 + x / kPi;
  return 0.5 + (gsl_sf_Si(x) - (1.0 - std::cos(x)) / x) / kPi;
}

double fejer_density(double x) {
  if (std::abs(x) < 1e-4) return (0.5 - x * x / 24.0) / kPi;
  return (1.0 - std::cos(x)) / (kPi * x * x);
}

// Σ step·w(t)·P(t)·e^{-iut} over a sampled profile, with w a cosine taper on the
// outer half of the window.
std::complex<double> tapered_dft(const ProfileGrid& g, double u) {
  using C = std::complex<double>;
  const std::size_t N = g.values.size();
  const double half = 0.5 * g.step * static_cast<double>(N - 1);
  const double centre = g.lo + half;
  CompensatedSum<double> re, im;
  C rot = std::exp(C(0.0, -u * g.step));
  C ph;
  for (std::size_t i = 0; i < N; ++i) {
    const double t = g.lo + g.step * static_cast<double>(i);
    if (i % 1024 == 0) ph = std::exp(C(0.0, -u * t));
    double d = std::abs(t - centre) / half;
    double w = d <= 0.5 ? 1.0 : std::pow(std::cos(kPi * (d - 0.5)), 2);
    double end = (i == 0 || i + 1 == N) ? 0.5 : 1.0;
    C v = (end * w * g.values[i] * g.step) * ph;
    re.add(v.real());
    im.add(v.imag());
    ph *= rot;
  }
  return {re.value(), im.value()};
}

}  // namespace

double FejerKernel::density(double x) const { return fejer_density(x / scale) / scale; }
double FejerKernel::cdf(double x) const { return fejer_cdf(x / scale); }
double FejerKernel::hat(double t) const { return std::max(0.0, 1.0 - scale * std::abs(t)); }

FejerKernel make_kernel(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw PreconditionFailed("kernel scale must lie in (0, 1/4)");
  FejerKernel k;
  k.scale = epsilon;
  const double X = 2.0 * kPi * epsilon * 320.0;
  const int per_side = 8 * 2 * 320 * 4;  // spacing 2π·ε/64 < ε/8
  const double h = X / per_side;
  CompensatedSum<double> mass;
  for (int i = -per_side; i <= per_side; ++i) {
    double u = h * i;
    double v = k.density(u);
    k.u.push_back(u);
    k.values.push_back(v);
    mass.add((std::abs(i) == per_side ? 0.5 : 1.0) * h * v);
  }
  k.grid_mass = mass.value();
  k.tail_mass = 2.0 * (1.0 - fejer_cdf(X / epsilon));
  return k;
}

double BandLimitedTarget::profile(double t) const {
  const double d = epsilon * epsilon;
  return fejer_cdf((t - window.lo) / d) - fejer_cdf((t - window.hi) / d);
}

std::complex<double> BandLimitedTarget::profile_hat(double u) const {
  using C = std::complex<double>;
  const double d = epsilon * epsilon;
  double damp = std::max(0.0, 1.0 - d * std::abs(u));
  if (damp == 0.0) return 0.0;
  if (std::abs(u) < 1e-12) return damp * window.length();
  C ind = (std::exp(C(0.0, -u * window.lo)) - std::exp(C(0.0, -u * window.hi))) / C(0.0, u);
  return damp * ind;
}

double BandLimitedTarget::norm_integral(double alpha) const {
  return holder_norm(base, alpha).norm() * window.length();
}

BandLimitedTarget make_target(const RealFunction& base, double lo, double hi, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw PreconditionFailed("epsilon must lie in (0, 1/4)");
  if (!(hi > lo)) throw PreconditionFailed("empty target window");
  if (!base.future_only()) throw PastDependence("target base must depend on the future only");
  return {base, {lo, hi}, epsilon};
}

ProfileGrid sample_profile(const BandLimitedTarget& F, double half_width) {
  const double d = F.epsilon * F.epsilon;
  const double centre = 0.5 * (F.window.lo + F.window.hi);
  const auto steps = static_cast<std::int64_t>(std::ceil(2.0 * half_width / (d / 8.0)));
  ProfileGrid g;
  g.step = 2.0 * half_width / static_cast<double>(steps);
  g.lo = centre - half_width;
  g.values.reserve(static_cast<std::size_t>(steps + 1));
  for (std::int64_t i = 0; i <= steps; ++i) g.values.push_back(F.profile(g.lo + g.step * static_cast<double>(i)));
  return g;
}

FourierSupportCheck fourier_support_check(const BandLimitedTarget& F, double half_width, double margin,
                                          int frequencies) {
  if (frequencies < 2) throw PreconditionFailed("need at least two frequencies");
  ProfileGrid g = sample_profile(F, half_width);
  const double K = F.support_bound();
  const double bnorm = F.base.sup_norm();
  FourierSupportCheck out;
  out.margin = margin;
  const double u0 = (1.0 + margin) * K, u1 = 3.0 * K;
  const double du = (u1 - u0) / (frequencies - 1);
  CompensatedSum<double> mass;
  for (int j = 0; j < frequencies; ++j) {
    double u = u0 + du * j;
    double a = bnorm * std::abs(tapered_dft(g, u));
    out.max_outside = std::max(out.max_outside, a);
    mass.add((j == 0 || j + 1 == frequencies ? 0.5 : 1.0) * du * a);
  }
  out.mass_outside = 2.0 * mass.value();  // both signs of u
  for (double frac : {0.0, 0.25, 0.5, 0.75}) {
    double u = frac * K;
    out.max_inside_error =
        std::max(out.max_inside_error, bnorm * std::abs(tapered_dft(g, u) - F.profile_hat(u)));
  }
  return out;
}

NormDominationCheck norm_domination_check(const BandLimitedTarget& F, const std::vector<double>& u_grid,
                                          double alpha) {
  ProfileGrid g = sample_profile(F, 200.0);
  const double bnorm = holder_norm(F.base, alpha).norm();
  CompensatedSum<double> integral;
  for (std::size_t i = 0; i < g.values.size(); ++i)
    integral.add((i == 0 || i + 1 == g.values.size() ? 0.5 : 1.0) * g.step * std::abs(g.values[i]));
  const double rhs = bnorm * integral.value();
  NormDominationCheck out;
  for (double u : u_grid) out.max_ratio = std::max(out.max_ratio, bnorm * std::abs(tapered_dft(g, u)) / rhs);
  out.holds = out.max_ratio <= 1.0 + 1e-12;
  return out;
}

bool epsilon_dominated(const std::function<double(double)>& f, const std::function<double(double)>& g, double epsilon,
                       const std::vector<double>& t_grid, int v_points) {
  if (v_points < 2) throw PreconditionFailed("need at least two shift samples");
  for (double t : t_grid) {
    double ft = f(t);
    for (int j = 0; j < v_points; ++j) {
      double v = -epsilon + 2.0 * epsilon * j / (v_points - 1);
      if (ft > g(t + v)) return false;
    }
  }
  return true;
}

double gaussian_main_term(const std::function<double(double)>& profile, double sigma2, int n, double lo, double hi,
                          double step) {
  if (!(sigma2 > 0.0)) throw PreconditionFailed("variance must be positive");
  const double var = sigma2 * n;
  const auto steps = static_cast<std::int64_t>(std::ceil((hi - lo) / step));
  const double h = (hi - lo) / static_cast<double>(steps);
  CompensatedSum<double> s;
  for (std::int64_t i = 0; i <= steps; ++i) {
    double u = lo + h * static_cast<double>(i);
    double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    s.add(w * h * std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * kPi * var) * profile(u));
  }
  return std::sqrt(static_cast<double>(n)) * s.value();
}

namespace {

void gate(const GibbsModel& model, const RealFunction& g, const std::vector<double>& grid, double* probe_max) {
  auto probes = spectral_radius_probe(model, g, grid.empty() ? default_probe_grid() : grid);
  double worst = 0.0, at = 0.0;
  for (const auto& p : probes)
    if (p.radius > worst) {
      worst = p.radius;
      at = p.t;
    }
  if (probe_max) *probe_max = worst;
  if (worst >= 0.999)
    throw ArithmeticObservable("spectral radius of the twisted operator reaches " + std::to_string(worst) +
                               " at t = " + std::to_string(at) + "; the observable looks arithmetic");
}

double lhs_fourier(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F, int n, const Word& z,
                   double sigma, double* main_out) {
  using C = std::complex<double>;
  const int D = std::max({model.psi.future_depth(), g.future_depth(), F.base.future_depth()});
  TransferMatrix<double> A(model.psi, D);
  TransferMatrix<double> B(model.psi + g, D);
  const auto& a = A.matrix();
  const auto& b = B.matrix();
  const Eigen::Index S = a.rows();
  // Entry-wise weights e^{-ψ} and increments g on the common sparsity pattern.
  struct Entry {
    Eigen::Index r, c;
    double w, g;
  };
  std::vector<Entry> entries;
  for (Eigen::Index r = 0; r < S; ++r) {
    Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator ia(a, r), ib(b, r);
    for (; ia; ++ia, ++ib) {
      if (!ib || ib.col() != ia.col()) throw InvalidModel("transfer matrices disagree on admissibility");
      entries.push_back({r, ia.col(), ia.value(), std::log(ia.value() / ib.value())});
    }
  }
  const std::size_t zi = A.space().encode(z.symbols.data());
  Eigen::VectorXcd base = A.lift(F.base).cast<C>();

  const double sq = std::sqrt(static_cast<double>(n));
  const double K = F.support_bound();
  // P has Fejér tails ~ 2ε²/(π t²); a long period keeps the aliased copies below 1e-7.
  const double period = std::max(40.0 * sigma * sq + 40.0, 500.0) +
                        2.0 * std::max(std::abs(F.window.lo), std::abs(F.window.hi));
  const double du = 2.0 * kPi / period;
  const auto J = static_cast<std::int64_t>(std::ceil(K / du));
  const double mean_base = model.expectation(F.base);

  CompensatedSum<double> lhs, main;
  Eigen::MatrixXcd M(S, S), P(S, S);
  Eigen::RowVectorXcd row(S);
  for (std::int64_t j = 0; j <= J; ++j) {
    const double u = du * static_cast<double>(j);
    C ph = F.profile_hat(u);
    if (ph == C(0.0)) continue;
    const double w = j == 0 ? 1.0 : 2.0;
    M.setZero();
    for (const Entry& e : entries) M(e.r, e.c) = e.w * std::exp(C(0.0, u * e.g));
    row.setZero();
    row(static_cast<Eigen::Index>(zi)) = 1.0;
    P = M;
    for (int m = n; m > 0; m >>= 1) {
      if (m & 1) row = row * P;
      if (m > 1) P = P * P;
    }
    C lam = row * base;
    lhs.add(w * (ph * lam).real());
    main.add(w * ph.real() * std::exp(-0.5 * sigma * sigma * n * u * u));
  }
  *main_out = mean_base * sq / (2.0 * kPi) * du * main.value();
  return sq / (2.0 * kPi) * du * lhs.value();
}

double lhs_enum(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F, int n, const Word& z) {
  const int k = model.spec.alphabet_size();
  check_budget(checked_power(k, n), "LLT enumeration");
  const RealFunction& psi = model.psi;
  std::vector<int> az(static_cast<std::size_t>(n), 0);
  az.insert(az.end(), z.symbols.begin(), z.symbols.end());
  CompensatedSum<double> acc;
  // Fill positions n-1, ..., 0 (right to left); the windows at p only read p and to its right.
  std::function<void(int, double, double)> rec = [&](int p, double spsi, double sg) {
    if (p < 0) {
      double phi = F.base.at(F.base.space().encode(az.data()));
      acc.add(std::exp(-spsi) * phi * F.profile(sg));
      return;
    }
    for (int s = 0; s < k; ++s) {
      if (!model.spec.allowed(s, az[static_cast<std::size_t>(p + 1)])) continue;
      az[static_cast<std::size_t>(p)] = s;
      const int* w = az.data() + p;
      rec(p - 1, spsi + psi.at(psi.space().encode(w)), sg + g.at(g.space().encode(w)));
    }
  };
  rec(n - 1, 0.0, 0.0);
  return std::sqrt(static_cast<double>(n)) * acc.value();
}

}  // namespace

LltPoint llt_evaluate(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F, int n, const Word& z,
                      const LltOptions& opts) {
  if (n < 1) throw PreconditionFailed("n must be >= 1");
  if (!g.future_only()) throw PastDependence("LLT observable must depend on the future only");
  if (!F.base.future_only()) throw PastDependence("target base must depend on the future only");
  const int D = std::max({model.psi.future_depth(), g.future_depth(), F.base.future_depth()});
  if (z.origin_offset != 0) throw PreconditionFailed("anchor word must start at coordinate 0");
  if (z.size() < D) throw WindowOutOfRange("anchor needs at least " + std::to_string(D) + " symbols");
  if (!model.spec.admissible(z.symbols)) throw PreconditionFailed("anchor word is inadmissible");
  if (opts.gate) gate(model, g, opts.probe_grid, nullptr);
  MartingaleData md = martingale_part(model, g);
  const double sigma = std::sqrt(md.sigma2);
  LltPoint pt;
  pt.n = n;
  double main = 0.0;
  double lhs_f = lhs_fourier(model, g, F, n, z, sigma, &main);
  pt.main = main;
  if (opts.oracle == LltOracle::kEnum) {
    pt.lhs = lhs_enum(model, g, F, n, z);
    pt.oracle = "ENUM";
  } else {
    pt.lhs = lhs_f;
    pt.oracle = "FOURIER";
  }
  pt.remainder = std::abs(pt.lhs - pt.main);
  return pt;
}

LltFit fit_remainders(std::vector<LltPoint> points) {
  std::vector<double> x, y;
  for (const auto& p : points)
    if (p.remainder > 0) {
      x.push_back(std::log(static_cast<double>(p.n)));
      y.push_back(std::log(p.remainder));
    }
  LltFit out;
  out.points = std::move(points);
  if (x.size() < 2) throw PreconditionFailed("need two or more non-zero remainders to fit");
  out.fit = fit_line(x, y);
  out.low_signal = out.fit.r2 < 0.5;
  return out;
}

LltFit remainder_decay_fit(const GibbsModel& model, const RealFunction& g, const BandLimitedTarget& F,
                           const std::vector<int>& n_ladder, const Word& z, const LltOptions& opts) {
  if (n_ladder.size() < 5) throw PreconditionFailed("remainder fit needs at least 5 values of n");
  std::vector<int> ladder = n_ladder;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() < 1) throw PreconditionFailed("n must be >= 1");
  const double r0 = static_cast<double>(ladder[1]) / ladder[0];
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    double r = static_cast<double>(ladder[i]) / ladder[i - 1];
    if (!(r > 1.0) || std::abs(r / r0 - 1.0) > 0.05) throw PreconditionFailed("n ladder must be geometric");
  }
  double probe_max = 0.0;
  if (opts.gate) gate(model, g, opts.probe_grid, &probe_max);
  LltOptions inner = opts;
  inner.gate = false;
  std::vector<LltPoint> pts;
  for (int n : ladder) pts.push_back(llt_evaluate(model, g, F, n, z, inner));
  LltFit out = fit_remainders(std::move(pts));
  out.probe_max = probe_max;
  return out;
}

}  // namespace condlim
