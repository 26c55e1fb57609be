#include "condlim/transfer.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "condlim/numeric.hpp"
#include "condlim/rng.hpp"

namespace condlim {

template <typename Scalar>
TransferMatrix<Scalar>::TransferMatrix(const CylinderFunction<Scalar>& potential, int depth)
    : depth_(std::max(depth, potential.future_depth())) {
  if (!potential.future_only()) throw PastDependence("potential must be future-only");
  const SubshiftSpec& spec = potential.spec();
  space_ = window_space(spec, depth_);
  CylinderFunction<Scalar> pot = potential.extended(0, depth_);
  const std::size_t k = static_cast<std::size_t>(spec.alphabet_size());
  const std::size_t tail = space_->power(depth_ - 1);
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(space_->admissible().size() * k);
  for (std::size_t w : space_->admissible()) {
    int w0 = space_->symbol(w, 0);
    std::size_t rest = w / k;  // drops the last coordinate of w
    for (std::size_t b = 0; b < k; ++b) {
      if (!spec.allowed(static_cast<int>(b), w0)) continue;
      std::size_t y = b * tail + rest;
      if (!space_->valid(y)) continue;
      trip.emplace_back(static_cast<int>(w), static_cast<int>(y), std::exp(-pot.at(y)));
    }
  }
  mat_.resize(static_cast<Eigen::Index>(space_->size()), static_cast<Eigen::Index>(space_->size()));
  mat_.setFromTriplets(trip.begin(), trip.end());
  mat_.makeCompressed();
}

template <typename Scalar>
typename TransferMatrix<Scalar>::Vector TransferMatrix<Scalar>::lift(const CylinderFunction<Scalar>& g) const {
  if (!g.future_only()) throw PastDependence("argument must be future-only; promote it first");
  if (g.future_depth() > depth_) throw PreconditionFailed("function deeper than the transfer matrix");
  return g.extended(0, depth_).values();
}

template <typename Scalar>
typename TransferMatrix<Scalar>::Vector TransferMatrix<Scalar>::ones() const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space_->size()));
  for (std::size_t i : space_->admissible()) v[static_cast<Eigen::Index>(i)] = Scalar(1);
  return v;
}

template class TransferMatrix<double>;
template class TransferMatrix<std::complex<double>>;

template <typename Scalar>
CylinderFunction<Scalar> apply_ruelle(const CylinderFunction<Scalar>& psi, const CylinderFunction<Scalar>& g) {
  if (!psi.future_only() || !g.future_only())
    throw PastDependence("apply_ruelle needs future-only arguments; promote first");
  TransferMatrix<Scalar> op(psi, std::max(psi.future_depth(), g.future_depth()));
  return op.as_function(op.apply(op.lift(g)));
}

template RealFunction apply_ruelle(const RealFunction&, const RealFunction&);
template ComplexFunction apply_ruelle(const ComplexFunction&, const ComplexFunction&);

ComplexFunction perturbed_potential(const RealFunction& psi, const RealFunction& f, double t) {
  using C = std::complex<double>;
  return binary_expr(psi.cast<C>(), f.cast<C>(), [t](C p, C v) { return p + C(0.0, t) * v; });
}

Eigen::VectorXd GibbsModel::mass_table(int length) const {
  auto sp = window_space(spec, length);
  if (length <= depth) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp->size()));
    std::size_t div = window_space(spec, depth)->power(depth - length);
    // Marginalize over trailing coordinates in a fixed order.
    std::vector<CompensatedSum<double>> acc(sp->size());
    for (Eigen::Index i = 0; i < nu_plus.size(); ++i) acc[static_cast<std::size_t>(i) / div].add(nu_plus[i]);
    for (std::size_t i = 0; i < sp->size(); ++i) out[static_cast<Eigen::Index>(i)] = acc[i].value();
    return out;
  }
  Eigen::VectorXd shorter = mass_table(length - 1);
  RealFunction p = psi.extended(0, length);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp->size()));
  std::size_t tail = sp->power(length - 1);
  for (std::size_t i : sp->admissible()) {
    std::size_t rest = i % tail;
    out[static_cast<Eigen::Index>(i)] = std::exp(-p.at(i)) * shorter[static_cast<Eigen::Index>(rest)];
  }
  return out;
}

double GibbsModel::mass(std::span<const int> word) const {
  if (word.empty()) return 1.0;
  if (!spec.admissible(word)) return 0.0;
  const int n = static_cast<int>(word.size());
  if (n <= depth) {
    auto sp = window_space(spec, depth);
    std::vector<int> buf(static_cast<std::size_t>(depth), 0);
    std::copy(word.begin(), word.end(), buf.begin());
    std::size_t lo = sp->encode(buf.data());
    std::size_t span = sp->power(depth - n);
    CompensatedSum<double> s;
    for (std::size_t i = lo; i < lo + span; ++i) s.add(nu_plus[static_cast<Eigen::Index>(i)]);
    return s.value();
  }
  // ν⁺[b·u] = e^{-ψ(b·u)} ν⁺[u] once u determines ψ(b·u).
  auto sp = window_space(spec, depth);
  double m = nu_plus[static_cast<Eigen::Index>(sp->encode(word.data() + (n - depth)))];
  for (int j = n - depth - 1; j >= 0; --j) m *= std::exp(-psi.at(psi.space().encode(word.data() + j)));
  return m;
}

double GibbsModel::expectation(const RealFunction& f) const {
  Eigen::VectorXd w = mass_table(f.window_length());
  CompensatedSum<double> s;
  for (std::size_t i : f.space().admissible()) s.add(w[static_cast<Eigen::Index>(i)] * f.at(i));
  return s.value();
}

double gibbs_cylinder_mass(const GibbsModel& model, const Word& w) { return model.mass(w.symbols); }

namespace {

// Stationary distribution of the row-stochastic transfer matrix (left Perron vector).
Eigen::VectorXd left_perron(const TransferMatrix<double>& op, int max_iter) {
  Eigen::VectorXd mu = op.ones();
  mu /= mu.sum();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = op.apply_transpose(mu);
    next /= next.sum();
    double diff = (next - mu).cwiseAbs().sum();
    mu = next;
    if (diff <= 1e-16) return mu;
  }
  throw NoConvergence("left Perron vector did not converge in " + std::to_string(max_iter) + " iterations");
}

}  // namespace

GibbsModel normalize_potential(const RealFunction& psi0, const NormalizeOptions& opts) {
  if (!psi0.future_only()) throw PastDependence("potential must be future-only");
  const SubshiftSpec& spec = psi0.spec();
  int D = std::max({psi0.future_depth(), opts.depth, 1});
  TransferMatrix<double> op0(psi0, D);

  // Right Perron vector by power iteration, scaled so its largest entry is 1.
  // Each iterate is ℒ applied to something, hence exactly independent of the
  // last coordinate when D >= 2.
  Eigen::VectorXd v = op0.ones();
  double lam = 1.0;
  int it = 0;
  double prev_diff = INFINITY;
  int stall = 0;
  for (; it < opts.max_iter; ++it) {
    Eigen::VectorXd w = op0.apply(v);
    lam = w.maxCoeff();
    w /= lam;
    double diff = (w - v).cwiseAbs().maxCoeff();
    v = w;
    if (diff <= 1e-16) break;
    if (diff >= prev_diff) {
      if (++stall > 20 && diff <= opts.tol * 1e-2) break;
    } else {
      stall = 0;
    }
    prev_diff = diff;
  }
  if (it >= opts.max_iter) throw NoConvergence("Perron vector did not converge in " + std::to_string(opts.max_iter) + " iterations");
  for (std::size_t i : op0.space().admissible())
    if (!(v[static_cast<Eigen::Index>(i)] > 0.0)) throw NoConvergence("Perron vector not strictly positive");

  GibbsModel model;
  model.spec = spec;
  model.lambda = std::log(lam);
  model.iterations = it;
  RealFunction eh(spec, 0, D, v);
  model.h = eh.unary_expr([](double x) { return std::log(x); }).trimmed(0.0);
  model.psi = ((psi0 + model.h.shifted(1) - model.h) + model.lambda).trimmed(0.0);
  model.depth = std::max(model.psi.future_depth(), opts.depth > 0 ? opts.depth : 1);

  TransferMatrix<double> op(model.psi, model.depth);
  model.normalization_error = (op.apply(op.ones()) - op.ones()).cwiseAbs().maxCoeff();
  if (model.normalization_error > opts.tol)
    throw NoConvergence("normalization error " + std::to_string(model.normalization_error) + " above tolerance");
  model.nu_plus = left_perron(op, opts.max_iter);
  return model;
}

GibbsModel reverse_model(const GibbsModel& model) {
  GibbsModel r;
  r.spec = model.spec.reversed();
  r.depth = std::max(model.depth, 2);
  const int D = r.depth;
  auto sp = window_space(r.spec, D);
  auto sp_short = window_space(r.spec, D - 1);
  Eigen::VectorXd full = model.mass_table(D);
  Eigen::VectorXd shorter = model.mass_table(D - 1);
  r.nu_plus = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp->size()));
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp->size()));
  std::vector<int> w(static_cast<std::size_t>(D)), rw(static_cast<std::size_t>(D));
  for (std::size_t i : sp->admissible()) {
    sp->decode(i, w.data());
    std::reverse_copy(w.begin(), w.end(), rw.begin());
    double m = full[static_cast<Eigen::Index>(window_space(model.spec, D)->encode(rw.data()))];
    // ν[w₁..w_{D-1}] reversed is the length D-1 prefix of rw.
    double ms = shorter[static_cast<Eigen::Index>(sp_short->encode(rw.data()))];
    r.nu_plus[static_cast<Eigen::Index>(i)] = m;
    psi[static_cast<Eigen::Index>(i)] = -std::log(m / ms);
  }
  r.psi = RealFunction(r.spec, 0, D, psi).trimmed(0.0);
  r.h = RealFunction::constant(r.spec, 0.0);
  r.lambda = 0.0;
  TransferMatrix<double> op(r.psi, D);
  r.normalization_error = (op.apply(op.ones()) - op.ones()).cwiseAbs().maxCoeff();
  return r;
}

namespace {

Eigen::VectorXcd pseudo_random(const WindowSpace& sp, std::uint64_t seed) {
  PhiloxStream rng(seed, 0x5eed, 0);
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sp.size()));
  for (std::size_t i : sp.admissible())
    x[static_cast<Eigen::Index>(i)] = std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
  return x;
}

// Largest-modulus eigenpair of `mat` by power iteration with Rayleigh-quotient
// acceptance. Returns the number of iterations used.
int power_eig(const Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>& mat, Eigen::VectorXcd& v,
              std::complex<double>& lambda, double tol, int max_iter) {
  v /= v.norm();
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXcd w = mat * v;
    double wn = w.norm();
    if (wn == 0.0) {
      lambda = 0.0;
      return it;
    }
    lambda = v.dot(w);  // v has unit norm; dot conjugates its first argument
    double res = (w - lambda * v).norm();
    if (res <= tol * std::max(std::abs(lambda), 1e-300)) return it;
    v = w / wn;
  }
  throw NoConvergence("complex power iteration did not converge in " + std::to_string(max_iter) + " iterations");
}

}  // namespace

SpectralData perturbed_spectrum(const GibbsModel& model, const RealFunction& f, double t, const SpectralOptions& opts) {
  if (!f.future_only()) throw PastDependence("observable must be future-only; promote it first");
  if (std::abs(t) > opts.t_bound) throw PreconditionFailed("|t| exceeds the configured bound");
  if (opts.check_mean) {
    double mean = model.expectation(f);
    if (std::abs(mean) > 1e-10) throw NonZeroMean("nu+(f) = " + std::to_string(mean));
  }
  using C = std::complex<double>;
  const int D = std::max({model.depth, model.psi.future_depth(), f.future_depth()});
  TransferMatrix<C> op(perturbed_potential(model.psi, f, t), D);
  const auto& mat = op.matrix();

  SpectralData out;
  out.t = t;
  out.depth = D;
  Eigen::VectorXcd v = op.ones();
  out.iterations = power_eig(mat, v, out.lambda, opts.tol, opts.max_iter);

  // Left eigenvector: power iteration on the plain transpose, warm-started at ν⁺.
  Eigen::SparseMatrix<C, Eigen::RowMajor> matT = mat.transpose();
  Eigen::VectorXcd l = model.mass_table(D).cast<C>();
  C lamT;
  out.iterations += power_eig(matT, l, lamT, opts.tol, opts.max_iter);

  // Phase: largest-modulus entry of the right eigenvector real positive.
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v[imax]) / std::abs(v[imax]);
  C pairing = l.transpose() * v;
  if (std::abs(pairing) < 1e-300) throw EigenvalueCollision("left and right eigenvectors are orthogonal");
  l /= pairing;
  out.right = op.as_function(v);
  out.left = l;

  // Contraction of the deflated operator N x = ℒx − λ v <l, x>.
  auto deflate = [&](Eigen::VectorXcd x) {
    C p = l.transpose() * x;
    return Eigen::VectorXcd(x - v * p);
  };
  Eigen::VectorXcd x = deflate(pseudo_random(op.space(), 17));
  double n0 = x.norm();
  double log_growth = 0.0;
  int counted = 0;
  if (n0 > 0) {
    x /= n0;
    for (int it = 0; it < opts.radius_iter; ++it) {
      x = deflate(mat * x);
      double nx = x.norm();
      if (nx < 1e-250) {
        log_growth = -INFINITY;
        break;
      }
      if (it >= opts.radius_iter / 2) {
        log_growth += std::log(nx);
        ++counted;
      }
      x /= nx;
    }
  }
  out.residual_radius = (counted > 0 && std::isfinite(log_growth)) ? std::exp(log_growth / counted) : 0.0;
  if (std::abs(out.lambda) - out.residual_radius < opts.gap_tol)
    throw EigenvalueCollision("|lambda_t| = " + std::to_string(std::abs(out.lambda)) +
                              " not separated from the rest of the spectrum (radius " +
                              std::to_string(out.residual_radius) + ")");
  return out;
}

VarianceFit variance_from_lambda(const GibbsModel& model, const RealFunction& f, std::vector<double> grid) {
  if (grid.empty())
    for (int j = -5; j <= 5; ++j) grid.push_back(0.02 * j);
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (std::abs(sorted[i] + sorted[sorted.size() - 1 - i]) > 1e-12)
      throw PreconditionFailed("variance grid must be symmetric about 0");
  if (std::abs(sorted.front()) > 0.2 + 1e-12) throw PreconditionFailed("variance grid must satisfy max|t| <= 0.2");
  RealFunction g = f.future_only() ? f : f.shifted(f.past_depth());
  double mean = model.expectation(g);
  g = g - mean;  // removes rounding-level means only; callers pass centred f
  int terms = std::min<int>(4, static_cast<int>((grid.size() + 1) / 2));
  Eigen::MatrixXd A(static_cast<Eigen::Index>(grid.size()), terms);
  Eigen::VectorXd b(static_cast<Eigen::Index>(grid.size()));
  SpectralOptions so;
  so.check_mean = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double t = grid[i];
    for (int j = 0; j < terms; ++j) A(static_cast<Eigen::Index>(i), j) = std::pow(t, 2 * j);
    b[static_cast<Eigen::Index>(i)] = t == 0.0 ? 1.0 : perturbed_spectrum(model, g, t, so).lambda.real();
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  VarianceFit fit;
  fit.sigma2 = -2.0 * c[1];
  fit.residual = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(grid.size()));
  fit.grid = grid;
  return fit;
}

std::vector<RadiusProbe> spectral_radius_probe(const GibbsModel& model, const RealFunction& f,
                                               const std::vector<double>& t_grid, int n) {
  using C = std::complex<double>;
  RealFunction g = f.future_only() ? f : f.shifted(f.past_depth());
  const int D = std::max({model.depth, model.psi.future_depth(), g.future_depth()});
  std::vector<RadiusProbe> out;
  for (double t : t_grid) {
    TransferMatrix<C> op(perturbed_potential(model.psi, g, t), D);
    double best = 0.0;
    for (int s = 0; s < 3; ++s) {
      Eigen::VectorXcd x = s == 0 ? op.ones() : pseudo_random(op.space(), 100 + static_cast<std::uint64_t>(s));
      x /= x.norm();
      double lg = 0.0;
      int counted = 0;
      bool dead = false;
      for (int it = 0; it < n; ++it) {
        x = op.matrix() * x;
        double nx = x.norm();
        if (nx < 1e-250) {
          dead = true;
          break;
        }
        if (it >= n / 2) {
          lg += std::log(nx);
          ++counted;
        }
        x /= nx;
      }
      double r = (dead || counted == 0) ? 0.0 : std::exp(lg / counted);
      best = std::max(best, r);
    }
    out.push_back({t, best});
  }
  return out;
}

std::vector<double> default_probe_grid() {
  std::vector<double> g;
  for (int j = 25; j * 0.02 <= 8.0 * std::numbers::pi; ++j) g.push_back(0.02 * j);
  return g;
}

}  // namespace condlim
