#include "condlim/shift.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>

#include "condlim/numeric.hpp"
#include "condlim/parallel.hpp"

namespace condlim {

std::uint64_t enumeration_budget() {
  if (const char* env = std::getenv("CONDLIM_BUDGET_STATES")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return std::uint64_t{1} << 30;
}

void check_budget(std::uint64_t count, const std::string& what) {
  std::uint64_t b = enumeration_budget();
  if (count > b)
    throw BudgetExceeded(what + " needs " + std::to_string(count) + " states, budget is " + std::to_string(b));
}

std::uint64_t checked_power(int k, int n) {
  std::uint64_t r = 1;
  for (int i = 0; i < n; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(k))
      return std::numeric_limits<std::uint64_t>::max();
    r *= static_cast<std::uint64_t>(k);
  }
  return r;
}

int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

double real_gcd(const std::vector<double>& values, double tol, double min_delta) {
  double g = 0.0;
  for (double v : values) {
    double a = std::abs(v);
    if (a <= tol) continue;
    if (g == 0.0) {
      g = a;
      continue;
    }
    // Euclid on reals; stop once the remainder is numerically zero.
    double x = std::max(g, a), y = std::min(g, a);
    while (y > min_delta * 0.5) {
      double r = std::fmod(x, y);
      if (r <= tol * x || y - r <= tol * x) break;
      x = y;
      y = r;
    }
    if (y <= min_delta * 0.5) return 0.0;
    g = y;
  }
  if (g == 0.0) return 0.0;
  for (double v : values) {
    double q = v / g;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q))) return 0.0;
  }
  return g;
}

SubshiftSpec::SubshiftSpec(int alphabet_size, const Eigen::MatrixXi& transition)
    : k_(alphabet_size), m_(transition) {
  if (k_ < 1) throw InvalidModel("alphabet size must be positive");
  if (m_.rows() != k_ || m_.cols() != k_) throw InvalidModel("transition matrix must be k x k");
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      if (m_(i, j) != 0 && m_(i, j) != 1) throw InvalidModel("transition entries must be 0 or 1");
  for (int i = 0; i < k_; ++i) {
    if (m_.row(i).sum() == 0) throw InvalidModel("transition row " + std::to_string(i) + " is zero");
    if (m_.col(i).sum() == 0) throw InvalidModel("transition column " + std::to_string(i) + " is zero");
  }
  // Wielandt: a primitive k x k matrix has M^p > 0 for some p <= (k-1)^2 + 1.
  Eigen::MatrixXi b = m_;
  int bound = (k_ - 1) * (k_ - 1) + 1;
  for (int p = 1; p <= bound; ++p) {
    if ((b.array() > 0).all()) {
      power_ = p;
      return;
    }
    b = ((b * m_).array() > 0).cast<int>().matrix();
  }
  throw NonPrimitive("transition matrix has no strictly positive power");
}

SubshiftSpec SubshiftSpec::full(int alphabet_size) {
  return SubshiftSpec(alphabet_size, Eigen::MatrixXi::Ones(alphabet_size, alphabet_size));
}

bool SubshiftSpec::admissible(std::span<const int> s) const {
  for (int x : s)
    if (x < 0 || x >= k_) return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!allowed(s[i - 1], s[i])) return false;
  return true;
}

SubshiftSpec SubshiftSpec::reversed() const { return SubshiftSpec(k_, m_.transpose()); }

int Word::at(int coordinate) const {
  if (coordinate < origin_offset || coordinate >= end_coordinate())
    throw WindowOutOfRange("coordinate " + std::to_string(coordinate) + " outside word");
  return symbols[static_cast<std::size_t>(coordinate - origin_offset)];
}

Word shift(const Word& w, int j) { return Word{w.symbols, w.origin_offset - j}; }

std::vector<Word> enumerate_words(const SubshiftSpec& spec, int n) {
  if (n < 1) throw PreconditionFailed("enumerate_words needs n >= 1");
  check_budget(checked_power(spec.alphabet_size(), n), "enumerate_words");
  auto space = window_space(spec, n);
  std::vector<Word> out;
  out.reserve(space->admissible().size());
  for (std::size_t i : space->admissible()) {
    Word w;
    w.symbols.resize(static_cast<std::size_t>(n));
    space->decode(i, w.symbols.data());
    out.push_back(std::move(w));
  }
  return out;
}

WindowSpace::WindowSpace(const SubshiftSpec& spec, int length) : spec_(spec), length_(length) {
  if (length < 1) throw PreconditionFailed("window length must be positive");
  int k = spec.alphabet_size();
  std::uint64_t n = checked_power(k, length);
  check_budget(n, "window table of length " + std::to_string(length));
  pow_.resize(static_cast<std::size_t>(length) + 1);
  pow_[0] = 1;
  for (int j = 1; j <= length; ++j) pow_[static_cast<std::size_t>(j)] = pow_[static_cast<std::size_t>(j - 1)] * static_cast<std::size_t>(k);
  std::vector<std::uint8_t> cur(static_cast<std::size_t>(k), 1), next;
  for (int len = 2; len <= length; ++len) {
    next.assign(cur.size() * static_cast<std::size_t>(k), 0);
    for (std::size_t p = 0; p < cur.size(); ++p) {
      if (!cur[p]) continue;
      int last = static_cast<int>(p % static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) next[p * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] = spec.allowed(last, c);
    }
    cur.swap(next);
  }
  valid_ = std::move(cur);
  for (std::size_t i = 0; i < valid_.size(); ++i)
    if (valid_[i]) admissible_.push_back(i);
}

void WindowSpace::decode(std::size_t index, int* out) const {
  for (int pos = length_ - 1; pos >= 0; --pos) {
    out[pos] = static_cast<int>(index % static_cast<std::size_t>(k()));
    index /= static_cast<std::size_t>(k());
  }
}

std::size_t WindowSpace::encode(const int* symbols) const {
  std::size_t idx = 0;
  for (int pos = 0; pos < length_; ++pos) idx = idx * static_cast<std::size_t>(k()) + static_cast<std::size_t>(symbols[pos]);
  return idx;
}

std::shared_ptr<const WindowSpace> window_space(const SubshiftSpec& spec, int length) {
  static std::mutex mu;
  static std::map<std::pair<std::vector<int>, int>, std::shared_ptr<const WindowSpace>> cache;
  std::vector<int> key(spec.transition().data(), spec.transition().data() + spec.transition().size());
  key.push_back(spec.alphabet_size());
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{key, length}];
  if (!slot) slot = std::make_shared<const WindowSpace>(spec, length);
  return slot;
}

template <typename Scalar>
HolderEstimate holder_norm(const CylinderFunction<Scalar>& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionFailed("alpha must lie in (0,1)");
  HolderEstimate est;
  est.alpha = alpha;
  est.sup_norm = f.sup_norm();
  const WindowSpace& sp = f.space();
  int m = f.past_depth(), d = f.future_depth();
  int depth = std::max(m, d - 1);
  // Windows agreeing on coordinates |c| < j and differing at ±j have ω = j.
  // Grouping by the agreed core gives the exact sup at each level.
  std::vector<int> buf(static_cast<std::size_t>(m + d));
  for (int j = 0; j <= depth; ++j) {
    double best = 0.0;
    std::map<std::vector<int>, std::vector<Scalar>> by_core;
    for (std::size_t i : sp.admissible()) {
      sp.decode(i, buf.data());
      std::vector<int> core;
      for (int c = -j + 1; c <= j - 1; ++c)
        if (c >= -m && c < d) core.push_back(buf[static_cast<std::size_t>(c + m)]);
      by_core[core].push_back(f.at(i));
    }
    for (auto& [core, vals] : by_core) {
      if constexpr (std::is_floating_point_v<Scalar>) {
        auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        best = std::max(best, *hi - *lo);
      } else {
        for (std::size_t a = 0; a < vals.size(); ++a)
          for (std::size_t b = a + 1; b < vals.size(); ++b)
            best = std::max(best, static_cast<double>(std::abs(vals[a] - vals[b])));
      }
    }
    est.seminorm = std::max(est.seminorm, best / std::pow(alpha, j));
  }
  return est;
}

template HolderEstimate holder_norm(const CylinderFunction<double>&, double);
template HolderEstimate holder_norm(const CylinderFunction<std::complex<double>>&, double);

std::string window_key(const int* symbols, int past_depth, int future_depth) {
  static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string s;
  for (int i = 0; i < past_depth + future_depth; ++i) {
    if (i == past_depth) s.push_back('|');
    s.push_back(digits[symbols[i]]);
  }
  return s;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionFailed("line fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw PreconditionFailed("line fit needs distinct x");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = std::max(0.0, syy - fit.slope * sxy);
  fit.slope_se = x.size() > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  fit.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

}  // namespace condlim
