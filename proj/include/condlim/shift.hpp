#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "condlim/error.hpp"

namespace condlim {

// Enumeration budget in states. CONDLIM_BUDGET_STATES overrides the default 2^30.
std::uint64_t enumeration_budget();
// Throws BudgetExceeded if count > budget.
void check_budget(std::uint64_t count, const std::string& what);
// k^n saturating at UINT64_MAX.
std::uint64_t checked_power(int k, int n);

class SubshiftSpec {
 public:
  SubshiftSpec() = default;
  SubshiftSpec(int alphabet_size, const Eigen::MatrixXi& transition);

  static SubshiftSpec full(int alphabet_size);

  int alphabet_size() const { return k_; }
  const Eigen::MatrixXi& transition() const { return m_; }
  bool allowed(int a, int b) const { return m_(a, b) != 0; }
  int irreducibility_power() const { return power_; }
  bool admissible(std::span<const int> symbols) const;
  SubshiftSpec reversed() const;

  bool operator==(const SubshiftSpec& o) const { return k_ == o.k_ && m_ == o.m_; }

 private:
  int k_ = 0;
  Eigen::MatrixXi m_;
  int power_ = 0;
};

// Finite piece of a sequence; symbols[i] sits at coordinate origin_offset + i.
struct Word {
  std::vector<int> symbols;
  int origin_offset = 0;

  int size() const { return static_cast<int>(symbols.size()); }
  int end_coordinate() const { return origin_offset + size(); }
  bool covers(int lo, int hi) const { return lo >= origin_offset && hi <= end_coordinate(); }
  int at(int coordinate) const;

  bool operator==(const Word& o) const = default;
};

// The same symbols viewed from T^j x.
Word shift(const Word& w, int j);

std::vector<Word> enumerate_words(const SubshiftSpec& spec, int n);

// Dense index over all k^L windows of length L, most significant symbol first,
// with a validity mask for admissibility.
class WindowSpace {
 public:
  WindowSpace(const SubshiftSpec& spec, int length);

  const SubshiftSpec& spec() const { return spec_; }
  int length() const { return length_; }
  int k() const { return spec_.alphabet_size(); }
  std::size_t size() const { return valid_.size(); }
  bool valid(std::size_t index) const { return valid_[index] != 0; }
  const std::vector<std::uint8_t>& mask() const { return valid_; }
  const std::vector<std::size_t>& admissible() const { return admissible_; }
  std::size_t power(int j) const { return pow_[j]; }

  int symbol(std::size_t index, int pos) const {
    return static_cast<int>((index / pow_[length_ - 1 - pos]) % static_cast<std::size_t>(k()));
  }
  void decode(std::size_t index, int* out) const;
  std::size_t encode(const int* symbols) const;

 private:
  SubshiftSpec spec_;
  int length_;
  std::vector<std::uint8_t> valid_;
  std::vector<std::size_t> admissible_;
  std::vector<std::size_t> pow_;
};

// Shared, cached window spaces.
std::shared_ptr<const WindowSpace> window_space(const SubshiftSpec& spec, int length);

// Function of the window [-past_depth, future_depth) stored densely; entries of
// inadmissible windows are held at zero.
template <typename Scalar>
class CylinderFunction {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  CylinderFunction() = default;

  CylinderFunction(const SubshiftSpec& spec, int past_depth, int future_depth)
      : m_(past_depth), d_(future_depth) {
    check_depths();
    space_ = window_space(spec, m_ + d_);
    values_ = Vector::Zero(static_cast<Eigen::Index>(space_->size()));
  }

  CylinderFunction(const SubshiftSpec& spec, int past_depth, int future_depth, Vector values)
      : CylinderFunction(spec, past_depth, future_depth) {
    if (values.size() != values_.size())
      throw InvalidModel("cylinder table has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(values_.size()));
    values_ = std::move(values);
    mask_invalid();
  }

  // fn(const int* window) is called for every admissible window.
  template <typename Fn>
  static CylinderFunction generate(const SubshiftSpec& spec, int past_depth, int future_depth, Fn&& fn) {
    CylinderFunction f(spec, past_depth, future_depth);
    std::vector<int> buf(static_cast<std::size_t>(f.window_length()));
    for (std::size_t i : f.space_->admissible()) {
      f.space_->decode(i, buf.data());
      f.values_[static_cast<Eigen::Index>(i)] = fn(buf.data());
    }
    return f;
  }

  static CylinderFunction constant(const SubshiftSpec& spec, Scalar c) {
    return generate(spec, 0, 1, [c](const int*) { return c; });
  }

  const SubshiftSpec& spec() const { return space_->spec(); }
  const WindowSpace& space() const { return *space_; }
  int past_depth() const { return m_; }
  int future_depth() const { return d_; }
  int window_length() const { return m_ + d_; }
  bool future_only() const { return m_ == 0; }
  const Vector& values() const { return values_; }

  Scalar at(std::size_t index) const { return values_[static_cast<Eigen::Index>(index)]; }
  Scalar operator()(std::span<const int> window) const {
    if (static_cast<int>(window.size()) != window_length())
      throw WindowOutOfRange("window length " + std::to_string(window.size()) + " != " +
                             std::to_string(window_length()));
    return at(space_->encode(window.data()));
  }

  // f(T^j x) for the sequence piece x.
  Scalar evaluate(const Word& x, int j = 0) const {
    int lo = j - m_, hi = j + d_;
    if (!x.covers(lo, hi))
      throw WindowOutOfRange("window [" + std::to_string(lo) + "," + std::to_string(hi) +
                             ") not inside word [" + std::to_string(x.origin_offset) + "," +
                             std::to_string(x.end_coordinate()) + ")");
    return at(space_->encode(x.symbols.data() + (lo - x.origin_offset)));
  }

  // Same function on the larger window [-past, future), by replication.
  CylinderFunction extended(int past, int future) const {
    if (past < m_ || future < d_)
      throw PreconditionFailed("extended() cannot shrink a window");
    if (past == m_ && future == d_) return *this;
    int off = past - m_;
    return generate(spec(), past, future, [&](const int* w) { return at(space_->encode(w + off)); });
  }

  // f∘T^j, on the smallest window containing both coordinate 0 and the
  // coordinates read.
  CylinderFunction shifted(int j) const {
    int lo = std::min(j - m_, 0), hi = std::max(j + d_, 1);
    int off = j - m_ - lo;
    return generate(spec(), -lo, hi, [&](const int* w) { return at(space_->encode(w + off)); });
  }

  // Drops coordinates at either end that the table does not read (within tol).
  CylinderFunction trimmed(double tol = 0.0) const {
    CylinderFunction f = *this;
    while (f.d_ > 1 && f.ignores_last(tol)) f = f.drop_last();
    while (f.m_ > 0 && f.ignores_first(tol)) f = f.drop_first();
    return f;
  }

  double sup_norm() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < values_.size(); ++i) s = std::max(s, static_cast<double>(std::abs(values_[i])));
    return s;
  }

  template <typename Fn>
  auto unary_expr(Fn&& fn) const {
    using Out = decltype(fn(Scalar{}));
    CylinderFunction<Out> out(spec(), m_, d_);
    typename CylinderFunction<Out>::Vector v(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) v[i] = space_->valid(static_cast<std::size_t>(i)) ? fn(values_[i]) : Out{};
    return CylinderFunction<Out>(spec(), m_, d_, std::move(v));
  }

  template <typename Other>
  CylinderFunction<Other> cast() const {
    return unary_expr([](Scalar s) { return static_cast<Other>(s); });
  }

  template <typename Fn>
  friend CylinderFunction binary_expr(const CylinderFunction& a, const CylinderFunction& b, Fn&& fn) {
    if (!(a.spec() == b.spec())) throw PreconditionFailed("cylinder functions on different subshifts");
    int past = std::max(a.m_, b.m_), fut = std::max(a.d_, b.d_);
    CylinderFunction ea = a.extended(past, fut), eb = b.extended(past, fut);
    Vector v(ea.values_.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = ea.space_->valid(static_cast<std::size_t>(i)) ? fn(ea.values_[i], eb.values_[i]) : Scalar{};
    return CylinderFunction(a.spec(), past, fut, std::move(v));
  }

  friend CylinderFunction operator+(const CylinderFunction& a, const CylinderFunction& b) {
    return binary_expr(a, b, [](Scalar x, Scalar y) { return x + y; });
  }
  friend CylinderFunction operator-(const CylinderFunction& a, const CylinderFunction& b) {
    return binary_expr(a, b, [](Scalar x, Scalar y) { return x - y; });
  }
  friend CylinderFunction operator*(const CylinderFunction& a, const CylinderFunction& b) {
    return binary_expr(a, b, [](Scalar x, Scalar y) { return x * y; });
  }
  friend CylinderFunction operator*(Scalar c, const CylinderFunction& a) {
    return CylinderFunction(a.spec(), a.m_, a.d_, (c * a.values_).eval());
  }
  friend CylinderFunction operator+(const CylinderFunction& a, Scalar c) {
    return a.unary_expr([c](Scalar x) { return x + c; });
  }
  friend CylinderFunction operator-(const CylinderFunction& a, Scalar c) {
    return a.unary_expr([c](Scalar x) { return x - c; });
  }
  CylinderFunction operator-() const { return Scalar(-1) * *this; }

 private:
  void check_depths() const {
    if (m_ < 0 || d_ < 1) throw InvalidModel("cylinder function needs past_depth >= 0 and future_depth >= 1");
  }
  void mask_invalid() {
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!space_->valid(static_cast<std::size_t>(i))) values_[i] = Scalar{};
  }
  bool ignores_last(double tol) const {
    std::size_t k = static_cast<std::size_t>(space_->k());
    for (std::size_t p = 0; p < space_->size() / k; ++p) {
      bool seen = false;
      Scalar ref{};
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t i = p * k + c;
        if (!space_->valid(i)) continue;
        if (!seen) {
          ref = at(i);
          seen = true;
        } else if (std::abs(at(i) - ref) > tol) {
          return false;
        }
      }
    }
    return true;
  }
  bool ignores_first(double tol) const {
    std::size_t k = static_cast<std::size_t>(space_->k());
    std::size_t stride = space_->size() / k;
    for (std::size_t r = 0; r < stride; ++r) {
      bool seen = false;
      Scalar ref{};
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t i = c * stride + r;
        if (!space_->valid(i)) continue;
        if (!seen) {
          ref = at(i);
          seen = true;
        } else if (std::abs(at(i) - ref) > tol) {
          return false;
        }
      }
    }
    return true;
  }
  // Value of a shortened window taken from its first admissible extension.
  CylinderFunction drop_last() const {
    std::size_t k = static_cast<std::size_t>(space_->k());
    return generate(spec(), m_, d_ - 1, [&](const int* w) {
      std::size_t p = window_space(spec(), m_ + d_ - 1)->encode(w);
      for (std::size_t c = 0; c < k; ++c)
        if (space_->valid(p * k + c)) return at(p * k + c);
      return Scalar{};
    });
  }
  CylinderFunction drop_first() const {
    std::size_t k = static_cast<std::size_t>(space_->k());
    std::size_t stride = space_->size() / k;
    return generate(spec(), m_ - 1, d_, [&](const int* w) {
      std::size_t r = window_space(spec(), m_ + d_ - 1)->encode(w);
      for (std::size_t c = 0; c < k; ++c)
        if (space_->valid(c * stride + r)) return at(c * stride + r);
      return Scalar{};
    });
  }

  std::shared_ptr<const WindowSpace> space_;
  int m_ = 0;
  int d_ = 1;
  Vector values_;
};

using RealFunction = CylinderFunction<double>;
using ComplexFunction = CylinderFunction<std::complex<double>>;

// S_n f on the points containing w; reversed computes Š_n f = Σ_{j=1..n} f∘T^{-j}.
template <typename Scalar>
Scalar birkhoff_sum(const CylinderFunction<Scalar>& f, const Word& w, int n, bool reversed = false) {
  Scalar s{};
  for (int j = 0; j < n; ++j) s += f.evaluate(w, reversed ? -(j + 1) : j);
  return s;
}

struct HolderEstimate {
  double alpha = 0.5;
  double sup_norm = 0.0;
  double seminorm = 0.0;
  double norm() const { return sup_norm + seminorm; }
};

template <typename Scalar>
HolderEstimate holder_norm(const CylinderFunction<Scalar>& f, double alpha);

// Function of ιx, (ιx)_c = x_{-c}: the window [-m, d) becomes [-(d-1), m+1).
template <typename Scalar>
CylinderFunction<Scalar> reverse(const CylinderFunction<Scalar>& f) {
  int m = f.past_depth(), d = f.future_depth(), L = m + d;
  std::vector<int> buf(static_cast<std::size_t>(L));
  return CylinderFunction<Scalar>::generate(f.spec().reversed(), d - 1, m + 1, [&](const int* w) {
    for (int i = 0; i < L; ++i) buf[static_cast<std::size_t>(i)] = w[L - 1 - i];
    return f.at(f.space().encode(buf.data()));
  });
}

// Parse / format window keys such as "010|110" (past|future).
std::string window_key(const int* symbols, int past_depth, int future_depth);

}  // namespace condlim
