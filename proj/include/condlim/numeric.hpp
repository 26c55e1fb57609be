#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

namespace condlim {

// Neumaier-compensated accumulator. Works for real and complex scalars.
template <typename Scalar>
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(Scalar init) : sum_(init) {}

  void add(Scalar x) {
    if constexpr (std::is_floating_point_v<Scalar>) {
      add_real(sum_, comp_, x);
    } else {
      auto re = sum_.real(), ire = comp_.real();
      auto im = sum_.imag(), iim = comp_.imag();
      add_real(re, ire, x.real());
      add_real(im, iim, x.imag());
      sum_ = Scalar(re, im);
      comp_ = Scalar(ire, iim);
    }
  }
  CompensatedSum& operator+=(Scalar x) {
    add(x);
    return *this;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  template <typename R>
  static void add_real(R& s, R& c, R x) {
    R t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  Scalar sum_{};
  Scalar comp_{};
};

// Running mean / variance (Welford) with an exact merge rule.
struct RunningStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    double n1 = static_cast<double>(count), n2 = static_cast<double>(o.count);
    double d = o.mean - mean;
    mean += d * n2 / (n1 + n2);
    m2 += o.m2 + d * d * n1 * n2 / (n1 + n2);
    count += o.count;
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double stderr_of_mean() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

// Point estimate with its uncertainty and the oracle that produced it.
struct EstimateCI {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::string method;
};

// Largest delta such that every value is an integer multiple of delta (within
// tol relative to delta). Returns 0 if no such delta >= min_delta exists.
double real_gcd(const std::vector<double>& values, double tol = 1e-12, double min_delta = 1e-6);

// Ordinary least squares y = intercept + slope x.
struct LineFit {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0, r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace condlim
