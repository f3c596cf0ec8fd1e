#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace mhmm {

inline constexpr double kLog2Pi = 1.8378770664093454836;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Probabilities produced by logistic() stay inside the open interval so that
// transition rows never collapse to exactly 0/1 at extreme logits.
inline constexpr double kProbEps = 1e-12;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double logistic(double x) {
  const double p = 1.0 / (1.0 + std::exp(-x));
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double normal_lpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

// Density of |N(0, scale^2)| on x >= 0.
inline double half_normal_lpdf(double x, double scale) {
  return std::log(2.0) + normal_lpdf(x, 0.0, scale);
}

// Linear-interpolation quantile between order statistics (R type 7).
// Pinned rule: value at fractional position 1 + (n-1)*q of the sorted sample.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

// Compensated accumulator; keeps panel reductions stable at the 1e-12
// level the contracts require.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const noexcept { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace mhmm
