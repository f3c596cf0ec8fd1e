#include "mhmm/math.hpp"

#include <cstddef>

#include "mhmm/errors.hpp"

namespace mhmm {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DimensionError("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw DomainError("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values[0];
  const double pos = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return values[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace mhmm
