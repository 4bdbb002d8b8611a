#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Quantile with linear interpolation between order statistics: rank
// h = q * (n - 1), value = x_(floor h) + frac(h) * (x_(floor h + 1) - x_(floor h)).
// `sorted` must be ascending.
inline double linear_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw EmptySegment("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw DomainError("quantile level must be in [0, 1]");
  if (sorted.size() == 1) return sorted[0];
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_of(std::vector<double> sample, double q) {
  std::sort(sample.begin(), sample.end());
  return linear_quantile(sample, q);
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw EmptySegment("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace driftlab
