#pragma once

#include <cstdint>
#include <vector>

namespace driftlab {

// A contiguous run of per-sample losses.  start_index anchors values[0] to an
// absolute position in the originating stream so that threshold locations can
// be reported in stream coordinates.
struct ErrorSeries {
  std::vector<double> values;
  std::int64_t start_index = 0;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  // Throws NonFiniteValue / DomainError when the invariants do not hold.
  void validate() const;

  // Sub-series of [first, first + count) with the anchor moved accordingly.
  ErrorSeries slice(std::size_t first, std::size_t count) const;
};

ErrorSeries make_series(std::vector<double> values, std::int64_t start_index = 0);

}  // namespace driftlab
