#include "driftlab/series.hpp"

#include <cmath>
#include <string>

#include "driftlab/errors.hpp"

namespace driftlab {

void ErrorSeries::validate() const {
  if (start_index < 0) {
    throw DomainError("ErrorSeries.start_index must be >= 0, got " + std::to_string(start_index));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NonFiniteValue("ErrorSeries value at position " + std::to_string(i));
    }
  }
}

ErrorSeries ErrorSeries::slice(std::size_t first, std::size_t count) const {
  if (first > values.size() || first + count > values.size()) {
    throw DomainError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                      ") out of range for series of length " + std::to_string(values.size()));
  }
  ErrorSeries out;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                    values.begin() + static_cast<std::ptrdiff_t>(first + count));
  out.start_index = start_index + static_cast<std::int64_t>(first);
  return out;
}

ErrorSeries make_series(std::vector<double> values, std::int64_t start_index) {
  ErrorSeries s{std::move(values), start_index};
  s.validate();
  return s;
}

}  // namespace driftlab
