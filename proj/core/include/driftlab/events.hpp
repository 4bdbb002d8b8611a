#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "driftlab/setar.hpp"

namespace driftlab {

// One detected drift.  stream_index is the estimated change location,
// detected_at_index the sample on which the detector fired (stream_index <=
// detected_at_index).  Baseline detectors do not localize, estimate severity,
// or produce intervals, so severity/ci stay empty for them.
struct DriftEvent {
  std::string detector_id;
  std::int64_t stream_index = 0;
  std::int64_t detected_at_index = 0;
  std::optional<double> severity;
  std::optional<ThresholdCI> ci;
  double compute_time = 0.0;  // seconds spent inside the detector up to emission

  // compute_time is profiling metadata and the interval's sampling details
  // are diagnostics; identity is the location, the bounds, and the score.
  friend bool operator==(const DriftEvent& a, const DriftEvent& b) {
    const bool ci_eq = a.ci.has_value() == b.ci.has_value() &&
                       (!a.ci || (a.ci->lower == b.ci->lower && a.ci->upper == b.ci->upper));
    return a.detector_id == b.detector_id && a.stream_index == b.stream_index &&
           a.detected_at_index == b.detected_at_index && a.severity == b.severity && ci_eq;
  }
};

// One JSON object (no trailing newline) with fields detector_id, stream_index,
// detected_at_index, severity, ci_lower, ci_upper, compute_time; absent
// severity/ci serialize as null.
std::string event_json_line(const DriftEvent& event);

DriftEvent event_from_json_line(const std::string& line);

}  // namespace driftlab
