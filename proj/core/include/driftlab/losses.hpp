#pragma once

#include <algorithm>
#include <cmath>

namespace driftlab {

enum class LossKind { Squared, CrossEntropy, ZeroOne };

// Per-sample loss.  For CrossEntropy `prediction` is a probability (clamped
// away from 0/1 before the log); for ZeroOne both sides are thresholded at
// 0.5.
inline double point_loss(LossKind kind, double prediction, double target) {
  switch (kind) {
    case LossKind::Squared: {
      const double e = prediction - target;
      return e * e;
    }
    case LossKind::CrossEntropy: {
      const double q = std::clamp(prediction, 1e-12, 1.0 - 1e-12);
      return target > 0.5 ? -std::log(q) : -std::log1p(-q);
    }
    case LossKind::ZeroOne:
      return (prediction >= 0.5) == (target >= 0.5) ? 0.0 : 1.0;
  }
  return 0.0;
}

}  // namespace driftlab
