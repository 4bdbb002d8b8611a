#include "driftlab/addm.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "driftlab/adaptation.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/random.hpp"

namespace driftlab {

namespace {

void check_loss(double loss, LossKind kind) {
  if (!std::isfinite(loss)) throw NonFiniteValue("loss");
  switch (kind) {
    case LossKind::Squared:
    case LossKind::CrossEntropy:
      if (loss < 0.0) throw DomainError("loss must be >= 0 for this loss kind");
      break;
    case LossKind::ZeroOne:
      if (loss != 0.0 && loss != 1.0) throw DomainError("zero-one loss must be 0 or 1");
      break;
  }
}

// Snap an autoregressive split to the sample where the loss level actually
// changes. The AR objective happily lets the post-split regime absorb the
// first stretch of the transition as lag-driven decay, which drags the fitted
// boundary tens of samples off the true change. A two-level constant-mean
// split over a local neighbourhood cannot model the step away, so its argmin
// sits at the edge itself. Boundaries below lo_bound (the validation prefix)
// are excluded.
//
// The exact boundary sample is one noisy draw whose regime membership the
// data cannot settle, so among boundaries within one re-assignment's cost of
// the optimum, report the latest: flagging a change one sample late drops a
// little fresh data from any retraining slice, while flagging it early
// contaminates the slice with pre-change rows. Losses are non-negative, so
// the worst single re-assignment a quiet-side sample can cost is that of a
// zero-valued draw, |mean_L^2 - mean_R^2|; a second sample always exceeds
// this budget, which keeps the adjustment to the one ambiguous draw.
std::size_t refine_level_split(const std::vector<double>& v, std::size_t pos, std::size_t radius,
                               std::size_t lo_bound) {
  const std::size_t len = v.size();
  const std::size_t s = pos > radius ? pos - radius : 0;
  const std::size_t e = std::min(len, pos + radius);
  const std::size_t blo = std::max(s + 1, lo_bound);
  const std::size_t bhi = e > 1 ? e - 1 : 0;
  if (bhi <= blo) return pos;

  std::vector<double> sum(e - s + 1, 0.0), sq(e - s + 1, 0.0);
  for (std::size_t i = s; i < e; ++i) {
    sum[i - s + 1] = sum[i - s] + v[i];
    sq[i - s + 1] = sq[i - s] + v[i] * v[i];
  }
  const auto ssr_at = [&](std::size_t b) {
    const double n_left = static_cast<double>(b - s);
    const double n_right = static_cast<double>(e - b);
    const double s_left = sum[b - s], q_left = sq[b - s];
    const double s_right = sum[e - s] - s_left, q_right = sq[e - s] - q_left;
    return (q_left - s_left * s_left / n_left) + (q_right - s_right * s_right / n_right);
  };

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_b = pos;
  for (std::size_t b = blo; b <= bhi; ++b) {
    const double ssr = ssr_at(b);
    if (ssr <= best) {
      best = ssr;
      best_b = b;
    }
  }

  const double mean_left =
      sum[best_b - s] / static_cast<double>(best_b - s);
  const double mean_right =
      (sum[e - s] - sum[best_b - s]) / static_cast<double>(e - best_b);
  const double slack = std::abs(mean_left - mean_right) * (mean_left + mean_right);
  for (std::size_t b = bhi; b > best_b; --b) {
    if (ssr_at(b) <= best + slack) return b;
  }
  return best_b;
}

}  // namespace

void AddmConfig::validate() const {
  if (window < 4) throw BadParam("AddmConfig.window must be >= 4");
  if (min_gap < 0) throw BadParam("AddmConfig.min_gap must be >= 0");
  if (confirmations < 1) throw BadParam("AddmConfig.confirmations must be >= 1");
  if (confirm_radius < 0) throw BadParam("AddmConfig.confirm_radius must be >= 0");
  if (!(ci_level > 0.0) || !(ci_level < 1.0)) throw BadParam("AddmConfig.ci_level must lie in (0, 1)");
  if (detector_id.empty()) throw BadParam("AddmConfig.detector_id must not be empty");
  tar.validate();
}

AddmDetector::AddmDetector(ErrorSeries validation_errors, AddmConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  validation_errors.validate();
  for (double v : validation_errors.values) check_loss(v, cfg_.loss_kind);
  val_start_global_ = validation_errors.start_index;
  validation_ = std::move(validation_errors.values);
  base_index_ = val_start_global_ + static_cast<std::int64_t>(validation_.size());
}

std::optional<DriftEvent> AddmDetector::observe(double loss) {
  check_loss(loss, cfg_.loss_kind);
  window_.push_back(loss);
  while (window_.size() > static_cast<std::size_t>(cfg_.window)) window_.pop_front();
  ++samples_seen_;
  if (samples_seen_ % cfg_.fit_every() != 0) return std::nullopt;
  return run_scheduled_fit();
}

std::optional<DriftEvent> AddmDetector::run_scheduled_fit() {
  const std::size_t len = validation_.size() + window_.size();
  if (len < cfg_.tar.min_series_length()) return std::nullopt;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  ErrorSeries composite;
  composite.values.reserve(len);
  composite.values.insert(composite.values.end(), validation_.begin(), validation_.end());
  composite.values.insert(composite.values.end(), window_.begin(), window_.end());
  composite.start_index = val_start_global_;

  const std::uint64_t fit_id = fit_counter_++;
  TarFit fit;
  try {
    fit = fit_tar_tested(composite, cfg_.tar, derive_seed(cfg_.seed, fit_id));
  } catch (const DataError&) {
    pending_seconds_ += elapsed();
    pending_.reset();
    return std::nullopt;
  }

  const std::int64_t window_start_global =
      val_start_global_ + static_cast<std::int64_t>(validation_.size());
  const bool significant = fit.p_value <= cfg_.tar.significance_level;
  const bool in_window = fit.threshold_index >= window_start_global;
  if (!significant || !in_window) {
    pending_seconds_ += elapsed();
    pending_.reset();
    return std::nullopt;
  }

  // fit.threshold_index is a position in the composite series; refine it onto
  // the exact level edge, then map it back to the true stream coordinate of
  // the underlying sample (once the sliding window has dropped samples, the
  // composite is no longer contiguous with the stream).
  const std::int64_t pos = static_cast<std::int64_t>(refine_level_split(
      composite.values, static_cast<std::size_t>(fit.threshold_index - val_start_global_),
      static_cast<std::size_t>(cfg_.fit_every()), validation_.size()));
  const std::int64_t window_first_global =
      base_index_ + samples_seen_ - static_cast<std::int64_t>(window_.size());
  const std::int64_t loc =
      window_first_global + (pos - static_cast<std::int64_t>(validation_.size()));

  // Candidate threshold: require consecutive scheduled fits to agree on the
  // location before emitting, which filters one-off bootstrap passes.
  if (pending_ && std::llabs(loc - pending_->stream_index) <=
                      static_cast<std::int64_t>(cfg_.effective_confirm_radius())) {
    ++pending_->hits;
    pending_->stream_index = loc;  // latest fit has the most post-drift data
  } else {
    pending_ = Pending{loc, 1};
  }

  const bool confirmed = pending_->hits >= cfg_.confirmations;
  const bool gap_ok = last_event_index_ < 0 ||
                      loc - last_event_index_ >= static_cast<std::int64_t>(cfg_.effective_min_gap());
  if (!confirmed || !gap_ok) {
    pending_seconds_ += elapsed();
    return std::nullopt;
  }

  DriftEvent ev;
  ev.detector_id = cfg_.detector_id;
  ev.stream_index = loc;
  ev.detected_at_index = base_index_ + samples_seen_ - 1;

  const auto cut = static_cast<std::size_t>(pos);
  try {
    ev.severity = severity(composite.slice(0, cut), composite.slice(cut, len - cut));
  } catch (const DataError&) {
    // Degenerate segment (e.g. all-zero losses): leave severity empty.
  }
  try {
    ev.ci = subsample_ci(composite, cfg_.tar, fit, cfg_.ci_level,
                         derive_seed(cfg_.seed, fit_id ^ 0x8000000000000000ULL));
    if (cfg_.tar.threshold_mode == ThresholdMode::TimeIndex) {
      // The interval lives on the composite time axis; translate it onto the
      // stream axis alongside the reported location.
      const double shift = static_cast<double>(loc - fit.threshold_index);
      ev.ci->lower += shift;
      ev.ci->upper += shift;
    }
  } catch (const DataError&) {
    // Too little data around the threshold for block refits.
  }
  ev.compute_time = pending_seconds_ + elapsed();

  // Restart: the post-drift segment becomes the new validation series. It sits
  // entirely inside the window segment, so it is contiguous in stream time and
  // `loc` is its true starting coordinate.
  validation_.assign(composite.values.begin() + static_cast<std::ptrdiff_t>(cut),
                     composite.values.end());
  val_start_global_ = loc;
  window_.clear();
  pending_.reset();
  pending_seconds_ = 0.0;
  last_event_index_ = loc;
  return ev;
}

std::vector<DriftEvent> detect_offline(const ErrorSeries& errors, const AddmConfig& cfg,
                                       std::size_t validation_len) {
  cfg.validate();
  errors.validate();
  const std::size_t v = validation_len > 0 ? validation_len : cfg.tar.min_series_length();
  std::vector<DriftEvent> events;
  if (errors.size() <= v) return events;
  AddmDetector det(errors.slice(0, v), cfg);
  for (std::size_t i = v; i < errors.size(); ++i) {
    if (auto ev = det.observe(errors.values[i])) events.push_back(std::move(*ev));
  }
  return events;
}

}  // namespace driftlab
