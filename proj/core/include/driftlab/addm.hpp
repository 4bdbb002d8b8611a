#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/events.hpp"
#include "driftlab/losses.hpp"
#include "driftlab/series.hpp"
#include "driftlab/setar.hpp"

namespace driftlab {

struct AddmConfig {
  int window = 1000;  // detection window length (samples)
  TarConfig tar{};
  int min_gap = 0;    // minimum samples between events; 0 means |window|
  LossKind loss_kind = LossKind::Squared;

  // A candidate threshold becomes an event only after this many consecutive
  // scheduled fits agree on it (significant, locations within confirm_radius).
  // Raising it suppresses one-off bootstrap passes on stationary streams at
  // the price of one extra fit interval of latency.  Consecutive fits share
  // most of their window, so their test statistics are strongly correlated
  // and two agreeing passes still let through a noticeable share of chance
  // splits; three keeps stationary runs quiet without costing real steps.
  int confirmations = 3;
  int confirm_radius = 0;  // 0 means window / 8

  double ci_level = 0.90;
  std::string detector_id = "addm";
  std::uint64_t seed = 0;  // master seed for bootstrap and subsampling draws

  void validate() const;  // throws BadParam
  int effective_min_gap() const { return min_gap > 0 ? min_gap : window; }
  int fit_every() const { return window / 4 > 0 ? window / 4 : 1; }
  int effective_confirm_radius() const { return confirm_radius > 0 ? confirm_radius : window / 8; }
};

// Streaming drift detector: keeps a sliding window of recent losses seeded
// with held-out validation losses, refits the threshold model every
// window/4 samples, and emits an event when a significant threshold inside
// the streamed portion is confirmed.  On emission the post-drift segment
// becomes the new validation series and the window restarts.
class AddmDetector {
 public:
  AddmDetector(ErrorSeries validation_errors, AddmConfig cfg);

  // Feed one loss; returns an event when a drift is confirmed at this sample.
  std::optional<DriftEvent> observe(double loss);

  std::int64_t samples_seen() const { return samples_seen_; }
  const AddmConfig& config() const { return cfg_; }

 private:
  std::optional<DriftEvent> run_scheduled_fit();

  AddmConfig cfg_;
  std::vector<double> validation_;
  std::deque<double> window_;
  std::int64_t val_start_global_ = 0;   // stream index of validation_[0]
  std::int64_t base_index_ = 0;         // stream index of the first observed sample
  std::int64_t samples_seen_ = 0;       // streamed samples only (validation excluded)
  std::int64_t last_event_index_ = -1;  // stream_index of the last emission
  std::uint64_t fit_counter_ = 0;
  double pending_seconds_ = 0.0;  // detector time since the last emission

  struct Pending {
    std::int64_t stream_index;
    int hits;
  };
  std::optional<Pending> pending_;
};

// Replays a recorded loss series through the detector: the first
// validation_len samples (default: the model's minimum fit length) become the
// validation series and the rest are streamed.  Events match a live run over
// the same split exactly, compute_time aside.
std::vector<DriftEvent> detect_offline(const ErrorSeries& errors, const AddmConfig& cfg,
                                       std::size_t validation_len = 0);

}  // namespace driftlab
