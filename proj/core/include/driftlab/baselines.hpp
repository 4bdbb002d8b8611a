#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/random.hpp"

namespace driftlab {

enum class BaselineKind { Ddm, Eddm, Adwin, PageHinkley, Kswin, HddmA, HddmW };

enum class Signal { None, Warning, Drift };

// kind plus a flat parameter map merged over per-kind defaults.  Parameters
// without a default (adwin: delta; ph: lambda; kswin: alpha) must be present.
struct BaselineConfig {
  BaselineKind kind = BaselineKind::Ddm;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;  // sampling detectors (kswin) only
};

std::string baseline_kind_name(BaselineKind kind);
BaselineKind baseline_kind_from_name(const std::string& name);  // throws BadParam

class BaselineDetector {
 public:
  virtual ~BaselineDetector() = default;
  // Feeds one monitored value; Drift resets the detector's own state.
  virtual Signal observe(double value) = 0;
  virtual BaselineKind kind() const = 0;
};

// Validates the merged parameters (MissingParam / BadParam) and builds a
// fresh detector.
std::unique_ptr<BaselineDetector> make_baseline(const BaselineConfig& cfg);

// --- concrete detectors (exposed for white-box tests) ------------------------

// Binary-error monitor on p + s vs the running minimum (warn_k / drift_k
// standard deviations).
class DdmDetector final : public BaselineDetector {
 public:
  DdmDetector(double warn_k, double drift_k, int min_samples);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::Ddm; }

 private:
  void reset();
  double warn_k_, drift_k_;
  int min_samples_;
  std::int64_t n_ = 0;
  double p_ = 0.0;
  double min_p_s_ = 0.0, min_p_ = 0.0, min_s_ = 0.0;
  bool has_min_ = false;
};

// Distance-between-errors monitor: drifts when the mean spacing of recent
// errors shrinks relative to its best observed value.
class EddmDetector final : public BaselineDetector {
 public:
  EddmDetector(double beta_warn, double beta_drift, int min_errors);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::Eddm; }

 private:
  void reset();
  double beta_warn_, beta_drift_;
  int min_errors_;
  std::int64_t ticks_ = 0;
  std::int64_t last_error_tick_ = -1;
  std::int64_t n_dist_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
  double best_m2s_ = 0.0;
  bool has_best_ = false;
};

// ADWIN2: exponential-histogram window cut by the Bernstein bound.
class AdwinDetector final : public BaselineDetector {
 public:
  explicit AdwinDetector(double delta, int max_buckets_per_row = 5, int min_window = 10,
                         int min_side = 5);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::Adwin; }

  std::int64_t width() const { return n_; }
  double mean() const;
  std::size_t bucket_count() const { return buckets_.size(); }

 private:
  struct Bucket {
    double sum = 0.0;
    double sumsq = 0.0;
    std::int64_t count = 0;
    int level = 0;  // bucket holds 2^level observations
  };
  void insert(double value);
  void compress();
  bool try_cut();

  double delta_;
  int max_buckets_per_row_;
  int min_window_;
  int min_side_;
  std::deque<Bucket> buckets_;  // oldest first
  std::int64_t n_ = 0;
  double sum_ = 0.0, sumsq_ = 0.0;
};

// One-sided (increase) Page-Hinkley with forgetting.
class PageHinkleyDetector final : public BaselineDetector {
 public:
  PageHinkleyDetector(double lambda, double delta, double alpha_forget, int min_samples);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::PageHinkley; }

 private:
  void reset();
  double lambda_, delta_, alpha_;
  int min_samples_;
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m_ = 0.0, min_m_ = 0.0;
};

// Sliding-window Kolmogorov-Smirnov test: a seeded subsample of the older
// window against the newest stat_size values.
class KswinDetector final : public BaselineDetector {
 public:
  KswinDetector(double alpha, int window_size, int stat_size, std::uint64_t seed);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::Kswin; }

 private:
  double alpha_;
  int window_size_, stat_size_;
  std::uint64_t seed_;
  std::uint64_t resets_ = 0;
  Rng rng_;
  std::deque<double> window_;
};

// Hoeffding-bound drift detection, average scheme (one-sided increase).
class HddmADetector final : public BaselineDetector {
 public:
  HddmADetector(double alpha_warn, double alpha_drift);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::HddmA; }

 private:
  void reset();
  double alpha_warn_, alpha_drift_;
  std::int64_t n_total_ = 0, n_cut_ = 0;
  double sum_total_ = 0.0, sum_cut_ = 0.0;
};

// Hoeffding-bound drift detection, EWMA scheme (one-sided increase).
class HddmWDetector final : public BaselineDetector {
 public:
  HddmWDetector(double alpha_warn, double alpha_drift, double lambda);
  Signal observe(double value) override;
  BaselineKind kind() const override { return BaselineKind::HddmW; }

 private:
  struct Ewma {
    double mean = 0.0;
    double csum = 0.0;  // sum of squared ewma coefficients
    std::int64_t n = 0;
    void update(double x, double lambda);
  };
  void reset();
  double alpha_warn_, alpha_drift_, lambda_;
  Ewma total_;
  Ewma frozen_;  // snapshot at the best lower bound
  Ewma recent_;
  double best_bound_ = 0.0;
  bool has_cut_ = false;
};

}  // namespace driftlab
