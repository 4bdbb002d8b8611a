#include "driftlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

void check_finite(double v) {
  if (!std::isfinite(v)) throw NonFiniteValue("detector input");
}

void check_unit_interval(double v) {
  check_finite(v);
  if (v < 0.0 || v > 1.0) {
    throw DomainError("detector expects values in [0, 1], got " + std::to_string(v));
  }
}

// Two-sample Kolmogorov-Smirnov distance.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Asymptotic two-sample KS p-value (Kolmogorov distribution with the
// small-sample correction of Numerical Recipes).
double ks_p_value(double d, std::size_t n1, std::size_t n2) {
  const double en = std::sqrt(static_cast<double>(n1) * static_cast<double>(n2) /
                              static_cast<double>(n1 + n2));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * lam * lam * static_cast<double>(k) * static_cast<double>(k));
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

std::string baseline_kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Ddm:
      return "ddm";
    case BaselineKind::Eddm:
      return "eddm";
    case BaselineKind::Adwin:
      return "adwin";
    case BaselineKind::PageHinkley:
      return "ph";
    case BaselineKind::Kswin:
      return "kswin";
    case BaselineKind::HddmA:
      return "hddm_a";
    case BaselineKind::HddmW:
      return "hddm_w";
  }
  throw BadParam("unknown baseline kind");
}

BaselineKind baseline_kind_from_name(const std::string& name) {
  if (name == "ddm") return BaselineKind::Ddm;
  if (name == "eddm") return BaselineKind::Eddm;
  if (name == "adwin") return BaselineKind::Adwin;
  if (name == "ph") return BaselineKind::PageHinkley;
  if (name == "kswin") return BaselineKind::Kswin;
  if (name == "hddm_a") return BaselineKind::HddmA;
  if (name == "hddm_w") return BaselineKind::HddmW;
  throw BadParam("unknown baseline kind '" + name + "'");
}

// --- DDM ---------------------------------------------------------------------

DdmDetector::DdmDetector(double warn_k, double drift_k, int min_samples)
    : warn_k_(warn_k), drift_k_(drift_k), min_samples_(min_samples) {
  reset();
}

void DdmDetector::reset() {
  n_ = 0;
  p_ = 0.0;
  min_p_s_ = min_p_ = min_s_ = 0.0;
  has_min_ = false;
}

Signal DdmDetector::observe(double value) {
  check_unit_interval(value);
  ++n_;
  p_ += (value - p_) / static_cast<double>(n_);
  const double s = std::sqrt(std::max(0.0, p_ * (1.0 - p_)) / static_cast<double>(n_));
  if (n_ < min_samples_) return Signal::None;
  if (!has_min_ || p_ + s < min_p_s_) {
    min_p_s_ = p_ + s;
    min_p_ = p_;
    min_s_ = s;
    has_min_ = true;
  }
  // Strict comparisons: a zero-variance history (e.g. an error-free streak)
  // must not alarm on exact equality.
  if (p_ + s > min_p_ + drift_k_ * min_s_) {
    reset();
    return Signal::Drift;
  }
  if (p_ + s > min_p_ + warn_k_ * min_s_) return Signal::Warning;
  return Signal::None;
}

// --- EDDM --------------------------------------------------------------------

EddmDetector::EddmDetector(double beta_warn, double beta_drift, int min_errors)
    : beta_warn_(beta_warn), beta_drift_(beta_drift), min_errors_(min_errors) {
  reset();
}

void EddmDetector::reset() {
  ticks_ = 0;
  last_error_tick_ = -1;
  n_dist_ = 0;
  mean_ = m2_ = 0.0;
  best_m2s_ = 0.0;
  has_best_ = false;
}

Signal EddmDetector::observe(double value) {
  check_unit_interval(value);
  ++ticks_;
  if (value <= 0.5) return Signal::None;  // checks run on error arrivals only
  if (last_error_tick_ < 0) {
    last_error_tick_ = ticks_;
    return Signal::None;
  }
  const double dist = static_cast<double>(ticks_ - last_error_tick_);
  last_error_tick_ = ticks_;
  ++n_dist_;
  const double delta = dist - mean_;
  mean_ += delta / static_cast<double>(n_dist_);
  m2_ += delta * (dist - mean_);
  const double sd = std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_dist_)));
  const double m2s = mean_ + 2.0 * sd;
  if (!has_best_ || m2s > best_m2s_) {
    best_m2s_ = m2s;
    has_best_ = true;
  }
  if (n_dist_ < min_errors_ || best_m2s_ <= 0.0) return Signal::None;
  const double ratio = m2s / best_m2s_;
  if (ratio < beta_drift_) {
    reset();
    return Signal::Drift;
  }
  if (ratio < beta_warn_) return Signal::Warning;
  return Signal::None;
}

// --- ADWIN -------------------------------------------------------------------

AdwinDetector::AdwinDetector(double delta, int max_buckets_per_row, int min_window, int min_side)
    : delta_(delta),
      max_buckets_per_row_(max_buckets_per_row),
      min_window_(min_window),
      min_side_(min_side) {}

double AdwinDetector::mean() const {
  return n_ > 0 ? sum_ / static_cast<double>(n_) : 0.0;
}

void AdwinDetector::insert(double value) {
  Bucket b;
  b.sum = value;
  b.sumsq = value * value;
  b.count = 1;
  b.level = 0;
  buckets_.push_back(b);
  ++n_;
  sum_ += value;
  sumsq_ += value * value;
  compress();
}

void AdwinDetector::compress() {
  // The deque stays sorted by level, oldest (highest level) first, so the
  // buckets of one level are contiguous; merging the two oldest of a level
  // preserves the order.
  for (int level = 0;; ++level) {
    std::size_t first = buckets_.size();
    int count = 0;
    for (std::size_t i = 0; i < buckets_.size(); ++i) {
      if (buckets_[i].level == level) {
        if (first == buckets_.size()) first = i;
        ++count;
      }
    }
    if (count == 0) break;
    if (count <= max_buckets_per_row_ + 1) continue;
    Bucket merged;
    merged.sum = buckets_[first].sum + buckets_[first + 1].sum;
    merged.sumsq = buckets_[first].sumsq + buckets_[first + 1].sumsq;
    merged.count = buckets_[first].count + buckets_[first + 1].count;
    merged.level = level + 1;
    buckets_.erase(buckets_.begin() + static_cast<std::ptrdiff_t>(first),
                   buckets_.begin() + static_cast<std::ptrdiff_t>(first) + 2);
    buckets_.insert(buckets_.begin() + static_cast<std::ptrdiff_t>(first), merged);
  }
}

bool AdwinDetector::try_cut() {
  if (n_ < min_window_ || buckets_.size() < 2) return false;
  const double total_mean = sum_ / static_cast<double>(n_);
  const double variance =
      std::max(0.0, sumsq_ / static_cast<double>(n_) - total_mean * total_mean);
  const double delta_prime = delta_ / static_cast<double>(n_);
  const double log_term = std::log(2.0 / delta_prime);

  std::int64_t n0 = 0;
  double sum0 = 0.0;
  for (std::size_t i = 0; i + 1 < buckets_.size(); ++i) {
    n0 += buckets_[i].count;
    sum0 += buckets_[i].sum;
    const std::int64_t n1 = n_ - n0;
    if (n0 < min_side_ || n1 < min_side_) continue;
    const double mu0 = sum0 / static_cast<double>(n0);
    const double mu1 = (sum_ - sum0) / static_cast<double>(n1);
    const double inv_m = 1.0 / static_cast<double>(n0) + 1.0 / static_cast<double>(n1);
    const double eps = std::sqrt(2.0 * inv_m * variance * log_term) +
                       (2.0 / 3.0) * inv_m * log_term;
    if (std::abs(mu0 - mu1) > eps) {
      // Shrink: drop the oldest bucket and re-examine.
      const Bucket& oldest = buckets_.front();
      n_ -= oldest.count;
      sum_ -= oldest.sum;
      sumsq_ -= oldest.sumsq;
      buckets_.pop_front();
      return true;
    }
  }
  return false;
}

Signal AdwinDetector::observe(double value) {
  check_finite(value);
  insert(value);
  bool drift = false;
  while (try_cut()) drift = true;
  return drift ? Signal::Drift : Signal::None;
}

// --- Page-Hinkley ------------------------------------------------------------

PageHinkleyDetector::PageHinkleyDetector(double lambda, double delta, double alpha_forget,
                                         int min_samples)
    : lambda_(lambda), delta_(delta), alpha_(alpha_forget), min_samples_(min_samples) {
  reset();
}

void PageHinkleyDetector::reset() {
  n_ = 0;
  mean_ = 0.0;
  m_ = 0.0;
  min_m_ = 0.0;
}

Signal PageHinkleyDetector::observe(double value) {
  check_finite(value);
  ++n_;
  mean_ += (value - mean_) / static_cast<double>(n_);
  m_ = alpha_ * m_ + (value - mean_ - delta_);
  min_m_ = std::min(min_m_, m_);
  if (n_ >= min_samples_ && m_ - min_m_ > lambda_) {
    reset();
    return Signal::Drift;
  }
  return Signal::None;
}

// --- KSWIN -------------------------------------------------------------------

KswinDetector::KswinDetector(double alpha, int window_size, int stat_size, std::uint64_t seed)
    : alpha_(alpha),
      window_size_(window_size),
      stat_size_(stat_size),
      seed_(seed),
      rng_(derive_seed(seed, 0)) {}

Signal KswinDetector::observe(double value) {
  check_finite(value);
  window_.push_back(value);
  if (window_.size() > static_cast<std::size_t>(window_size_)) window_.pop_front();
  if (window_.size() < static_cast<std::size_t>(window_size_)) return Signal::None;

  const auto stat = static_cast<std::size_t>(stat_size_);
  std::vector<double> recent(window_.end() - static_cast<std::ptrdiff_t>(stat), window_.end());
  std::vector<double> sampled;
  sampled.reserve(stat);
  std::sample(window_.begin(), window_.end() - static_cast<std::ptrdiff_t>(stat),
              std::back_inserter(sampled), stat, rng_);

  const double d = ks_statistic(std::move(sampled), std::move(recent));
  if (ks_p_value(d, stat, stat) <= alpha_) {
    // Full restart; reseeding makes the post-drift detector identical to a
    // freshly constructed one.
    window_.clear();
    rng_.seed(derive_seed(seed_, 0));
    return Signal::Drift;
  }
  return Signal::None;
}

// --- HDDM (average scheme) -----------------------------------------------------

HddmADetector::HddmADetector(double alpha_warn, double alpha_drift)
    : alpha_warn_(alpha_warn), alpha_drift_(alpha_drift) {
  reset();
}

void HddmADetector::reset() {
  n_total_ = n_cut_ = 0;
  sum_total_ = sum_cut_ = 0.0;
}

Signal HddmADetector::observe(double value) {
  check_unit_interval(value);
  ++n_total_;
  sum_total_ += value;

  const double mu_total = sum_total_ / static_cast<double>(n_total_);
  const double eps_total =
      std::sqrt(std::log(1.0 / alpha_drift_) / (2.0 * static_cast<double>(n_total_)));
  const double bound = mu_total + eps_total;
  // Track the prefix with the lowest upper confidence bound: the baseline.
  if (n_cut_ == 0 ||
      bound <= sum_cut_ / static_cast<double>(n_cut_) +
                   std::sqrt(std::log(1.0 / alpha_drift_) / (2.0 * static_cast<double>(n_cut_)))) {
    n_cut_ = n_total_;
    sum_cut_ = sum_total_;
    return Signal::None;  // the cut absorbed everything seen so far
  }

  const std::int64_t n_rec = n_total_ - n_cut_;
  const double mu_cut = sum_cut_ / static_cast<double>(n_cut_);
  const double mu_rec = (sum_total_ - sum_cut_) / static_cast<double>(n_rec);
  const double diff = mu_rec - mu_cut;
  // Each sample mean gets its own Hoeffding epsilon; the two are added, not
  // pooled, so the test stays conservative when either side is short.
  const auto eps = [&](double alpha) {
    return std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(n_cut_))) +
           std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(n_rec)));
  };
  if (diff >= eps(alpha_drift_)) {
    reset();
    return Signal::Drift;
  }
  if (diff >= eps(alpha_warn_)) return Signal::Warning;
  return Signal::None;
}

// --- HDDM (EWMA scheme) ---------------------------------------------------------

void HddmWDetector::Ewma::update(double x, double lambda) {
  ++n;
  if (n == 1) {
    mean = x;
    csum = 1.0;
    return;
  }
  mean = (1.0 - lambda) * mean + lambda * x;
  csum = (1.0 - lambda) * (1.0 - lambda) * csum + lambda * lambda;
}

HddmWDetector::HddmWDetector(double alpha_warn, double alpha_drift, double lambda)
    : alpha_warn_(alpha_warn), alpha_drift_(alpha_drift), lambda_(lambda) {
  reset();
}

void HddmWDetector::reset() {
  total_ = Ewma{};
  frozen_ = Ewma{};
  recent_ = Ewma{};
  best_bound_ = 0.0;
  has_cut_ = false;
}

Signal HddmWDetector::observe(double value) {
  check_unit_interval(value);
  total_.update(value, lambda_);
  const double bound =
      total_.mean + std::sqrt(total_.csum * std::log(1.0 / alpha_drift_) / 2.0);
  if (!has_cut_ || bound <= best_bound_) {
    best_bound_ = bound;
    frozen_ = total_;
    recent_ = Ewma{};
    has_cut_ = true;
    return Signal::None;
  }
  recent_.update(value, lambda_);
  const double diff = recent_.mean - frozen_.mean;
  // McDiarmid epsilon per EWMA, added across the two sides (see HDDM_A).
  const auto eps = [&](double alpha) {
    return std::sqrt(frozen_.csum * std::log(1.0 / alpha) / 2.0) +
           std::sqrt(recent_.csum * std::log(1.0 / alpha) / 2.0);
  };
  if (diff >= eps(alpha_drift_)) {
    reset();
    return Signal::Drift;
  }
  if (diff >= eps(alpha_warn_)) return Signal::Warning;
  return Signal::None;
}

// --- factory -------------------------------------------------------------------

namespace {

struct ParamSpec {
  const char* name;
  bool required;
  double default_value;
};

std::map<std::string, double> merge_params(const BaselineConfig& cfg,
                                           std::initializer_list<ParamSpec> specs) {
  std::set<std::string> known;
  std::map<std::string, double> merged;
  for (const auto& s : specs) {
    known.insert(s.name);
    if (auto it = cfg.params.find(s.name); it != cfg.params.end()) {
      merged[s.name] = it->second;
    } else if (s.required) {
      throw MissingParam(baseline_kind_name(cfg.kind) + "." + s.name);
    } else {
      merged[s.name] = s.default_value;
    }
  }
  for (const auto& [k, v] : cfg.params) {
    (void)v;
    if (!known.count(k)) {
      throw BadParam("unknown parameter '" + k + "' for " + baseline_kind_name(cfg.kind));
    }
  }
  return merged;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw BadParam(msg);
}

}  // namespace

std::unique_ptr<BaselineDetector> make_baseline(const BaselineConfig& cfg) {
  switch (cfg.kind) {
    case BaselineKind::Ddm: {
      auto p = merge_params(cfg, {{"warn_k", false, 2.0},
                                  {"drift_k", false, 3.0},
                                  {"min_samples", false, 30.0}});
      require(p["warn_k"] > 0.0, "ddm.warn_k must be positive");
      require(p["drift_k"] >= p["warn_k"], "ddm.drift_k must be >= warn_k");
      require(p["min_samples"] >= 1.0, "ddm.min_samples must be >= 1");
      return std::make_unique<DdmDetector>(p["warn_k"], p["drift_k"],
                                           static_cast<int>(p["min_samples"]));
    }
    case BaselineKind::Eddm: {
      auto p = merge_params(cfg, {{"beta_warn", false, 0.95},
                                  {"beta_drift", false, 0.9},
                                  {"min_errors", false, 30.0}});
      require(p["beta_drift"] > 0.0 && p["beta_drift"] <= p["beta_warn"] && p["beta_warn"] < 1.0,
              "eddm requires 0 < beta_drift <= beta_warn < 1");
      require(p["min_errors"] >= 2.0, "eddm.min_errors must be >= 2");
      return std::make_unique<EddmDetector>(p["beta_warn"], p["beta_drift"],
                                            static_cast<int>(p["min_errors"]));
    }
    case BaselineKind::Adwin: {
      auto p = merge_params(cfg, {{"delta", true, 0.0}});
      require(p["delta"] > 0.0 && p["delta"] < 1.0, "adwin.delta must lie in (0, 1)");
      return std::make_unique<AdwinDetector>(p["delta"]);
    }
    case BaselineKind::PageHinkley: {
      auto p = merge_params(cfg, {{"lambda", true, 0.0},
                                  {"delta_ph", false, 0.005},
                                  {"alpha_forget", false, 0.9999},
                                  {"min_samples", false, 30.0}});
      require(p["lambda"] > 0.0, "ph.lambda must be positive");
      require(p["delta_ph"] >= 0.0, "ph.delta_ph must be >= 0");
      require(p["alpha_forget"] > 0.0 && p["alpha_forget"] <= 1.0,
              "ph.alpha_forget must lie in (0, 1]");
      require(p["min_samples"] >= 1.0, "ph.min_samples must be >= 1");
      return std::make_unique<PageHinkleyDetector>(p["lambda"], p["delta_ph"], p["alpha_forget"],
                                                   static_cast<int>(p["min_samples"]));
    }
    case BaselineKind::Kswin: {
      auto p = merge_params(cfg, {{"alpha", true, 0.0},
                                  {"window_size", false, 100.0},
                                  {"stat_size", false, 30.0}});
      require(p["alpha"] > 0.0 && p["alpha"] < 1.0, "kswin.alpha must lie in (0, 1)");
      const int w = static_cast<int>(p["window_size"]);
      const int s = static_cast<int>(p["stat_size"]);
      require(s >= 2, "kswin.stat_size must be >= 2");
      require(w >= 2 * s, "kswin.window_size must be >= 2 * stat_size");
      return std::make_unique<KswinDetector>(p["alpha"], w, s, cfg.seed);
    }
    case BaselineKind::HddmA: {
      auto p = merge_params(cfg, {{"alpha_drift", false, 0.001}, {"alpha_warn", false, 0.005}});
      require(p["alpha_drift"] > 0.0 && p["alpha_drift"] < 1.0,
              "hddm_a.alpha_drift must lie in (0, 1)");
      require(p["alpha_warn"] >= p["alpha_drift"] && p["alpha_warn"] < 1.0,
              "hddm_a.alpha_warn must lie in [alpha_drift, 1)");
      return std::make_unique<HddmADetector>(p["alpha_warn"], p["alpha_drift"]);
    }
    case BaselineKind::HddmW: {
      auto p = merge_params(cfg, {{"alpha_drift", false, 0.001},
                                  {"alpha_warn", false, 0.005},
                                  {"lambda", false, 0.05}});
      require(p["alpha_drift"] > 0.0 && p["alpha_drift"] < 1.0,
              "hddm_w.alpha_drift must lie in (0, 1)");
      require(p["alpha_warn"] >= p["alpha_drift"] && p["alpha_warn"] < 1.0,
              "hddm_w.alpha_warn must lie in [alpha_drift, 1)");
      require(p["lambda"] > 0.0 && p["lambda"] <= 1.0, "hddm_w.lambda must lie in (0, 1]");
      return std::make_unique<HddmWDetector>(p["alpha_warn"], p["alpha_drift"], p["lambda"]);
    }
  }
  throw BadParam("unknown baseline kind");
}

}  // namespace driftlab
