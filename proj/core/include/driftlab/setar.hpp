#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/series.hpp"

namespace driftlab {

// What the threshold variable is.  SelfExciting thresholds on the delayed
// value Y_{t-d}; TimeIndex thresholds on the observation index itself, which
// turns the fitted threshold into a change-point location in stream
// coordinates.
enum class ThresholdMode { SelfExciting, TimeIndex };

struct TarConfig {
  int p = 5;              // autoregressive order
  int d = 2;              // threshold delay (SelfExciting mode), 1 <= d <= p
  ThresholdMode threshold_mode = ThresholdMode::TimeIndex;
  double min_regime_frac = 0.15;   // trimming: each regime keeps at least this share of rows
  double significance_level = 0.05;
  int bootstrap_reps = 200;

  void validate() const;  // throws BadParam
  // Shortest series fit_tar accepts: p lags, the threshold delay, and room
  // for two estimable regimes of p + 2 rows each.
  std::size_t min_series_length() const;
};

// Regression view of a series: row i explains targets[i] = Y_{p+i} from an
// intercept and the p lagged values, with the matching threshold variable and
// the absolute stream index of the target.
struct LagDesign {
  Eigen::MatrixXd rows;                    // T x (p+1), column 0 all ones
  Eigen::VectorXd targets;                 // T
  Eigen::VectorXd threshold_var;           // T
  std::vector<std::int64_t> stream_index;  // T
  int p = 0;

  std::size_t n_rows() const { return static_cast<std::size_t>(targets.size()); }
};

LagDesign build_lag_design(const ErrorSeries& series, const TarConfig& cfg);

// Per-regime least squares for a fixed assignment of rows to regimes.
// Coefficients of an empty regime are zero; a nonempty regime needs at least
// p + 2 rows.  sigma2 is SSR(both regimes) / T.
struct RegimeOls {
  Eigen::VectorXd phi;   // regime 1 (threshold_var <= r)
  Eigen::VectorXd beta;  // regime 2 (threshold_var > r)
  double sigma2 = 0.0;
};

RegimeOls ols_fit(const LagDesign& design, const std::vector<bool>& in_regime2);

struct TarFit {
  Eigen::VectorXd phi;           // regime-1 coefficients, length p+1
  Eigen::VectorXd beta;          // regime-2 coefficients, length p+1
  double threshold = 0.0;        // minimizing threshold value r-hat
  std::int64_t threshold_index = 0;  // smallest stream index assigned to regime 2
  double sigma2 = 0.0;           // SSR / T at r-hat
  double sigma2_linear = 0.0;    // SSR / T of the pooled single-regime fit
  double f_stat = 0.0;           // T * (sigma2_linear - sigma2) / sigma2
  double p_value = -1.0;         // filled by significance_test; -1 = not tested
  int n_obs = 0;                 // T

  std::string to_json() const;
};

// Exhaustive least-squares threshold search over every admissible split of
// the observed threshold-variable values (ties in the objective resolve to
// the smallest threshold).
TarFit fit_tar(const ErrorSeries& series, const TarConfig& cfg);

// Fixed-regressor residual-bootstrap p-value for the sup-F linearity test.
// Replicate targets are pooled fitted values plus residuals resampled with
// replacement; the returned p-value is the plain fraction of replicates whose
// sup-F reaches the observed one.
double significance_test(const TarFit& fit, const LagDesign& design, const TarConfig& cfg,
                         std::uint64_t seed);

// fit_tar followed by significance_test on the same design; p_value is set.
TarFit fit_tar_tested(const ErrorSeries& series, const TarConfig& cfg, std::uint64_t seed);

struct ThresholdCI {
  double lower = 0.0;
  double upper = 0.0;
  double nominal_level = 0.0;
  int subsample_size = 0;  // block length in series samples
  int n_subsamples = 0;    // blocks whose refit succeeded
};

// Subsampling confidence interval for the threshold: refits on contiguous
// blocks of length ceil(T^0.7) constrained (when possible) to contain the
// full-sample change row, then takes symmetric empirical quantiles of the
// block-threshold deviations recentred at the full-sample estimate.
ThresholdCI subsample_ci(const ErrorSeries& series, const TarConfig& cfg, const TarFit& fit,
                         double level, std::uint64_t seed);

}  // namespace driftlab
