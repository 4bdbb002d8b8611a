#include "driftlab/setar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stats.hpp"

namespace driftlab {

namespace {

// Relative tolerance on the LDLT diagonal below which a normal-equations
// matrix is treated as rank deficient.
constexpr double kRankTol = 1e-10;

// Blocks drawn for a subsampling interval.
constexpr int kNumSubsamples = 100;

bool ldlt_full_rank(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  if (ldlt.info() != Eigen::Success) return false;
  const auto d = ldlt.vectorD();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0)) return false;
  return d.minCoeff() > kRankTol * dmax;
}

// Precomputed exhaustive-scan machinery for one design.  Sorting by the
// threshold variable turns every candidate split into a prefix/suffix pair,
// so the per-split normal equations come from running accumulators and the
// factorizations can be cached and reused across bootstrap replicates (whose
// targets change but whose regressors do not).
class ThresholdScanner {
 public:
  ThresholdScanner(const LagDesign& design, const TarConfig& cfg)
      : T_(design.n_rows()), p1_(design.p + 1) {
    min_rows_ = std::max<std::size_t>(
        static_cast<std::size_t>(
            std::ceil(cfg.min_regime_frac * static_cast<double>(T_))),
        static_cast<std::size_t>(design.p) + 2);

    order_.resize(T_);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return design.threshold_var(static_cast<Eigen::Index>(a)) <
             design.threshold_var(static_cast<Eigen::Index>(b));
    });

    X_.resize(static_cast<Eigen::Index>(T_), p1_);
    tv_.resize(static_cast<Eigen::Index>(T_));
    for (std::size_t i = 0; i < T_; ++i) {
      X_.row(static_cast<Eigen::Index>(i)) = design.rows.row(static_cast<Eigen::Index>(order_[i]));
      tv_(static_cast<Eigen::Index>(i)) = design.threshold_var(static_cast<Eigen::Index>(order_[i]));
    }

    suffix_min_stream_.assign(T_ + 1, std::numeric_limits<std::int64_t>::max());
    for (std::size_t i = T_; i-- > 0;) {
      suffix_min_stream_[i] = std::min(suffix_min_stream_[i + 1], design.stream_index[order_[i]]);
    }

    Eigen::MatrixXd xtx_total = Eigen::MatrixXd::Zero(p1_, p1_);
    for (std::size_t i = 0; i < T_; ++i) {
      const auto row = X_.row(static_cast<Eigen::Index>(i));
      xtx_total.noalias() += row.transpose() * row;
    }
    pooled_.compute(xtx_total);
    pooled_ok_ = ldlt_full_rank(pooled_);

    // Admissible boundaries: k rows in regime 1, both regimes at or above the
    // trimming floor, and the split falls between distinct threshold values.
    if (T_ < 2 * min_rows_) return;
    Eigen::MatrixXd xtx1 = Eigen::MatrixXd::Zero(p1_, p1_);
    std::size_t next_k = min_rows_;
    for (std::size_t i = 0; i < T_; ++i) {
      const auto row = X_.row(static_cast<Eigen::Index>(i));
      xtx1.noalias() += row.transpose() * row;
      const std::size_t k = i + 1;
      if (k < next_k || k > T_ - min_rows_) continue;
      if (k < T_ && !(tv_(static_cast<Eigen::Index>(k - 1)) < tv_(static_cast<Eigen::Index>(k)))) {
        continue;  // tie in the threshold variable: not a distinct candidate
      }
      Boundary b;
      b.k = k;
      b.threshold = tv_(static_cast<Eigen::Index>(k - 1));
      b.l1.compute(xtx1);
      b.l2.compute(xtx_total - xtx1);
      b.ok = ldlt_full_rank(b.l1) && ldlt_full_rank(b.l2);
      if (b.ok) ++n_solvable_;
      boundaries_.push_back(std::move(b));
    }
  }

  bool any_boundary() const { return !boundaries_.empty(); }
  bool any_solvable() const { return n_solvable_ > 0; }
  bool pooled_ok() const { return pooled_ok_; }
  std::size_t n_rows() const { return T_; }

  struct ScanResult {
    bool found = false;
    std::size_t k = 0;        // rows in regime 1 at the winning split
    double threshold = 0.0;
    double ssr = 0.0;         // two-regime SSR at the winning split
    double pooled_ssr = 0.0;  // single-regime SSR (normal-equations shortcut)
  };

  // Least-squares objective at every admissible split for the given targets
  // (original row order).  Strict improvement keeps the first minimum, i.e.
  // ties resolve to the smallest threshold.
  ScanResult scan(const Eigen::VectorXd& targets) const {
    ScanResult out;
    Eigen::VectorXd ys(static_cast<Eigen::Index>(T_));
    for (std::size_t i = 0; i < T_; ++i) {
      ys(static_cast<Eigen::Index>(i)) = targets(static_cast<Eigen::Index>(order_[i]));
    }

    const std::size_t nb = boundaries_.size();
    Eigen::MatrixXd xty_at(p1_, static_cast<Eigen::Index>(nb));
    Eigen::VectorXd yty_at(static_cast<Eigen::Index>(nb));
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p1_);
    double yty = 0.0;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < T_; ++i) {
      const double y = ys(static_cast<Eigen::Index>(i));
      xty.noalias() += X_.row(static_cast<Eigen::Index>(i)).transpose() * y;
      yty += y * y;
      while (bi < nb && boundaries_[bi].k == i + 1) {
        xty_at.col(static_cast<Eigen::Index>(bi)) = xty;
        yty_at(static_cast<Eigen::Index>(bi)) = yty;
        ++bi;
      }
    }

    if (pooled_ok_) {
      Eigen::VectorXd coef = pooled_.solve(xty);
      out.pooled_ssr = std::max(0.0, yty - coef.dot(xty));
    }

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd b1(p1_), b2(p1_), xty2(p1_);
    for (std::size_t j = 0; j < nb; ++j) {
      if (!boundaries_[j].ok) continue;
      const auto xty1 = xty_at.col(static_cast<Eigen::Index>(j));
      const double yty1 = yty_at(static_cast<Eigen::Index>(j));
      b1 = boundaries_[j].l1.solve(xty1);
      xty2 = xty - xty1;
      b2 = boundaries_[j].l2.solve(xty2);
      const double ssr = std::max(0.0, yty1 - b1.dot(xty1)) +
                         std::max(0.0, (yty - yty1) - b2.dot(xty2));
      if (ssr < best) {
        best = ssr;
        out.found = true;
        out.k = boundaries_[j].k;
        out.threshold = boundaries_[j].threshold;
        out.ssr = ssr;
      }
    }
    return out;
  }

  std::int64_t threshold_index_at(std::size_t k) const { return suffix_min_stream_[k]; }

  std::vector<bool> regime2_mask(std::size_t k) const {
    std::vector<bool> mask(T_, false);
    for (std::size_t i = k; i < T_; ++i) mask[order_[i]] = true;
    return mask;
  }

 private:
  std::size_t T_;
  int p1_;
  std::size_t min_rows_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::int64_t> suffix_min_stream_;
  Eigen::MatrixXd X_;   // rows sorted by threshold variable
  Eigen::VectorXd tv_;  // sorted threshold variable

  struct Boundary {
    std::size_t k = 0;
    double threshold = 0.0;
    bool ok = false;
    Eigen::LDLT<Eigen::MatrixXd> l1, l2;
  };
  std::vector<Boundary> boundaries_;
  std::size_t n_solvable_ = 0;
  Eigen::LDLT<Eigen::MatrixXd> pooled_;
  bool pooled_ok_ = false;
};

double pooled_sigma2_direct(const LagDesign& design, Eigen::VectorXd* coef_out) {
  // Reference-path pooled fit: normal equations for the coefficients but SSR
  // from explicit residuals, immune to the cancellation in the shortcut form.
  const Eigen::Index T = design.targets.size();
  Eigen::VectorXd xty = design.rows.transpose() * design.targets;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(design.rows.transpose() * design.rows);
  if (!ldlt_full_rank(ldlt)) throw RankDeficient("pooled design matrix");
  Eigen::VectorXd coef = ldlt.solve(xty);
  const double ssr = (design.targets - design.rows * coef).squaredNorm();
  if (coef_out) *coef_out = std::move(coef);
  return ssr / static_cast<double>(T);
}

TarFit fit_core(const LagDesign& design, const ThresholdScanner& scanner, const TarConfig& cfg) {
  if (!scanner.any_boundary()) {
    throw NoAdmissibleSplit("trimming at min_regime_frac=" + std::to_string(cfg.min_regime_frac) +
                            " excludes every candidate threshold");
  }
  if (!scanner.pooled_ok()) throw RankDeficient("pooled design matrix");
  if (!scanner.any_solvable()) throw RankDeficient("every admissible split");

  const auto sr = scanner.scan(design.targets);
  if (!sr.found) throw RankDeficient("every admissible split");

  TarFit fit;
  fit.n_obs = static_cast<int>(design.n_rows());
  fit.threshold = sr.threshold;
  fit.threshold_index = scanner.threshold_index_at(sr.k);

  // Exact recompute at the winning split (residual-based SSR).
  RegimeOls exact = ols_fit(design, scanner.regime2_mask(sr.k));
  fit.phi = std::move(exact.phi);
  fit.beta = std::move(exact.beta);
  fit.sigma2 = exact.sigma2;
  fit.sigma2_linear = pooled_sigma2_direct(design, nullptr);
  fit.sigma2 = std::min(fit.sigma2, fit.sigma2_linear);  // guard fp noise on nesting

  if (fit.sigma2 > 0.0) {
    fit.f_stat = std::max(0.0, static_cast<double>(fit.n_obs) *
                                   (fit.sigma2_linear - fit.sigma2) / fit.sigma2);
  } else {
    fit.f_stat = fit.sigma2_linear > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  fit.p_value = -1.0;
  return fit;
}

double significance_core(const TarFit& fit, const LagDesign& design,
                         const ThresholdScanner& scanner, const TarConfig& cfg,
                         std::uint64_t seed) {
  if (!scanner.pooled_ok()) throw RankDeficient("pooled design matrix");
  const std::size_t T = design.n_rows();

  Eigen::VectorXd coef;
  pooled_sigma2_direct(design, &coef);
  const Eigen::VectorXd fitted = design.rows * coef;
  const Eigen::VectorXd resid = design.targets - fitted;

  const int B = cfg.bootstrap_reps;
  std::vector<std::uint8_t> geq(static_cast<std::size_t>(B), 0);
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, T - 1);
    Eigen::VectorXd ystar(static_cast<Eigen::Index>(T));
    for (std::size_t i = 0; i < T; ++i) {
      ystar(static_cast<Eigen::Index>(i)) =
          fitted(static_cast<Eigen::Index>(i)) + resid(static_cast<Eigen::Index>(pick(rng)));
    }
    const auto sr = scanner.scan(ystar);
    const double s2_lin = sr.pooled_ssr / static_cast<double>(T);
    double fstar = 0.0;
    if (sr.found) {
      const double s2 = sr.ssr / static_cast<double>(T);
      if (s2 > 0.0) {
        fstar = std::max(0.0, static_cast<double>(T) * (s2_lin - s2) / s2);
      } else {
        fstar = s2_lin > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      }
    }
    geq[b] = fstar >= fit.f_stat ? 1 : 0;
  });

  std::size_t count = 0;
  for (auto g : geq) count += g;
  return static_cast<double>(count) / static_cast<double>(B);
}

}  // namespace

void TarConfig::validate() const {
  if (p < 1) throw BadParam("TarConfig.p must be >= 1, got " + std::to_string(p));
  if (d < 1 || d > p) {
    throw BadParam("TarConfig.d must satisfy 1 <= d <= p, got d=" + std::to_string(d) +
                   " with p=" + std::to_string(p));
  }
  if (!(min_regime_frac > 0.0) || !(min_regime_frac < 0.5)) {
    throw BadParam("TarConfig.min_regime_frac must lie in (0, 0.5)");
  }
  if (!(significance_level > 0.0) || !(significance_level < 1.0)) {
    throw BadParam("TarConfig.significance_level must lie in (0, 1)");
  }
  if (bootstrap_reps < 1) throw BadParam("TarConfig.bootstrap_reps must be >= 1");
}

std::size_t TarConfig::min_series_length() const {
  return static_cast<std::size_t>(p + std::max(d, 1) + 2 * (p + 2));
}

LagDesign build_lag_design(const ErrorSeries& series, const TarConfig& cfg) {
  cfg.validate();
  series.validate();
  const std::size_t n = series.size();
  const std::size_t p = static_cast<std::size_t>(cfg.p);
  if (n <= p) {
    throw SeriesTooShort("need more than p=" + std::to_string(cfg.p) + " samples, got " +
                         std::to_string(n));
  }
  const std::size_t T = n - p;
  LagDesign design;
  design.p = cfg.p;
  design.rows.resize(static_cast<Eigen::Index>(T), cfg.p + 1);
  design.targets.resize(static_cast<Eigen::Index>(T));
  design.threshold_var.resize(static_cast<Eigen::Index>(T));
  design.stream_index.resize(T);
  const auto& v = series.values;
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t t = p + i;  // position of the target within the series
    design.rows(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 1; j <= p; ++j) {
      design.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[t - j];
    }
    design.targets(static_cast<Eigen::Index>(i)) = v[t];
    design.stream_index[i] = series.start_index + static_cast<std::int64_t>(t);
    if (cfg.threshold_mode == ThresholdMode::SelfExciting) {
      design.threshold_var(static_cast<Eigen::Index>(i)) = v[t - static_cast<std::size_t>(cfg.d)];
    } else {
      design.threshold_var(static_cast<Eigen::Index>(i)) =
          static_cast<double>(design.stream_index[i]);
    }
  }
  return design;
}

RegimeOls ols_fit(const LagDesign& design, const std::vector<bool>& in_regime2) {
  const std::size_t T = design.n_rows();
  if (in_regime2.size() != T) {
    throw DimensionMismatch("regime mask length " + std::to_string(in_regime2.size()) +
                            " vs " + std::to_string(T) + " design rows");
  }
  const int p1 = design.p + 1;
  std::vector<std::size_t> idx1, idx2;
  idx1.reserve(T);
  idx2.reserve(T);
  for (std::size_t i = 0; i < T; ++i) (in_regime2[i] ? idx2 : idx1).push_back(i);

  RegimeOls out;
  double ssr = 0.0;
  auto fit_one = [&](const std::vector<std::size_t>& idx, const char* name) -> Eigen::VectorXd {
    if (idx.empty()) return Eigen::VectorXd::Zero(p1);
    if (idx.size() < static_cast<std::size_t>(p1) + 1) {
      throw SeriesTooShort(std::string(name) + " has " + std::to_string(idx.size()) +
                           " rows, needs at least p + 2");
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), p1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = design.rows.row(static_cast<Eigen::Index>(idx[i]));
      y(static_cast<Eigen::Index>(i)) = design.targets(static_cast<Eigen::Index>(idx[i]));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(X.transpose() * X);
    if (!ldlt_full_rank(ldlt)) throw RankDeficient(name);
    Eigen::VectorXd b = ldlt.solve(X.transpose() * y);
    ssr += (y - X * b).squaredNorm();
    return b;
  };
  out.phi = fit_one(idx1, "regime 1");
  out.beta = fit_one(idx2, "regime 2");
  out.sigma2 = ssr / static_cast<double>(T);
  return out;
}

TarFit fit_tar(const ErrorSeries& series, const TarConfig& cfg) {
  cfg.validate();
  series.validate();
  if (series.size() < cfg.min_series_length()) {
    throw SeriesTooShort("fit_tar needs at least " + std::to_string(cfg.min_series_length()) +
                         " samples, got " + std::to_string(series.size()));
  }
  LagDesign design = build_lag_design(series, cfg);
  ThresholdScanner scanner(design, cfg);
  return fit_core(design, scanner, cfg);
}

double significance_test(const TarFit& fit, const LagDesign& design, const TarConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  ThresholdScanner scanner(design, cfg);
  return significance_core(fit, design, scanner, cfg, seed);
}

TarFit fit_tar_tested(const ErrorSeries& series, const TarConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  series.validate();
  if (series.size() < cfg.min_series_length()) {
    throw SeriesTooShort("fit_tar needs at least " + std::to_string(cfg.min_series_length()) +
                         " samples, got " + std::to_string(series.size()));
  }
  LagDesign design = build_lag_design(series, cfg);
  ThresholdScanner scanner(design, cfg);
  TarFit fit = fit_core(design, scanner, cfg);
  fit.p_value = significance_core(fit, design, scanner, cfg, seed);
  return fit;
}

ThresholdCI subsample_ci(const ErrorSeries& series, const TarConfig& cfg, const TarFit& fit,
                         double level, std::uint64_t seed) {
  cfg.validate();
  series.validate();
  if (!(level > 0.0) || !(level < 1.0)) throw BadParam("confidence level must lie in (0, 1)");

  const std::size_t n = series.size();
  const std::size_t p = static_cast<std::size_t>(cfg.p);
  const std::size_t T = n > p ? n - p : 0;
  std::size_t m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(T), 0.7)));
  if (m < p + 2 * (p + 2) || m < cfg.min_series_length()) {
    throw SeriesTooShort("subsample size " + std::to_string(m) +
                         " leaves fewer than p + 2 rows per regime");
  }
  if (m > n) m = n;

  // Restrict block starts so each block contains the full-sample change row
  // with enough slack on both sides for an admissible split there; when the
  // threshold sits too close to an edge for that, fall back to all starts.
  const std::int64_t pos_star = fit.threshold_index - series.start_index;
  const std::size_t block_rows = m - p;
  const std::size_t mb = std::max<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.min_regime_frac * static_cast<double>(block_rows))),
      p + 2);
  std::int64_t lo = pos_star + static_cast<std::int64_t>(mb) - static_cast<std::int64_t>(m);
  std::int64_t hi = pos_star - static_cast<std::int64_t>(mb) - static_cast<std::int64_t>(p);
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(n - m));
  if (lo > hi) {
    lo = 0;
    hi = static_cast<std::int64_t>(n - m);
  }

  std::vector<double> deltas(kNumSubsamples, std::numeric_limits<double>::quiet_NaN());
  parallel_for(kNumSubsamples, [&](std::size_t j) {
    Rng rng(derive_seed(seed, j));
    std::uniform_int_distribution<std::int64_t> pick(lo, hi);
    const auto s = static_cast<std::size_t>(pick(rng));
    try {
      const TarFit sub = fit_tar(series.slice(s, m), cfg);
      deltas[j] = sub.threshold - fit.threshold;
    } catch (const DataError&) {
      // Block too degenerate to refit; leave the slot empty.
    }
  });

  std::vector<double> ok;
  ok.reserve(deltas.size());
  for (double d : deltas) {
    if (std::isfinite(d)) ok.push_back(d);
  }

  ThresholdCI ci;
  ci.nominal_level = level;
  ci.subsample_size = static_cast<int>(m);
  ci.n_subsamples = static_cast<int>(ok.size());
  if (ok.empty()) {
    ci.lower = ci.upper = fit.threshold;
    return ci;
  }
  std::sort(ok.begin(), ok.end());
  ci.lower = fit.threshold + linear_quantile(ok, (1.0 - level) / 2.0);
  ci.upper = fit.threshold + linear_quantile(ok, (1.0 + level) / 2.0);
  ci.lower = std::min(ci.lower, fit.threshold);
  ci.upper = std::max(ci.upper, fit.threshold);
  return ci;
}

std::string TarFit::to_json() const {
  nlohmann::ordered_json j;
  auto vec = [](const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  j["phi"] = vec(phi);
  j["beta"] = vec(beta);
  j["threshold"] = threshold;
  j["threshold_index"] = threshold_index;
  j["sigma2"] = sigma2;
  j["sigma2_linear"] = sigma2_linear;
  // Non-finite statistics (noiseless fits) serialize as null.
  j["f_stat"] = f_stat;
  j["p_value"] = p_value >= 0.0 ? nlohmann::ordered_json(p_value) : nlohmann::ordered_json(nullptr);
  j["n_obs"] = n_obs;
  return j.dump();
}

}  // namespace driftlab
