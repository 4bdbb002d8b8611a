#pragma once

// Shared helpers for the unit and acceptance suites: seeded series
// generators and an independent brute-force TAR oracle (QR-based, no shared
// solve path with the library's LDLT scanner).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "driftlab/random.hpp"
#include "driftlab/series.hpp"
#include "driftlab/setar.hpp"

namespace testsupport {

inline std::vector<double> step_values(std::size_t n, std::size_t change, double mean_before,
                                       double mean_after, double sigma, std::uint64_t seed) {
  driftlab::Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (i < change ? mean_before : mean_after) + noise(rng);
  }
  return v;
}

inline std::vector<double> iid_normal(std::size_t n, double mean, double sigma,
                                      std::uint64_t seed) {
  driftlab::Rng rng(seed);
  std::normal_distribution<double> noise(mean, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = noise(rng);
  return v;
}

struct BruteFit {
  bool found = false;
  double threshold = 0.0;
  double sigma2 = 0.0;
  double sigma2_linear = 0.0;
  std::int64_t threshold_index = 0;
};

// Exhaustive scan over every distinct threshold value, refitting each regime
// from scratch with column-pivoted QR.  Mirrors the library's admissibility
// rule: regime 2 is threshold_var > r, both regimes need
// max(ceil(min_regime_frac * T), p + 2) rows, ties prefer the smaller r.
inline BruteFit brute_force_tar(const driftlab::ErrorSeries& series,
                                const driftlab::TarConfig& cfg) {
  const auto design = driftlab::build_lag_design(series, cfg);
  const auto T = static_cast<std::size_t>(design.n_rows());
  const auto cols = static_cast<std::size_t>(cfg.p + 1);
  const std::size_t min_rows = std::max(
      static_cast<std::size_t>(std::ceil(cfg.min_regime_frac * static_cast<double>(T))),
      cols + 1);

  auto regime_ssr = [&](const std::vector<std::size_t>& idx, bool& ok) {
    Eigen::MatrixXd X(idx.size(), cols);
    Eigen::VectorXd y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      X.row(i) = design.rows.row(static_cast<Eigen::Index>(idx[i]));
      y(static_cast<Eigen::Index>(i)) = design.targets(static_cast<Eigen::Index>(idx[i]));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (static_cast<std::size_t>(qr.rank()) < cols) {
      ok = false;
      return 0.0;
    }
    ok = true;
    const Eigen::VectorXd coef = qr.solve(y);
    return (y - X * coef).squaredNorm();
  };

  std::vector<double> levels(design.threshold_var.data(), design.threshold_var.data() + T);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  BruteFit best;
  {
    std::vector<std::size_t> all(T);
    for (std::size_t i = 0; i < T; ++i) all[i] = i;
    bool ok = false;
    const double ssr = regime_ssr(all, ok);
    best.sigma2_linear = ok ? ssr / static_cast<double>(T) : 0.0;
  }

  for (const double r : levels) {
    std::vector<std::size_t> lo, hi;
    for (std::size_t i = 0; i < T; ++i) {
      (design.threshold_var(static_cast<Eigen::Index>(i)) <= r ? lo : hi).push_back(i);
    }
    if (lo.size() < min_rows || hi.size() < min_rows) continue;
    bool ok1 = false, ok2 = false;
    const double ssr = regime_ssr(lo, ok1) + regime_ssr(hi, ok2);
    if (!ok1 || !ok2) continue;
    const double s2 = ssr / static_cast<double>(T);
    if (!best.found || s2 < best.sigma2) {  // strict < keeps the smallest tied r
      best.found = true;
      best.threshold = r;
      best.sigma2 = s2;
      std::int64_t first = -1;
      for (std::size_t i : hi) {
        if (first < 0 || design.stream_index[i] < first) first = design.stream_index[i];
      }
      best.threshold_index = first;
    }
  }
  return best;
}

}  // namespace testsupport
