#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "yieldcast/error.hpp"

namespace yieldcast {

namespace detail {
inline void check_pair(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw Error(ErrorKind::ShapeError, "y and yhat lengths differ");
  if (y.empty()) throw Error(ErrorKind::EmptyInput, "metrics need at least one row");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(yhat[i])) throw Error(ErrorKind::InvalidData, "non-finite value in y or yhat");
  }
}
}  // namespace detail

inline constexpr double kMapeMinAbsTarget = 1e-9;

inline double mse(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) { return std::sqrt(mse(y, yhat)); }

inline double mae(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

inline double max_error(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  double m = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) m = std::max(m, std::abs(y[i] - yhat[i]));
  return m;
}

// 1 - SSres / SStot; UndefinedR2 when y has no variance.
inline double r2(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (!(ss_tot > 0.0)) throw Error(ErrorKind::UndefinedR2, "target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

struct MapeValue {
  double percent;
  std::size_t excluded_rows;
};

// Rows with |y| < 1e-9 are skipped and counted.
inline MapeValue mape_detail(std::span<const double> y, std::span<const double> yhat) {
  detail::check_pair(y, yhat);
  double s = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) < kMapeMinAbsTarget) continue;
    s += std::abs((y[i] - yhat[i]) / y[i]);
    ++used;
  }
  if (used == 0) throw Error(ErrorKind::UndefinedMape, "every target is zero");
  return {100.0 * s / static_cast<double>(used), y.size() - used};
}

inline double mape(std::span<const double> y, std::span<const double> yhat) { return mape_detail(y, yhat).percent; }

/// The six-metric bundle reported per model. r2 and MAPE are empty when
/// undefined for the rows at hand.
struct MetricsReport {
  std::size_t n = 0;
  std::optional<double> r2;
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double max_err = 0.0;
  std::optional<double> mape_percent;
  std::size_t mape_excluded_rows = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport metrics_bundle(std::span<const double> y, std::span<const double> yhat) {
  MetricsReport m;
  m.n = y.size();
  m.mse = yieldcast::mse(y, yhat);
  m.rmse = std::sqrt(m.mse);
  m.mae = yieldcast::mae(y, yhat);
  m.max_err = max_error(y, yhat);
  try {
    m.r2 = yieldcast::r2(y, yhat);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedR2) throw;
  }
  try {
    const auto mp = mape_detail(y, yhat);
    m.mape_percent = mp.percent;
    m.mape_excluded_rows = mp.excluded_rows;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedMape) throw;
    m.mape_excluded_rows = y.size();
  }
  return m;
}

// ---------------------------------------------------------------- kappa

struct KappaResult {
  double kappa = 0.0;
  std::string band;
  // Quantiles of y at i / n_bins for i = 0..n_bins.
  std::vector<double> bin_edges;
  friend bool operator==(const KappaResult&, const KappaResult&) = default;
};

// Agreement scale with half-open intervals; anything below 0.1 (including
// negative values) reads as chance-level agreement.
inline std::string kappa_band(double kappa) {
  if (kappa >= 1.0) return "perfect agreement";
  if (kappa >= 0.81) return "near-perfect agreement";
  if (kappa >= 0.61) return "substantial agreement";
  if (kappa >= 0.41) return "moderate agreement";
  if (kappa >= 0.21) return "fair agreement";
  if (kappa >= 0.10) return "slight agreement";
  return "agreement equivalent to chance";
}

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

/// Cohen's kappa after binning y and yhat by the quantiles of y.
inline KappaResult cohen_kappa(std::span<const double> y, std::span<const double> yhat, std::size_t n_bins = 5) {
  detail::check_pair(y, yhat);
  if (n_bins < 2) throw Error(ErrorKind::InvalidConfig, "kappa needs at least 2 bins");
  if (y.size() < n_bins) throw Error(ErrorKind::InsufficientRows, "kappa needs at least n_bins rows");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  KappaResult out;
  for (std::size_t i = 0; i <= n_bins; ++i) {
    out.bin_edges.push_back(quantile_sorted(sorted, static_cast<double>(i) / static_cast<double>(n_bins)));
  }
  const std::span<const double> interior(out.bin_edges.data() + 1, n_bins - 1);
  auto bin_of = [&](double v) {
    return static_cast<std::size_t>(std::upper_bound(interior.begin(), interior.end(), v) - interior.begin());
  };
  std::vector<double> table(n_bins * n_bins, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) table[bin_of(y[i]) * n_bins + bin_of(yhat[i])] += 1.0;

  const auto n = static_cast<double>(y.size());
  double observed = 0.0;
  double chance = 0.0;
  for (std::size_t a = 0; a < n_bins; ++a) {
    observed += table[a * n_bins + a];
    double row = 0.0;
    double col = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      row += table[a * n_bins + b];
      col += table[b * n_bins + a];
    }
    chance += (row / n) * (col / n);
  }
  observed /= n;
  if (chance >= 1.0) throw Error(ErrorKind::UndefinedKappa, "all rows fall in one bin");
  out.kappa = (observed - chance) / (1.0 - chance);
  out.band = kappa_band(out.kappa);
  return out;
}

}  // namespace yieldcast
