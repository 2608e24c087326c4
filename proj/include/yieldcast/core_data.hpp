#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "yieldcast/error.hpp"
#include "yieldcast/matrix.hpp"
#include "yieldcast/rng.hpp"

namespace yieldcast {

inline bool is_valid_iso3(const std::string& code) {
  return code.size() == 3 && std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

/// One CCKP row: a country-year precipitation (mm) or temperature (degC) value.
struct ClimateRecord {
  int year = 0;
  std::string country;
  std::string iso3;
  double value = 0.0;

  friend bool operator==(const ClimateRecord&, const ClimateRecord&) = default;
};

/// One FAOSTAT row. Yields are in hg/ha, pesticides in tonnes.
struct FaoRecord {
  std::string area;
  std::string item;
  int year = 0;
  std::string unit;
  double value = 0.0;

  friend bool operator==(const FaoRecord&, const FaoRecord&) = default;
};

inline constexpr const char* kUnitYield = "hg/ha";
inline constexpr const char* kUnitTonnes = "tonnes";
inline constexpr const char* kPesticidesTotal = "Pesticides (total)";

struct RowKey {
  std::string iso3;
  int year = 0;
  std::string item;

  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct PanelRow {
  std::string iso3;
  std::string country;
  int year = 0;
  std::string item;
  double rain_mm = 0.0;
  double temp_c = 0.0;
  double pesticides_tonnes = 0.0;
  double yield_hg_ha = 0.0;

  RowKey key() const { return {iso3, year, item}; }
  friend bool operator==(const PanelRow&, const PanelRow&) = default;
};

struct SourceCounts {
  std::size_t rain = 0;
  std::size_t temp = 0;
  std::size_t pesticides = 0;
  std::size_t yield = 0;

  friend bool operator==(const SourceCounts&, const SourceCounts&) = default;
};

struct MissingCounts {
  std::size_t rain = 0;
  std::size_t temp = 0;
  std::size_t pesticides = 0;

  std::size_t total() const { return rain + temp + pesticides; }
  friend bool operator==(const MissingCounts&, const MissingCounts&) = default;
};

/// Audit trail of the four-way join. Every yield row that went in is either
/// in the output or counted in exactly one of the dropped_* buckets.
struct MergeReport {
  SourceCounts rows_in;
  std::size_t rows_out = 0;
  std::vector<std::string> unmatched_areas;
  MissingCounts dropped_for_missing;
  std::size_t dropped_unmatched_area = 0;
  std::size_t dropped_duplicate = 0;
  std::size_t dropped_wrong_unit = 0;
  // Superseded rows in the keyed sources (last occurrence wins).
  MissingCounts duplicates;
  std::size_t ignored_pesticide_items = 0;
  std::size_t unmatched_pesticide_rows = 0;
  std::pair<int, int> year_range{0, 0};
  std::size_t country_count = 0;
  std::size_t item_count = 0;

  std::size_t yield_rows_accounted() const {
    return rows_out + dropped_for_missing.total() + dropped_unmatched_area + dropped_duplicate + dropped_wrong_unit;
  }
  friend bool operator==(const MergeReport&, const MergeReport&) = default;
};

struct Provenance {
  std::map<std::string, std::string> source_digests;
  MergeReport merge;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Merged country-year-crop table; unique (iso3, year, item), sorted by it.
struct PanelTable {
  std::vector<PanelRow> rows;
  Provenance provenance;

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }

  void sort_rows() {
    std::sort(rows.begin(), rows.end(), [](const PanelRow& a, const PanelRow& b) { return a.key() < b.key(); });
  }

  // Throws InvalidData when an invariant does not hold.
  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (!std::isfinite(r.rain_mm) || !std::isfinite(r.temp_c) || !std::isfinite(r.pesticides_tonnes) ||
          !std::isfinite(r.yield_hg_ha)) {
        throw Error(ErrorKind::InvalidData, "non-finite parameter in panel row " + std::to_string(i));
      }
      if (r.pesticides_tonnes < 0 || r.yield_hg_ha < 0) {
        throw Error(ErrorKind::InvalidData, "negative pesticides or yield in panel row " + std::to_string(i));
      }
      if (i > 0 && !(rows[i - 1].key() < r.key())) {
        throw Error(ErrorKind::InvalidData, "panel rows not strictly sorted by (iso3, year, item) at row " + std::to_string(i));
      }
    }
  }

  friend bool operator==(const PanelTable&, const PanelTable&) = default;
};

struct FeatureConfig {
  bool use_rain = true;
  bool use_temp = true;
  bool use_pesticides = true;
  bool encode_item = true;
  bool encode_country = false;

  bool any() const { return use_rain || use_temp || use_pesticides || encode_item || encode_country; }
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Design matrix plus yield target. `indicator[j]` marks one-hot columns,
/// which scalers pass through untouched.
struct FeatureMatrix {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<RowKey> row_keys;
  std::vector<bool> indicator;

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }

  FeatureMatrix subset(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.x = x.select_rows(rows);
    out.y = select(y, rows);
    out.feature_names = feature_names;
    out.indicator = indicator;
    out.row_keys.reserve(rows.size());
    for (auto i : rows) out.row_keys.push_back(row_keys[i]);
    return out;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

inline FeatureMatrix build_feature_matrix(const PanelTable& table, const FeatureConfig& cfg) {
  if (table.empty()) throw Error(ErrorKind::EmptyInput, "panel table has no rows");
  if (!cfg.any()) throw Error(ErrorKind::InvalidConfig, "every feature source is disabled");

  std::set<std::string> items;
  std::set<std::string> countries;
  for (const auto& r : table.rows) {
    items.insert(r.item);
    countries.insert(r.iso3);
  }

  FeatureMatrix m;
  if (cfg.use_rain) m.feature_names.emplace_back("rain_mm");
  if (cfg.use_temp) m.feature_names.emplace_back("temp_c");
  if (cfg.use_pesticides) m.feature_names.emplace_back("pesticides_tonnes");
  const std::size_t numeric = m.feature_names.size();
  std::map<std::string, std::size_t> item_col;
  std::map<std::string, std::size_t> country_col;
  if (cfg.encode_item) {
    for (const auto& it : items) {
      item_col[it] = m.feature_names.size();
      m.feature_names.push_back("item=" + it);
    }
  }
  if (cfg.encode_country) {
    for (const auto& c : countries) {
      country_col[c] = m.feature_names.size();
      m.feature_names.push_back("iso3=" + c);
    }
  }
  m.indicator.assign(m.feature_names.size(), true);
  std::fill(m.indicator.begin(), m.indicator.begin() + static_cast<std::ptrdiff_t>(numeric), false);

  m.x = Matrix(table.size(), m.feature_names.size());
  m.y.reserve(table.size());
  m.row_keys.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = table.rows[i];
    std::size_t j = 0;
    if (cfg.use_rain) m.x(i, j++) = r.rain_mm;
    if (cfg.use_temp) m.x(i, j++) = r.temp_c;
    if (cfg.use_pesticides) m.x(i, j++) = r.pesticides_tonnes;
    if (cfg.encode_item) m.x(i, item_col.at(r.item)) = 1.0;
    if (cfg.encode_country) m.x(i, country_col.at(r.iso3)) = 1.0;
    m.y.push_back(r.yield_hg_ha);
    m.row_keys.push_back(r.key());
  }
  if (!m.x.all_finite() || !all_finite(m.y)) throw Error(ErrorKind::InvalidData, "non-finite value in feature matrix");
  return m;
}

/// Per-column z-score parameters. Passthrough columns keep mean 0 / std 1.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> passthrough;

  std::size_t p() const { return means.size(); }
  friend bool operator==(const Scaler&, const Scaler&) = default;
};

inline Scaler fit_scaler(const Matrix& x, const std::vector<bool>& passthrough = {},
                         const std::vector<std::string>& names = {}) {
  if (x.rows() < 2) throw Error(ErrorKind::EmptyInput, "scaler needs at least 2 rows");
  if (!passthrough.empty() && passthrough.size() != x.cols()) throw Error(ErrorKind::ShapeError, "passthrough mask length");
  Scaler s;
  s.passthrough = passthrough.empty() ? std::vector<bool>(x.cols(), false) : passthrough;
  s.means.assign(x.cols(), 0.0);
  s.stds.assign(x.cols(), 1.0);
  const auto n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (s.passthrough[j]) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double d = x(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) {
      const std::string label = j < names.size() ? names[j] : "column " + std::to_string(j);
      throw Error(ErrorKind::ConstantFeature, label + " has zero variance");
    }
    s.means[j] = mean;
    s.stds[j] = sd;
  }
  return s;
}

inline void apply_scaler_row(const Scaler& s, std::span<const double> in, std::span<double> out) {
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = s.passthrough[j] ? in[j] : (in[j] - s.means[j]) / s.stds[j];
  }
}

inline Matrix apply_scaler(const Scaler& s, const Matrix& x) {
  if (x.cols() != s.p()) {
    throw Error(ErrorKind::ShapeError,
                "scaler expects " + std::to_string(s.p()) + " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) apply_scaler_row(s, x.row(i), out.row(i));
  return out;
}

inline Matrix invert_scaler(const Scaler& s, const Matrix& z) {
  if (z.cols() != s.p()) throw Error(ErrorKind::ShapeError, "scaler column mismatch");
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      out(i, j) = s.passthrough[j] ? z(i, j) : z(i, j) * s.stds[j] + s.means[j];
    }
  }
  return out;
}

inline std::size_t test_partition_size(std::size_t n, double test_fraction) {
  const auto t = static_cast<long long>(std::llround(static_cast<double>(n) * test_fraction));
  return static_cast<std::size_t>(std::clamp<long long>(t, 1, static_cast<long long>(n) - 1));
}

/// Seeded shuffled holdout split; each part keeps the original row order.
inline std::pair<FeatureMatrix, FeatureMatrix> train_test_split(const FeatureMatrix& m, double test_fraction,
                                                                std::uint64_t seed) {
  if (m.n() < 2) throw Error(ErrorKind::EmptyInput, "train/test split needs at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "test fraction must lie in (0, 1)");
  }
  const std::size_t n_test = test_partition_size(m.n(), test_fraction);
  Rng rng(seed);
  auto perm = rng.permutation(m.n());
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {m.subset(train), m.subset(test)};
}

}  // namespace yieldcast
