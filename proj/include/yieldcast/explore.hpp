#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/csv.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/format.hpp"
#include "yieldcast/linear.hpp"

namespace yieldcast {

struct AnnualSeries {
  std::vector<std::pair<int, double>> points;
  std::string variable;
  std::string unit;
  friend bool operator==(const AnnualSeries&, const AnnualSeries&) = default;
};

/// Per-year arithmetic mean over every record of that year.
inline AnnualSeries annual_mean(const std::vector<std::pair<int, double>>& records, std::string variable = "value",
                                std::string unit = "") {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& [year, v] : records) {
    auto& a = acc[year];
    a.first += v;
    ++a.second;
  }
  AnnualSeries s{{}, std::move(variable), std::move(unit)};
  for (const auto& [year, a] : acc) s.points.emplace_back(year, a.first / static_cast<double>(a.second));
  return s;
}

enum class PanelVariable { Rain, Temperature, Pesticides, Yield };

/// (year, value) pairs from a panel. Country-level variables are taken once
/// per (iso3, year) since the merge repeats them across crop items.
inline std::vector<std::pair<int, double>> panel_series(const PanelTable& t, PanelVariable var) {
  std::vector<std::pair<int, double>> out;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : t.rows) {
    switch (var) {
      case PanelVariable::Yield: out.emplace_back(r.year, r.yield_hg_ha); continue;
      case PanelVariable::Rain:
      case PanelVariable::Temperature:
      case PanelVariable::Pesticides: break;
    }
    if (!seen.insert({r.iso3, r.year}).second) continue;
    const double v = var == PanelVariable::Rain ? r.rain_mm : var == PanelVariable::Temperature ? r.temp_c : r.pesticides_tonnes;
    out.emplace_back(r.year, v);
  }
  return out;
}

inline std::vector<std::pair<int, double>> climate_series(const std::vector<ClimateRecord>& records) {
  std::vector<std::pair<int, double>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.emplace_back(r.year, r.value);
  return out;
}

/// Row count per crop item, most frequent first, ties alphabetical.
inline std::vector<std::pair<std::string, std::size_t>> item_frequency(const PanelTable& t) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : t.rows) ++counts[r.item];
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

struct CorrMatrix {
  std::vector<std::string> names;
  Matrix values;
  friend bool operator==(const CorrMatrix&, const CorrMatrix&) = default;
};

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

inline CorrMatrix pearson_corr_matrix(const std::vector<NamedColumn>& columns) {
  if (columns.empty()) throw Error(ErrorKind::EmptyInput, "no columns to correlate");
  const std::size_t n = columns.front().values.size();
  if (n < 2) throw Error(ErrorKind::InsufficientRows, "correlation needs at least 2 rows");
  const std::size_t k = columns.size();
  std::vector<std::vector<double>> centered(k);
  std::vector<double> norms(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& v = columns[c].values;
    if (v.size() != n) throw Error(ErrorKind::ShapeError, "column '" + columns[c].name + "' has a different length");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    centered[c].resize(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      centered[c][i] = v[i] - mean;
      ss += centered[c][i] * centered[c][i];
    }
    if (!(ss > 0.0)) throw Error(ErrorKind::ConstantFeature, columns[c].name + " has zero variance");
    norms[c] = std::sqrt(ss);
  }
  CorrMatrix out;
  out.values = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    out.names.push_back(columns[a].name);
    out.values(a, a) = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += centered[a][i] * centered[b][i];
      const double r = std::clamp(s / (norms[a] * norms[b]), -1.0, 1.0);
      out.values(a, b) = r;
      out.values(b, a) = r;
    }
  }
  return out;
}

// Year, yield, rain, temperature and pesticides over the panel rows.
inline std::vector<NamedColumn> panel_columns(const PanelTable& t) {
  std::vector<NamedColumn> cols{{"year", {}}, {"yield_hg_ha", {}}, {"rain_mm", {}}, {"temp_c", {}}, {"pesticides_tonnes", {}}};
  for (const auto& r : t.rows) {
    cols[0].values.push_back(r.year);
    cols[1].values.push_back(r.yield_hg_ha);
    cols[2].values.push_back(r.rain_mm);
    cols[3].values.push_back(r.temp_c);
    cols[4].values.push_back(r.pesticides_tonnes);
  }
  return cols;
}

inline constexpr double kVifWarnThreshold = 10.0;
inline constexpr double kVifPerfectR2 = 1.0 - 1e-12;

struct VifEntry {
  std::string name;
  std::optional<double> vif;  // empty means infinite (perfect collinearity)
  double r2 = 0.0;
  bool high() const { return !vif || *vif > kVifWarnThreshold; }
};

/// Variance inflation factor of each column: 1 / (1 - R^2) of the column
/// regressed (OLS with intercept) on all other columns.
inline std::vector<VifEntry> vif(const Matrix& x, const std::vector<std::string>& names) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (names.size() != p) throw Error(ErrorKind::ShapeError, "VIF: one name per column required");
  if (p < 2) throw Error(ErrorKind::InvalidConfig, "VIF needs at least 2 columns");
  if (n <= p) {
    throw Error(ErrorKind::InsufficientRows,
                "VIF needs more rows than columns (" + std::to_string(n) + " rows, " + std::to_string(p) + " columns)");
  }
  std::vector<VifEntry> out;
  for (std::size_t j = 0; j < p; ++j) {
    Matrix others(n, p - 1);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = x(i, j);
      std::size_t c = 0;
      for (std::size_t q = 0; q < p; ++q) {
        if (q != j) others(i, c++) = x(i, q);
      }
    }
    const auto model = fit_ols(others, target);
    const auto fitted = predict_linear(model, others);
    double mean = 0.0;
    for (double v : target) mean += v;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ss_tot += (target[i] - mean) * (target[i] - mean);
      ss_res += (target[i] - fitted[i]) * (target[i] - fitted[i]);
    }
    VifEntry e{names[j], std::nullopt, 1.0};
    if (ss_tot > 0.0) {
      e.r2 = 1.0 - ss_res / ss_tot;
      if (e.r2 < kVifPerfectR2) e.vif = 1.0 / (1.0 - e.r2);
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------- plot data

inline std::string to_csv(const AnnualSeries& s) {
  std::string out = "year," + csv::escape(s.variable.empty() ? "mean" : s.variable) + "\n";
  for (const auto& [year, v] : s.points) out += std::to_string(year) + "," + format_double(v) + "\n";
  return out;
}

// Long form: one line per (row, column) pair.
inline std::string to_csv(const CorrMatrix& m) {
  std::string out = "row,column,pearson_r\n";
  for (std::size_t a = 0; a < m.names.size(); ++a) {
    for (std::size_t b = 0; b < m.names.size(); ++b) {
      out += csv::escape(m.names[a]) + "," + csv::escape(m.names[b]) + "," + format_double(m.values(a, b)) + "\n";
    }
  }
  return out;
}

inline std::string to_csv(const std::vector<std::pair<std::string, std::size_t>>& freq) {
  std::string out = "item,count\n";
  for (const auto& [item, count] : freq) out += csv::escape(item) + "," + std::to_string(count) + "\n";
  return out;
}

inline std::string to_csv(const std::vector<VifEntry>& entries) {
  std::string out = "feature,vif,r2,high\n";
  for (const auto& e : entries) {
    out += csv::escape(e.name) + "," + (e.vif ? format_double(*e.vif) : "inf") + "," + format_double(e.r2) + "," +
           (e.high() ? "1" : "0") + "\n";
  }
  return out;
}

template <typename T>
void emit_plot_data(const T& data, const std::string& path) {
  write_file(path, to_csv(data));
}

}  // namespace yieldcast
