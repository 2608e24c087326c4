#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/csv.hpp"
#include "yieldcast/error.hpp"

namespace yieldcast {

enum class ClimateKind { Precipitation, Temperature };

struct RowIssue {
  std::size_t line = 0;
  std::string message;
  friend bool operator==(const RowIssue&, const RowIssue&) = default;
};

/// Parsed records plus the rows that were rejected. Row errors never abort a
/// parse; only a missing or malformed header does.
template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<RowIssue> row_errors;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> read_header(csv::Reader& reader, std::string_view source) {
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!reader.next(header, line)) throw Error(ErrorKind::FormatError, std::string(source) + ": missing header row");
  for (auto& h : header) h = csv::lower(csv::trim(h));
  return header;
}

}  // namespace detail

inline ParseResult<ClimateRecord> parse_cckp_csv(std::string_view bytes, ClimateKind kind) {
  csv::Reader reader(bytes);
  const auto header = detail::read_header(reader, "CCKP csv");
  if (header.size() < 4 || header[0] != "year" || header[1] != "country" || header[2] != "iso3") {
    throw Error(ErrorKind::FormatError, "CCKP csv: expected header Year,Country,ISO3,<value>");
  }
  ParseResult<ClimateRecord> out;
  std::vector<std::string> f;
  std::size_t line = 0;
  while (reader.next(f, line)) {
    auto reject = [&](std::string msg) { out.row_errors.push_back({line, std::move(msg)}); };
    if (f.size() < 4) {
      reject("expected 4 fields, found " + std::to_string(f.size()));
      continue;
    }
    const auto year = csv::parse_int(f[0]);
    if (!year || *year < 1901 || *year > 2100) {
      reject("year '" + f[0] + "' outside [1901, 2100]");
      continue;
    }
    const auto iso3 = csv::trim(f[2]);
    if (!is_valid_iso3(iso3)) {
      reject("bad ISO3 code '" + iso3 + "'");
      continue;
    }
    const auto value = csv::parse_double(f[3]);
    if (!value || !std::isfinite(*value)) {
      reject("non-numeric value '" + f[3] + "'");
      continue;
    }
    if (kind == ClimateKind::Precipitation && *value < 0) {
      reject("negative precipitation");
      continue;
    }
    out.records.push_back({*year, csv::trim(f[1]), iso3, *value});
  }
  if (out.records.empty() && out.row_errors.empty()) out.warnings.emplace_back("CCKP csv has no data rows");
  return out;
}

/// Accepts the five-column Area,Item,Year,Unit,Value layout or a full
/// FAOSTAT export; columns are located by header name.
inline ParseResult<FaoRecord> parse_fao_csv(std::string_view bytes) {
  csv::Reader reader(bytes);
  const auto header = detail::read_header(reader, "FAOSTAT csv");
  auto col = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::FormatError, "FAOSTAT csv: header lacks column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_area = col("area");
  const std::size_t c_item = col("item");
  const std::size_t c_year = col("year");
  const std::size_t c_unit = col("unit");
  const std::size_t c_value = col("value");
  const std::size_t needed = std::max({c_area, c_item, c_year, c_unit, c_value}) + 1;

  ParseResult<FaoRecord> out;
  std::vector<std::string> f;
  std::size_t line = 0;
  while (reader.next(f, line)) {
    auto reject = [&](std::string msg) { out.row_errors.push_back({line, std::move(msg)}); };
    if (f.size() < needed) {
      reject("expected " + std::to_string(needed) + " fields, found " + std::to_string(f.size()));
      continue;
    }
    const auto year = csv::parse_int(f[c_year]);
    if (!year) {
      reject("bad year '" + f[c_year] + "'");
      continue;
    }
    const auto unit = csv::trim(f[c_unit]);
    if (unit != kUnitYield && unit != kUnitTonnes) {
      reject("UnknownUnit '" + unit + "'");
      continue;
    }
    const auto value = csv::parse_double(f[c_value]);
    if (!value || !std::isfinite(*value)) {
      reject("non-numeric value '" + f[c_value] + "'");
      continue;
    }
    if (*value < 0) {
      reject("negative value");
      continue;
    }
    out.records.push_back({csv::trim(f[c_area]), csv::trim(f[c_item]), *year, unit, *value});
  }
  if (out.records.empty() && out.row_errors.empty()) out.warnings.emplace_back("FAOSTAT csv has no data rows");
  return out;
}

// Case-folded, trimmed, ASCII punctuation replaced by blanks, blanks collapsed.
inline std::string normalize_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c) || std::ispunct(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

struct CountryMatch {
  std::string canonical;
  std::string iso3;
  friend bool operator==(const CountryMatch&, const CountryMatch&) = default;
};

/// Bridges FAOSTAT area names to ISO3 codes. The first name registered for
/// an ISO3 code becomes its canonical name.
class CountryAliasMap {
 public:
  // Returns false when the normalized name is already mapped.
  bool add(std::string_view source_name, const std::string& iso3) {
    if (!is_valid_iso3(iso3)) throw Error(ErrorKind::InvalidData, "bad ISO3 code '" + iso3 + "' in alias map");
    const auto key = normalize_name(source_name);
    if (key.empty()) throw Error(ErrorKind::InvalidData, "empty country name in alias map");
    auto [canon, _] = canonical_.try_emplace(iso3, csv::trim(source_name));
    return entries_.try_emplace(key, CountryMatch{canon->second, iso3}).second;
  }

  std::optional<CountryMatch> lookup(std::string_view name) const {
    auto it = entries_.find(normalize_name(name));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string>& canonical_names() const { return canonical_; }

  /// Two-column CSV: source_name,iso3 (header required).
  static CountryAliasMap from_csv(std::string_view bytes) {
    csv::Reader reader(bytes);
    const auto header = detail::read_header(reader, "alias csv");
    if (header.size() < 2 || header[0] != "source_name" || header[1] != "iso3") {
      throw Error(ErrorKind::FormatError, "alias csv: expected header source_name,iso3");
    }
    CountryAliasMap map;
    std::vector<std::string> f;
    std::size_t line = 0;
    while (reader.next(f, line)) {
      if (f.size() < 2) throw Error(ErrorKind::FormatError, "alias csv line " + std::to_string(line) + ": expected 2 fields");
      try {
        map.add(f[0], csv::trim(f[1]));
      } catch (const Error& e) {
        throw Error(ErrorKind::FormatError, "alias csv line " + std::to_string(line) + ": " + e.detail());
      }
    }
    return map;
  }

 private:
  std::map<std::string, CountryMatch> entries_;
  std::map<std::string, std::string> canonical_;
};

inline std::optional<CountryMatch> normalize_country(std::string_view name, const CountryAliasMap& aliases) {
  return aliases.lookup(name);
}

/// Inner join of the four sources on (iso3, year) and (iso3, year, item).
///
/// Country names carried by the climate files are added to a copy of the
/// alias map (without overriding it), so FAOSTAT areas spelled the same way
/// resolve even when the alias file lacks them. Duplicate keys keep the last
/// occurrence. Throws EmptyJoin when nothing survives.
inline std::pair<PanelTable, MergeReport> merge_panel(const std::vector<ClimateRecord>& rain,
                                                      const std::vector<ClimateRecord>& temp,
                                                      const std::vector<FaoRecord>& pesticides,
                                                      const std::vector<FaoRecord>& yields,
                                                      const CountryAliasMap& aliases) {
  using CountryYear = std::pair<std::string, int>;
  MergeReport report;
  report.rows_in = {rain.size(), temp.size(), pesticides.size(), yields.size()};

  CountryAliasMap bridge = aliases;
  for (const auto* src : {&rain, &temp}) {
    for (const auto& r : *src) {
      if (!r.country.empty()) bridge.add(r.country, r.iso3);
    }
  }

  auto index_climate = [](const std::vector<ClimateRecord>& recs, std::size_t& dups) {
    std::map<CountryYear, double> m;
    for (const auto& r : recs) {
      auto [it, fresh] = m.insert_or_assign({r.iso3, r.year}, r.value);
      if (!fresh) ++dups;
    }
    return m;
  };
  const auto rain_by = index_climate(rain, report.duplicates.rain);
  const auto temp_by = index_climate(temp, report.duplicates.temp);

  std::set<std::string> unmatched;
  std::map<CountryYear, double> pest_by;
  for (const auto& r : pesticides) {
    if (r.item != kPesticidesTotal || r.unit != kUnitTonnes) {
      ++report.ignored_pesticide_items;
      continue;
    }
    const auto match = bridge.lookup(r.area);
    if (!match) {
      unmatched.insert(r.area);
      ++report.unmatched_pesticide_rows;
      continue;
    }
    auto [it, fresh] = pest_by.insert_or_assign({match->iso3, r.year}, r.value);
    if (!fresh) ++report.duplicates.pesticides;
  }

  struct YieldCell {
    std::string country;
    double value;
  };
  std::map<RowKey, YieldCell> yield_by;
  for (const auto& r : yields) {
    if (r.unit != kUnitYield) {
      ++report.dropped_wrong_unit;
      continue;
    }
    const auto match = bridge.lookup(r.area);
    if (!match) {
      unmatched.insert(r.area);
      ++report.dropped_unmatched_area;
      continue;
    }
    auto [it, fresh] = yield_by.insert_or_assign(RowKey{match->iso3, r.year, r.item}, YieldCell{match->canonical, r.value});
    if (!fresh) ++report.dropped_duplicate;
  }

  PanelTable table;
  std::set<std::string> countries;
  std::set<std::string> items;
  for (const auto& [key, cell] : yield_by) {
    const CountryYear cy{key.iso3, key.year};
    auto p = pest_by.find(cy);
    if (p == pest_by.end()) {
      ++report.dropped_for_missing.pesticides;
      continue;
    }
    auto rn = rain_by.find(cy);
    if (rn == rain_by.end()) {
      ++report.dropped_for_missing.rain;
      continue;
    }
    auto tp = temp_by.find(cy);
    if (tp == temp_by.end()) {
      ++report.dropped_for_missing.temp;
      continue;
    }
    table.rows.push_back({key.iso3, cell.country, key.year, key.item, rn->second, tp->second, p->second, cell.value});
    countries.insert(key.iso3);
    items.insert(key.item);
  }

  report.unmatched_areas.assign(unmatched.begin(), unmatched.end());
  report.rows_out = table.rows.size();
  report.country_count = countries.size();
  report.item_count = items.size();

  if (table.rows.empty()) {
    auto span_of = [](const auto& m) -> std::string {
      if (m.empty()) return "none";
      int lo = m.begin()->first.second;
      int hi = lo;
      for (const auto& [k, _] : m) {
        lo = std::min(lo, k.second);
        hi = std::max(hi, k.second);
      }
      return std::to_string(lo) + "-" + std::to_string(hi);
    };
    std::map<CountryYear, double> yield_years;
    for (const auto& [k, c] : yield_by) yield_years[{k.iso3, k.year}] = c.value;
    throw Error(ErrorKind::EmptyJoin,
                "no (iso3, year, item) key is present in all four sources; year coverage: rain " + span_of(rain_by) +
                    ", temperature " + span_of(temp_by) + ", pesticides " + span_of(pest_by) + ", yield " +
                    span_of(yield_years) + "; unmatched FAOSTAT areas: " + std::to_string(unmatched.size()));
  }

  int lo = table.rows.front().year;
  int hi = lo;
  for (const auto& r : table.rows) {
    lo = std::min(lo, r.year);
    hi = std::max(hi, r.year);
  }
  report.year_range = {lo, hi};
  table.provenance.merge = report;
  return {std::move(table), std::move(report)};
}

}  // namespace yieldcast
