#pragma once

// Seeded synthetic data for tests: random matrices, known-signal regression
// problems and a small FAOSTAT / CCKP style snapshot.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/matrix.hpp"

namespace synth {

using Rows = std::vector<std::vector<double>>;

struct Problem {
  Rows x;
  std::vector<double> y;
  yieldcast::Matrix matrix() const { return yieldcast::Matrix::from_rows(x); }
};

inline Rows uniform_rows(std::mt19937_64& gen, std::size_t n, std::size_t p, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Rows x(n, std::vector<double>(p));
  for (auto& row : x) {
    for (auto& v : row) v = u(gen);
  }
  return x;
}

inline std::vector<double> uniform_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// y = x . beta + b plus optional Gaussian noise.
inline Problem linear(std::uint64_t seed, std::size_t n, const std::vector<double>& beta, double b, double noise = 0.0) {
  std::mt19937_64 gen(seed);
  Problem out;
  out.x = uniform_rows(gen, n, beta.size(), -2.0, 2.0);
  std::normal_distribution<double> eps(0.0, noise > 0 ? noise : 1.0);
  for (const auto& row : out.x) {
    double v = b;
    for (std::size_t j = 0; j < beta.size(); ++j) v += beta[j] * row[j];
    out.y.push_back(v + (noise > 0 ? eps(gen) : 0.0));
  }
  return out;
}

// Friedman #1: 10 features on [0, 1], five of them informative.
inline Problem friedman1(std::uint64_t seed, std::size_t n, double noise = 1.0) {
  std::mt19937_64 gen(seed);
  Problem out;
  out.x = uniform_rows(gen, n, 10, 0.0, 1.0);
  std::normal_distribution<double> eps(0.0, noise);
  const double pi = std::acos(-1.0);
  for (const auto& r : out.x) {
    out.y.push_back(10 * std::sin(pi * r[0] * r[1]) + 20 * (r[2] - 0.5) * (r[2] - 0.5) + 10 * r[3] + 5 * r[4] + eps(gen));
  }
  return out;
}

inline yieldcast::FeatureMatrix feature_matrix(const Problem& p) {
  yieldcast::FeatureMatrix m;
  m.x = p.matrix();
  m.y = p.y;
  for (std::size_t j = 0; j < p.x.front().size(); ++j) m.feature_names.push_back("x" + std::to_string(j));
  m.indicator.assign(p.x.front().size(), false);
  for (std::size_t i = 0; i < p.y.size(); ++i) m.row_keys.push_back({"AAA", static_cast<int>(1900 + i), "item"});
  return m;
}

// ---------------------------------------------------------------- snapshot

struct Snapshot {
  std::string rain;
  std::string temp;
  std::string pesticides;
  std::string yield;
};

struct SnapshotShape {
  std::size_t countries = 30;
  int climate_first = 1901;
  int climate_last = 2016;
  int pesticide_first = 1990;
  int pesticide_last = 2018;
  int yield_first = 1961;
  int yield_last = 2018;
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Climate files use short country names; FAOSTAT files use the long official
// variants for some countries so the alias map has work to do.
inline Snapshot snapshot(std::uint64_t seed, const SnapshotShape& shape = {}) {
  struct Country {
    const char* cckp;
    const char* fao;
    const char* iso3;
  };
  static const Country kCountries[] = {
      {"Afghanistan", "Afghanistan", "AFG"},   {"Albania", "Albania", "ALB"},
      {"Algeria", "Algeria", "DZA"},           {"Angola", "Angola", "AGO"},
      {"Argentina", "Argentina", "ARG"},       {"Australia", "Australia", "AUS"},
      {"Bangladesh", "Bangladesh", "BGD"},     {"Bolivia", "Bolivia (Plurinational State of)", "BOL"},
      {"Brazil", "Brazil", "BRA"},             {"Cameroon", "Cameroon", "CMR"},
      {"Canada", "Canada", "CAN"},             {"Chile", "Chile", "CHL"},
      {"Colombia", "Colombia", "COL"},         {"Egypt", "Egypt", "EGY"},
      {"Ethiopia", "Ethiopia", "ETH"},         {"France", "France", "FRA"},
      {"Germany", "Germany", "DEU"},           {"Ghana", "Ghana", "GHA"},
      {"India", "India", "IND"},               {"Iran", "Iran (Islamic Republic of)", "IRN"},
      {"Japan", "Japan", "JPN"},               {"Kenya", "Kenya", "KEN"},
      {"Mexico", "Mexico", "MEX"},             {"Norway", "Norway", "NOR"},
      {"Pakistan", "Pakistan", "PAK"},         {"Peru", "Peru", "PER"},
      {"Tanzania", "United Republic of Tanzania", "TZA"},
      {"Turkey", "Turkey", "TUR"},             {"Vietnam", "Viet Nam", "VNM"},
      {"Zimbabwe", "Zimbabwe", "ZWE"},         {"Spain", "Spain", "ESP"},
      {"Sweden", "Sweden", "SWE"},             {"Thailand", "Thailand", "THA"},
      {"Uganda", "Uganda", "UGA"},             {"Zambia", "Zambia", "ZMB"},
      {"Nepal", "Nepal", "NPL"},               {"Mali", "Mali", "MLI"},
      {"Poland", "Poland", "POL"},             {"Italy", "Italy", "ITA"},
      {"Greece", "Greece", "GRC"},
  };
  struct Item {
    const char* name;
    double scale;
    double t_opt;
    double t_width;
    double r_half;
    bool everywhere;
  };
  static const Item kItems[] = {
      {"Maize", 60000, 22, 9, 500, true},      {"Potatoes", 180000, 15, 8, 400, true},
      {"Wheat", 30000, 12, 7, 350, false},     {"Rice, paddy", 45000, 25, 6, 1200, false},
      {"Cassava", 110000, 26, 5, 900, false},  {"Soybeans", 22000, 20, 7, 600, false},
      {"Sorghum", 15000, 27, 8, 300, false},   {"Sweet potatoes", 90000, 24, 8, 700, false},
  };

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Snapshot s;
  s.rain = "Year,Country,ISO3,Annual precipitation (mm)\n";
  s.temp = "Year,Country,ISO3,Annual mean temperature (C)\n";
  s.pesticides = "Area,Item,Year,Unit,Value\n";
  s.yield = "Area,Item,Year,Unit,Value\n";

  const std::size_t nc = std::min(shape.countries, std::size(kCountries));
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& country = kCountries[c];
    const double rain0 = 150 + 2600 * u(gen);
    const double temp0 = 1 + 27 * u(gen);
    const double pest0 = std::pow(10.0, 1.5 + 3.5 * u(gen));
    const double skill = 0.6 + 0.8 * u(gen);
    const double phase = 6.28 * u(gen);

    std::vector<double> rain_by_year(2200, 0), temp_by_year(2200, 0), pest_by_year(2200, 0);
    for (int y = shape.climate_first; y <= shape.climate_last; ++y) {
      rain_by_year[y] = std::max(5.0, rain0 * (1 + 0.08 * std::sin(phase + 0.3 * y) + 0.05 * z(gen)));
      temp_by_year[y] = temp0 + 0.008 * (y - 1901) + 0.3 * z(gen);
      s.rain += std::to_string(y) + "," + country.cckp + "," + country.iso3 + "," + num(rain_by_year[y]) + "\n";
      s.temp += std::to_string(y) + "," + country.cckp + "," + country.iso3 + "," + num(temp_by_year[y]) + "\n";
    }
    for (int y = shape.pesticide_first; y <= shape.pesticide_last; ++y) {
      pest_by_year[y] = pest0 * (1 + 0.025 * (y - 1990)) * std::exp(0.1 * z(gen));
      const std::string area = std::string("\"") + country.fao + "\"";
      s.pesticides += area + ",Pesticides (total)," + std::to_string(y) + ",tonnes," + num(pest_by_year[y]) + "\n";
      s.pesticides += area + ",Herbicides," + std::to_string(y) + ",tonnes," + num(0.4 * pest_by_year[y]) + "\n";
    }
    for (const auto& item : kItems) {
      if (!item.everywhere && std::fabs(temp0 - item.t_opt) > 9) continue;
      const double item_skill = 0.8 + 0.4 * u(gen);
      for (int y = shape.yield_first; y <= shape.yield_last; ++y) {
        const bool have_climate = y >= shape.climate_first && y <= shape.climate_last;
        const double t = have_climate ? temp_by_year[y] : temp0;
        const double r = have_climate ? rain_by_year[y] : rain0;
        const double p = (y >= shape.pesticide_first && y <= shape.pesticide_last) ? pest_by_year[y] : pest0;
        const double dt = (t - item.t_opt) / item.t_width;
        const double v = item.scale * skill * item_skill * std::exp(-dt * dt) * (r / (r + item.r_half)) *
                         (1 + 0.15 * std::log10(1 + p / 100)) * (1 + 0.01 * (y - 1961)) * std::exp(0.06 * z(gen));
        s.yield += std::string("\"") + country.fao + "\"," + "\"" + item.name + "\"," + std::to_string(y) + ",hg/ha," +
                   std::to_string(static_cast<long long>(std::llround(std::max(v, 100.0)))) + "\n";
      }
    }
  }
  s.yield += "Atlantis,Maize,2000,hg/ha,12345\n";
  return s;
}

}  // namespace synth
