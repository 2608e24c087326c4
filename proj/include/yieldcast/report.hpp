#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "yieldcast/eval.hpp"
#include "yieldcast/explore.hpp"
#include "yieldcast/persist.hpp"

namespace yieldcast {

struct ModelReport {
  ModelSpec spec;
  CvResult cv;
  // Over the pooled out-of-fold predictions; empty when undefined.
  std::optional<KappaResult> kappa;
  std::optional<MetricsReport> holdout;
};

struct EnsembleReport {
  std::vector<std::string> members;
  CvResult cv;
  std::optional<KappaResult> kappa;
  std::optional<MetricsReport> holdout;
};

struct EdaSummary {
  std::size_t rows = 0;
  std::size_t countries = 0;
  std::pair<int, int> year_range{0, 0};
  std::vector<std::pair<std::string, std::size_t>> item_frequency;
  std::optional<CorrMatrix> correlations;
};

struct RunSettings {
  std::vector<std::uint64_t> seeds{0};
  std::size_t k = 10;
  FeatureConfig features;
  std::vector<ModelSpec> specs;
  // 0 disables the holdout evaluation.
  double test_fraction = 0.2;
  std::size_t kappa_bins = 5;
};

struct RunReport {
  RunSettings settings;
  std::string panel_digest;
  std::vector<std::string> feature_names;
  MergeReport merge_report;
  EdaSummary eda;
  std::vector<ModelReport> models;
  std::optional<EnsembleReport> ensemble;
};

/// Held-out rows of the train/test split with every model's prediction.
struct HoldoutPredictions {
  std::vector<RowKey> keys;
  std::vector<double> y;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> predictions;
};

namespace detail {

inline std::optional<KappaResult> try_kappa(std::span<const double> y, std::span<const double> yhat, std::size_t bins) {
  try {
    return cohen_kappa(y, yhat, bins);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UndefinedKappa) return std::nullopt;
    throw;
  }
}

inline EdaSummary summarize_panel(const PanelTable& t) {
  EdaSummary s;
  s.rows = t.size();
  std::set<std::string> countries;
  s.year_range = {t.rows.front().year, t.rows.front().year};
  for (const auto& r : t.rows) {
    countries.insert(r.iso3);
    s.year_range.first = std::min(s.year_range.first, r.year);
    s.year_range.second = std::max(s.year_range.second, r.year);
  }
  s.countries = countries.size();
  s.item_frequency = item_frequency(t);
  try {
    s.correlations = pearson_corr_matrix(panel_columns(t));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ConstantFeature && e.kind() != ErrorKind::InsufficientRows) throw;
  }
  return s;
}

}  // namespace detail

/// Cross-validates every spec (and their ensemble when there are at least
/// two) over each seed, then fits on a seeded holdout split.
inline std::pair<RunReport, HoldoutPredictions> run_experiment(const PanelTable& panel, const RunSettings& settings) {
  if (settings.specs.empty()) throw Error(ErrorKind::InvalidConfig, "no models selected");
  if (settings.seeds.empty()) throw Error(ErrorKind::InvalidConfig, "at least one seed is required");
  if (!(settings.test_fraction >= 0.0 && settings.test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "test fraction must lie in [0, 1)");
  }
  const auto data = build_feature_matrix(panel, settings.features);

  RunReport report;
  report.settings = settings;
  report.panel_digest = sha256_hex(to_canonical_json(panel_to_json(panel)));
  report.feature_names = data.feature_names;
  report.merge_report = panel.provenance.merge;
  report.eda = detail::summarize_panel(panel);

  const std::size_t n_models = settings.specs.size();
  const bool with_ensemble = n_models >= 2;
  std::vector<std::vector<CvResult>> per_seed(n_models + 1);
  std::vector<std::vector<double>> pooled_pred(n_models + 1);
  std::vector<double> pooled_y;
  for (auto seed : settings.seeds) {
    const auto plan = make_folds(data.n(), settings.k, seed);
    const auto run = run_cv(settings.specs, data, plan);
    for (std::size_t j = 0; j <= n_models; ++j) {
      if (j == n_models && !with_ensemble) break;
      per_seed[j].push_back(j < n_models ? run.member_result(j) : run.ensemble_result());
      const auto oof = run.out_of_fold(j < n_models ? static_cast<int>(j) : -1);
      pooled_pred[j].insert(pooled_pred[j].end(), oof.begin(), oof.end());
    }
    pooled_y.insert(pooled_y.end(), data.y.begin(), data.y.end());
  }

  HoldoutPredictions holdout;
  std::vector<std::optional<MetricsReport>> holdout_metrics(n_models + 1);
  if (settings.test_fraction > 0.0) {
    const auto [train, test] = train_test_split(data, settings.test_fraction, settings.seeds.front());
    holdout.keys = test.row_keys;
    holdout.y = test.y;
    for (const auto& spec : settings.specs) {
      holdout.labels.push_back(spec.label);
      holdout.predictions.push_back(predict(fit_model(spec, train), test.x));
    }
    if (with_ensemble) {
      std::vector<double> mean(test.n(), 0.0);
      for (const auto& p : holdout.predictions) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
      }
      for (auto& v : mean) v /= static_cast<double>(n_models);
      holdout.labels.push_back("ensemble");
      holdout.predictions.push_back(std::move(mean));
    }
    for (std::size_t j = 0; j < holdout.predictions.size(); ++j) holdout_metrics[j] = metrics_bundle(test.y, holdout.predictions[j]);
  }

  for (std::size_t j = 0; j < n_models; ++j) {
    report.models.push_back({settings.specs[j], pool_results(per_seed[j]),
                             detail::try_kappa(pooled_y, pooled_pred[j], settings.kappa_bins), holdout_metrics[j]});
  }
  if (with_ensemble) {
    EnsembleReport e;
    for (const auto& s : settings.specs) e.members.push_back(s.label);
    e.cv = pool_results(per_seed[n_models]);
    e.kappa = detail::try_kappa(pooled_y, pooled_pred[n_models], settings.kappa_bins);
    e.holdout = holdout_metrics[n_models];
    report.ensemble = std::move(e);
  }
  return {std::move(report), std::move(holdout)};
}

// ---------------------------------------------------------------- rendering

namespace detail {

inline std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline std::string opt_fixed(const std::optional<double>& v, int precision) { return v ? fixed(*v, precision) : "undefined"; }

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace detail

/// Mean cross-validated metrics per model, followed by the ensemble's
/// mean ± sample std block.
inline std::string summary_table(const RunReport& r) {
  using detail::fixed;
  using detail::opt_fixed;
  using detail::pad_left;
  std::string out;
  const std::size_t w = 14;
  out += "model     " + pad_left("R2", 8) + pad_left("MAE", w) + pad_left("MSE", w + 4) + pad_left("RMSE", w) +
         pad_left("MAX", w) + pad_left("MAPE%", 10) + "\n";
  auto row = [&](const std::string& name, const MetricSummary& m) {
    std::string label = name;
    label.resize(std::max<std::size_t>(label.size(), 10), ' ');
    out += label + pad_left(opt_fixed(m.r2, 4), 8) + pad_left(fixed(m.mae, 1), w) + pad_left(fixed(m.mse, 1), w + 4) +
           pad_left(fixed(m.rmse, 1), w) + pad_left(fixed(m.max_err, 1), w) + pad_left(opt_fixed(m.mape_percent, 2), 10) + "\n";
  };
  for (const auto& m : r.models) row(m.spec.label, m.cv.mean);
  if (r.ensemble) {
    row("ensemble", r.ensemble->cv.mean);
    const auto& mean = r.ensemble->cv.mean;
    const auto& sd = r.ensemble->cv.std;
    const auto folds = r.ensemble->cv.per_fold.size();
    out += "\nensemble (" + std::to_string(folds) + " folds, mean ± sample std)\n";
    out += "  R2:   " + (mean.r2 ? fixed(*mean.r2, 3) + " ± " + fixed(*sd.r2, 3) : std::string("undefined")) + "\n";
    out += "  MAE:  " + fixed(mean.mae, 0) + " ± " + fixed(sd.mae, 0) + "\n";
    out += "  MSE:  " + fixed(mean.mse, 0) + " ± " + fixed(sd.mse, 0) + "\n";
    out += "  RMSE: " + fixed(mean.rmse, 0) + " ± " + fixed(sd.rmse, 0) + "\n";
    out += "  MAX:  " + fixed(mean.max_err, 0) + " ± " + fixed(sd.max_err, 0) + "\n";
    out += "  MAPE: " + (mean.mape_percent ? fixed(*mean.mape_percent, 2) + "% ± " + fixed(*sd.mape_percent, 2) + "%"
                                          : std::string("undefined")) + "\n";
  }
  return out;
}

inline json report_to_json(const RunReport& r) {
  json models = json::array();
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& m : r.models) {
    models.push_back(json{{"label", m.spec.label},
                          {"spec", spec_to_json(m.spec)},
                          {"cv", m.cv},
                          {"kappa", opt(m.kappa)},
                          {"holdout", opt(m.holdout)}});
  }
  json ensemble = nullptr;
  if (r.ensemble) {
    ensemble = json{{"members", r.ensemble->members},
                    {"cv", r.ensemble->cv},
                    {"kappa", opt(r.ensemble->kappa)},
                    {"holdout", opt(r.ensemble->holdout)}};
  }
  json specs = json::array();
  for (const auto& s : r.settings.specs) specs.push_back(spec_to_json(s));
  json env{{"seeds", r.settings.seeds},
           {"k", r.settings.k},
           {"feature_config", r.settings.features},
           {"feature_names", r.feature_names},
           {"model_specs", specs},
           {"test_fraction", r.settings.test_fraction},
           {"kappa_bins", r.settings.kappa_bins},
           {"panel_digest", r.panel_digest}};
  json freq = json::array();
  for (const auto& [item, count] : r.eda.item_frequency) freq.push_back(json{{"item", item}, {"count", count}});
  json corr = nullptr;
  if (r.eda.correlations) {
    const auto& c = *r.eda.correlations;
    json rows = json::array();
    for (std::size_t i = 0; i < c.names.size(); ++i) {
      std::vector<double> row(c.values.row(i).begin(), c.values.row(i).end());
      rows.push_back(row);
    }
    corr = json{{"names", c.names}, {"values", rows}};
  }
  json eda{{"rows", r.eda.rows},
           {"countries", r.eda.countries},
           {"year_range", {r.eda.year_range.first, r.eda.year_range.second}},
           {"item_frequency", freq},
           {"correlations", corr}};
  return json{{"format_version", kFormatVersion},
              {"environment", env},
              {"merge_report", r.merge_report},
              {"eda", eda},
              {"models", models},
              {"ensemble", ensemble},
              {"summary_table", summary_table(r)}};
}

inline void write_report(const RunReport& r, const std::string& path) { write_file(path, to_canonical_json(report_to_json(r))); }

inline std::string holdout_csv(const HoldoutPredictions& h) {
  std::string out = "iso3,year,item,yield_hg_ha";
  for (const auto& l : h.labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < h.keys.size(); ++i) {
    out += h.keys[i].iso3 + "," + std::to_string(h.keys[i].year) + "," + csv::escape(h.keys[i].item) + "," + format_double(h.y[i]);
    for (const auto& p : h.predictions) out += "," + format_double(p[i]);
    out += "\n";
  }
  return out;
}

}  // namespace yieldcast
