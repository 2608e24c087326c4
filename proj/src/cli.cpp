// Subcommands: ingest -> explore -> cv / train -> predict.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "yieldcast.hpp"
#include "yieldcast/cli.hpp"

namespace fs = std::filesystem;
using namespace yieldcast;

namespace {

#ifndef YIELDCAST_DEFAULT_ALIASES
#define YIELDCAST_DEFAULT_ALIASES "data/country_aliases.csv"
#endif

struct FeatureFlags {
  bool encode_item = true;
  bool encode_country = false;
  bool no_rain = false;
  bool no_temp = false;
  bool no_pesticides = false;

  FeatureConfig config() const { return {!no_rain, !no_temp, !no_pesticides, encode_item, encode_country}; }
};

void add_feature_options(CLI::App* cmd, FeatureFlags& f) {
  cmd->add_flag("--encode-item,!--no-encode-item", f.encode_item, "One-hot encode the crop item")->capture_default_str();
  cmd->add_flag("--encode-country,!--no-encode-country", f.encode_country, "One-hot encode the country")
      ->capture_default_str();
  cmd->add_flag("--no-rain", f.no_rain, "Drop the rainfall feature");
  cmd->add_flag("--no-temp", f.no_temp, "Drop the temperature feature");
  cmd->add_flag("--no-pesticides", f.no_pesticides, "Drop the pesticide feature");
}

struct ModelOptions {
  SgdConfig sgd;
  TreeConfig cart;
  ForestConfig forest;
  GbmConfig gbm;
  KnnConfig knn;
  std::string knn_scaling = "standardize";

  ModelSpec spec(ModelKind kind, std::uint64_t seed) const {
    switch (kind) {
      case ModelKind::Ols: return {"ols", OlsConfig{}};
      case ModelKind::Sgd: {
        auto c = sgd;
        c.seed = seed;
        return {"sgd", c};
      }
      case ModelKind::Cart: return {"cart", cart};
      case ModelKind::Forest: {
        auto c = forest;
        c.seed = seed;
        return {"forest", c};
      }
      case ModelKind::Gbm: {
        auto c = gbm;
        c.seed = seed;
        return {"gbm", c};
      }
      case ModelKind::Knn: {
        auto c = knn;
        c.scaling = knn_scaling == "none" ? ScalerPolicy::None : ScalerPolicy::Standardize;
        return {"knn", c};
      }
      case ModelKind::Ensemble: break;
    }
    throw Error(ErrorKind::InvalidConfig, "the ensemble is not a single model");
  }
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  const auto group = "Model hyperparameters";
  cmd->add_option("--sgd-learning-rate", m.sgd.learning_rate, "SGD step size")->capture_default_str()->group(group);
  cmd->add_option("--sgd-epochs", m.sgd.epochs, "SGD passes over the data")->capture_default_str()->group(group);
  cmd->add_option("--sgd-l2", m.sgd.l2, "SGD L2 penalty on coefficients")->capture_default_str()->group(group);
  cmd->add_option("--cart-max-depth", m.cart.max_depth, "Regression tree depth limit")->capture_default_str()->group(group);
  cmd->add_option("--cart-min-leaf", m.cart.min_samples_leaf, "Regression tree minimum leaf size")
      ->capture_default_str()
      ->group(group);
  cmd->add_option("--forest-trees", m.forest.n_trees, "Random forest size")->capture_default_str()->group(group);
  cmd->add_option("--forest-max-depth", m.forest.tree.max_depth, "Random forest tree depth limit")
      ->capture_default_str()
      ->group(group);
  cmd->add_option("--forest-min-leaf", m.forest.tree.min_samples_leaf, "Random forest minimum leaf size")
      ->capture_default_str()
      ->group(group);
  cmd->add_option("--forest-features", m.forest.features_per_split, "Features tried per split (0 = p/3)")
      ->capture_default_str()
      ->group(group);
  cmd->add_option("--gbm-stages", m.gbm.n_stages, "Boosting stages")->capture_default_str()->group(group);
  cmd->add_option("--gbm-learning-rate", m.gbm.learning_rate, "Boosting shrinkage")->capture_default_str()->group(group);
  cmd->add_option("--gbm-max-depth", m.gbm.tree.max_depth, "Boosting stage depth limit")->capture_default_str()->group(group);
  cmd->add_option("--knn-k", m.knn.k, "Neighbours averaged by KNN")->capture_default_str()->group(group);
  cmd->add_option("--knn-scaling", m.knn_scaling, "KNN feature scaling")
      ->check(CLI::IsMember({"standardize", "none"}))
      ->capture_default_str()
      ->group(group);
}

const std::vector<std::string> kMemberNames{"ols", "cart", "sgd", "gbm", "knn", "forest"};

std::vector<ModelSpec> member_specs(const std::vector<std::string>& names, const ModelOptions& opts, std::uint64_t seed) {
  std::vector<ModelSpec> specs;
  for (const auto& name : names) {
    const auto kind = parse_model_kind(name);
    if (!kind || *kind == ModelKind::Ensemble) throw Error(ErrorKind::InvalidConfig, "unknown model '" + name + "'");
    specs.push_back(opts.spec(*kind, seed));
  }
  return specs;
}

void write_output(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  write_file(path.string(), content);
}

template <typename T>
json issues_json(const ParseResult<T>& r) {
  json errors = json::array();
  for (const auto& e : r.row_errors) errors.push_back(json{{"line", e.line}, {"message", e.message}});
  return json{{"records", r.records.size()}, {"row_errors", errors}, {"warnings", r.warnings}};
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string rain, temp, pesticides, yield;
  std::string aliases = YIELDCAST_DEFAULT_ALIASES;
  std::string out = ".";
};

int cmd_ingest(const IngestArgs& a, bool aliases_given) {
  const auto rain_bytes = read_file(a.rain);
  const auto temp_bytes = read_file(a.temp);
  const auto pest_bytes = read_file(a.pesticides);
  const auto yield_bytes = read_file(a.yield);

  CountryAliasMap aliases;
  std::string alias_digest;
  if (aliases_given || fs::exists(a.aliases)) {
    const auto bytes = read_file(a.aliases);
    aliases = CountryAliasMap::from_csv(bytes);
    alias_digest = sha256_hex(bytes);
  }

  const auto rain = parse_cckp_csv(rain_bytes, ClimateKind::Precipitation);
  const auto temp = parse_cckp_csv(temp_bytes, ClimateKind::Temperature);
  const auto pest = parse_fao_csv(pest_bytes);
  const auto yield = parse_fao_csv(yield_bytes);

  auto [panel, report] = merge_panel(rain.records, temp.records, pest.records, yield.records, aliases);
  panel.provenance.source_digests = {{"rain", sha256_hex(rain_bytes)},
                                     {"temp", sha256_hex(temp_bytes)},
                                     {"pesticides", sha256_hex(pest_bytes)},
                                     {"yield", sha256_hex(yield_bytes)}};
  if (!alias_digest.empty()) panel.provenance.source_digests["aliases"] = alias_digest;

  const fs::path out(a.out);
  write_output(out / "panel.json", to_canonical_json(panel_to_json(panel)));
  const json merge{{"format_version", kFormatVersion},
                   {"merge_report", report},
                   {"source_digests", panel.provenance.source_digests},
                   {"parse",
                    {{"rain", issues_json(rain)},
                     {"temp", issues_json(temp)},
                     {"pesticides", issues_json(pest)},
                     {"yield", issues_json(yield)}}}};
  write_output(out / "merge_report.json", to_canonical_json(merge));

  std::cout << "merged rows: " << report.rows_out << " (" << report.country_count << " countries, " << report.item_count
            << " items, years " << report.year_range.first << "-" << report.year_range.second << ")\n"
            << "yield rows in: " << report.rows_in.yield << "; dropped for missing rain " << report.dropped_for_missing.rain
            << ", temp " << report.dropped_for_missing.temp << ", pesticides " << report.dropped_for_missing.pesticides
            << "; unmatched area " << report.dropped_unmatched_area << "; wrong unit " << report.dropped_wrong_unit
            << "; duplicate " << report.dropped_duplicate << "\n";
  const std::size_t bad_rows = rain.row_errors.size() + temp.row_errors.size() + pest.row_errors.size() + yield.row_errors.size();
  if (bad_rows > 0) std::cout << "rejected input rows: " << bad_rows << " (see merge_report.json)\n";
  if (!report.unmatched_areas.empty()) std::cout << "unmatched areas: " << report.unmatched_areas.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- explore

struct ExploreArgs {
  std::string panel;
  std::string rain, temp;
  std::string out = ".";
  bool vif = false;
  FeatureFlags features{false, false};
};

int cmd_explore(const ExploreArgs& a) {
  const auto panel = load_panel(a.panel);
  const fs::path out(a.out);

  auto rain = a.rain.empty() ? panel_series(panel, PanelVariable::Rain)
                             : climate_series(parse_cckp_csv(read_file(a.rain), ClimateKind::Precipitation).records);
  auto temp = a.temp.empty() ? panel_series(panel, PanelVariable::Temperature)
                             : climate_series(parse_cckp_csv(read_file(a.temp), ClimateKind::Temperature).records);
  write_output(out / "annual_rain.csv", to_csv(annual_mean(rain, "rain_mm", "mm")));
  write_output(out / "annual_temp.csv", to_csv(annual_mean(temp, "temp_c", "degC")));
  write_output(out / "annual_pesticides.csv",
               to_csv(annual_mean(panel_series(panel, PanelVariable::Pesticides), "pesticides_tonnes", "tonnes")));
  write_output(out / "item_frequency.csv", to_csv(item_frequency(panel)));
  write_output(out / "correlation.csv", to_csv(pearson_corr_matrix(panel_columns(panel))));

  if (a.vif) {
    const auto m = build_feature_matrix(panel, a.features.config());
    const auto entries = vif(m.x, m.feature_names);
    write_output(out / "vif.csv", to_csv(entries));
    for (const auto& e : entries) {
      if (e.high()) {
        std::cout << "warning: " << e.name << " VIF " << (e.vif ? format_double(*e.vif) : std::string("inf")) << "\n";
      }
    }
  }
  std::cout << "explore outputs written to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- cv

struct CvArgs {
  std::string panel;
  std::string out = ".";
  std::size_t k = 10;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> models = kMemberNames;
  double test_fraction = 0.2;
  std::size_t kappa_bins = 5;
  FeatureFlags features;
  ModelOptions model;
};

int cmd_cv(const CvArgs& a) {
  const auto panel = load_panel(a.panel);
  RunSettings s;
  s.seeds = a.seeds;
  s.k = a.k;
  s.features = a.features.config();
  s.specs = member_specs(a.models, a.model, a.seeds.front());
  s.test_fraction = a.test_fraction;
  s.kappa_bins = a.kappa_bins;
  const auto [report, holdout] = run_experiment(panel, s);

  const fs::path out(a.out);
  write_output(out / "report.json", to_canonical_json(report_to_json(report)));
  if (!holdout.keys.empty()) write_output(out / "holdout_predictions.csv", holdout_csv(holdout));
  std::cout << summary_table(report);
  return 0;
}

// ---------------------------------------------------------------- train / predict

struct TrainArgs {
  std::string panel;
  std::string model = "forest";
  std::vector<std::string> members = kMemberNames;
  std::string out = "model.json";
  std::uint64_t seed = 0;
  FeatureFlags features;
  ModelOptions options;
};

int cmd_train(const TrainArgs& a) {
  const auto panel = load_panel(a.panel);
  const auto data = build_feature_matrix(panel, a.features.config());
  FittedModel model;
  if (a.model == "ensemble") {
    model = fit_ensemble(member_specs(a.members, a.options, a.seed), data);
  } else {
    model = fit_model(member_specs({a.model}, a.options, a.seed).front(), data);
  }
  const auto digest = sha256_hex(to_canonical_json(panel_to_json(panel)));
  model.source_digest = digest;
  if (auto* e = std::get_if<EnsembleModel>(&model.payload)) {
    for (auto& m : e->members) m.source_digest = digest;
  }
  write_output(a.out, to_canonical_json(model_to_json(model)));
  std::cout << to_string(model.kind) << " model on " << data.n() << " rows x " << data.p() << " features written to " << a.out
            << "\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string input;
  std::string out;
};

int cmd_predict(const PredictArgs& a) {
  const auto model = load_model(a.model);
  const auto bytes = read_file(a.input);
  csv::Reader reader(bytes);
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!reader.next(header, line)) throw Error(ErrorKind::EmptyInput, a.input + " has no header");
  for (auto& h : header) h = csv::trim(h);
  if (header.size() != model.n_features()) {
    throw Error(ErrorKind::ShapeError, "input has " + std::to_string(header.size()) + " columns, model expects " +
                                           std::to_string(model.n_features()));
  }
  std::map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < header.size(); ++j) position[header[j]] = j;
  std::vector<std::size_t> source(model.n_features());
  for (std::size_t j = 0; j < model.n_features(); ++j) {
    const auto it = position.find(model.feature_names[j]);
    if (it == position.end()) throw Error(ErrorKind::ShapeError, "input lacks feature column '" + model.feature_names[j] + "'");
    source[j] = it->second;
  }
  std::vector<std::vector<double>> rows;
  std::vector<std::string> fields;
  while (reader.next(fields, line)) {
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::ShapeError, "line " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                                             " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> row(model.n_features());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto v = csv::parse_double(csv::trim(fields[source[j]]));
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::InvalidData, "line " + std::to_string(line) + ": non-numeric value in column '" +
                                                model.feature_names[j] + "'");
      }
      row[j] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, a.input + " has no data rows");
  const auto pred = predict(model, Matrix::from_rows(rows));
  std::string text = "prediction\n";
  for (double v : pred) text += format_double(v) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_output(a.out, text);
  }
  return 0;
}

}  // namespace

int yieldcast::run_cli(int argc, char** argv) {
  CLI::App app{"Crop-yield regression pipeline over FAOSTAT and CCKP panel data", "yieldcast"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and merge the four source CSVs into a panel table");
  ingest_cmd->set_config("--config", "", "TOML or INI file with flag values (flags win)");
  ingest_cmd->add_option("--rain", ingest.rain, "CCKP precipitation CSV")->required();
  ingest_cmd->add_option("--temp", ingest.temp, "CCKP temperature CSV")->required();
  ingest_cmd->add_option("--pesticides", ingest.pesticides, "FAOSTAT pesticide-use CSV")->required();
  ingest_cmd->add_option("--yield", ingest.yield, "FAOSTAT crop-yield CSV")->required();
  auto* aliases_opt = ingest_cmd->add_option("--aliases", ingest.aliases, "Country alias CSV (source_name,iso3)")
                          ->capture_default_str();
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->capture_default_str();

  ExploreArgs explore;
  auto* explore_cmd = app.add_subcommand("explore", "Write annual series, item counts, correlations and VIF tables");
  explore_cmd->set_config("--config", "", "TOML or INI file with flag values (flags win)");
  explore_cmd->add_option("--panel", explore.panel, "panel.json written by ingest")->required();
  explore_cmd->add_option("--rain", explore.rain, "Raw CCKP precipitation CSV for the rainfall series");
  explore_cmd->add_option("--temp", explore.temp, "Raw CCKP temperature CSV for the temperature series");
  explore_cmd->add_option("--out", explore.out, "Output directory")->capture_default_str();
  explore_cmd->add_flag("--vif", explore.vif, "Also write vif.csv for the feature matrix");
  add_feature_options(explore_cmd, explore.features);

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate the models and their ensemble and write report.json");
  cv_cmd->set_config("--config", "", "TOML or INI file with flag values (flags win)");
  cv_cmd->add_option("--panel", cv.panel, "panel.json written by ingest")->required();
  cv_cmd->add_option("--out", cv.out, "Output directory")->capture_default_str();
  cv_cmd->add_option("--k", cv.k, "Number of folds")->check(CLI::Range(2, 1000000))->capture_default_str();
  cv_cmd->add_option("--seed", cv.seeds, "Seed list; more than one repeats the cross-validation")
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--models", cv.models, "Comma-separated subset of ols,cart,sgd,gbm,knn,forest")
      ->delimiter(',')
      ->check(CLI::IsMember(kMemberNames))
      ->capture_default_str();
  cv_cmd->add_option("--test-fraction", cv.test_fraction, "Holdout share for the final fit (0 disables)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  cv_cmd->add_option("--kappa-bins", cv.kappa_bins, "Quantile bins for Cohen's kappa")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  add_feature_options(cv_cmd, cv.features);
  add_model_options(cv_cmd, cv.model);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit one model on the whole panel and save it");
  train_cmd->set_config("--config", "", "TOML or INI file with flag values (flags win)");
  train_cmd->add_option("--panel", train.panel, "panel.json written by ingest")->required();
  std::vector<std::string> model_names = kMemberNames;
  model_names.push_back("ensemble");
  train_cmd->add_option("--model", train.model, "Model kind")->check(CLI::IsMember(model_names))->capture_default_str();
  train_cmd->add_option("--models", train.members, "Ensemble members when --model ensemble")
      ->delimiter(',')
      ->check(CLI::IsMember(kMemberNames))
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Seed for the stochastic models")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model artifact path")->capture_default_str();
  add_feature_options(train_cmd, train.features);
  add_model_options(train_cmd, train.options);

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Predict yields for feature rows with a saved model");
  predict_cmd->add_option("--model", predict_args.model, "Model artifact written by train")->required();
  predict_cmd->add_option("--input", predict_args.input, "CSV whose header names the model's features")->required();
  predict_cmd->add_option("--out", predict_args.out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, aliases_opt->count() > 0);
    if (*explore_cmd) return cmd_explore(explore);
    if (*cv_cmd) return cmd_cv(cv);
    if (*train_cmd) return cmd_train(train);
    if (*predict_cmd) return cmd_predict(predict_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_environment_error(e.kind()) ? 1 : 2;
  }
  return 0;
}
