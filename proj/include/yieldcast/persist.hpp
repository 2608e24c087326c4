#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/eval.hpp"
#include "yieldcast/format.hpp"
#include "yieldcast/metrics.hpp"
#include "yieldcast/model.hpp"

namespace yieldcast {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------- canonical form

namespace detail {

inline bool is_scalar(const json& j) { return !j.is_object() && !j.is_array(); }

inline void dump_canonical(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace) + ": ";
        dump_canonical(it.value(), out, indent + 2);
      }
      out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), is_scalar);
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? "," : ",\n";
        first = false;
        if (!flat) out += pad;
        dump_canonical(v, out, indent + 2);
      }
      if (!flat) out += "\n" + std::string(static_cast<std::size_t>(indent), ' ');
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw Error(ErrorKind::FormatError, "non-finite number cannot be serialized");
      out += v == 0.0 ? "0" : format_double(v);
      return;
    }
    case json::value_t::string: out += j.dump(-1, ' ', false, json::error_handler_t::replace); return;
    default: out += j.dump(); return;
  }
}

}  // namespace detail

/// Canonical JSON text: sorted keys, two-space indentation, scalar arrays on
/// one line, doubles at 17 significant digits, trailing newline.
inline std::string to_canonical_json(const json& j) {
  std::string out;
  detail::dump_canonical(j, out, 0);
  out += "\n";
  return out;
}

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string(what) + ": " + e.what());
  }
}

inline json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
inline std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

// ---------------------------------------------------------------- data types

inline void to_json(json& j, const Scaler& s) {
  j = json{{"means", s.means}, {"stds", s.stds}, {"passthrough", s.passthrough}};
}
inline void from_json(const json& j, Scaler& s) {
  s.means = j.at("means").get<std::vector<double>>();
  s.stds = j.at("stds").get<std::vector<double>>();
  s.passthrough = j.at("passthrough").get<std::vector<bool>>();
  if (s.stds.size() != s.means.size() || s.passthrough.size() != s.means.size()) {
    throw Error(ErrorKind::FormatError, "scaler arrays differ in length");
  }
  for (double sd : s.stds) {
    if (!(sd > 0.0)) throw Error(ErrorKind::FormatError, "scaler std must be positive");
  }
}

inline void to_json(json& j, const FeatureConfig& c) {
  j = json{{"use_rain", c.use_rain},       {"use_temp", c.use_temp},       {"use_pesticides", c.use_pesticides},
           {"encode_item", c.encode_item}, {"encode_country", c.encode_country}};
}
inline void from_json(const json& j, FeatureConfig& c) {
  c.use_rain = j.at("use_rain").get<bool>();
  c.use_temp = j.at("use_temp").get<bool>();
  c.use_pesticides = j.at("use_pesticides").get<bool>();
  c.encode_item = j.at("encode_item").get<bool>();
  c.encode_country = j.at("encode_country").get<bool>();
}

inline void to_json(json& j, const MetricsReport& m) {
  j = json{{"n", m.n},
           {"r2", optional_to_json(m.r2)},
           {"mae", m.mae},
           {"mse", m.mse},
           {"rmse", m.rmse},
           {"max_err", m.max_err},
           {"mape_percent", optional_to_json(m.mape_percent)},
           {"mape_excluded_rows", m.mape_excluded_rows}};
}
inline void from_json(const json& j, MetricsReport& m) {
  m.n = j.at("n").get<std::size_t>();
  m.r2 = optional_from_json(j.at("r2"));
  m.mae = j.at("mae").get<double>();
  m.mse = j.at("mse").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.max_err = j.at("max_err").get<double>();
  m.mape_percent = optional_from_json(j.at("mape_percent"));
  m.mape_excluded_rows = j.at("mape_excluded_rows").get<std::size_t>();
}

inline void to_json(json& j, const MetricSummary& m) {
  j = json{{"r2", optional_to_json(m.r2)}, {"mae", m.mae},         {"mse", m.mse},
           {"rmse", m.rmse},               {"max_err", m.max_err}, {"mape_percent", optional_to_json(m.mape_percent)}};
}
inline void from_json(const json& j, MetricSummary& m) {
  m.r2 = optional_from_json(j.at("r2"));
  m.mae = j.at("mae").get<double>();
  m.mse = j.at("mse").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.max_err = j.at("max_err").get<double>();
  m.mape_percent = optional_from_json(j.at("mape_percent"));
}

inline void to_json(json& j, const CvResult& r) {
  j = json{{"model_label", r.model_label}, {"per_fold", r.per_fold}, {"mean", r.mean}, {"std", r.std}};
}
inline void from_json(const json& j, CvResult& r) {
  r.model_label = j.at("model_label").get<std::string>();
  r.per_fold = j.at("per_fold").get<std::vector<MetricsReport>>();
  r.mean = j.at("mean").get<MetricSummary>();
  r.std = j.at("std").get<MetricSummary>();
}

inline void to_json(json& j, const KappaResult& k) {
  j = json{{"kappa", k.kappa}, {"band", k.band}, {"bin_edges", k.bin_edges}};
}
inline void from_json(const json& j, KappaResult& k) {
  k.kappa = j.at("kappa").get<double>();
  k.band = j.at("band").get<std::string>();
  k.bin_edges = j.at("bin_edges").get<std::vector<double>>();
}

inline void to_json(json& j, const MergeReport& r) {
  j = json{{"rows_in", {{"rain", r.rows_in.rain}, {"temp", r.rows_in.temp}, {"pesticides", r.rows_in.pesticides}, {"yield", r.rows_in.yield}}},
           {"rows_out", r.rows_out},
           {"unmatched_areas", r.unmatched_areas},
           {"dropped_for_missing",
            {{"rain", r.dropped_for_missing.rain}, {"temp", r.dropped_for_missing.temp}, {"pesticides", r.dropped_for_missing.pesticides}}},
           {"dropped_unmatched_area", r.dropped_unmatched_area},
           {"dropped_duplicate", r.dropped_duplicate},
           {"dropped_wrong_unit", r.dropped_wrong_unit},
           {"duplicates", {{"rain", r.duplicates.rain}, {"temp", r.duplicates.temp}, {"pesticides", r.duplicates.pesticides}}},
           {"ignored_pesticide_items", r.ignored_pesticide_items},
           {"unmatched_pesticide_rows", r.unmatched_pesticide_rows},
           {"year_range", {r.year_range.first, r.year_range.second}},
           {"country_count", r.country_count},
           {"item_count", r.item_count}};
}
inline void from_json(const json& j, MergeReport& r) {
  const auto& in = j.at("rows_in");
  r.rows_in = {in.at("rain").get<std::size_t>(), in.at("temp").get<std::size_t>(), in.at("pesticides").get<std::size_t>(),
               in.at("yield").get<std::size_t>()};
  r.rows_out = j.at("rows_out").get<std::size_t>();
  r.unmatched_areas = j.at("unmatched_areas").get<std::vector<std::string>>();
  auto missing = [](const json& m) {
    return MissingCounts{m.at("rain").get<std::size_t>(), m.at("temp").get<std::size_t>(), m.at("pesticides").get<std::size_t>()};
  };
  r.dropped_for_missing = missing(j.at("dropped_for_missing"));
  r.dropped_unmatched_area = j.at("dropped_unmatched_area").get<std::size_t>();
  r.dropped_duplicate = j.at("dropped_duplicate").get<std::size_t>();
  r.dropped_wrong_unit = j.at("dropped_wrong_unit").get<std::size_t>();
  r.duplicates = missing(j.at("duplicates"));
  r.ignored_pesticide_items = j.at("ignored_pesticide_items").get<std::size_t>();
  r.unmatched_pesticide_rows = j.at("unmatched_pesticide_rows").get<std::size_t>();
  const auto yr = j.at("year_range").get<std::vector<int>>();
  if (yr.size() != 2) throw Error(ErrorKind::FormatError, "year_range must have two entries");
  r.year_range = {yr[0], yr[1]};
  r.country_count = j.at("country_count").get<std::size_t>();
  r.item_count = j.at("item_count").get<std::size_t>();
}

inline const std::vector<std::string>& panel_fields() {
  static const std::vector<std::string> f{"iso3", "country", "year", "item", "rain_mm", "temp_c", "pesticides_tonnes", "yield_hg_ha"};
  return f;
}

inline json panel_to_json(const PanelTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back(json::array({r.iso3, r.country, r.year, r.item, r.rain_mm, r.temp_c, r.pesticides_tonnes, r.yield_hg_ha}));
  }
  return json{{"format_version", kFormatVersion},
              {"fields", panel_fields()},
              {"provenance", {{"source_digests", t.provenance.source_digests}, {"merge_report", t.provenance.merge}}},
              {"rows", std::move(rows)}};
}

inline PanelTable panel_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) throw Error(ErrorKind::UnsupportedVersion, "panel format_version");
    if (j.at("fields").get<std::vector<std::string>>() != panel_fields()) throw Error(ErrorKind::FormatError, "panel field list");
    PanelTable t;
    t.provenance.source_digests = j.at("provenance").at("source_digests").get<std::map<std::string, std::string>>();
    t.provenance.merge = j.at("provenance").at("merge_report").get<MergeReport>();
    for (const auto& r : j.at("rows")) {
      if (r.size() != 8) throw Error(ErrorKind::FormatError, "panel row must have 8 fields");
      t.rows.push_back({r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<int>(), r[3].get<std::string>(),
                        r[4].get<double>(), r[5].get<double>(), r[6].get<double>(), r[7].get<double>()});
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("panel: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidData) throw Error(ErrorKind::FormatError, "panel: " + e.detail());
    throw;
  }
}

inline void save_panel(const PanelTable& t, const std::string& path) { write_file(path, to_canonical_json(panel_to_json(t))); }
inline PanelTable load_panel(const std::string& path) { return panel_from_json(parse_json(read_file(path), path)); }

// ---------------------------------------------------------------- model configs

inline json tree_config_to_json(const TreeConfig& c) {
  return json{{"max_depth", c.max_depth}, {"min_samples_leaf", c.min_samples_leaf}, {"min_samples_split", c.resolved_min_split()}};
}
inline TreeConfig tree_config_from_json(const json& j) {
  return {j.at("max_depth").get<std::size_t>(), j.at("min_samples_leaf").get<std::size_t>(), j.at("min_samples_split").get<std::size_t>()};
}

inline json config_to_json(const ModelConfig& cfg) {
  struct Visitor {
    json operator()(const OlsConfig&) const { return json::object(); }
    json operator()(const SgdConfig& c) const {
      return json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"l2", c.l2}, {"seed", c.seed}, {"shuffle", c.shuffle}};
    }
    json operator()(const TreeConfig& c) const { return tree_config_to_json(c); }
    json operator()(const ForestConfig& c) const {
      return json{{"n_trees", c.n_trees},
                  {"features_per_split", c.features_per_split},
                  {"bootstrap", c.bootstrap},
                  {"tree", tree_config_to_json(c.tree)},
                  {"seed", c.seed}};
    }
    json operator()(const GbmConfig& c) const {
      return json{{"n_stages", c.n_stages}, {"learning_rate", c.learning_rate}, {"tree", tree_config_to_json(c.tree)}, {"seed", c.seed}};
    }
    json operator()(const KnnConfig& c) const {
      return json{{"k", c.k}, {"scaling", c.scaling == ScalerPolicy::Standardize ? "standardize" : "none"}};
    }
  };
  return std::visit(Visitor{}, cfg);
}

inline ModelConfig config_from_json(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::Ols: return OlsConfig{};
    case ModelKind::Sgd:
      return SgdConfig{j.at("learning_rate").get<double>(), j.at("epochs").get<std::size_t>(), j.at("l2").get<double>(),
                       j.at("seed").get<std::uint64_t>(), j.at("shuffle").get<bool>()};
    case ModelKind::Cart: return tree_config_from_json(j);
    case ModelKind::Forest:
      return ForestConfig{j.at("n_trees").get<std::size_t>(), j.at("features_per_split").get<std::size_t>(),
                          j.at("bootstrap").get<bool>(), tree_config_from_json(j.at("tree")), j.at("seed").get<std::uint64_t>()};
    case ModelKind::Gbm:
      return GbmConfig{j.at("n_stages").get<std::size_t>(), j.at("learning_rate").get<double>(), tree_config_from_json(j.at("tree")),
                       j.at("seed").get<std::uint64_t>()};
    case ModelKind::Knn: {
      const auto s = j.at("scaling").get<std::string>();
      if (s != "standardize" && s != "none") throw Error(ErrorKind::FormatError, "unknown KNN scaling '" + s + "'");
      return KnnConfig{j.at("k").get<std::size_t>(), s == "none" ? ScalerPolicy::None : ScalerPolicy::Standardize};
    }
    case ModelKind::Ensemble: break;
  }
  throw Error(ErrorKind::FormatError, "ensemble has no single config");
}

inline json spec_to_json(const ModelSpec& s) {
  return json{{"label", s.label}, {"model_kind", std::string(to_string(s.kind()))}, {"config", config_to_json(s.config)}};
}

inline std::optional<std::uint64_t> spec_seed(const ModelSpec& s) {
  if (auto* c = std::get_if<SgdConfig>(&s.config)) return c->seed;
  if (auto* c = std::get_if<ForestConfig>(&s.config)) return c->seed;
  if (auto* c = std::get_if<GbmConfig>(&s.config)) return c->seed;
  return std::nullopt;
}

// ---------------------------------------------------------------- model artifacts

namespace detail {

inline json tree_to_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array(), n = json::array();
  for (const auto& nd : t.nodes) {
    feature.push_back(nd.feature);
    threshold.push_back(nd.threshold);
    left.push_back(nd.left);
    right.push_back(nd.right);
    value.push_back(nd.value);
    n.push_back(nd.n_samples);
  }
  return json{{"n_features", t.n_features}, {"feature", feature}, {"threshold", threshold}, {"left", left},
              {"right", right},             {"value", value},     {"n_samples", n}};
}

inline Tree tree_from_json(const json& j) {
  Tree t;
  t.n_features = j.at("n_features").get<std::size_t>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto n = j.at("n_samples").get<std::vector<std::size_t>>();
  const std::size_t size = feature.size();
  if (size == 0 || threshold.size() != size || left.size() != size || right.size() != size || value.size() != size ||
      n.size() != size) {
    throw Error(ErrorKind::FormatError, "tree node arrays are empty or differ in length");
  }
  for (std::size_t i = 0; i < size; ++i) {
    TreeNode nd{feature[i], threshold[i], left[i], right[i], value[i], n[i]};
    if (!std::isfinite(nd.value) || !std::isfinite(nd.threshold)) throw Error(ErrorKind::FormatError, "non-finite tree node");
    if (!nd.is_leaf()) {
      const auto self = static_cast<int>(i);
      const auto sz = static_cast<int>(size);
      if (static_cast<std::size_t>(nd.feature) >= t.n_features || nd.left <= self || nd.right <= self || nd.left >= sz ||
          nd.right >= sz) {
        throw Error(ErrorKind::FormatError, "tree node " + std::to_string(i) + " has invalid links");
      }
    }
    t.nodes.push_back(nd);
  }
  return t;
}

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw Error(ErrorKind::FormatError, "matrix data length mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

inline json linear_info_to_json(const LinearFitInfo& info) {
  return json{{"ridge_jitter", info.ridge_jitter},
              {"epochs_run", info.epochs_run},
              {"final_train_mse", std::isnan(info.final_train_mse) ? json(nullptr) : json(info.final_train_mse)},
              {"checkpoint_mse", info.checkpoint_mse},
              {"checkpoint_loss", info.checkpoint_loss}};
}

inline LinearFitInfo linear_info_from_json(const json& j) {
  LinearFitInfo info;
  info.ridge_jitter = j.at("ridge_jitter").get<bool>();
  info.epochs_run = j.at("epochs_run").get<std::size_t>();
  info.final_train_mse = j.at("final_train_mse").is_null() ? std::nan("") : j.at("final_train_mse").get<double>();
  info.checkpoint_mse = j.at("checkpoint_mse").get<std::vector<double>>();
  info.checkpoint_loss = j.at("checkpoint_loss").get<std::vector<double>>();
  if (info.checkpoint_loss.size() != info.checkpoint_mse.size()) throw Error(ErrorKind::FormatError, "checkpoint lengths differ");
  return info;
}

inline const std::optional<Scaler>* payload_scaler(const FittedModel& m) {
  if (auto* l = std::get_if<LinearModel>(&m.payload)) return &l->scaler;
  if (auto* k = std::get_if<KnnModel>(&m.payload)) return &k->scaler;
  return nullptr;
}

}  // namespace detail

inline json model_to_json(const FittedModel& m) {
  json payload;
  switch (m.kind) {
    case ModelKind::Ols:
    case ModelKind::Sgd: {
      const auto& l = std::get<LinearModel>(m.payload);
      payload = json{{"coefficients", l.coefficients}, {"intercept", l.intercept}, {"fit_info", detail::linear_info_to_json(l.info)}};
      break;
    }
    case ModelKind::Cart: payload = detail::tree_to_json(std::get<Tree>(m.payload)); break;
    case ModelKind::Forest: {
      const auto& f = std::get<Forest>(m.payload);
      json trees = json::array();
      for (const auto& t : f.trees) trees.push_back(detail::tree_to_json(t));
      payload = json{{"n_features", f.n_features}, {"trees", trees}};
      break;
    }
    case ModelKind::Gbm: {
      const auto& g = std::get<GbmModel>(m.payload);
      json stages = json::array();
      for (const auto& t : g.stages) stages.push_back(detail::tree_to_json(t));
      payload = json{{"init_value", g.init_value}, {"learning_rate", g.learning_rate}, {"n_features", g.n_features}, {"stages", stages}};
      break;
    }
    case ModelKind::Knn: {
      const auto& k = std::get<KnnModel>(m.payload);
      payload = json{{"k", k.k}, {"train_x", detail::matrix_to_json(k.train_x)}, {"train_y", k.train_y}};
      break;
    }
    case ModelKind::Ensemble: {
      json members = json::array();
      for (const auto& member : std::get<EnsembleModel>(m.payload).members) members.push_back(model_to_json(member));
      payload = json{{"members", members}};
      break;
    }
  }
  json meta{{"feature_names", m.feature_names}, {"source_digest", m.source_digest}};
  if (m.spec) {
    meta["label"] = m.spec->label;
    meta["config"] = config_to_json(m.spec->config);
    const auto seed = spec_seed(*m.spec);
    meta["seed"] = seed ? json(*seed) : json(nullptr);
  } else {
    meta["label"] = "ensemble";
    meta["config"] = json::object();
    meta["seed"] = nullptr;
  }
  const auto* scaler = detail::payload_scaler(m);
  meta["scaler"] = scaler && *scaler ? json(**scaler) : json(nullptr);
  return json{{"format_version", kFormatVersion},
              {"model_kind", std::string(to_string(m.kind))},
              {"payload", std::move(payload)},
              {"fit_metadata", std::move(meta)}};
}

/// Rebuilds a model and checks its invariants; FormatError on any defect,
/// UnsupportedVersion on a foreign format_version.
inline FittedModel model_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw Error(ErrorKind::FormatError, "model file lacks format_version");
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorKind::UnsupportedVersion, "model format_version " + j.at("format_version").dump() + " is not supported");
    }
    const auto kind_name = j.at("model_kind").get<std::string>();
    const auto kind = parse_model_kind(kind_name);
    if (!kind) throw Error(ErrorKind::FormatError, "unknown model_kind '" + kind_name + "'");
    const auto& payload = j.at("payload");
    const auto& meta = j.at("fit_metadata");

    FittedModel m;
    m.kind = *kind;
    m.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    m.source_digest = meta.at("source_digest").get<std::string>();
    if (m.kind != ModelKind::Ensemble) {
      m.spec = ModelSpec{meta.at("label").get<std::string>(), config_from_json(m.kind, meta.at("config"))};
    }
    std::optional<Scaler> scaler;
    if (!meta.at("scaler").is_null()) scaler = meta.at("scaler").get<Scaler>();
    const std::size_t p = m.feature_names.size();
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::FormatError, what);
    };
    if (scaler) require(scaler->p() == p, "scaler width does not match feature_names");

    switch (m.kind) {
      case ModelKind::Ols:
      case ModelKind::Sgd: {
        LinearModel l;
        l.coefficients = payload.at("coefficients").get<std::vector<double>>();
        l.intercept = payload.at("intercept").get<double>();
        l.info = detail::linear_info_from_json(payload.at("fit_info"));
        l.scaler = scaler;
        l.feature_names = m.feature_names;
        require(l.coefficients.size() == p, "coefficient count does not match feature_names");
        require(all_finite(l.coefficients) && std::isfinite(l.intercept), "non-finite coefficient");
        require(m.kind == ModelKind::Sgd ? scaler.has_value() : !scaler.has_value(), "scaler presence does not match model kind");
        m.payload = std::move(l);
        break;
      }
      case ModelKind::Cart: {
        auto t = detail::tree_from_json(payload);
        require(t.n_features == p, "tree width does not match feature_names");
        m.payload = std::move(t);
        break;
      }
      case ModelKind::Forest: {
        Forest f;
        f.n_features = payload.at("n_features").get<std::size_t>();
        for (const auto& t : payload.at("trees")) f.trees.push_back(detail::tree_from_json(t));
        require(f.n_features == p && !f.trees.empty(), "forest shape is invalid");
        for (const auto& t : f.trees) require(t.n_features == p, "forest tree width mismatch");
        m.payload = std::move(f);
        break;
      }
      case ModelKind::Gbm: {
        GbmModel g;
        g.init_value = payload.at("init_value").get<double>();
        g.learning_rate = payload.at("learning_rate").get<double>();
        g.n_features = payload.at("n_features").get<std::size_t>();
        for (const auto& t : payload.at("stages")) g.stages.push_back(detail::tree_from_json(t));
        require(g.n_features == p && !g.stages.empty(), "GBM shape is invalid");
        require(g.learning_rate > 0.0 && g.learning_rate <= 1.0 && std::isfinite(g.init_value), "GBM parameters are invalid");
        m.payload = std::move(g);
        break;
      }
      case ModelKind::Knn: {
        KnnModel k;
        k.k = payload.at("k").get<std::size_t>();
        k.train_x = detail::matrix_from_json(payload.at("train_x"));
        k.train_y = payload.at("train_y").get<std::vector<double>>();
        k.scaler = scaler;
        require(k.train_x.cols() == p && k.train_y.size() == k.train_x.rows(), "KNN training data shape mismatch");
        require(k.k >= 1 && k.k <= k.train_y.size(), "KNN k out of range");
        require(k.train_x.all_finite() && all_finite(k.train_y), "non-finite KNN training data");
        m.payload = std::move(k);
        break;
      }
      case ModelKind::Ensemble: {
        EnsembleModel e;
        for (const auto& member : payload.at("members")) e.members.push_back(model_from_json(member));
        require(e.members.size() >= 2, "ensemble needs at least 2 members");
        for (const auto& member : e.members) require(member.feature_names == m.feature_names, "ensemble member features differ");
        m.payload = std::move(e);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("model file: ") + e.what());
  }
}

inline void save_model(const FittedModel& m, const std::string& path) { write_file(path, to_canonical_json(model_to_json(m))); }

inline FittedModel load_model(const std::string& path) { return model_from_json(parse_json(read_file(path), path)); }

}  // namespace yieldcast
