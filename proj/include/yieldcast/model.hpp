#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/knn.hpp"
#include "yieldcast/linear.hpp"
#include "yieldcast/tree.hpp"

namespace yieldcast {

enum class ModelKind { Ols, Sgd, Cart, Forest, Gbm, Knn, Ensemble };

constexpr std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Ols: return "ols";
    case ModelKind::Sgd: return "sgd";
    case ModelKind::Cart: return "cart";
    case ModelKind::Forest: return "forest";
    case ModelKind::Gbm: return "gbm";
    case ModelKind::Knn: return "knn";
    case ModelKind::Ensemble: return "ensemble";
  }
  return "unknown";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::Ols, ModelKind::Sgd, ModelKind::Cart, ModelKind::Forest, ModelKind::Gbm, ModelKind::Knn,
                 ModelKind::Ensemble}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Display names for the comparison table.
constexpr std::string_view display_name(ModelKind k) {
  switch (k) {
    case ModelKind::Ols: return "Linear";
    case ModelKind::Sgd: return "SGD";
    case ModelKind::Cart: return "Tree";
    case ModelKind::Forest: return "Forest";
    case ModelKind::Gbm: return "GBM";
    case ModelKind::Knn: return "KNN";
    case ModelKind::Ensemble: return "Ensemble";
  }
  return "?";
}

struct OlsConfig {
  friend bool operator==(const OlsConfig&, const OlsConfig&) = default;
};

using ModelConfig = std::variant<OlsConfig, SgdConfig, TreeConfig, ForestConfig, GbmConfig, KnnConfig>;

/// What to fit: a labelled model configuration.
struct ModelSpec {
  std::string label;
  ModelConfig config;

  ModelKind kind() const {
    constexpr ModelKind kinds[] = {ModelKind::Ols, ModelKind::Sgd, ModelKind::Cart,
                                   ModelKind::Forest, ModelKind::Gbm, ModelKind::Knn};
    return kinds[config.index()];
  }
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// The six member models with their default configurations.
inline ModelSpec default_spec(ModelKind kind, std::uint64_t seed = 0) {
  switch (kind) {
    case ModelKind::Ols: return {"ols", OlsConfig{}};
    case ModelKind::Sgd: {
      SgdConfig c;
      c.seed = seed;
      return {"sgd", c};
    }
    case ModelKind::Cart: return {"cart", TreeConfig{}};
    case ModelKind::Forest: {
      ForestConfig c;
      c.seed = seed;
      return {"forest", c};
    }
    case ModelKind::Gbm: {
      GbmConfig c;
      c.seed = seed;
      return {"gbm", c};
    }
    case ModelKind::Knn: return {"knn", KnnConfig{}};
    case ModelKind::Ensemble: break;
  }
  throw Error(ErrorKind::InvalidConfig, "no single-model spec for the ensemble kind");
}

inline std::vector<ModelSpec> default_member_specs(std::uint64_t seed = 0) {
  std::vector<ModelSpec> specs;
  for (auto k : {ModelKind::Ols, ModelKind::Cart, ModelKind::Sgd, ModelKind::Gbm, ModelKind::Knn, ModelKind::Forest}) {
    specs.push_back(default_spec(k, seed));
  }
  return specs;
}

struct FittedModel;

struct EnsembleModel {
  std::vector<FittedModel> members;
};

using ModelPayload = std::variant<LinearModel, Tree, Forest, GbmModel, KnnModel, EnsembleModel>;

/// A trained predictor plus what is needed to reproduce it.
struct FittedModel {
  ModelKind kind = ModelKind::Ols;
  ModelPayload payload;
  // Absent for ensembles; members carry their own specs.
  std::optional<ModelSpec> spec;
  std::vector<std::string> feature_names;
  std::string source_digest;

  std::size_t n_features() const { return feature_names.size(); }
};

inline FittedModel fit_model(const ModelSpec& spec, const FeatureMatrix& data) {
  FittedModel out;
  out.kind = spec.kind();
  out.spec = spec;
  out.feature_names = data.feature_names;
  const auto& x = data.x;
  const std::span<const double> y = data.y;
  switch (out.kind) {
    case ModelKind::Ols: out.payload = fit_ols(x, y, data.feature_names); break;
    case ModelKind::Sgd:
      out.payload = fit_sgd(x, y, std::get<SgdConfig>(spec.config), data.indicator, data.feature_names);
      break;
    case ModelKind::Cart: out.payload = fit_cart(x, y, std::get<TreeConfig>(spec.config)); break;
    case ModelKind::Forest: out.payload = fit_forest(x, y, std::get<ForestConfig>(spec.config)); break;
    case ModelKind::Gbm: out.payload = fit_gbm(x, y, std::get<GbmConfig>(spec.config)); break;
    case ModelKind::Knn: {
      const auto& c = std::get<KnnConfig>(spec.config);
      out.payload = fit_knn(x, y, c.k, c.scaling, data.indicator, data.feature_names);
      break;
    }
    case ModelKind::Ensemble: throw Error(ErrorKind::InvalidConfig, "use fit_ensemble for ensembles");
  }
  return out;
}

inline FittedModel fit_ensemble(std::span<const ModelSpec> specs, const FeatureMatrix& data) {
  if (specs.size() < 2) throw Error(ErrorKind::InvalidConfig, "an ensemble needs at least 2 members");
  FittedModel out;
  out.kind = ModelKind::Ensemble;
  out.feature_names = data.feature_names;
  EnsembleModel ens;
  for (const auto& s : specs) ens.members.push_back(fit_model(s, data));
  out.payload = std::move(ens);
  return out;
}

inline std::vector<double> predict(const FittedModel& m, const Matrix& x) {
  if (x.cols() != m.n_features()) {
    throw Error(ErrorKind::ShapeError,
                "model expects " + std::to_string(m.n_features()) + " features, got " + std::to_string(x.cols()));
  }
  switch (m.kind) {
    case ModelKind::Ols:
    case ModelKind::Sgd: return predict_linear(std::get<LinearModel>(m.payload), x);
    case ModelKind::Cart: return predict_tree(std::get<Tree>(m.payload), x);
    case ModelKind::Forest: return predict_forest(std::get<Forest>(m.payload), x);
    case ModelKind::Gbm: return predict_gbm(std::get<GbmModel>(m.payload), x);
    case ModelKind::Knn: return predict_knn(std::get<KnnModel>(m.payload), x);
    case ModelKind::Ensemble: {
      const auto& members = std::get<EnsembleModel>(m.payload).members;
      std::vector<double> sum(x.rows(), 0.0);
      for (const auto& member : members) {
        const auto p = predict(member, x);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p[i];
      }
      for (auto& v : sum) v /= static_cast<double>(members.size());
      return sum;
    }
  }
  return {};
}

}  // namespace yieldcast
