#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/metrics.hpp"
#include "yieldcast/model.hpp"
#include "yieldcast/rng.hpp"

namespace yieldcast {

struct FoldPlan {
  std::size_t k = 10;
  std::vector<std::size_t> assignments;
  std::uint64_t seed = 0;

  std::size_t n() const { return assignments.size(); }

  std::vector<std::size_t> test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != fold) out.push_back(i);
    }
    return out;
  }
  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Seeded shuffle, then contiguous slices; the first n % k folds get the
/// extra row.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "cross-validation needs k >= 2");
  if (k > n) throw Error(ErrorKind::InvalidConfig, "k = " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) plan.assignments[perm[pos++]] = f;
  }
  return plan;
}

/// Mean or sample standard deviation of each metric across folds. r2 / MAPE
/// are empty unless defined in every fold.
struct MetricSummary {
  std::optional<double> r2;
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double max_err = 0.0;
  std::optional<double> mape_percent;
  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct CvResult {
  std::string model_label;
  std::vector<MetricsReport> per_fold;
  MetricSummary mean;
  MetricSummary std;
  friend bool operator==(const CvResult&, const CvResult&) = default;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace detail

inline CvResult summarize_folds(std::string label, std::vector<MetricsReport> folds) {
  CvResult out;
  out.model_label = std::move(label);
  out.per_fold = std::move(folds);
  if (out.per_fold.empty()) return out;
  auto collect = [&](auto getter, double& mean, double& sd) {
    std::vector<double> v;
    for (const auto& f : out.per_fold) v.push_back(getter(f));
    std::tie(mean, sd) = detail::mean_std(v);
  };
  collect([](const MetricsReport& f) { return f.mae; }, out.mean.mae, out.std.mae);
  collect([](const MetricsReport& f) { return f.mse; }, out.mean.mse, out.std.mse);
  collect([](const MetricsReport& f) { return f.rmse; }, out.mean.rmse, out.std.rmse);
  collect([](const MetricsReport& f) { return f.max_err; }, out.mean.max_err, out.std.max_err);
  auto collect_opt = [&](auto getter, std::optional<double>& mean, std::optional<double>& sd) {
    std::vector<double> v;
    for (const auto& f : out.per_fold) {
      const std::optional<double> x = getter(f);
      if (!x) return;
      v.push_back(*x);
    }
    auto [m, s] = detail::mean_std(v);
    mean = m;
    sd = s;
  };
  collect_opt([](const MetricsReport& f) { return f.r2; }, out.mean.r2, out.std.r2);
  collect_opt([](const MetricsReport& f) { return f.mape_percent; }, out.mean.mape_percent, out.std.mape_percent);
  return out;
}

/// Held-out predictions of every member for every fold of one plan.
struct CvRun {
  FoldPlan plan;
  std::vector<std::string> labels;
  // fold -> held-out row indices (ascending)
  std::vector<std::vector<std::size_t>> test_rows;
  // fold -> member -> predictions aligned with test_rows[fold]
  std::vector<std::vector<std::vector<double>>> member_predictions;
  // fold -> held-out targets
  std::vector<std::vector<double>> targets;

  std::vector<double> ensemble_predictions(std::size_t fold) const {
    const auto& members = member_predictions[fold];
    std::vector<double> out(test_rows[fold].size(), 0.0);
    for (const auto& p : members) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
    for (auto& v : out) v /= static_cast<double>(members.size());
    return out;
  }

  // Out-of-fold predictions in original row order; member < 0 selects the ensemble.
  std::vector<double> out_of_fold(int member) const {
    std::vector<double> out(plan.n(), 0.0);
    for (std::size_t f = 0; f < test_rows.size(); ++f) {
      const auto pred = member < 0 ? ensemble_predictions(f) : member_predictions[f][static_cast<std::size_t>(member)];
      for (std::size_t i = 0; i < test_rows[f].size(); ++i) out[test_rows[f][i]] = pred[i];
    }
    return out;
  }

  CvResult member_result(std::size_t member) const {
    std::vector<MetricsReport> folds;
    for (std::size_t f = 0; f < test_rows.size(); ++f) folds.push_back(metrics_bundle(targets[f], member_predictions[f][member]));
    return summarize_folds(labels[member], std::move(folds));
  }

  CvResult ensemble_result(std::string label = "ensemble") const {
    std::vector<MetricsReport> folds;
    for (std::size_t f = 0; f < test_rows.size(); ++f) folds.push_back(metrics_bundle(targets[f], ensemble_predictions(f)));
    return summarize_folds(std::move(label), std::move(folds));
  }
};

/// Fits every spec on each fold's training rows and predicts its held-out
/// rows. Scalers are fitted inside the fold. Fit failures are collected and
/// rethrown with the failing fold numbers once all folds have run.
inline CvRun run_cv(std::span<const ModelSpec> specs, const FeatureMatrix& m, const FoldPlan& plan) {
  if (specs.empty()) throw Error(ErrorKind::InvalidConfig, "no models to cross-validate");
  if (plan.n() != m.n()) throw Error(ErrorKind::ShapeError, "fold plan does not match the row count");
  CvRun run;
  run.plan = plan;
  for (const auto& s : specs) run.labels.push_back(s.label);
  std::string failures;
  std::optional<ErrorKind> first_kind;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto train_idx = plan.train_rows(f);
    auto test_idx = plan.test_rows(f);
    const auto train = m.subset(train_idx);
    const auto test = m.subset(test_idx);
    std::vector<std::vector<double>> preds;
    try {
      for (const auto& spec : specs) preds.push_back(predict(fit_model(spec, train), test.x));
    } catch (const Error& e) {
      if (!first_kind) first_kind = e.kind();
      failures += (failures.empty() ? "" : "; ") + std::string("fold ") + std::to_string(f) + ": " + e.what();
      preds.clear();
    }
    run.test_rows.push_back(std::move(test_idx));
    run.member_predictions.push_back(std::move(preds));
    run.targets.push_back(test.y);
  }
  if (first_kind) throw Error(*first_kind, "cross-validation failed (" + failures + ")");
  return run;
}

inline CvResult cross_validate(const ModelSpec& spec, const FeatureMatrix& m, const FoldPlan& plan) {
  return run_cv(std::span<const ModelSpec>(&spec, 1), m, plan).member_result(0);
}

/// Per fold, every member is fitted on the training rows and the ensemble
/// prediction for a held-out row is the unweighted mean of member predictions.
inline CvResult ensemble_cv(std::span<const ModelSpec> specs, const FeatureMatrix& m, const FoldPlan& plan) {
  if (specs.size() < 2) throw Error(ErrorKind::InvalidConfig, "an ensemble needs at least 2 members");
  return run_cv(specs, m, plan).ensemble_result();
}

/// Pools the folds of repeated runs (one per seed) into one result.
inline CvResult pool_results(const std::vector<CvResult>& runs) {
  if (runs.empty()) return {};
  std::vector<MetricsReport> folds;
  for (const auto& r : runs) folds.insert(folds.end(), r.per_fold.begin(), r.per_fold.end());
  return summarize_folds(runs.front().model_label, std::move(folds));
}

}  // namespace yieldcast
