#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/matrix.hpp"
#include "yieldcast/parallel.hpp"

namespace yieldcast {

enum class ScalerPolicy { Standardize, None };

struct KnnConfig {
  std::size_t k = 5;
  ScalerPolicy scaling = ScalerPolicy::Standardize;
  friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Stores the (standardized) training set; prediction is the unweighted
/// mean target of the k nearest rows by Euclidean distance.
struct KnnModel {
  Matrix train_x;
  std::vector<double> train_y;
  std::size_t k = 5;
  std::optional<Scaler> scaler;

  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

struct Neighbor {
  std::size_t index;
  double distance;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline KnnModel fit_knn(const Matrix& x, std::span<const double> y, std::size_t k,
                        ScalerPolicy policy = ScalerPolicy::Standardize, const std::vector<bool>& passthrough = {},
                        const std::vector<std::string>& names = {}) {
  if (x.rows() != y.size()) throw Error(ErrorKind::ShapeError, "x rows and y length differ");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "KNN needs training rows");
  if (k < 1 || k > x.rows()) {
    throw Error(ErrorKind::InvalidConfig, "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(x.rows()) + "]");
  }
  if (!x.all_finite() || !all_finite(y)) throw Error(ErrorKind::InvalidData, "non-finite value in training data");
  KnnModel m;
  m.k = k;
  m.train_y.assign(y.begin(), y.end());
  if (policy == ScalerPolicy::Standardize) {
    m.scaler = fit_scaler(x, passthrough, names);
    m.train_x = apply_scaler(*m.scaler, x);
  } else {
    m.train_x = x;
  }
  return m;
}

/// Exhaustive scan: the k smallest distances, ascending, ties by lower index.
inline std::vector<Neighbor> neighbors(const KnnModel& m, std::span<const double> row) {
  const std::size_t p = m.train_x.cols();
  if (row.size() != p) {
    throw Error(ErrorKind::ShapeError, "query has " + std::to_string(row.size()) + " features, model expects " + std::to_string(p));
  }
  std::vector<double> q(row.begin(), row.end());
  if (m.scaler) apply_scaler_row(*m.scaler, row, q);
  std::vector<Neighbor> all(m.train_x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t = m.train_x.row(i);
    double ss = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = t[j] - q[j];
      ss += d * d;
    }
    all[i] = {i, std::sqrt(ss)};
  }
  const auto k = static_cast<std::ptrdiff_t>(m.k);
  std::partial_sort(all.begin(), all.begin() + k, all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  all.resize(m.k);
  return all;
}

inline double predict_knn(const KnnModel& m, std::span<const double> row) {
  double sum = 0.0;
  for (const auto& nb : neighbors(m, row)) sum += m.train_y[nb.index];
  return sum / static_cast<double>(m.k);
}

inline std::vector<double> predict_knn(const KnnModel& m, const Matrix& x) {
  if (x.cols() != m.train_x.cols()) throw Error(ErrorKind::ShapeError, "KNN query column count mismatch");
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t i) { out[i] = predict_knn(m, x.row(i)); });
  return out;
}

}  // namespace yieldcast
