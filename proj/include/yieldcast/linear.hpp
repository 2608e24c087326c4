#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "yieldcast/core_data.hpp"
#include "yieldcast/error.hpp"
#include "yieldcast/matrix.hpp"
#include "yieldcast/rng.hpp"

namespace yieldcast {

struct LinearFitInfo {
  // Set when the design was rank deficient and the ridge fallback was used.
  bool ridge_jitter = false;
  std::size_t epochs_run = 0;
  double final_train_mse = std::numeric_limits<double>::quiet_NaN();
  // Training MSE and penalized objective (MSE + l2 |beta|^2) after every
  // 100th SGD epoch.
  std::vector<double> checkpoint_mse;
  std::vector<double> checkpoint_loss;

  friend bool operator==(const LinearFitInfo& a, const LinearFitInfo& b) {
    auto same = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
    return a.ridge_jitter == b.ridge_jitter && a.epochs_run == b.epochs_run && same(a.final_train_mse, b.final_train_mse) &&
           a.checkpoint_mse == b.checkpoint_mse && a.checkpoint_loss == b.checkpoint_loss;
  }
};

/// y = intercept + coefficients . z, where z is x passed through `scaler`
/// when one is present (SGD) and x itself otherwise (OLS).
struct LinearModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::optional<Scaler> scaler;
  std::vector<std::string> feature_names;
  LinearFitInfo info;

  std::size_t p() const { return coefficients.size(); }

  // Coefficients expressed against unscaled features.
  std::vector<double> raw_coefficients() const {
    if (!scaler) return coefficients;
    std::vector<double> out(coefficients.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = scaler->passthrough[j] ? coefficients[j] : coefficients[j] / scaler->stds[j];
    }
    return out;
  }

  double raw_intercept() const {
    if (!scaler) return intercept;
    double b = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
      if (!scaler->passthrough[j]) b -= coefficients[j] * scaler->means[j] / scaler->stds[j];
    }
    return b;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct SgdConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 1000;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error(ErrorKind::InvalidConfig, "SGD learning_rate must be > 0");
    if (epochs == 0) throw Error(ErrorKind::InvalidConfig, "SGD epochs must be > 0");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorKind::InvalidConfig, "SGD l2 must be >= 0");
  }
  friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

namespace detail {

inline void check_xy(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::ShapeError,
                "x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.size()) + " entries");
  }
  if (!x.all_finite() || !all_finite(y)) throw Error(ErrorKind::InvalidData, "non-finite value in training data");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace detail

inline constexpr double kOlsRidgeJitter = 1e-8;

/// Least squares with intercept. Columns of the augmented design [1 | x] are
/// scaled to unit norm, then solved by column-pivoted Householder QR. A
/// rank-deficient design falls back to ridge-jittered normal equations on the
/// same unit-norm columns and sets info.ridge_jitter.
inline LinearModel fit_ols(const Matrix& x, std::span<const double> y, std::vector<std::string> feature_names = {}) {
  detail::check_xy(x, y);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n <= p) {
    throw Error(ErrorKind::InsufficientRows,
                "OLS needs more rows than features (" + std::to_string(n) + " rows, " + std::to_string(p) + " features)");
  }
  Eigen::MatrixXd a(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    a(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = x(i, j);
  }
  Eigen::VectorXd norms = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (norms(j) == 0.0) norms(j) = 1.0;
  }
  a = a * norms.cwiseInverse().asDiagonal();
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(n));

  LinearModel model;
  Eigen::VectorXd theta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() == a.cols()) {
    theta = qr.solve(target);
  } else {
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += kOlsRidgeJitter;
    theta = gram.ldlt().solve(a.transpose() * target);
    model.info.ridge_jitter = true;
  }
  theta = theta.cwiseQuotient(norms);
  if (!theta.allFinite()) throw Error(ErrorKind::InvalidData, "OLS solution is not finite");

  model.intercept = theta(0);
  model.coefficients.resize(p);
  for (std::size_t j = 0; j < p; ++j) model.coefficients[j] = theta(static_cast<Eigen::Index>(j + 1));
  model.feature_names = std::move(feature_names);
  return model;
}

struct MseGradient {
  std::vector<double> beta;
  double intercept = 0.0;
};

/// Gradient of (1/n) sum (b + beta.x_i - y_i)^2 + l2 * |beta|^2.
inline MseGradient mse_gradient(std::span<const double> beta, double intercept, const Matrix& x,
                                std::span<const double> y, double l2 = 0.0) {
  if (x.rows() != y.size() || x.cols() != beta.size() || x.rows() == 0) {
    throw Error(ErrorKind::ShapeError, "mse_gradient: inconsistent shapes");
  }
  MseGradient g{std::vector<double>(beta.size(), 0.0), 0.0};
  const double scale = 2.0 / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double r = intercept + detail::dot(beta, row) - y[i];
    g.intercept += scale * r;
    for (std::size_t j = 0; j < beta.size(); ++j) g.beta[j] += scale * r * row[j];
  }
  for (std::size_t j = 0; j < beta.size(); ++j) g.beta[j] += 2.0 * l2 * beta[j];
  return g;
}

inline std::vector<double> predict_linear(const LinearModel& m, const Matrix& x) {
  if (x.cols() != m.p()) {
    throw Error(ErrorKind::ShapeError,
                "linear model expects " + std::to_string(m.p()) + " features, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  std::vector<double> z(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (m.scaler) {
      apply_scaler_row(*m.scaler, x.row(i), z);
      out[i] = m.intercept + detail::dot(m.coefficients, z);
    } else {
      out[i] = m.intercept + detail::dot(m.coefficients, x.row(i));
    }
  }
  return out;
}

/// Plain per-sample SGD on squared error with an L2 penalty on the
/// coefficients (not the intercept). Features are z-scored internally; the
/// scaler is stored in the model so it predicts from raw features.
inline LinearModel fit_sgd(const Matrix& x, std::span<const double> y, const SgdConfig& cfg,
                           const std::vector<bool>& passthrough = {}, std::vector<std::string> feature_names = {}) {
  cfg.validate();
  detail::check_xy(x, y);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();

  LinearModel model;
  model.scaler = fit_scaler(x, passthrough, feature_names);
  const Matrix z = apply_scaler(*model.scaler, x);
  model.coefficients.assign(p, 0.0);
  model.feature_names = std::move(feature_names);

  auto& beta = model.coefficients;
  double& b = model.intercept;
  auto train_mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = b + detail::dot(beta, z.row(i)) - y[i];
      s += r * r;
    }
    return s / static_cast<double>(n);
  };

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const double lr = cfg.learning_rate;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const auto row = z.row(i);
      const double g = 2.0 * (b + detail::dot(beta, row) - y[i]);
      if (!std::isfinite(g)) throw Error(ErrorKind::Diverged, "SGD diverged in epoch " + std::to_string(epoch));
      b -= lr * g;
      for (std::size_t j = 0; j < p; ++j) beta[j] -= lr * (g * row[j] + 2.0 * cfg.l2 * beta[j]);
    }
    if (!std::isfinite(b) || !all_finite(beta)) {
      throw Error(ErrorKind::Diverged, "SGD diverged in epoch " + std::to_string(epoch));
    }
    if (epoch % 100 == 0) {
      const double m = train_mse();
      model.info.checkpoint_mse.push_back(m);
      model.info.checkpoint_loss.push_back(m + cfg.l2 * detail::dot(beta, beta));
    }
  }
  model.info.epochs_run = cfg.epochs;
  model.info.final_train_mse = train_mse();
  if (!std::isfinite(model.info.final_train_mse)) {
    throw Error(ErrorKind::Diverged, "SGD diverged in epoch " + std::to_string(cfg.epochs));
  }
  return model;
}

}  // namespace yieldcast
