#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "yieldcast/metrics.hpp"

using namespace yieldcast;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no yieldcast::Error thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
  const std::vector<double> y{1, 5, 9, 2};
  EXPECT_EQ(r2(y, y), 1.0);
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_EQ(mse(y, y), 0.0);
  EXPECT_EQ(rmse(y, y), 0.0);
  EXPECT_EQ(max_error(y, y), 0.0);
  EXPECT_EQ(mape(y, y), 0.0);
}

TEST(Metrics, TwoPointHandComputed) {
  const std::vector<double> y{1, 3}, p{0, 0};
  EXPECT_EQ(mae(y, p), 2.0);
  EXPECT_EQ(mse(y, p), 5.0);
  EXPECT_EQ(rmse(y, p), std::sqrt(5.0));
  EXPECT_EQ(max_error(y, p), 3.0);
  EXPECT_EQ(mape(y, p), 100.0);
}

TEST(Metrics, MeanPredictionHasZeroR2) {
  const std::vector<double> y{2, 4, 9};
  EXPECT_NEAR(r2(y, std::vector<double>(3, 5.0)), 0.0, 1e-15);
}

TEST(Metrics, ConstantTargetR2IsUndefined) {
  EXPECT_EQ(kind_of([] { r2(std::vector<double>{3, 3}, std::vector<double>{1, 2}); }), ErrorKind::UndefinedR2);
}

TEST(Metrics, AllZeroTargetsMapeIsUndefined) {
  EXPECT_EQ(kind_of([] { mape(std::vector<double>{0, 0}, std::vector<double>{1, 2}); }), ErrorKind::UndefinedMape);
}

TEST(Metrics, MapeSkipsZeroTargets) {
  const auto d = mape_detail(std::vector<double>{0, 2, 4}, std::vector<double>{5, 1, 4});
  EXPECT_EQ(d.excluded_rows, 1u);
  EXPECT_EQ(d.percent, 25.0);
}

TEST(Metrics, LengthMismatchIsShapeError) {
  EXPECT_EQ(kind_of([] { mse(std::vector<double>{1, 2}, std::vector<double>{1}); }), ErrorKind::ShapeError);
}

TEST(Metrics, EmptyInputIsRejected) {
  EXPECT_EQ(kind_of([] { mae(std::vector<double>{}, std::vector<double>{}); }), ErrorKind::EmptyInput);
}

TEST(Metrics, NonFiniteIsInvalidData) {
  EXPECT_EQ(kind_of([] { mae(std::vector<double>{1, NAN}, std::vector<double>{1, 2}); }), ErrorKind::InvalidData);
}

TEST(Metrics, OracleAgreementAndOrdering) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(gen);
    const auto y = synth::uniform_vector(gen, n, 1, 1e5);
    const auto p = synth::uniform_vector(gen, n, 1, 1e5);
    EXPECT_TRUE(oracle::rel_close(mse(y, p), oracle::mse(y, p), 1e-12));
    EXPECT_TRUE(oracle::rel_close(mae(y, p), oracle::mae(y, p), 1e-12));
    EXPECT_TRUE(oracle::rel_close(rmse(y, p), oracle::rmse(y, p), 1e-12));
    EXPECT_TRUE(oracle::rel_close(max_error(y, p), oracle::max_error(y, p), 1e-12));
    EXPECT_TRUE(oracle::rel_close(r2(y, p), oracle::r2(y, p), 1e-12));
    EXPECT_TRUE(oracle::rel_close(mape(y, p), oracle::mape(y, p), 1e-12));
    const double m = mse(y, p), e = rmse(y, p);
    EXPECT_NEAR(e * e, m, 1e-12 * m);
    EXPECT_GE(max_error(y, p), e);
    EXPECT_GE(e, mae(y, p) * (1 - 1e-15));
    double sst = 0, mean = oracle::mean(y);
    for (double v : y) sst += (v - mean) * (v - mean);
    EXPECT_TRUE(oracle::rel_close(r2(y, p), 1 - m * static_cast<double>(n) / sst, 1e-10, 1e-12));
  }
}

TEST(MetricsBundle, MatchesIndividualOps) {
  std::mt19937_64 gen(4);
  const auto y = synth::uniform_vector(gen, 100, 10, 20);
  const auto p = synth::uniform_vector(gen, 100, 10, 20);
  const auto b = metrics_bundle(y, p);
  EXPECT_EQ(b.n, 100u);
  EXPECT_EQ(*b.r2, r2(y, p));
  EXPECT_EQ(b.mae, mae(y, p));
  EXPECT_EQ(b.mse, mse(y, p));
  EXPECT_EQ(b.rmse, rmse(y, p));
  EXPECT_EQ(b.max_err, max_error(y, p));
  EXPECT_EQ(*b.mape_percent, mape(y, p));
}

TEST(MetricsBundle, UndefinedMetricsAreEmpty) {
  const auto b = metrics_bundle(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  EXPECT_FALSE(b.r2);
  EXPECT_FALSE(b.mape_percent);
  EXPECT_EQ(b.mse, 1.0);
}

TEST(Kappa, IdentityIsPerfect) {
  std::mt19937_64 gen(1);
  const auto y = synth::uniform_vector(gen, 100);
  const auto k = cohen_kappa(y, y);
  EXPECT_EQ(k.kappa, 1.0);
  EXPECT_EQ(k.band, "perfect agreement");
  EXPECT_EQ(k.bin_edges.size(), 6u);
}

TEST(Kappa, IndependentVectorsNearZero) {
  std::mt19937_64 gen(2);
  const auto y = synth::uniform_vector(gen, 10000);
  const auto p = synth::uniform_vector(gen, 10000);
  const auto k = cohen_kappa(y, p);
  EXPECT_LT(std::fabs(k.kappa), 0.05);
  EXPECT_EQ(k.band, "agreement equivalent to chance");
}

TEST(Kappa, SixRowTwoBinTable) {
  // Median of y is 3.5: y bins {0,0,0,1,1,1}; yhat bins {0,0,1,1,1,0}.
  const std::vector<double> y{1, 2, 3, 4, 5, 6};
  const std::vector<double> p{1, 2, 5, 6, 4, 0};
  const auto k = cohen_kappa(y, p, 2);
  // po = 4/6, pe = (3/6)(3/6) + (3/6)(3/6) = 1/2.
  EXPECT_NEAR(k.kappa, (4.0 / 6 - 0.5) / 0.5, 1e-15);
  EXPECT_NEAR(k.kappa, oracle::kappa_from_labels({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 0}, 2), 1e-15);
  EXPECT_EQ(k.band, "fair agreement");
}

TEST(Kappa, AllRowsInOneBinIsUndefined) {
  EXPECT_EQ(kind_of([] { cohen_kappa(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0)); }),
            ErrorKind::UndefinedKappa);
}

TEST(Kappa, BandBoundariesAreHalfOpen) {
  EXPECT_EQ(kappa_band(-0.3), "agreement equivalent to chance");
  EXPECT_EQ(kappa_band(0.0999), "agreement equivalent to chance");
  EXPECT_EQ(kappa_band(0.1), "slight agreement");
  EXPECT_EQ(kappa_band(0.21), "fair agreement");
  EXPECT_EQ(kappa_band(0.41), "moderate agreement");
  EXPECT_EQ(kappa_band(0.61), "substantial agreement");
  EXPECT_EQ(kappa_band(0.81), "near-perfect agreement");
  EXPECT_EQ(kappa_band(0.999), "near-perfect agreement");
  EXPECT_EQ(kappa_band(1.0), "perfect agreement");
}

TEST(Kappa, StaysInUnitInterval) {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 50; ++t) {
    const auto y = synth::uniform_vector(gen, 40);
    auto p = y;
    for (auto& v : p) v = -v;
    const auto k = cohen_kappa(y, p);
    EXPECT_GE(k.kappa, -1.0);
    EXPECT_LE(k.kappa, 1.0);
  }
}
