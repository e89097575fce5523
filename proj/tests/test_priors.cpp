#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "refinekit/error.hpp"
#include "refinekit/priors.hpp"

using namespace refinekit;

namespace {

struct ColumnStats {
  std::vector<double> mean, var;
};

ColumnStats column_stats(const Matrix& m) {
  std::vector<double> mu, sigma;
  oracle::moments({&m}, mu, sigma);
  for (double& s : sigma) s *= s;
  return {mu, sigma};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(PriorSample, ZeroBetaIsExactlyZero) {
  Rng rng(7, streams::kPrior);
  const Matrix z = sample(PriorSpec::scaled_gaussian(0.0), 64, 8, rng);
  for (double x : z.flat()) EXPECT_EQ(x, 0.0);
}

TEST(PriorSample, StandardGaussianStatistics) {
  Rng rng(11, streams::kPrior);
  const Matrix z = sample(PriorSpec::standard_gaussian(), 100000, 8, rng);
  const auto s = column_stats(z);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_LT(std::abs(s.mean[k]), 0.02);
    EXPECT_LT(std::abs(s.var[k] - 1.0), 0.05);
  }
}

TEST(PriorSample, UniformStatistics) {
  Rng rng(12);
  const Matrix z = sample(PriorSpec::uniform01(), 100000, 4, rng);
  for (double x : z.flat()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  const auto s = column_stats(z);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(s.mean[k], 0.5, 0.01);
    EXPECT_NEAR(s.var[k], 1.0 / 12.0, 0.005);
  }
}

TEST(PriorSample, ScaledAndMomentStatistics) {
  Rng rng(13);
  const auto s = column_stats(sample(PriorSpec::scaled_gaussian(4.0), 100000, 3, rng));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.var[k], 4.0, 0.1);

  const std::vector<double> mu{1.0, -2.0, 0.5}, sigma{0.5, 2.0, 0.0};
  const Matrix m = sample(PriorSpec::gaussian_moments(mu, sigma), 100000, 3, rng);
  const auto t = column_stats(m);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(t.mean[k], mu[k], 0.03);
    EXPECT_NEAR(std::sqrt(t.var[k]), sigma[k], 0.03);
  }
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_EQ(m(i, 2), 0.5);
}

TEST(PriorSample, DeterministicPerSeed) {
  Rng a(5, streams::kPrior), b(5, streams::kPrior), c(6, streams::kPrior);
  const Matrix x = sample(PriorSpec::standard_gaussian(), 10, 4, a);
  EXPECT_EQ(x, sample(PriorSpec::standard_gaussian(), 10, 4, b));
  EXPECT_NE(x, sample(PriorSpec::standard_gaussian(), 10, 4, c));
  EXPECT_NE(x, sample(PriorSpec::standard_gaussian(), 10, 4, a));
}

TEST(PriorSpec, Validation) {
  EXPECT_EQ(code_of([] { PriorSpec{PriorKind::GaussianMoments, {}, {}, 1.0}.validate(3); }), ErrorCode::MissingMoments);
  EXPECT_EQ(code_of([] { PriorSpec::gaussian_moments({0, 0}, {1, 1}).validate(3); }), ErrorCode::MissingMoments);
  EXPECT_EQ(code_of([] { PriorSpec::scaled_gaussian(-0.5).validate(3); }), ErrorCode::NegativeBeta);
  EXPECT_NO_THROW(PriorSpec::scaled_gaussian(0.0).validate(3));
  EXPECT_NO_THROW(PriorSpec::gaussian_moments({0, 0, 0}, {1, 1, 1}).validate(3));
}

TEST(FitMoments, Example) {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 0) = -1.0;
  const Moments mo = fit_moments(m, false);
  EXPECT_EQ(mo.mu, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(mo.sigma, (std::vector<double>{1.0, 0.0}));
}

TEST(FitMoments, PooledMatchesTwoPassOracle) {
  std::mt19937_64 gen(21);
  const Matrix a = oracle::random_matrix(50, 6, gen, 3.0), b = oracle::random_matrix(70, 6, gen, 0.5);
  const Matrix* tables[] = {&a, &b};
  const Moments mo = fit_moments(tables, false);
  std::vector<double> mu, sigma;
  oracle::moments({&a, &b}, mu, sigma);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(mo.mu[k], mu[k], 1e-12);
    EXPECT_NEAR(mo.sigma[k], sigma[k], 1e-12);
  }

  Matrix stacked(120, 6);
  for (std::size_t i = 0; i < 50; ++i) std::copy(a.row(i).begin(), a.row(i).end(), stacked.row(i).begin());
  for (std::size_t i = 0; i < 70; ++i) std::copy(b.row(i).begin(), b.row(i).end(), stacked.row(50 + i).begin());
  const Moments single = fit_moments(stacked, false);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(single.mu[k], mo.mu[k], 1e-12);
    EXPECT_NEAR(single.sigma[k], mo.sigma[k], 1e-12);
  }
}

TEST(FitMoments, NormalizeOption) {
  std::mt19937_64 gen(22);
  const Matrix a = oracle::random_matrix(40, 5, gen, 10.0);
  const Matrix u = oracle::unit_rows(a);
  const Moments mo = fit_moments(a, true);
  std::vector<double> mu, sigma;
  oracle::moments({&u}, mu, sigma);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(mo.mu[k], mu[k], 1e-12);
}

TEST(FitMoments, ConstantColumnAndErrors) {
  Matrix m(5, 2, 3.25);
  for (std::size_t i = 0; i < 5; ++i) m(i, 1) = static_cast<double>(i);
  const Moments mo = fit_moments(m, false);
  EXPECT_EQ(mo.mu[0], 3.25);
  EXPECT_EQ(mo.sigma[0], 0.0);
  EXPECT_EQ(code_of([] { fit_moments(Matrix(1, 3, 1.0), false); }), ErrorCode::InsufficientData);
}
