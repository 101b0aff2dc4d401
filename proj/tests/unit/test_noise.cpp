#include "doctest.h"
#include "oracles.hpp"

#include "midpoint/noise.hpp"

#include <cmath>

using namespace midpoint;

TEST_CASE("ULD covariance closed-form values") {
  const Eigen::Matrix2d c = uld_noise_covariance(1.0, 1.0);
  CHECK(c(1, 1) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  CHECK(c(1, 1) == doctest::Approx(0.864664716763387).epsilon(1e-12));
  // small gamma*delta: Var(zeta_v) ~ 2 gamma delta
  const Eigen::Matrix2d s = uld_noise_covariance(1e-4, 1.0);
  CHECK(std::abs(s(1, 1) / 2e-4 - 1.0) <= 0.01);
}

TEST_CASE("ULD covariance matches the expanded Ito forms") {
  for (double g : {0.5, 1.0, 3.0}) {
    for (double dlt : {1e-3, 0.05, 0.4, 2.0}) {
      const long double G = g, D = dlt;
      const long double e1 = 1.0L - std::exp(-G * D), e2 = 1.0L - std::exp(-2.0L * G * D);
      const long double vv = e2;
      const long double xv = (2.0L / G) * e1 - (1.0L / G) * e2;
      const long double xx = (2.0L / G) * (D - (2.0L / G) * e1 + (1.0L / (2.0L * G)) * e2);
      const Eigen::Matrix2d c = uld_noise_covariance(dlt, g);
      CHECK(c(1, 1) == doctest::Approx(static_cast<double>(vv)).epsilon(1e-10));
      CHECK(c(0, 1) == doctest::Approx(static_cast<double>(xv)).epsilon(1e-8));
      CHECK(c(0, 0) == doctest::Approx(static_cast<double>(xx)).epsilon(1e-6));
    }
  }
}

TEST_CASE("small-argument integrals agree with long-double evaluation") {
  for (double s : {1e-6, 1e-3, 0.05, 0.099, 0.1, 0.101, 0.5}) {
    const long double S = s;
    const long double lin = S - (1.0L - std::exp(-S));
    const long double sq = S - 2.0L * (1.0L - std::exp(-S)) + 0.5L * (1.0L - std::exp(-2.0L * S));
    CHECK(integral_linear(s) == doctest::Approx(static_cast<double>(lin)).epsilon(1e-9));
    if (s >= 1e-3) CHECK(integral_square(s) == doctest::Approx(static_cast<double>(sq)).epsilon(1e-6));
  }
  // leading terms of the series
  CHECK(integral_linear(1e-6) == doctest::Approx(0.5e-12).epsilon(1e-5));
  CHECK(integral_square(1e-5) == doctest::Approx(1e-15 / 3.0).epsilon(1e-4));
}

TEST_CASE("ULD noise agrees with a fine-grid Euler-Maruyama simulation") {
  const double settings[][2] = {{0.05, 1.0}, {0.5, 1.0}, {0.2, 3.0}};
  for (std::size_t k = 0; k < 3; ++k) {
    const double step = settings[k][0], gamma = settings[k][1];
    const Eigen::Matrix2d ref = oracle::em_uld_covariance(step, gamma, 2000, 100000, 100 + k);
    constexpr Eigen::Index n = 400000;
    UldNoiseBlock b{Batch(1, n), Batch(1, n), 0.0, 0.0};
    fill_uld_noise(RngStream(5).child(k), step, gamma, 0, b);
    Eigen::Matrix2d emp;
    emp(0, 0) = b.zeta_x.squaredNorm() / n;
    emp(1, 1) = b.zeta_v.squaredNorm() / n;
    emp(0, 1) = emp(1, 0) = b.zeta_x.cwiseProduct(b.zeta_v).sum() / n;
    CHECK(oracle::scaled_gap(emp, ref) <= 0.03);
    CHECK(oracle::scaled_gap(uld_noise_covariance(step, gamma), ref) <= 0.02);
  }
}

TEST_CASE("sequential ULD block has the right law and is independent across coordinates") {
  RngStream r(12);
  constexpr int d = 4;
  Eigen::Matrix<double, 8, 8> acc = Eigen::Matrix<double, 8, 8>::Zero();
  constexpr int n = 50000;
  for (int k = 0; k < n; ++k) {
    const UldNoiseBlock b = sample_uld_noise(r, 0.3, 1.0, d);
    Eigen::Matrix<double, 8, 1> z;
    z << b.zeta_x.col(0), b.zeta_v.col(0);
    acc += z * z.transpose();
  }
  acc /= n;
  const Eigen::Matrix2d c = uld_noise_covariance(0.3, 1.0);
  for (int i = 0; i < d; ++i) {
    CHECK(acc(i, i) == doctest::Approx(c(0, 0)).epsilon(0.05));
    CHECK(acc(d + i, d + i) == doctest::Approx(c(1, 1)).epsilon(0.05));
    CHECK(acc(i, d + i) == doctest::Approx(c(0, 1)).epsilon(0.05));
    for (int j = 0; j < d; ++j)
      if (j != i) CHECK(std::abs(acc(i, d + j)) < 0.05 * std::sqrt(c(0, 0) * c(1, 1)));
  }
}

TEST_CASE("Shen-Lee noise: alpha = 0 gives W1 = 0 exactly") {
  RngStream r(1);
  const ShenLeeNoiseBlock b = sample_shenlee_noise(r, 0.0, 0.1, 1.0, 5);
  CHECK(b.w1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.w2.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("Shen-Lee noise is deterministic per key") {
  RngStream a(31), b(31);
  const ShenLeeNoiseBlock x = sample_shenlee_noise(a, 0.4, 0.2, 0.5, 3);
  const ShenLeeNoiseBlock y = sample_shenlee_noise(b, 0.4, 0.2, 0.5, 3);
  CHECK(x.w1 == y.w1);
  CHECK(x.w2 == y.w2);
  CHECK(x.w3 == y.w3);
}

TEST_CASE("Shen-Lee covariance agrees with a fine-grid simulation") {
  const double settings[][2] = {{0.5, 0.1}, {0.25, 0.5}, {0.9, 1.0}};
  for (std::size_t k = 0; k < 3; ++k) {
    const double alpha = settings[k][0], h = settings[k][1];
    const Eigen::Matrix3d ref = oracle::em_shenlee_covariance(alpha, h, 2000, 100000, 900 + k);
    CHECK(oracle::scaled_gap(shenlee_noise_covariance(alpha, h), ref) <= 0.02);
    RngStream r(40 + k);
    const ShenLeeNoiseBlock b = sample_shenlee_noise(r, alpha, h, 1.0, 300000);
    Eigen::Matrix3d emp;
    const Vector* w[] = {&b.w1, &b.w2, &b.w3};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) emp(i, j) = w[i]->dot(*w[j]) / 300000.0;
    CHECK(oracle::scaled_gap(emp, ref) <= 0.03);
  }
}

TEST_CASE("psd_cholesky handles semidefinite input and rejects indefinite input") {
  const Eigen::Matrix3d c = shenlee_noise_covariance(0.0, 0.3);
  const Eigen::Matrix3d l = psd_cholesky(c);
  CHECK((l * l.transpose() - c).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(l.row(0).cwiseAbs().maxCoeff() == 0.0);
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 1) = bad(1, 0) = 2.0;
  CHECK_THROWS_WITH_AS(psd_cholesky(bad), "degenerate noise covariance", std::domain_error);
  for (double h : {1e-4, 0.01, 0.1, 0.5, 1.0})
    for (double a : {0.0, 1e-3, 0.5, 1.0 - 1e-6, 1.0 - 1e-12, 1.0}) {
      const Eigen::Matrix3d c2 = shenlee_noise_covariance(a, h);
      Eigen::Matrix3d f;
      CHECK_NOTHROW(f = psd_cholesky(c2));
      CHECK((f * f.transpose() - c2).cwiseAbs().maxCoeff() <= 1e-12 * c2.diagonal().maxCoeff());
    }
}

TEST_CASE("noise constructors validate arguments") {
  CHECK_THROWS_AS(uld_noise_covariance(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(uld_noise_covariance(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(shenlee_noise_covariance(1.5, 0.1), std::invalid_argument);
  RngStream r(0);
  CHECK_THROWS_AS(sample_shenlee_noise(r, 0.5, 0.1, 0.0, 2), std::invalid_argument);
}
