#include "midpoint/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace midpoint {

double one_minus_exp(double s) noexcept { return -std::expm1(-s); }

double integral_linear(double s) noexcept {
  if (s > 0.1) return s + std::expm1(-s);
  // sum_{n>=2} (-1)^n s^n / n!
  double term = -s;
  double sum = 0.0;
  for (int n = 2; n < 20; ++n) {
    term *= -s / n;
    sum += term;
  }
  return sum;
}

double integral_square(double s) noexcept {
  if (s > 0.1) return s - 2.0 * one_minus_exp(s) + 0.5 * one_minus_exp(2.0 * s);
  // sum_{n>=3} (-1)^{n+1} (2^{n-1} - 2) s^n / n!
  double pow_over_fact = s * s / 2.0;
  double two_pow = 2.0;
  double sum = 0.0;
  for (int n = 3; n < 24; ++n) {
    pow_over_fact *= s / n;
    two_pow *= 2.0;
    const double sign = (n % 2 == 0) ? -1.0 : 1.0;
    sum += sign * (two_pow - 2.0) * pow_over_fact;
  }
  return sum;
}

Eigen::Matrix2d uld_noise_covariance(double step, double gamma) {
  if (!(step > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("uld noise: step and gamma must be positive");
  const double s = gamma * step;
  const double e1 = one_minus_exp(s);
  Eigen::Matrix2d cov;
  cov(0, 0) = 2.0 / (gamma * gamma) * integral_square(s);
  cov(1, 1) = one_minus_exp(2.0 * s);
  cov(0, 1) = cov(1, 0) = e1 * e1 / gamma;
  return cov;
}

namespace {

struct Factor2 {
  double a, b, c;  // [[a, 0], [b, c]]
};

Factor2 factor_uld(double step, double gamma) {
  const Eigen::Matrix2d cov = uld_noise_covariance(step, gamma);
  const double a = std::sqrt(cov(0, 0));
  const double b = a > 0.0 ? cov(1, 0) / a : 0.0;
  const double c = std::sqrt(std::max(cov(1, 1) - b * b, 0.0));
  return {a, b, c};
}

}  // namespace

UldNoiseBlock sample_uld_noise(RngStream& rng, double step, double gamma, int d) {
  const Factor2 f = factor_uld(step, gamma);
  UldNoiseBlock block{Batch(d, 1), Batch(d, 1), step, gamma};
  for (int i = 0; i < d; ++i) {
    const double z1 = rng.next_normal();
    const double z2 = rng.next_normal();
    block.zeta_x(i, 0) = f.a * z1;
    block.zeta_v(i, 0) = f.b * z1 + f.c * z2;
  }
  return block;
}

void fill_uld_noise(const RngStream& rng, double step, double gamma, std::uint64_t first_particle,
                    UldNoiseBlock& block) {
  const Factor2 f = factor_uld(step, gamma);
  block.step = step;
  block.gamma = gamma;
  const Eigen::Index d = block.zeta_x.rows();
  Batch z(2 * d, block.zeta_x.cols());
  rng.fill_normal(z, first_particle);
  block.zeta_x = f.a * z.topRows(d);
  block.zeta_v = f.b * z.topRows(d) + f.c * z.bottomRows(d);
}

Eigen::Matrix3d shenlee_noise_covariance(double alpha, double h) {
  if (!(h > 0.0) || alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("shenlee noise: need h > 0, alpha in [0,1]");
  const double a = alpha * h;
  const double c = std::exp(-2.0 * (h - a));
  const double ea = one_minus_exp(2.0 * a);
  const double eh = one_minus_exp(2.0 * h);
  Eigen::Matrix3d cov;
  cov(0, 0) = 0.5 * integral_square(2.0 * a);
  cov(1, 1) = 0.5 * integral_square(2.0 * h);
  cov(2, 2) = 0.25 * one_minus_exp(4.0 * h);
  cov(0, 1) = cov(1, 0) = 0.5 * integral_linear(2.0 * a) - 0.25 * c * ea * ea;
  cov(0, 2) = cov(2, 0) = 0.25 * c * ea * ea;
  cov(1, 2) = cov(2, 1) = 0.25 * eh * eh;
  return cov;
}

Eigen::Matrix3d psd_cholesky(const Eigen::Matrix3d& cov) {
  // LDL^T with the pivot taken as the largest remaining Schur-complement
  // diagonal.  The triple is singular to rounding when alpha -> 1 (W1 ~ W2),
  // so whatever is left below tolerance is treated as zero variance.
  const double top = cov.diagonal().maxCoeff();
  const double tol = 1e3 * std::numeric_limits<double>::epsilon() * std::max(top, 1e-300);
  if (!(cov.allFinite()) || cov.diagonal().minCoeff() < 0.0) throw std::domain_error("degenerate noise covariance");
  Eigen::Matrix3d a = cov;
  Eigen::Matrix3d f = Eigen::Matrix3d::Zero();  // columns scaled by sqrt(d_k), rows in pivoted order
  std::array<int, 3> order{0, 1, 2};
  for (int k = 0; k < 3; ++k) {
    int p = k;
    for (int i = k + 1; i < 3; ++i)
      if (a(order[i], order[i]) > a(order[p], order[p])) p = i;
    std::swap(order[k], order[p]);
    const int r = order[k];
    const double pivot = a(r, r);
    if (pivot <= tol) {
      // the rest of the Schur complement must vanish
      for (int i = k; i < 3; ++i)
        for (int j = k; j < 3; ++j)
          if (std::abs(a(order[i], order[j])) > tol) throw std::domain_error("degenerate noise covariance");
      break;
    }
    const double root = std::sqrt(pivot);
    for (int i = k; i < 3; ++i) f(order[i], k) = a(order[i], r) / root;
    for (int i = k + 1; i < 3; ++i)
      for (int j = k + 1; j < 3; ++j) a(order[i], order[j]) -= f(order[i], k) * f(order[j], k);
  }
  return f;
}

ShenLeeNoiseBlock sample_shenlee_noise(RngStream& rng, double alpha, double h, double u, int d) {
  if (!(u > 0.0)) throw std::invalid_argument("shenlee noise: u must be positive");
  const Eigen::Matrix3d l = psd_cholesky(shenlee_noise_covariance(alpha, h));
  ShenLeeNoiseBlock block{Vector(d), Vector(d), Vector(d), alpha, h, u};
  for (int i = 0; i < d; ++i) {
    const Eigen::Vector3d z(rng.next_normal(), rng.next_normal(), rng.next_normal());
    const Eigen::Vector3d w = l * z;
    block.w1(i) = w(0);
    block.w2(i) = w(1);
    block.w3(i) = w(2);
  }
  return block;
}

}  // namespace midpoint
