#pragma once

#include "midpoint/rng.hpp"
#include "midpoint/types.hpp"

namespace midpoint {

// Small-argument-stable primitives for the Ito-isometry integrals below.
//   one_minus_exp(s) = 1 - e^{-s}
//   integral_linear(s) = int_0^s (1 - e^{-w}) dw
//   integral_square(s) = int_0^s (1 - e^{-w})^2 dw
double one_minus_exp(double s) noexcept;
double integral_linear(double s) noexcept;
double integral_square(double s) noexcept;

/// Gaussian increment of the frozen-score underdamped Langevin step over a
/// duration `step`, already scaled by sqrt(2 gamma):
///   zeta_v = sqrt(2g) int_0^step e^{-g(step-s)} dB_s
///   zeta_x = sqrt(2g) int_0^step (1 - e^{-g(step-s)}) / g dB_s
/// Columns are particles when the block is batched.
struct UldNoiseBlock {
  Batch zeta_x;
  Batch zeta_v;
  double step = 0.0;
  double gamma = 0.0;
};

/// Per-coordinate covariance of (zeta_x, zeta_v).
Eigen::Matrix2d uld_noise_covariance(double step, double gamma);

/// One d-dimensional block drawn from the stream's sequential cursor.
UldNoiseBlock sample_uld_noise(RngStream& rng, double step, double gamma, int d);

/// Batched draw: column j uses particle `first_particle + j`.
void fill_uld_noise(const RngStream& rng, double step, double gamma, std::uint64_t first_particle,
                    UldNoiseBlock& block);

/// The three Ito integrals of the randomized-midpoint underdamped scheme with
/// friction 2, for a single (alpha, h):
///   W1 = int_0^{alpha h} (1 - e^{-2(alpha h - s)}) dB_s
///   W2 = int_0^h (1 - e^{-2(h - s)}) dB_s
///   W3 = int_0^h e^{-2(h - s)} dB_s
/// The step applies the sqrt(u), sqrt(u) and 2 sqrt(u) factors itself; `u`
/// is stored so the step can reject a block drawn for another setting.
struct ShenLeeNoiseBlock {
  Vector w1;
  Vector w2;
  Vector w3;
  double alpha = 0.0;
  double h = 0.0;
  double u = 0.0;
};

Eigen::Matrix3d shenlee_noise_covariance(double alpha, double h);

/// Square-root factor F (F F^T = cov) of a positive semidefinite 3x3
/// matrix.  A zero-variance coordinate (W1 at alpha = 0) gets an exactly
/// zero row.  Throws
/// std::domain_error("degenerate noise covariance") when the matrix is not
/// PSD to working precision.
Eigen::Matrix3d psd_cholesky(const Eigen::Matrix3d& cov);

ShenLeeNoiseBlock sample_shenlee_noise(RngStream& rng, double alpha, double h, double u, int d);

}  // namespace midpoint
