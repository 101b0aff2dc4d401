#pragma once

#include "midpoint/rng.hpp"
#include "midpoint/target.hpp"
#include "midpoint/types.hpp"

#include <limits>
#include <string>
#include <vector>

namespace midpoint {

/// Metrics refuse batches smaller than this.
inline constexpr Eigen::Index kMinSampleSize = 100;

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  long n = 0;
};

/// Sorted quantiles F^{-1}(p) of a 1-D mixture for increasing `probs`.
Array mixture_quantiles(const Mixture1d& law, const Array& probs);

/// W2 between two samples.  In 1-D the sorted (quantile) coupling; in
/// higher dimension the sliced distance over `directions` random unit
/// directions, sqrt(mean_u W2(u.a, u.b)^2).  Both batches need the same
/// size.
Estimate w2_empirical(ConstBatchRef a, ConstBatchRef b, const RngStream& rng, int directions = 128);

/// W2 against q_t using the exact projected quantiles (sliced in d > 1).
Estimate w2_to_target(ConstBatchRef a, const TargetModel& target, double t, const RngStream& rng,
                      int directions = 128);

/// Gaussian W2 between moment-matched fits of two samples.  On a Gaussian
/// target, with `b` the reference solution of the same initial draw, the
/// common sampling noise cancels and the bias of `a` stays visible far below
/// the empirical-coupling noise floor.  Stderr from 10 disjoint sub-batches.
Estimate w2_moment_matched(ConstBatchRef a, ConstBatchRef b);

/// Closed-form W2 between two Gaussians.
double gaussian_w2(const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2);

/// Exact TV between two 1-D Gaussians.
double gaussian_tv_1d(double m1, double s1, double m2, double s2);
/// TV between Gaussians; exact in 1-D, Monte Carlo with `samples` draws otherwise.
double gaussian_tv(const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2, const RngStream& rng,
                   Eigen::Index samples = 200000);

struct TvEstimate {
  /// Lower bound on TV: the largest projected distance found.
  double lower_bound = 0.0;
  double stderr_ = 0.0;
  long n = 0;
  int best_direction = 0;
  /// TV between the moment-fitted Gaussian and the target (Gaussian targets
  /// only, NaN otherwise).
  double gaussian_fit = std::numeric_limits<double>::quiet_NaN();
};

/// Max over up to `projections` 1-D directions (coordinate axes first, then
/// random) of the TV between a Gaussian KDE of the projected sample and the
/// exact projected density smoothed by the same kernel.
TvEstimate tv_estimate(ConstBatchRef x, const TargetModel& target, double t, const RngStream& rng,
                       int projections = 64);

/// Projected TV along one direction (same construction as tv_estimate).
double projected_tv(const Array& y, const Mixture1d& law);

/// TV(q_t, N(0, I)) by Monte Carlo over exact draws and densities.
Estimate tv_to_standard_normal(const TargetModel& target, double t, Eigen::Index samples, const RngStream& rng);

/// E_{q_t} ||grad log q_t||^2 by Monte Carlo.
Estimate score_second_moment(const TargetModel& target, double t, Eigen::Index samples, const RngStream& rng);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Least-squares slope of log(err) against log(h) with a pairs-bootstrap
/// 95% interval.
OrderFit fit_order(const std::vector<double>& h, const std::vector<double>& err, const RngStream& rng,
                   int resamples = 2000);

struct LemmaCheck {
  std::string name;
  double t = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Constant in the score-norm bound E||grad log q_t||^2 <= C d / min(t, 1):
/// the point-mass value d / (1 - e^{-2t}) at t = 1.
double score_norm_constant();

/// Monte Carlo checks of the score-norm bound (one row per t) and of
/// TV(q_t, N(0, I)) <= (sqrt(d) + m2) e^{-t} (one row per t).
std::vector<LemmaCheck> check_helper_lemmas(const TargetModel& target, const std::vector<double>& t_grid,
                                            Eigen::Index samples, const RngStream& rng);

struct MetricReport {
  Estimate w2;
  TvEstimate tv;
  std::vector<std::pair<std::string, OrderFit>> orders;
  long n = 0;
};

MetricReport evaluate_sample(ConstBatchRef x, const TargetModel& target, double t, const RngStream& rng);

}  // namespace midpoint
