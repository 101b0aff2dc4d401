#pragma once

#include "midpoint/rng.hpp"
#include "midpoint/types.hpp"

#include <string>
#include <vector>

namespace midpoint {

enum class TargetKind { IsotropicGaussian, AnisotropicGaussian, GaussianMixture, QuadraticLogConcave };

std::string to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& name);

/// One Gaussian component of the data distribution, with the eigenbasis of
/// its covariance cached: the OU flow keeps that basis fixed and only moves
/// the eigenvalues, lambda_t = e^{-2t} lambda + (1 - e^{-2t}).
struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// One-dimensional Gaussian mixture; the law of u^T x when x follows a
/// (noised) target and u is a unit vector.
struct Mixture1d {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;

  double pdf(double y) const;
  double cdf(double y) const;
  double quantile(double p) const;
  double mean() const;
  double variance() const;
  /// Law of Y + sd * Z, Z standard normal and independent.
  Mixture1d convolved(double sd) const;
};

class TargetModel;

/// Law of the forward OU process at time t started from `base`.
struct NoisedMarginal {
  const TargetModel* base = nullptr;
  double t = 0.0;

  Vector component_mean(std::size_t k) const;
  Matrix component_cov(std::size_t k) const;
  Vector mean() const;
  Matrix covariance() const;
};

/// Analytic data distribution with exact scores along the OU forward process.
class TargetModel {
 public:
  static TargetModel isotropic_gaussian(int dim, double variance, Vector mean = Vector());
  static TargetModel anisotropic_gaussian(Vector mean, Matrix cov);
  static TargetModel gaussian_mixture(std::vector<double> weights, std::vector<Vector> means, std::vector<Matrix> covs);
  /// Quadratic potential; the mode is the root of the score.
  static TargetModel quadratic_log_concave(Vector mode, Matrix cov);

  TargetKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  bool single_gaussian() const noexcept { return components_.size() == 1; }

  /// Strong-convexity constant m of -log q_0 (Gaussian kinds only).
  double strong_convexity() const;
  /// Lipschitz constant L of the scores.  For QuadraticLogConcave this is the
  /// smoothness of -log q_0; for the other kinds it bounds grad log q_t over
  /// all t >= 0 (closed form for one component, a numerical sup for mixtures).
  double smoothness() const;
  /// Overrides for m and L supplied by a config file.
  void set_constants(double m, double L);

  /// sqrt(E ||x||^2) under q_0.
  double second_moment() const;
  /// Root of the score at t = 0 (QuadraticLogConcave / single Gaussian).
  Vector mode() const;

  NoisedMarginal at(double t) const { return NoisedMarginal{this, t}; }

  /// Batched exact score; `t` has one entry per column.
  void score(ConstArrayRef t, ConstBatchRef x, BatchRef out) const;
  Vector score(double t, const Vector& x) const;
  /// Log-density of q_t, one entry per column.
  Array log_density(double t, ConstBatchRef x) const;
  /// Hessian of log q_t at a single point.
  Matrix hessian_log_density(double t, const Vector& x) const;

  /// i.i.d. exact draws from q_t.  Column j uses particle j of `rng`.
  Batch sample_exact(double t, Eigen::Index n, const RngStream& rng) const;

  /// Exact score as a ScoreFn; the model must outlive the returned function.
  ScoreFn score_fn() const;

  Mixture1d project(double t, const Vector& direction) const;

 private:
  TargetModel(TargetKind kind, std::vector<GaussianComponent> comps);
  double numeric_smoothness() const;

  TargetKind kind_;
  int dim_ = 0;
  std::vector<GaussianComponent> components_;
  double m_override_ = 0.0;
  double L_override_ = 0.0;
  mutable double L_cache_ = 0.0;
};

/// Smooth, deterministic perturbation of the exact score with prescribed
/// L2(q_t) size.  The field is a sum of low-frequency sinusoidal bumps
///   p(x) = A(t) sum_k a_k sin(w_k . x + phi_k),   ||w_k|| = 1,
/// whose shape is fixed by the stream key and whose scale A(t) makes
/// E_{q_t} ||p||^2 = eps^2 exactly (closed form for Gaussian mixtures).
class ScoreCorruption {
 public:
  static constexpr int kBumps = 5;

  ScoreCorruption(const TargetModel& model, double eps_sc, const RngStream& rng);

  double eps() const noexcept { return eps_; }
  /// A(t) as defined above.
  double amplitude(double t) const;
  /// Upper bound on the Lipschitz constant of the perturbation at time t.
  double lipschitz_bound(double t) const;
  /// Adds the perturbation to `out` column-wise.
  void add_to(ConstArrayRef t, ConstBatchRef x, BatchRef out) const;

 private:
  const TargetModel* model_;
  double eps_;
  Matrix directions_;   // d x kBumps
  Matrix amplitudes_;   // d x kBumps
  Vector phases_;
};

/// Exact score plus the corruption field; eps_sc = 0 returns the exact score.
ScoreFn make_score_fn(const TargetModel& model, double eps_sc, const RngStream& rng);

/// Single-point form: score(model, t, x) plus the perturbation built from `rng`.
Vector corrupt_score(const TargetModel& model, double t, const Vector& x, double eps_sc, const RngStream& rng);

}  // namespace midpoint
