#include "midpoint/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace midpoint {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

GaussianComponent make_component(double weight, Vector mean, Matrix cov) {
  const auto d = mean.size();
  if (cov.rows() != d || cov.cols() != d) throw std::invalid_argument("target: covariance shape does not match mean");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("target: covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("target: covariance is not positive definite");
  return GaussianComponent{weight, std::move(mean), std::move(cov), eig.eigenvalues(), eig.eigenvectors()};
}

void require_finite(ConstBatchRef x) {
  if (!x.allFinite()) throw std::domain_error("invalid state");
}

// Per-component pieces of log N(x; mean_t, cov_t) and its gradient for a
// batch with per-column times.
struct ComponentEval {
  Array log_pdf;  // n
  Batch grad;     // d x n
};

ComponentEval evaluate_component(const GaussianComponent& c, ConstArrayRef t, ConstBatchRef x, bool want_grad,
                                 bool want_log_pdf = true) {
  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  ComponentEval out;
  if (n > 0 && t.minCoeff() == t.maxCoeff()) {
    // shared time: one noised spectrum for the whole batch
    const double e = std::exp(-t(0));
    const Array s = c.eigenvalues.array() * e * e + (1.0 - e * e);
    const Batch y = c.eigenvectors.transpose() * (x.colwise() - c.mean * e);
    const Eigen::ArrayXXd z = y.array().colwise() / s;
    if (want_log_pdf)
      out.log_pdf = std::log(c.weight) - 0.5 * (y.array() * z).colwise().sum().transpose() - 0.5 * s.log().sum() -
                    0.5 * static_cast<double>(d) * kLog2Pi;
    if (want_grad) out.grad = -(c.eigenvectors * z.matrix());
    return out;
  }
  const Array decay = (-t).unaryExpr(ScalarExp{});
  const Array decay2 = decay.square();
  const Batch centered = x - c.mean * decay.matrix().transpose();
  const Batch y = c.eigenvectors.transpose() * centered;
  Eigen::ArrayXXd s(d, n);
  for (Eigen::Index j = 0; j < n; ++j)
    s.col(j) = c.eigenvalues.array() * decay2(j) + (1.0 - decay2(j));
  const Eigen::ArrayXXd z = y.array() / s;
  if (want_log_pdf)
    out.log_pdf = std::log(c.weight) - 0.5 * (y.array() * z).colwise().sum().transpose() -
                  0.5 * s.unaryExpr(ScalarLog{}).colwise().sum().transpose() - 0.5 * static_cast<double>(d) * kLog2Pi;
  if (want_grad) out.grad = -(c.eigenvectors * z.matrix());
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::IsotropicGaussian: return "IsotropicGaussian";
    case TargetKind::AnisotropicGaussian: return "AnisotropicGaussian";
    case TargetKind::GaussianMixture: return "GaussianMixture";
    case TargetKind::QuadraticLogConcave: return "QuadraticLogConcave";
  }
  return "unknown";
}

TargetKind target_kind_from_string(const std::string& name) {
  if (name == "IsotropicGaussian") return TargetKind::IsotropicGaussian;
  if (name == "AnisotropicGaussian") return TargetKind::AnisotropicGaussian;
  if (name == "GaussianMixture") return TargetKind::GaussianMixture;
  if (name == "QuadraticLogConcave") return TargetKind::QuadraticLogConcave;
  throw std::invalid_argument("unknown target kind: " + name);
}

// --- Mixture1d -------------------------------------------------------------

double Mixture1d::pdf(double y) const {
  double p = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (y - means[k]) / sds[k];
    p += weights[k] * std::exp(-0.5 * z * z) / (sds[k] * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

double Mixture1d::cdf(double y) const {
  double c = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) c += weights[k] * normal_cdf((y - means[k]) / sds[k]);
  return c;
}

double Mixture1d::quantile(double p) const {
  double lo = means[0] - 12.0 * sds[0];
  double hi = means[0] + 12.0 * sds[0];
  for (std::size_t k = 1; k < weights.size(); ++k) {
    lo = std::min(lo, means[k] - 12.0 * sds[k]);
    hi = std::max(hi, means[k] + 12.0 * sds[k]);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double Mixture1d::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) m += weights[k] * means[k];
  return m;
}

double Mixture1d::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) v += weights[k] * (sds[k] * sds[k] + (means[k] - m) * (means[k] - m));
  return v;
}

Mixture1d Mixture1d::convolved(double sd) const {
  Mixture1d out = *this;
  for (double& s : out.sds) s = std::sqrt(s * s + sd * sd);
  return out;
}

// --- NoisedMarginal --------------------------------------------------------

Vector NoisedMarginal::component_mean(std::size_t k) const { return std::exp(-t) * base->components().at(k).mean; }

Matrix NoisedMarginal::component_cov(std::size_t k) const {
  const auto& c = base->components().at(k);
  const double a = std::exp(-2.0 * t);
  const Vector lam = a * c.eigenvalues.array() + (1.0 - a);
  return c.eigenvectors * lam.asDiagonal() * c.eigenvectors.transpose();
}

Vector NoisedMarginal::mean() const {
  Vector m = Vector::Zero(base->dim());
  for (std::size_t k = 0; k < base->components().size(); ++k) m += base->components()[k].weight * component_mean(k);
  return m;
}

Matrix NoisedMarginal::covariance() const {
  const Vector mu = mean();
  Matrix cov = Matrix::Zero(base->dim(), base->dim());
  for (std::size_t k = 0; k < base->components().size(); ++k) {
    const Vector dm = component_mean(k) - mu;
    cov += base->components()[k].weight * (component_cov(k) + dm * dm.transpose());
  }
  return cov;
}

// --- TargetModel -----------------------------------------------------------

TargetModel::TargetModel(TargetKind kind, std::vector<GaussianComponent> comps)
    : kind_(kind), components_(std::move(comps)) {
  if (components_.empty()) throw std::invalid_argument("target: no components");
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ < 1) throw std::invalid_argument("target: dimension must be positive");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) throw std::invalid_argument("target: inconsistent component dimensions");
    if (!(c.weight > 0.0)) throw std::invalid_argument("target: mixture weights must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("target: mixture weights must sum to 1");
}

TargetModel TargetModel::isotropic_gaussian(int dim, double variance, Vector mean) {
  if (dim < 1) throw std::invalid_argument("target: dimension must be positive");
  if (mean.size() == 0) mean = Vector::Zero(dim);
  return TargetModel(TargetKind::IsotropicGaussian,
                     {make_component(1.0, std::move(mean), variance * Matrix::Identity(dim, dim))});
}

TargetModel TargetModel::anisotropic_gaussian(Vector mean, Matrix cov) {
  return TargetModel(TargetKind::AnisotropicGaussian, {make_component(1.0, std::move(mean), std::move(cov))});
}

TargetModel TargetModel::gaussian_mixture(std::vector<double> weights, std::vector<Vector> means,
                                          std::vector<Matrix> covs) {
  if (weights.size() != means.size() || weights.size() != covs.size())
    throw std::invalid_argument("target: weights, means and covs must have equal length");
  std::vector<GaussianComponent> comps;
  for (std::size_t k = 0; k < weights.size(); ++k) comps.push_back(make_component(weights[k], means[k], covs[k]));
  return TargetModel(TargetKind::GaussianMixture, std::move(comps));
}

TargetModel TargetModel::quadratic_log_concave(Vector mode, Matrix cov) {
  return TargetModel(TargetKind::QuadraticLogConcave, {make_component(1.0, std::move(mode), std::move(cov))});
}

void TargetModel::set_constants(double m, double L) {
  if (m < 0.0 || L < 0.0) throw std::invalid_argument("target: m and L must be non-negative");
  if (m > 0.0 && L > 0.0 && m > L) throw std::invalid_argument("target: need 0 < m <= L");
  m_override_ = m;
  L_override_ = L;
}

double TargetModel::strong_convexity() const {
  if (m_override_ > 0.0) return m_override_;
  if (!single_gaussian()) throw std::logic_error("strong convexity is only defined for Gaussian targets");
  return 1.0 / components_.front().eigenvalues.maxCoeff();
}

double TargetModel::smoothness() const {
  if (L_override_ > 0.0) return L_override_;
  if (kind_ == TargetKind::QuadraticLogConcave) return 1.0 / components_.front().eigenvalues.minCoeff();
  if (single_gaussian()) return std::max(1.0, 1.0 / components_.front().eigenvalues.minCoeff());
  if (L_cache_ == 0.0) L_cache_ = numeric_smoothness();
  return L_cache_;
}

double TargetModel::numeric_smoothness() const {
  double L = 1.0;
  for (const auto& c : components_) L = std::max(L, 1.0 / c.eigenvalues.minCoeff());
  const RngStream rng(0x4C1F5C4EULL);
  const double grid[] = {0.0, 0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  for (std::size_t g = 0; g < std::size(grid); ++g) {
    const double t = grid[g];
    const Batch pts = sample_exact(t, 400, rng.child(g));
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_log_density(t, pts.col(j)), Eigen::EigenvaluesOnly);
      L = std::max(L, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
    // Segments between component means carry the largest positive curvature.
    for (std::size_t a = 0; a < components_.size(); ++a) {
      for (std::size_t b = a + 1; b < components_.size(); ++b) {
        for (int s = 0; s <= 64; ++s) {
          const double w = s / 64.0;
          const Vector p = std::exp(-t) * ((1.0 - w) * components_[a].mean + w * components_[b].mean);
          Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_log_density(t, p), Eigen::EigenvaluesOnly);
          L = std::max(L, eig.eigenvalues().cwiseAbs().maxCoeff());
        }
      }
    }
  }
  return L;
}

double TargetModel::second_moment() const {
  double m2 = 0.0;
  for (const auto& c : components_) m2 += c.weight * (c.mean.squaredNorm() + c.cov.trace());
  return std::sqrt(m2);
}

Vector TargetModel::mode() const {
  if (!single_gaussian()) throw std::logic_error("mode is only available in closed form for Gaussian targets");
  return components_.front().mean;
}

void TargetModel::score(ConstArrayRef t, ConstBatchRef x, BatchRef out) const {
  require_finite(x);
  if (x.rows() != dim_) throw std::invalid_argument("score: dimension mismatch");
  if ((t < 0.0).any()) throw std::invalid_argument("score: forward time must be non-negative");
  if (single_gaussian()) {
    out = evaluate_component(components_.front(), t, x, true, false).grad;
    return;
  }
  const Eigen::Index n = x.cols();
  std::vector<ComponentEval> evals;
  evals.reserve(components_.size());
  Eigen::ArrayXXd logp(components_.size(), n);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    evals.push_back(evaluate_component(components_[k], t, x, true));
    logp.row(k) = evals.back().log_pdf.transpose();
  }
  const Eigen::Array<double, 1, Eigen::Dynamic> mx = logp.colwise().maxCoeff();
  const Eigen::ArrayXXd r = (logp.rowwise() - mx).unaryExpr(ScalarExp{});
  const Eigen::Array<double, 1, Eigen::Dynamic> norm = r.colwise().sum();
  out.setZero();
  for (std::size_t k = 0; k < components_.size(); ++k)
    out.array() += evals[k].grad.array().rowwise() * (r.row(k) / norm);
}

Vector TargetModel::score(double t, const Vector& x) const {
  Batch out(dim_, 1);
  score(Array::Constant(1, t), x, out);
  return out.col(0);
}

Array TargetModel::log_density(double t, ConstBatchRef x) const {
  require_finite(x);
  const Array tt = Array::Constant(x.cols(), t);
  Eigen::ArrayXXd logp(components_.size(), x.cols());
  for (std::size_t k = 0; k < components_.size(); ++k)
    logp.row(k) = evaluate_component(components_[k], tt, x, false).log_pdf.transpose();
  const Eigen::Array<double, 1, Eigen::Dynamic> mx = logp.colwise().maxCoeff();
  return (mx + (logp.rowwise() - mx).unaryExpr(ScalarExp{}).colwise().sum().unaryExpr(ScalarLog{})).transpose();
}

Matrix TargetModel::hessian_log_density(double t, const Vector& x) const {
  const NoisedMarginal q = at(t);
  std::vector<double> logw(components_.size());
  std::vector<Vector> grads(components_.size());
  std::vector<Matrix> precs(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double a = std::exp(-2.0 * t);
    const Vector lam = a * c.eigenvalues.array() + (1.0 - a);
    precs[k] = c.eigenvectors * lam.cwiseInverse().asDiagonal() * c.eigenvectors.transpose();
    const Vector dx = x - q.component_mean(k);
    grads[k] = -precs[k] * dx;
    logw[k] = std::log(c.weight) - 0.5 * dx.dot(precs[k] * dx) - 0.5 * lam.array().log().sum();
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double norm = 0.0;
  for (double& l : logw) norm += (l = std::exp(l - mx));
  Matrix h = Matrix::Zero(dim_, dim_);
  Vector gbar = Vector::Zero(dim_);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const double r = logw[k] / norm;
    h += r * (grads[k] * grads[k].transpose() - precs[k]);
    gbar += r * grads[k];
  }
  return h - gbar * gbar.transpose();
}

Batch TargetModel::sample_exact(double t, Eigen::Index n, const RngStream& rng) const {
  if (n < 1) throw std::invalid_argument("sample_exact: n must be >= 1");
  Batch z(dim_, n);
  rng.child(1).fill_normal(z, 0);
  const RngStream pick = rng.child(0);
  const double a = std::exp(-2.0 * t);
  const double decay = std::exp(-t);
  std::vector<Matrix> factors;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : components_) {
    const Vector sd = (a * c.eigenvalues.array() + (1.0 - a)).sqrt();
    factors.push_back(c.eigenvectors * sd.asDiagonal());
    cumulative.push_back(acc += c.weight);
  }
  Batch x(dim_, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::size_t k = 0;
    if (components_.size() > 1) {
      const double u = pick.uniform(static_cast<std::uint64_t>(j), 0) * acc;
      while (k + 1 < components_.size() && u > cumulative[k]) ++k;
    }
    x.col(j) = decay * components_[k].mean + factors[k] * z.col(j);
  }
  return x;
}

ScoreFn TargetModel::score_fn() const {
  return [this](ConstArrayRef t, ConstBatchRef x, BatchRef out) { score(t, x, out); };
}

Mixture1d TargetModel::project(double t, const Vector& direction) const {
  const NoisedMarginal q = at(t);
  Mixture1d m;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    m.weights.push_back(components_[k].weight);
    m.means.push_back(direction.dot(q.component_mean(k)));
    m.sds.push_back(std::sqrt(direction.dot(q.component_cov(k) * direction)));
  }
  return m;
}

// --- ScoreCorruption -------------------------------------------------------

ScoreCorruption::ScoreCorruption(const TargetModel& model, double eps_sc, const RngStream& rng)
    : model_(&model), eps_(eps_sc) {
  if (eps_sc < 0.0) throw std::invalid_argument("score corruption: eps_sc must be non-negative");
  const int d = model.dim();
  directions_.resize(d, kBumps);
  amplitudes_.resize(d, kBumps);
  phases_.resize(kBumps);
  for (int k = 0; k < kBumps; ++k) {
    for (int i = 0; i < d; ++i) {
      directions_(i, k) = rng.normal(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
      amplitudes_(i, k) = rng.normal(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(d + i));
    }
    directions_.col(k).normalize();
    phases_(k) = 2.0 * std::numbers::pi * rng.uniform(static_cast<std::uint64_t>(k), 0);
  }
}

double ScoreCorruption::amplitude(double t) const {
  if (eps_ == 0.0) return 0.0;
  // E[sin(a) sin(b)] = (E cos(a - b) - E cos(a + b)) / 2 with
  // E cos(w.x + c) = sum_c w_c cos(w.mu_c + c) exp(-w^T S_c w / 2).
  const NoisedMarginal q = model_->at(t);
  const auto expect_cos = [&](const Vector& w, double c) {
    double e = 0.0;
    for (std::size_t k = 0; k < model_->components().size(); ++k)
      e += model_->components()[k].weight * std::cos(w.dot(q.component_mean(k)) + c) *
           std::exp(-0.5 * w.dot(q.component_cov(k) * w));
    return e;
  };
  double second = 0.0;
  for (int k = 0; k < kBumps; ++k) {
    for (int l = 0; l < kBumps; ++l) {
      const double dot = amplitudes_.col(k).dot(amplitudes_.col(l));
      const double e = 0.5 * (expect_cos(directions_.col(k) - directions_.col(l), phases_(k) - phases_(l)) -
                              expect_cos(directions_.col(k) + directions_.col(l), phases_(k) + phases_(l)));
      second += dot * e;
    }
  }
  return eps_ / std::sqrt(second);
}

double ScoreCorruption::lipschitz_bound(double t) const {
  return amplitude(t) * amplitudes_.colwise().norm().sum();
}

void ScoreCorruption::add_to(ConstArrayRef t, ConstBatchRef x, BatchRef out) const {
  if (eps_ == 0.0) return;
  // Amplitudes are cached per distinct time within the call.
  double last_t = std::numeric_limits<double>::quiet_NaN();
  double amp = 0.0;
  const Batch phase_arg = (directions_.transpose() * x).colwise() + phases_;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (t(j) != last_t) {
      last_t = t(j);
      amp = amplitude(last_t);
    }
    out.col(j) += amp * (amplitudes_ * phase_arg.col(j).array().unaryExpr(ScalarSin{}).matrix());
  }
}

ScoreFn make_score_fn(const TargetModel& model, double eps_sc, const RngStream& rng) {
  if (eps_sc == 0.0) return model.score_fn();
  auto field = std::make_shared<ScoreCorruption>(model, eps_sc, rng);
  return [&model, field](ConstArrayRef t, ConstBatchRef x, BatchRef out) {
    model.score(t, x, out);
    field->add_to(t, x, out);
  };
}

Vector corrupt_score(const TargetModel& model, double t, const Vector& x, double eps_sc, const RngStream& rng) {
  Vector s = model.score(t, x);
  if (eps_sc == 0.0) return s;
  const ScoreCorruption field(model, eps_sc, rng);
  Batch out = s;
  field.add_to(Array::Constant(1, t), x, out);
  return out.col(0);
}

}  // namespace midpoint
