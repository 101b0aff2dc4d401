#include "midpoint/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace midpoint {

Batch reference_flow(ConstBatchRef x, double t0, double t1, const ScoreFn& score, double h_max) {
  if (!(t1 <= t0) || t1 < 0.0) throw std::invalid_argument("reference_flow: need 0 <= t1 <= t0");
  if (!(h_max > 0.0)) throw std::invalid_argument("reference_flow: h_max must be positive");
  const auto steps = static_cast<long>(std::ceil((t0 - t1) / h_max - 1e-12));
  Batch y = x;
  if (steps == 0) return y;
  const double h = (t0 - t1) / static_cast<double>(steps);
  Batch k1(y.rows(), y.cols()), k2(k1), k3(k1), k4(k1), tmp(k1);
  const auto drift = [&](double t, const Batch& at, Batch& out) {
    score(Array::Constant(at.cols(), t), at, out);
    out += at;
  };
  for (long n = 0; n < steps; ++n) {
    const double t = t0 - static_cast<double>(n) * h;
    drift(t, y, k1);
    tmp = y + 0.5 * h * k1;
    drift(t - 0.5 * h, tmp, k2);
    tmp = y + 0.5 * h * k2;
    drift(t - 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    drift(t - h, tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

Batch gaussian_flow_map(const TargetModel& model, double t0, double t1, ConstBatchRef x) {
  if (!model.single_gaussian()) throw std::invalid_argument("gaussian_flow_map: single Gaussian target required");
  const GaussianComponent& c = model.components().front();
  const auto noised = [&](double t) {
    const double e = std::exp(-2.0 * t);
    return (e * c.eigenvalues.array() + (1.0 - e)).eval();
  };
  const Array scale = (noised(t1) / noised(t0)).sqrt();
  const Vector m0 = std::exp(-t0) * c.mean;
  const Vector m1 = std::exp(-t1) * c.mean;
  const Matrix& q = c.eigenvectors;
  Batch y = q.transpose() * (x.colwise() - m0);
  y = scale.matrix().asDiagonal() * y;
  return (q * y).colwise() + m1;
}

Batch flow_to_times(const TargetModel& model, ConstBatchRef x, double t0, ConstArrayRef t1, double h_max) {
  if (t1.size() != x.cols()) throw std::invalid_argument("flow_to_times: one end time per column required");
  Batch out(x.rows(), x.cols());
  const ScoreFn score = model.score_fn();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = model.single_gaussian() ? gaussian_flow_map(model, t0, t1(j), x.col(j))
                                         : reference_flow(x.col(j), t0, t1(j), score, h_max);
  }
  return out;
}

}  // namespace midpoint
