#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace midpoint {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;

/// A batch of particles: one particle per column, d rows.
using Batch = Eigen::MatrixXd;
using BatchRef = Eigen::Ref<Batch>;
using ConstBatchRef = Eigen::Ref<const Batch>;
using ConstArrayRef = Eigen::Ref<const Array>;

/// Batched score oracle.  `t` holds one forward time per column of `x`;
/// the result for column j is an estimate of grad log q_{t(j)}(x.col(j)).
/// Implementations must be safe to call concurrently on disjoint columns.
using ScoreFn = std::function<void(ConstArrayRef t, ConstBatchRef x, BatchRef out)>;

/// Scalar elementwise maps.  Eigen's packet exp/log/sin differ from the
/// scalar versions in the last bit, which would make results depend on how
/// columns are split across workers.
struct ScalarExp {
  double operator()(double v) const { return std::exp(v); }
};
struct ScalarLog {
  double operator()(double v) const { return std::log(v); }
};
struct ScalarSin {
  double operator()(double v) const { return std::sin(v); }
};

/// Particles whose sup-norm exceeds this are treated as a numerical blow-up.
inline constexpr double kBlowUpThreshold = 1e8;

/// Raised when a state or score leaves the finite, bounded region.  Carries
/// the forward time and step index at which the failure was detected.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double t, long step)
      : std::runtime_error(what + " (t=" + std::to_string(t) + ", step=" + std::to_string(step) + ")"),
        t_(t),
        step_(step) {}

  double time() const noexcept { return t_; }
  long step() const noexcept { return step_; }

 private:
  double t_;
  long step_;
};

/// Throws NumericalError when any entry is non-finite or larger in magnitude
/// than kBlowUpThreshold.
template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& x, const char* what, double t, long step) {
  const auto& a = x.derived();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double v = a(i, j);
      if (!(std::abs(v) <= kBlowUpThreshold)) throw NumericalError(what, t, step);
    }
  }
}

/// Evaluates `score` at a single shared time for every column.
inline Batch eval_score(const ScoreFn& score, double t, ConstBatchRef x) {
  Batch out(x.rows(), x.cols());
  score(Array::Constant(x.cols(), t), x, out);
  return out;
}

}  // namespace midpoint
