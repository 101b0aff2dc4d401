#include "midpoint/predictor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace midpoint {

Batch midpoint_half_step(const PredictorState& state, double h, ConstArrayRef alpha, const ScoreFn& score) {
  if (!(h > 0.0)) throw std::invalid_argument("predictor: step must be positive");
  if (alpha.size() != state.x.cols()) throw std::invalid_argument("predictor: one alpha per particle required");
  Batch s(state.x.rows(), state.x.cols());
  score(Array::Constant(state.x.cols(), state.t), state.x, s);
  check_finite(s, "score blow-up", state.t, state.step_index);
  const Array a = alpha * h;
  return state.x.array().rowwise() * a.unaryExpr(ScalarExp{}).transpose() + s.array().rowwise() * a.unaryExpr([](double v) {
           return exp_minus_one(v);
         }).transpose();
}

void midpoint_full_step(PredictorState& state, double h, ConstArrayRef alpha, ConstBatchRef x_half,
                        const ScoreFn& score) {
  if (!(h > 0.0)) throw std::invalid_argument("predictor: step must be positive");
  const Array t_mid = state.t - alpha * h;
  Batch s(x_half.rows(), x_half.cols());
  score(t_mid, x_half, s);
  check_finite(s, "score blow-up", state.t, state.step_index);
  const Array weight = h * ((1.0 - alpha) * h).unaryExpr(ScalarExp{});
  state.x = std::exp(h) * state.x + (s.array().rowwise() * weight.transpose()).matrix();
  state.t -= h;
  ++state.step_index;
  check_finite(state.x, "predictor blow-up", state.t, state.step_index);
}

void exp_integrator_step(PredictorState& state, double h, const ScoreFn& score) {
  if (!(h > 0.0)) throw std::invalid_argument("predictor: step must be positive");
  const Batch s = eval_score(score, state.t, state.x);
  check_finite(s, "score blow-up", state.t, state.step_index);
  state.x = std::exp(h) * state.x + std::expm1(h) * s;
  state.t -= h;
  ++state.step_index;
  check_finite(state.x, "predictor blow-up", state.t, state.step_index);
}

PredictorState run_predictor(const Batch& x0, double t0, std::span<const double> steps, const ScoreFn& score,
                             const RngStream& rng, PredictorMethod method, const WorkerPool& pool,
                             std::uint64_t particle_offset) {
  const double total = std::accumulate(steps.begin(), steps.end(), 0.0);
  if (total > t0 * (1.0 + 1e-12)) throw std::invalid_argument("predictor: steps overrun forward time 0");
  PredictorState out{x0, t0 - total, static_cast<long>(steps.size())};
  pool.parallel_for(static_cast<std::size_t>(x0.cols()), [&](std::size_t begin, std::size_t end) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    PredictorState local{x0.middleCols(static_cast<Eigen::Index>(begin), n), t0, 0};
    Array alpha(n);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (method == PredictorMethod::RandomizedMidpoint) {
        rng.child(k).fill_uniform(alpha, particle_offset + begin);
        const Batch half = midpoint_half_step(local, steps[k], alpha, score);
        midpoint_full_step(local, steps[k], alpha, half, score);
      } else {
        exp_integrator_step(local, steps[k], score);
      }
    }
    out.x.middleCols(static_cast<Eigen::Index>(begin), n) = local.x;
  });
  return out;
}

}  // namespace midpoint
