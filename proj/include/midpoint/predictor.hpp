#pragma once

#include "midpoint/rng.hpp"
#include "midpoint/types.hpp"
#include "midpoint/workers.hpp"

#include <span>

namespace midpoint {

/// Particles on the reverse (probability-flow) trajectory at forward time t.
struct PredictorState {
  Batch x;
  double t = 0.0;
  long step_index = 0;
};

enum class PredictorMethod { RandomizedMidpoint, ExponentialIntegrator };

/// Coefficient (e^{a} - 1), accurate for small a.
template <typename Scalar>
Scalar exp_minus_one(Scalar a) {
  using std::expm1;
  return expm1(a);
}

/// Randomized-midpoint estimate at offset alpha*h:
///   x_half = e^{alpha h} x + (e^{alpha h} - 1) s_t(x),
/// one alpha per column.
Batch midpoint_half_step(const PredictorState& state, double h, ConstArrayRef alpha, const ScoreFn& score);

/// Completes the step using the score at the midpoint:
///   x <- e^h x + h e^{(1 - alpha) h} s_{t - alpha h}(x_half),  t <- t - h.
void midpoint_full_step(PredictorState& state, double h, ConstArrayRef alpha, ConstBatchRef x_half,
                        const ScoreFn& score);

/// Exponential-integrator step: x <- e^h x + (e^h - 1) s_t(x), t <- t - h.
void exp_integrator_step(PredictorState& state, double h, const ScoreFn& score);

/// Runs the predictor over `steps` starting at forward time t0.  Step n of
/// particle p draws its midpoint from rng.child(n) at address p (offset by
/// `particle_offset`), so the result is independent of the worker count.
/// Returns the final state with t = t0 - sum(steps).
PredictorState run_predictor(const Batch& x0, double t0, std::span<const double> steps, const ScoreFn& score,
                             const RngStream& rng, PredictorMethod method = PredictorMethod::RandomizedMidpoint,
                             const WorkerPool& pool = WorkerPool::serial(), std::uint64_t particle_offset = 0);

}  // namespace midpoint
