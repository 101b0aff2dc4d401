#pragma once

#include "midpoint/target.hpp"
#include "midpoint/types.hpp"

namespace midpoint {

/// Classical RK4 on the probability-flow ODE dx/ds = x + score_{t0 - s}(x),
/// taking x from forward time t0 down to t1 < t0 with steps of at most h_max.
Batch reference_flow(ConstBatchRef x, double t0, double t1, const ScoreFn& score, double h_max);

/// Exact flow map of the same ODE for a single-Gaussian target:
///   x -> mean_t1 + Sigma_t1^{1/2} Sigma_t0^{-1/2} (x - mean_t0),
/// valid because the noised covariances share one eigenbasis.
Batch gaussian_flow_map(const TargetModel& model, double t0, double t1, ConstBatchRef x);

/// Flows column j from t0 to t1(j): the exact map for a single Gaussian,
/// RK4 with steps of at most h_max otherwise.
Batch flow_to_times(const TargetModel& model, ConstBatchRef x, double t0, ConstArrayRef t1, double h_max = 1e-3);

}  // namespace midpoint
