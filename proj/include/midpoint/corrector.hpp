#pragma once

#include "midpoint/noise.hpp"
#include "midpoint/rng.hpp"
#include "midpoint/types.hpp"
#include "midpoint/workers.hpp"

namespace midpoint {

/// Position/velocity batch of the underdamped Langevin corrector.
struct UldState {
  Batch x;
  Batch v;
  double t_elapsed = 0.0;
};

/// Coefficients of one frozen-score ULD step of length h:
///   v' = ev v + a s + zeta_v,   x' = x + a v + b s + zeta_x
/// with ev = e^{-g h}, a = (1 - e^{-g h}) / g, b = (h - a) / g.
struct UldCoefficients {
  double ev;
  double a;
  double b;
  UldCoefficients(double h, double gamma);
};

/// One exponential-integrator ULMC step with the score frozen at forward
/// time t.  The noise block must have been drawn for (h, gamma).
void uld_step(UldState& state, double h, double gamma, const ScoreFn& score, double t, const UldNoiseBlock& noise);

/// Same step given precomputed scores s = score_t(x).
void uld_step_with_score(UldState& state, double h, double gamma, ConstBatchRef s, const UldNoiseBlock& noise);

/// Alg. 2: velocity refreshed from N(0, I), then fixed_steps(T_corr, h_corr)
/// ULMC steps targeting q_t.  Returns the position batch.  Random draws use
/// rng.child(0) for the velocity and rng.child(1).child(k) for step k, with
/// particles addressed from `particle_offset`.
Batch run_corrector(const Batch& x0, double t, const ScoreFn& score, double T_corr, double h_corr, double gamma,
                    const RngStream& rng, const WorkerPool& pool = WorkerPool::serial(),
                    std::uint64_t particle_offset = 0);

/// Number of score evaluations per particle done by run_corrector.
long corrector_steps(double T_corr, double h_corr);

}  // namespace midpoint
