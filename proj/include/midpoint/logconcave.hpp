#pragma once

#include "midpoint/noise.hpp"
#include "midpoint/schedule.hpp"
#include "midpoint/target.hpp"
#include "midpoint/work.hpp"
#include "midpoint/workers.hpp"

namespace midpoint {

/// State of the randomized-midpoint underdamped method with friction 2.
/// The stationary law is target x N(0, u I).
struct ShenLeeState {
  Batch x;
  Batch v;
  double u = 1.0;
};

/// Batched step; column p uses its own alpha(p) and noise columns
/// w1, w2, w3 (raw Ito integrals, scaled by sqrt(u) here).  `score` is the
/// time-independent score, evaluated at forward time 0.
void shenlee_step_batch(ShenLeeState& state, double h, ConstArrayRef alpha, ConstBatchRef w1, ConstBatchRef w2,
                        ConstBatchRef w3, const ScoreFn& score);

/// Single-alpha form: the same noise block is applied to every column.
void shenlee_step(ShenLeeState& state, double h, double alpha, const ShenLeeNoiseBlock& noise, const ScoreFn& score);

/// Runs `steps` iterations from `state`.  Step k draws alpha from address
/// (p, 0) of rng.child(k).child(0) and the Gaussian triple from
/// rng.child(k).child(1).
void run_shenlee(ShenLeeState& state, double h, long steps, const ScoreFn& score, const RngStream& rng,
                 const WorkerPool& pool = WorkerPool::serial(), std::uint64_t first_particle = 0);

struct LogConcaveOptions {
  bool corrector = true;
};

/// Alg. 9: start at the mode with v = 0, N_rand steps of h_rand
/// (rng.child(1)), then the sequential corrector (rng.child(2)).
SampleResult run_logconcave(const TargetModel& target, const Schedule& schedule, Eigen::Index n, const RngStream& rng,
                            const LogConcaveOptions& options = {}, const WorkerPool& pool = WorkerPool::serial(),
                            const ScoreFn& score = nullptr);

}  // namespace midpoint
