#pragma once

#include "midpoint/predictor.hpp"
#include "midpoint/schedule.hpp"
#include "midpoint/work.hpp"

namespace midpoint {

struct SequentialOptions {
  PredictorMethod method = PredictorMethod::RandomizedMidpoint;
  bool corrector = true;
};

/// Alg. 3: x0 ~ N(0, I), then for every schedule block a predictor pass
/// followed by a corrector with the score frozen at the block end.
/// Streams: rng.child(0) initial draw, rng.child(1).child(b) predictor of
/// block b, rng.child(2).child(b) its corrector.
SampleResult run_sequential(const Schedule& schedule, const ScoreFn& score, Eigen::Index n, const RngStream& rng,
                            const SequentialOptions& options = {}, const WorkerPool& pool = WorkerPool::serial());

}  // namespace midpoint
