#pragma once

#include "midpoint/types.hpp"

namespace midpoint {

/// Cost accounting for one sample path.  A parallel round is one
/// barrier-separated batch of concurrent score evaluations; sequential
/// samplers spend one round per evaluation.
struct WorkReport {
  long parallel_rounds = 0;
  long score_evaluations = 0;
  double wall_clock = 0.0;

  WorkReport& operator+=(const WorkReport& o) {
    parallel_rounds += o.parallel_rounds;
    score_evaluations += o.score_evaluations;
    wall_clock += o.wall_clock;
    return *this;
  }
};

struct SampleResult {
  Batch x;
  WorkReport work;
};

}  // namespace midpoint
