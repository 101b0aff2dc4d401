#include "midpoint/sequential.hpp"

#include "midpoint/corrector.hpp"

#include <chrono>
#include <stdexcept>

namespace midpoint {

SampleResult run_sequential(const Schedule& schedule, const ScoreFn& score, Eigen::Index n, const RngStream& rng,
                            const SequentialOptions& options, const WorkerPool& pool) {
  if (schedule.mode != ScheduleMode::Sequential) throw std::invalid_argument("run_sequential: sequential schedule required");
  if (n < 1) throw std::invalid_argument("run_sequential: need at least one particle");
  const auto start = std::chrono::steady_clock::now();
  SampleResult result{Batch(schedule.d, n), {}};
  rng.child(0).fill_normal(result.x, 0);
  const long per_step = options.method == PredictorMethod::RandomizedMidpoint ? 2 : 1;
  for (std::size_t b = 0; b < schedule.blocks.size(); ++b) {
    const PredictorBlock& block = schedule.blocks[b];
    PredictorState state =
        run_predictor(result.x, block.t_start, block.steps, score, rng.child(1).child(b), options.method, pool);
    result.work.score_evaluations += per_step * static_cast<long>(block.steps.size());
    result.x = std::move(state.x);
    if (options.corrector) {
      const CorrectorParams& c = schedule.corrector;
      result.x = run_corrector(result.x, block.t_end, score, c.duration, c.step, c.gamma, rng.child(2).child(b), pool);
      result.work.score_evaluations += corrector_steps(c.duration, c.step);
    }
  }
  result.work.parallel_rounds = result.work.score_evaluations;
  result.work.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace midpoint
