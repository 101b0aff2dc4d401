#pragma once

#include "midpoint/corrector.hpp"
#include "midpoint/predictor.hpp"
#include "midpoint/schedule.hpp"
#include "midpoint/work.hpp"

#include <vector>

namespace midpoint {

/// Weight of sub-window j in the collocation sum for node i:
///   e^{alpha_i h - (j-1) delta} - max(e^{alpha_i h - j delta}, 1),
/// and zero for sub-windows lying beyond alpha_i h.
template <typename Scalar>
Scalar collocation_weight(int i, int j, Scalar h, Scalar delta, Scalar alpha_i) {
  using std::exp;
  using std::max;
  (void)i;
  const Scalar a = alpha_i * h;
  if (Scalar(j - 1) * delta >= a) return Scalar(0);
  return exp(a - Scalar(j - 1) * delta) - max(exp(a - Scalar(j) * delta), Scalar(1));
}

/// Picard lattice of one predictor window.  Row i of `alphas` holds the
/// fractions of node i+1 for every particle, drawn from [i/R, (i+1)/R].
struct MidpointLattice {
  Eigen::ArrayXXd alphas;        // R x n
  std::vector<Batch> estimates;  // R batches of d x n
  int round = 0;
  double h = 0.0;
  double t = 0.0;

  int R() const noexcept { return static_cast<int>(alphas.rows()); }
  double delta() const noexcept { return h / R(); }
};

/// Draws the lattice fractions for window w.  Particle p of node i uses
/// address (first_particle + p, i) of `rng`.
Eigen::ArrayXXd draw_lattice(const RngStream& rng, int R, Eigen::Index n, std::uint64_t first_particle = 0);

/// Round 0: exponential-integrator guesses x_i = e^{a_i} x_n + (e^{a_i} - 1) s_{t_n}(x_n).
MidpointLattice picard_init(ConstBatchRef x_n, double t_n, double h, Eigen::ArrayXXd alphas, const ScoreFn& score);

/// One Jacobi collocation round; every node reads round k-1 estimates only.
/// Score evaluations for the R nodes are spread over `pool`.
void picard_round(MidpointLattice& lattice, ConstBatchRef x_n, const ScoreFn& score,
                  const WorkerPool& pool = WorkerPool::serial());

/// Closing quadrature x_{n+1} = e^h x_n + delta sum_i e^{h - a_i} s_{t_n - a_i}(x_i).
PredictorState parallel_window_close(const MidpointLattice& lattice, ConstBatchRef x_n, const ScoreFn& score,
                                     const WorkerPool& pool = WorkerPool::serial());

/// One full predictor window: init, K rounds, close.  Costs K + 2 rounds.
PredictorState parallel_window(ConstBatchRef x_n, double t_n, double h, int R, int K, const ScoreFn& score,
                               const RngStream& rng, WorkReport& work, const WorkerPool& pool = WorkerPool::serial(),
                               std::uint64_t first_particle = 0);

/// Alg. 5 over the windows of one block; window w uses rng.child(w).
PredictorState run_parallel_predictor(ConstBatchRef x0, const PredictorBlock& block, const ScoreFn& score,
                                      const RngStream& rng, WorkReport& work,
                                      const WorkerPool& pool = WorkerPool::serial(), std::uint64_t first_particle = 0);

/// One outer step of the parallel ULMC corrector over duration h with R
/// sub-steps and K Picard rounds.  Sub-step i uses the noise block drawn
/// from rng.child(i); blocks are drawn once and shared by all rounds.  Each
/// round evaluates the score at the previous round's nodes (node 0 pinned
/// to the window start) and rebuilds the nodes by a linear scan.
void parallel_corrector_round(UldState& state, int R, int K, double h, double gamma, const ScoreFn& score, double t,
                              const RngStream& rng, WorkReport& work, const WorkerPool& pool = WorkerPool::serial(),
                              std::uint64_t first_particle = 0);

/// Alg. 6: velocity from rng.child(0), outer step m from rng.child(1).child(m).
Batch run_parallel_corrector(ConstBatchRef x0, double t, const ScoreFn& score, const CorrectorParams& params,
                             const RngStream& rng, WorkReport& work, const WorkerPool& pool = WorkerPool::serial(),
                             std::uint64_t first_particle = 0);

/// Alg. 7 end to end.  Particles are processed in fixed chunks spread over
/// `pool`, so the output does not depend on the worker count.  Streams:
/// rng.child(0) initial draw, rng.child(1).child(b) predictor of block b,
/// rng.child(2).child(b) its corrector.  Work counts are per sample path.
SampleResult run_parallel(const Schedule& schedule, const ScoreFn& score, Eigen::Index n, const RngStream& rng,
                          const WorkerPool& pool = WorkerPool::serial(), bool corrector = true);

}  // namespace midpoint
