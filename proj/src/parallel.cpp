#include "midpoint/parallel.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace midpoint {
namespace {

constexpr Eigen::Index kChunk = 2048;

// Score at one lattice node, each particle at its own time.
void node_score(const ScoreFn& score, double t, double h, const Eigen::ArrayXXd& alphas, int i, ConstBatchRef x,
                BatchRef out) {
  const Array times = t - alphas.row(i).transpose() * h;
  score(times, x, out);
  check_finite(out, "score blow-up", t, i);
}

}  // namespace

Eigen::ArrayXXd draw_lattice(const RngStream& rng, int R, Eigen::Index n, std::uint64_t first_particle) {
  if (R < 1) throw std::invalid_argument("lattice: need R >= 1");
  Eigen::ArrayXXd alphas(R, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (int i = 1; i <= R; ++i) alphas(i - 1, p) = uniform_midpoint(rng, first_particle + p, i, R);
  return alphas;
}

MidpointLattice picard_init(ConstBatchRef x_n, double t_n, double h, Eigen::ArrayXXd alphas, const ScoreFn& score) {
  if (!(h > 0.0)) throw std::invalid_argument("picard_init: window must be positive");
  if (alphas.cols() != x_n.cols()) throw std::invalid_argument("picard_init: one lattice per particle required");
  MidpointLattice lattice;
  lattice.alphas = std::move(alphas);
  lattice.h = h;
  lattice.t = t_n;
  const Batch s = eval_score(score, t_n, x_n);
  check_finite(s, "score blow-up", t_n, 0);
  lattice.estimates.reserve(static_cast<std::size_t>(lattice.R()));
  for (int i = 0; i < lattice.R(); ++i) {
    const Array a = lattice.alphas.row(i).transpose() * h;
    const Array grow = a.unaryExpr(ScalarExp{});
    const Array inc = a.unaryExpr([](double v) { return std::expm1(v); });
    lattice.estimates.push_back(x_n.array().rowwise() * grow.transpose() + s.array().rowwise() * inc.transpose());
  }
  return lattice;
}

void picard_round(MidpointLattice& lattice, ConstBatchRef x_n, const ScoreFn& score, const WorkerPool& pool) {
  const int R = lattice.R();
  const double h = lattice.h;
  const double delta = lattice.delta();
  std::vector<Batch> s(static_cast<std::size_t>(R), Batch(x_n.rows(), x_n.cols()));
  pool.parallel_for(static_cast<std::size_t>(R), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      node_score(score, lattice.t, h, lattice.alphas, static_cast<int>(i), lattice.estimates[i], s[i]);
  });
  // For j < i the max picks e^{a_i - j delta}, so the weight factors as
  // e^{a_i} (e^{-(j-1) delta} - e^{-j delta}) and the sum is a prefix scan.
  Batch prefix = x_n;
  for (int i = 1; i <= R; ++i) {
    const Array a = lattice.alphas.row(i - 1).transpose() * h;
    const Array own = a.unaryExpr([&](double v) { return collocation_weight(i, i, h, delta, v / h); });
    const auto k = static_cast<std::size_t>(i - 1);
    lattice.estimates[k] =
        prefix.array().rowwise() * a.unaryExpr(ScalarExp{}).transpose() + s[k].array().rowwise() * own.transpose();
    prefix += (std::exp(-(i - 1) * delta) - std::exp(-i * delta)) * s[k];
  }
  ++lattice.round;
  for (int i = 0; i < R; ++i) check_finite(lattice.estimates[static_cast<std::size_t>(i)], "predictor blow-up", lattice.t, i);
}

PredictorState parallel_window_close(const MidpointLattice& lattice, ConstBatchRef x_n, const ScoreFn& score,
                                     const WorkerPool& pool) {
  const int R = lattice.R();
  const double h = lattice.h;
  std::vector<Batch> s(static_cast<std::size_t>(R), Batch(x_n.rows(), x_n.cols()));
  pool.parallel_for(static_cast<std::size_t>(R), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      node_score(score, lattice.t, h, lattice.alphas, static_cast<int>(i), lattice.estimates[i], s[i]);
  });
  PredictorState out{std::exp(h) * x_n, lattice.t - h, 0};
  for (int i = 0; i < R; ++i) {
    const Array w = lattice.delta() * (h - lattice.alphas.row(i).transpose() * h).unaryExpr(ScalarExp{});
    out.x += (s[static_cast<std::size_t>(i)].array().rowwise() * w.transpose()).matrix();
  }
  check_finite(out.x, "predictor blow-up", out.t, 0);
  return out;
}

PredictorState parallel_window(ConstBatchRef x_n, double t_n, double h, int R, int K, const ScoreFn& score,
                               const RngStream& rng, WorkReport& work, const WorkerPool& pool,
                               std::uint64_t first_particle) {
  if (h > t_n * (1.0 + 1e-12)) throw std::invalid_argument("parallel predictor: window overruns forward time 0");
  MidpointLattice lattice = picard_init(x_n, t_n, h, draw_lattice(rng, R, x_n.cols(), first_particle), score);
  for (int k = 0; k < K; ++k) picard_round(lattice, x_n, score, pool);
  work.parallel_rounds += K + 2;
  work.score_evaluations += 1 + static_cast<long>(K + 1) * R;
  return parallel_window_close(lattice, x_n, score, pool);
}

PredictorState run_parallel_predictor(ConstBatchRef x0, const PredictorBlock& block, const ScoreFn& score,
                                      const RngStream& rng, WorkReport& work, const WorkerPool& pool,
                                      std::uint64_t first_particle) {
  if (block.midpoints.size() != block.steps.size() || block.picard_depth.size() != block.steps.size())
    throw std::invalid_argument("parallel predictor: block lacks per-window R and K");
  PredictorState state{x0, block.t_start, 0};
  for (std::size_t w = 0; w < block.steps.size(); ++w) {
    try {
      PredictorState next = parallel_window(state.x, state.t, block.steps[w], block.midpoints[w], block.picard_depth[w],
                                            score, rng.child(w), work, pool, first_particle);
      state.x = std::move(next.x);
      state.t = (w + 1 == block.steps.size()) ? block.t_end : next.t;
      ++state.step_index;
    } catch (const NumericalError&) {
      throw NumericalError("parallel predictor blow-up", state.t, static_cast<long>(w));
    }
  }
  return state;
}

void parallel_corrector_round(UldState& state, int R, int K, double h, double gamma, const ScoreFn& score, double t,
                              const RngStream& rng, WorkReport& work, const WorkerPool& pool,
                              std::uint64_t first_particle) {
  if (R < 1 || K < 1) throw std::invalid_argument("parallel corrector: need R >= 1 and K >= 1");
  const double delta = h / R;
  const Eigen::Index d = state.x.rows();
  const Eigen::Index n = state.x.cols();
  std::vector<UldNoiseBlock> noise(static_cast<std::size_t>(R), UldNoiseBlock{Batch(d, n), Batch(d, n), 0.0, 0.0});
  for (int i = 0; i < R; ++i)
    fill_uld_noise(rng.child(static_cast<std::uint64_t>(i + 1)), delta, gamma, first_particle, noise[static_cast<std::size_t>(i)]);

  // nodes[i] is the position estimate at the start of sub-step i.
  std::vector<Batch> nodes(static_cast<std::size_t>(R), state.x);
  std::vector<Batch> s(static_cast<std::size_t>(R), Batch(d, n));
  score(Array::Constant(n, t), state.x, s[0]);
  check_finite(s[0], "corrector blow-up", t, 0);
  UldState scan = state;
  for (int k = 1; k <= K; ++k) {
    if (k > 1) {
      pool.parallel_for(static_cast<std::size_t>(R - 1), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin + 1; i < end + 1; ++i) {
          score(Array::Constant(n, t), nodes[i], s[i]);
          check_finite(s[i], "corrector blow-up", t, static_cast<long>(i));
        }
      });
    } else {
      for (int i = 1; i < R; ++i) s[static_cast<std::size_t>(i)] = s[0];
    }
    scan = state;
    for (int i = 0; i < R; ++i) {
      if (i > 0) nodes[static_cast<std::size_t>(i)] = scan.x;
      uld_step_with_score(scan, delta, gamma, s[static_cast<std::size_t>(i)], noise[static_cast<std::size_t>(i)]);
    }
  }
  state = std::move(scan);
  work.parallel_rounds += K;
  work.score_evaluations += 1 + static_cast<long>(K - 1) * (R - 1);
}

Batch run_parallel_corrector(ConstBatchRef x0, double t, const ScoreFn& score, const CorrectorParams& params,
                             const RngStream& rng, WorkReport& work, const WorkerPool& pool,
                             std::uint64_t first_particle) {
  UldState state{x0, Batch(x0.rows(), x0.cols()), 0.0};
  rng.child(0).fill_normal(state.v, first_particle);
  const std::vector<double> steps = fixed_steps(params.duration, params.step);
  const RngStream outer = rng.child(1);
  for (std::size_t m = 0; m < steps.size(); ++m) {
    try {
      parallel_corrector_round(state, params.midpoints, params.picard_depth, steps[m], params.gamma, score, t,
                               outer.child(m), work, pool, first_particle);
    } catch (const NumericalError&) {
      throw NumericalError("corrector blow-up", t, static_cast<long>(m));
    }
  }
  return state.x;
}

SampleResult run_parallel(const Schedule& schedule, const ScoreFn& score, Eigen::Index n, const RngStream& rng,
                          const WorkerPool& pool, bool corrector) {
  if (schedule.mode != ScheduleMode::Parallel) throw std::invalid_argument("run_parallel: parallel schedule required");
  if (n < 1) throw std::invalid_argument("run_parallel: need at least one particle");
  const auto start = std::chrono::steady_clock::now();
  SampleResult result{Batch(schedule.d, n), {}};
  rng.child(0).fill_normal(result.x, 0);
  const auto chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  std::vector<WorkReport> reports(chunks);
  pool.parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto first = static_cast<Eigen::Index>(c) * kChunk;
      const Eigen::Index cols = std::min(kChunk, n - first);
      Batch x = result.x.middleCols(first, cols);
      const auto offset = static_cast<std::uint64_t>(first);
      for (std::size_t b = 0; b < schedule.blocks.size(); ++b) {
        const PredictorBlock& block = schedule.blocks[b];
        x = run_parallel_predictor(x, block, score, rng.child(1).child(b), reports[c], WorkerPool::serial(), offset).x;
        if (corrector)
          x = run_parallel_corrector(x, block.t_end, score, schedule.corrector, rng.child(2).child(b), reports[c],
                                     WorkerPool::serial(), offset);
      }
      result.x.middleCols(first, cols) = x;
    }
  });
  result.work = reports.front();
  result.work.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace midpoint
