#include "midpoint/logconcave.hpp"

#include "midpoint/corrector.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace midpoint {

void shenlee_step_batch(ShenLeeState& state, double h, ConstArrayRef alpha, ConstBatchRef w1, ConstBatchRef w2,
                        ConstBatchRef w3, const ScoreFn& score) {
  if (!(h > 0.0)) throw std::invalid_argument("shenlee_step: h must be positive");
  if (!(state.u > 0.0)) throw std::invalid_argument("shenlee_step: u must be positive");
  const Eigen::Index n = state.x.cols();
  const double u = state.u;
  const double su = std::sqrt(u);
  const Array zero = Array::Zero(n);
  Batch s(state.x.rows(), n);
  score(zero, state.x, s);
  check_finite(s, "shenlee blow-up", 0.0, 0);

  const Array a = alpha * h;
  const Array ea = a.unaryExpr([](double v) { return one_minus_exp(2.0 * v); });
  const double eh = one_minus_exp(2.0 * h);
  // midpoint: x + (1 - e^{-2ah}) v / 2 + u (ah - (1 - e^{-2ah}) / 2) s / 2 + sqrt(u) W1
  const Array mid_drift = 0.5 * u * (a - 0.5 * ea);
  const Batch x_half = state.x + (state.v.array().rowwise() * (0.5 * ea).transpose()).matrix() +
                       (s.array().rowwise() * mid_drift.transpose()).matrix() + su * w1;
  score(zero, x_half, s);
  check_finite(s, "shenlee blow-up", 0.0, 0);

  const Array decay = (-2.0 * (h - a)).unaryExpr(ScalarExp{});
  const Array x_drift = 0.5 * u * h * (1.0 - decay);
  const Array v_drift = u * h * decay;
  state.x += 0.5 * eh * state.v + (s.array().rowwise() * x_drift.transpose()).matrix() + su * w2;
  state.v = std::exp(-2.0 * h) * state.v + (s.array().rowwise() * v_drift.transpose()).matrix() + 2.0 * su * w3;
  check_finite(state.x, "shenlee blow-up", 0.0, 0);
  check_finite(state.v, "shenlee blow-up", 0.0, 0);
}

void shenlee_step(ShenLeeState& state, double h, double alpha, const ShenLeeNoiseBlock& noise, const ScoreFn& score) {
  if (noise.alpha != alpha || noise.h != h || noise.u != state.u)
    throw std::invalid_argument("shenlee_step: noise block drawn for another (alpha, h, u)");
  const Eigen::Index n = state.x.cols();
  shenlee_step_batch(state, h, Array::Constant(n, alpha), noise.w1.replicate(1, n), noise.w2.replicate(1, n),
                     noise.w3.replicate(1, n), score);
}

void run_shenlee(ShenLeeState& state, double h, long steps, const ScoreFn& score, const RngStream& rng,
                 const WorkerPool& pool, std::uint64_t first_particle) {
  const Eigen::Index d = state.x.rows();
  pool.parallel_for(static_cast<std::size_t>(state.x.cols()), [&](std::size_t begin, std::size_t end) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    const std::uint64_t first = first_particle + begin;
    ShenLeeState local{state.x.middleCols(b, n), state.v.middleCols(b, n), state.u};
    Array alpha(n);
    Batch z(3 * d, n);
    Batch w1(d, n), w2(d, n), w3(d, n);
    for (long k = 0; k < steps; ++k) {
      const RngStream step = rng.child(static_cast<std::uint64_t>(k));
      step.child(0).fill_uniform(alpha, first);
      step.child(1).fill_normal(z, first);
      for (Eigen::Index p = 0; p < n; ++p) {
        const Eigen::Matrix3d l = psd_cholesky(shenlee_noise_covariance(alpha(p), h));
        for (Eigen::Index i = 0; i < d; ++i) {
          const Eigen::Vector3d w = l * Eigen::Vector3d(z(i, p), z(d + i, p), z(2 * d + i, p));
          w1(i, p) = w(0);
          w2(i, p) = w(1);
          w3(i, p) = w(2);
        }
      }
      try {
        shenlee_step_batch(local, h, alpha, w1, w2, w3, score);
      } catch (const NumericalError&) {
        throw NumericalError("shenlee blow-up", 0.0, k);
      }
    }
    state.x.middleCols(b, n) = local.x;
    state.v.middleCols(b, n) = local.v;
  });
}

SampleResult run_logconcave(const TargetModel& target, const Schedule& schedule, Eigen::Index n, const RngStream& rng,
                            const LogConcaveOptions& options, const WorkerPool& pool, const ScoreFn& score) {
  if (schedule.mode != ScheduleMode::LogConcave) throw std::invalid_argument("run_logconcave: log-concave schedule required");
  if (target.kind() != TargetKind::QuadraticLogConcave && !target.single_gaussian())
    throw std::invalid_argument("run_logconcave: target needs a closed-form mode");
  if (n < 1) throw std::invalid_argument("run_logconcave: need at least one particle");
  const ScoreFn s = score ? score : target.score_fn();
  const auto start = std::chrono::steady_clock::now();
  ShenLeeState state{target.mode().replicate(1, n), Batch::Zero(target.dim(), n), schedule.u};
  run_shenlee(state, schedule.h_rand, schedule.N_rand, s, rng.child(1), pool);
  SampleResult result{std::move(state.x), {}};
  result.work.score_evaluations = 2 * schedule.N_rand;
  if (options.corrector) {
    const CorrectorParams& c = schedule.corrector;
    result.x = run_corrector(result.x, 0.0, s, c.duration, c.step, c.gamma, rng.child(2), pool);
    result.work.score_evaluations += corrector_steps(c.duration, c.step);
  }
  result.work.parallel_rounds = result.work.score_evaluations;
  result.work.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace midpoint
