#include "midpoint/corrector.hpp"

#include "midpoint/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace midpoint {

UldCoefficients::UldCoefficients(double h, double gamma) {
  if (!(h > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("uld_step: h and gamma must be positive");
  ev = std::exp(-gamma * h);
  a = one_minus_exp(gamma * h) / gamma;
  // (h - a) / gamma = integral_linear(g h) / g^2, stable for small g h
  b = integral_linear(gamma * h) / (gamma * gamma);
}

void uld_step_with_score(UldState& state, double h, double gamma, ConstBatchRef s, const UldNoiseBlock& noise) {
  if (noise.step != h || noise.gamma != gamma) throw std::invalid_argument("uld_step: noise block drawn for another step");
  const UldCoefficients c(h, gamma);
  state.x += c.a * state.v + c.b * s + noise.zeta_x;
  state.v = c.ev * state.v + c.a * s + noise.zeta_v;
  state.t_elapsed += h;
  check_finite(state.x, "corrector blow-up", state.t_elapsed, 0);
  check_finite(state.v, "corrector blow-up", state.t_elapsed, 0);
}

void uld_step(UldState& state, double h, double gamma, const ScoreFn& score, double t, const UldNoiseBlock& noise) {
  const Batch s = eval_score(score, t, state.x);
  check_finite(s, "corrector blow-up", t, 0);
  uld_step_with_score(state, h, gamma, s, noise);
}

long corrector_steps(double T_corr, double h_corr) {
  return static_cast<long>(fixed_steps(T_corr, h_corr).size());
}

Batch run_corrector(const Batch& x0, double t, const ScoreFn& score, double T_corr, double h_corr, double gamma,
                    const RngStream& rng, const WorkerPool& pool, std::uint64_t particle_offset) {
  const std::vector<double> steps = fixed_steps(T_corr, h_corr);
  Batch out(x0.rows(), x0.cols());
  const RngStream velocity = rng.child(0);
  const RngStream increments = rng.child(1);
  pool.parallel_for(static_cast<std::size_t>(x0.cols()), [&](std::size_t begin, std::size_t end) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    const std::uint64_t first = particle_offset + begin;
    UldState state{x0.middleCols(b, n), Batch(x0.rows(), n), 0.0};
    velocity.fill_normal(state.v, first);
    UldNoiseBlock noise{Batch(x0.rows(), n), Batch(x0.rows(), n), 0.0, 0.0};
    Batch s(x0.rows(), n);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      fill_uld_noise(increments.child(k), steps[k], gamma, first, noise);
      score(Array::Constant(n, t), state.x, s);
      try {
        check_finite(s, "corrector blow-up", t, static_cast<long>(k));
        uld_step_with_score(state, steps[k], gamma, s, noise);
      } catch (const NumericalError&) {
        throw NumericalError("corrector blow-up", t, static_cast<long>(k));
      }
    }
    out.middleCols(b, n) = state.x;
  });
  return out;
}

}  // namespace midpoint
