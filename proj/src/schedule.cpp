#include "midpoint/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace midpoint {
namespace {

constexpr double kSnap = 1e-12;

void check_theorem_range(Schedule& s) {
  if (s.eps >= 1.0 || s.L < 1.0) s.notes.push_back("parameter out of theorem range (need L >= 1, eps < 1)");
}

void fill_horizon(Schedule& s) {
  const ScheduleConstants& c = s.constants;
  const double spread = std::max(static_cast<double>(s.d), s.m2 * s.m2);
  s.T = c.c_T * std::log(spread / (s.eps * s.eps));
  s.delta = c.c_delta * s.eps * s.eps / (s.L * s.L * spread);
  if (!(s.T > s.delta)) throw std::invalid_argument("schedule: horizon T must exceed delta");
}

double log_m2_factor(Schedule& s) {
  const double lm = s.m2 > 0.0 ? std::log(s.m2) : 0.0;
  if (lm < 1.0) {
    s.notes.push_back("log(m2) clamped below by 1");
    return 1.0;
  }
  return lm;
}

}  // namespace

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::Sequential: return "sequential";
    case ScheduleMode::Parallel: return "parallel";
    case ScheduleMode::LogConcave: return "logconcave";
  }
  return "unknown";
}

std::vector<double> fixed_steps(double duration, double step) {
  if (!(duration > 0.0) || !(step > 0.0)) throw std::invalid_argument("fixed_steps: duration and step must be positive");
  const double ratio = duration / step;
  auto full = static_cast<long>(std::floor(ratio + kSnap));
  std::vector<double> steps(static_cast<std::size_t>(full), step);
  const double rest = duration - static_cast<double>(full) * step;
  if (rest > kSnap * duration) steps.push_back(rest);
  if (steps.empty()) steps.push_back(duration);
  return steps;
}

long Schedule::predictor_steps() const {
  long n = 0;
  for (const auto& b : blocks) n += static_cast<long>(b.steps.size());
  return n;
}

std::vector<double> Schedule::grid() const {
  std::vector<double> g;
  for (const auto& b : blocks) {
    double t = b.t_start;
    if (g.empty()) g.push_back(t);
    for (std::size_t i = 0; i < b.steps.size(); ++i) {
      t = (i + 1 == b.steps.size()) ? b.t_end : t - b.steps[i];
      g.push_back(t);
    }
  }
  return g;
}

Schedule make_sequential_schedule(double L, int d, double eps, double m2, const ScheduleConstants& c) {
  if (!(L > 0.0) || d < 1 || !(eps > 0.0)) throw std::invalid_argument("schedule: need L > 0, d >= 1, eps > 0");
  Schedule s;
  s.mode = ScheduleMode::Sequential;
  s.L = L;
  s.d = d;
  s.eps = eps;
  s.m2 = m2;
  s.constants = c;
  check_theorem_range(s);
  fill_horizon(s);
  const double lm = log_m2_factor(s);
  const double dd = d;
  s.h_pred = c.c_hpred *
             std::min(std::sqrt(eps) / (std::cbrt(dd) * std::pow(L, 1.5)),
                      std::pow(eps, 2.0 / 3.0) / (std::pow(dd, 5.0 / 12.0) * std::pow(L, 5.0 / 3.0))) /
             lm;
  s.corrector.step = c.c_hcorr * eps / (std::pow(dd, 17.0 / 36.0) * std::pow(L, 1.5) * lm);
  s.corrector.duration = c.c_Tcorr / (std::sqrt(L) * std::pow(dd, 1.0 / 18.0));
  s.corrector.gamma = c.c_gamma * std::sqrt(L);

  // Geometric tail h/2, h/4, ... closed by one step of exactly delta.
  for (double h = 0.5 * s.h_pred; h > s.delta; h *= 0.5) s.tail_steps.push_back(h);
  s.tail_steps.push_back(s.delta);
  const double t_tail = s.delta + std::accumulate(s.tail_steps.begin(), s.tail_steps.end(), 0.0);
  if (!(s.T > t_tail)) throw std::invalid_argument("schedule: horizon T too short for the predictor tail");

  const double block = 1.0 / L;
  s.N0 = static_cast<int>(std::ceil(L * (s.T - t_tail) - 1e-9));
  for (int n = 0; n < s.N0; ++n) {
    PredictorBlock b;
    b.t_start = s.T - n * block;
    b.t_end = (n + 1 == s.N0) ? t_tail : s.T - (n + 1) * block;
    const double len = b.t_start - b.t_end;
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(len / s.h_pred - 1e-9)));
    b.steps.assign(count, len / static_cast<double>(count));
    s.blocks.push_back(std::move(b));
  }
  PredictorBlock tail;
  tail.t_start = t_tail;
  tail.t_end = s.delta;
  tail.steps = s.tail_steps;
  s.blocks.push_back(std::move(tail));
  return s;
}

Schedule make_parallel_schedule(double L, int d, double eps, double m2, double beta, const ScheduleConstants& c) {
  if (!(L > 0.0) || d < 1 || !(eps > 0.0)) throw std::invalid_argument("schedule: need L > 0, d >= 1, eps > 0");
  if (!(beta >= 1.0)) throw std::invalid_argument("schedule: beta must be >= 1");
  Schedule s;
  s.mode = ScheduleMode::Parallel;
  s.L = L;
  s.d = d;
  s.eps = eps;
  s.m2 = m2;
  s.beta = beta;
  s.constants = c;
  check_theorem_range(s);
  fill_horizon(s);
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const int depth = std::max(1, static_cast<int>(std::ceil(c.c_K * std::log(beta * sqrt_d / eps))));
  const double window_cap = 1.0 / (4.0 * L);

  for (int n = 0;; ++n) {
    PredictorBlock b;
    b.t_start = s.T - n / L;
    b.t_end = std::max(s.T - (n + 1) / L, s.delta);
    if (b.t_end < s.delta + kSnap * s.T) b.t_end = s.delta;
    double t = b.t_start;
    while (t > b.t_end) {
      double h = std::min({window_cap, 0.5 * t, t - s.delta, t - b.t_end});
      if (t - h - b.t_end <= kSnap * s.T) h = t - b.t_end;
      b.steps.push_back(h);
      b.midpoints.push_back(std::max(1, static_cast<int>(std::ceil(c.c_R * h * beta * L * sqrt_d / eps - 1e-9))));
      b.picard_depth.push_back(depth);
      t = (t - h - b.t_end <= kSnap * s.T) ? b.t_end : t - h;
    }
    s.blocks.push_back(std::move(b));
    if (s.blocks.back().t_end == s.delta) break;
  }
  s.N0 = static_cast<int>(s.blocks.size()) - 1;

  s.corrector.duration = c.c_Tcorr / std::sqrt(L);
  s.corrector.gamma = c.c_gamma * std::sqrt(L);
  const double h_cap = 1.0 / std::sqrt(8.0 * L);
  const double outer = std::ceil(s.corrector.duration / h_cap - 1e-9);
  s.corrector.step = s.corrector.duration / outer;
  s.corrector.midpoints = std::max(1, static_cast<int>(std::ceil(c.c_Rcorr * beta * sqrt_d / eps - 1e-9)));
  s.corrector.picard_depth =
      std::max(1, static_cast<int>(std::ceil(c.c_Kcorr * 4.0 * std::log(static_cast<double>(s.corrector.midpoints)))));
  return s;
}

Schedule make_logconcave_schedule(double m, double L, int d, double eps, const ScheduleConstants& c) {
  if (!(m > 0.0) || !(m <= L)) throw std::invalid_argument("schedule: need 0 < m <= L");
  if (d < 1 || !(eps > 0.0)) throw std::invalid_argument("schedule: need d >= 1, eps > 0");
  Schedule s;
  s.mode = ScheduleMode::LogConcave;
  s.m = m;
  s.L = L;
  s.d = d;
  s.eps = eps;
  s.constants = c;
  if (eps >= 1.0) s.notes.push_back("parameter out of theorem range (need eps < 1)");
  const double dd = d;
  s.kappa = L / m;
  s.h_rand = c.c_hrand * std::pow(eps, 2.0 / 3.0) / (std::pow(dd, 5.0 / 12.0) * std::cbrt(s.kappa)) /
             std::cbrt(std::log(dd * s.kappa / eps));
  s.N_rand = std::max(1L, static_cast<long>(std::ceil(c.c_Nrand * (4.0 * s.kappa / s.h_rand) *
                                                      std::log(20.0 * dd * s.kappa / (eps * eps)))));
  s.u = 1.0 / L;
  s.corrector.step = c.c_hcorr * eps / (std::pow(dd, 17.0 / 36.0) * std::sqrt(L));
  s.corrector.duration = c.c_Tcorr / (std::sqrt(L) * std::pow(dd, 1.0 / 18.0));
  s.corrector.gamma = c.c_gamma * std::sqrt(L);
  return s;
}

}  // namespace midpoint
