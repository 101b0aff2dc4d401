#pragma once

#include <string>
#include <vector>

namespace midpoint {

enum class ScheduleMode { Sequential, Parallel, LogConcave };

std::string to_string(ScheduleMode mode);

/// Multipliers for every hidden constant in the asymptotic parameter
/// choices.  All default to 1; the CLI exposes each as --c-<name>.
struct ScheduleConstants {
  double c_T = 1.0;       // horizon T
  double c_delta = 1.0;   // early-stopping time delta
  double c_hpred = 1.0;   // sequential predictor step
  double c_hcorr = 1.0;   // corrector step
  double c_Tcorr = 1.0;   // corrector duration
  double c_gamma = 1.0;   // friction, gamma = c_gamma * sqrt(L)
  double c_R = 1.0;       // parallel predictor midpoints per window
  double c_K = 1.0;       // parallel predictor Picard depth
  double c_Rcorr = 1.0;   // parallel corrector sub-steps
  double c_Kcorr = 1.0;   // parallel corrector depth, K = ceil(c_Kcorr * 4 log R)
  double c_hrand = 1.0;   // log-concave step size constant C
  double c_Nrand = 1.0;   // log-concave iteration count

  bool operator==(const ScheduleConstants&) const = default;
};

/// A contiguous stretch of predictor steps followed by one corrector call.
struct PredictorBlock {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> steps;      // step sizes (parallel: window lengths h_n)
  std::vector<int> midpoints;     // R_n per window (parallel only)
  std::vector<int> picard_depth;  // K_n per window (parallel only)

  bool operator==(const PredictorBlock&) const = default;
};

struct CorrectorParams {
  double duration = 0.0;   // T_corr
  double step = 0.0;       // h_corr (parallel: outer step h)
  double gamma = 0.0;
  int midpoints = 1;       // parallel corrector R
  int picard_depth = 0;    // parallel corrector K

  bool operator==(const CorrectorParams&) const = default;
};

/// Immutable description of a full run.  Forward times decrease from T to
/// delta across `blocks`; each block is followed by a corrector whose score
/// is frozen at the block's `t_end`.
struct Schedule {
  ScheduleMode mode = ScheduleMode::Sequential;
  // inputs
  double L = 1.0;
  int d = 1;
  double eps = 0.5;
  double m2 = 0.0;
  double beta = 1.0;
  double m = 0.0;
  // derived
  double T = 0.0;
  double delta = 0.0;
  double h_pred = 0.0;
  int N0 = 0;
  std::vector<double> tail_steps;
  std::vector<PredictorBlock> blocks;
  CorrectorParams corrector;
  // log-concave only
  double kappa = 0.0;
  double h_rand = 0.0;
  long N_rand = 0;
  double u = 0.0;

  ScheduleConstants constants;
  std::vector<std::string> notes;

  long predictor_steps() const;
  /// Every predictor grid point, from T down to delta.
  std::vector<double> grid() const;

  bool operator==(const Schedule&) const = default;
};

Schedule make_sequential_schedule(double L, int d, double eps, double m2, const ScheduleConstants& c = {});
Schedule make_parallel_schedule(double L, int d, double eps, double m2, double beta, const ScheduleConstants& c = {});
Schedule make_logconcave_schedule(double m, double L, int d, double eps, const ScheduleConstants& c = {});

/// Step sizes of length `step` covering `duration`, with a shortened final
/// step so that the sum lands exactly on `duration`.
std::vector<double> fixed_steps(double duration, double step);

}  // namespace midpoint
