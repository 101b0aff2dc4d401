#include "midpoint/cli.hpp"

#include "midpoint/logconcave.hpp"
#include "midpoint/metrics.hpp"
#include "midpoint/parallel.hpp"
#include "midpoint/reference.hpp"
#include "midpoint/sequential.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace midpoint::cli {
namespace {

using nlohmann::json;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string hash) : out_(path), hash_(std::move(hash)) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << kCsvHeader << '\n' << std::setprecision(17);
  }
  void row(const std::string& metric, double value, double stderr_, long n) {
    out_ << metric << ',' << value << ',' << stderr_ << ',' << n << ',' << hash_ << '\n';
  }

 private:
  std::ofstream out_;
  std::string hash_;
};

json provenance(const RunConfig& config) {
  return {{"version", version()},
          {"rng_schema", kRngSchemaVersion},
          {"csv_schema", kCsvSchemaVersion},
          {"seed", config.seed},
          {"workers", config.workers},
          {"config", config.raw},
          {"config_hash", config_hash(config.raw)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json metrics_json(const MetricReport& m) {
  json j = {{"n", m.n},
            {"w2", m.w2.value},
            {"w2_stderr", m.w2.stderr_},
            {"tv_lower_bound", m.tv.lower_bound},
            {"tv_stderr", m.tv.stderr_}};
  if (!std::isnan(m.tv.gaussian_fit)) j["tv_gaussian_fit"] = m.tv.gaussian_fit;
  return j;
}

// Error of every Picard round against the exact flow at the lattice nodes.
struct PicardTrace {
  std::vector<double> mse;  // index k = round
  double factor = 0.0;
  double floor = 0.0;
};

PicardTrace picard_trace(const TargetModel& target, double t_n, double h, int R, int K, Eigen::Index n,
                         const RngStream& rng) {
  const Batch x_n = target.sample_exact(t_n, n, rng.child(0));
  const ScoreFn score = target.score_fn();
  MidpointLattice lattice = picard_init(x_n, t_n, h, draw_lattice(rng.child(1), R, n), score);
  std::vector<Batch> exact;
  for (int i = 0; i < R; ++i)
    exact.push_back(flow_to_times(target, x_n, t_n, t_n - lattice.alphas.row(i).transpose() * h));
  const auto error = [&] {
    double sum = 0.0;
    for (int i = 0; i < R; ++i) sum += (lattice.estimates[static_cast<std::size_t>(i)] - exact[static_cast<std::size_t>(i)]).colwise().squaredNorm().sum();
    return sum / static_cast<double>(R * n);
  };
  PicardTrace trace;
  trace.mse.push_back(error());
  for (int k = 0; k < K; ++k) {
    picard_round(lattice, x_n, score);
    trace.mse.push_back(error());
  }
  trace.floor = trace.mse.back();
  std::vector<double> ks, es;
  for (std::size_t k = 0; k < trace.mse.size(); ++k) {
    if (trace.mse[k] <= 2.0 * trace.floor) break;
    ks.push_back(static_cast<double>(k));
    es.push_back(std::log(trace.mse[k]));
  }
  if (ks.size() >= 2) {
    double mk = 0.0, me = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      mk += ks[i];
      me += es[i];
    }
    mk /= static_cast<double>(ks.size());
    me /= static_cast<double>(ks.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      sxx += (ks[i] - mk) * (ks[i] - mk);
      sxy += (ks[i] - mk) * (es[i] - me);
    }
    trace.factor = std::exp(sxy / sxx);
  }
  return trace;
}

}  // namespace

int cmd_sample(const RunConfig& config) {
  const TargetModel& target = *config.target;
  const Schedule schedule = build_schedule(config);
  for (const auto& note : schedule.notes) std::cerr << "warning: " << note << '\n';
  const RngStream rng(config.seed);
  const ScoreFn score = make_score_fn(target, config.eps_sc, rng.child(7));
  const WorkerPool pool(config.workers);
  SampleResult result;
  try {
    if (config.algorithm == "parallel") {
      result = run_parallel(schedule, score, config.batch, rng, pool);
    } else if (config.algorithm == "logconcave") {
      result = run_logconcave(target, schedule, config.batch, rng, {}, pool, score);
    } else {
      SequentialOptions opt;
      if (config.algorithm == "baseline-exp") opt.method = PredictorMethod::ExponentialIntegrator;
      result = run_sequential(schedule, score, config.batch, rng, opt, pool);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical blow-up: " << e.what() << '\n';
    return kBlowUp;
  }
  std::filesystem::create_directories(config.out);
  write_samples(config.out / "samples.f64", result.x);
  json report = provenance(config);
  report["algorithm"] = config.algorithm;
  report["schedule"] = to_json(schedule);
  report["work"] = to_json(result.work);
  const std::string hash = config_hash(config.raw);
  CsvWriter csv(config.out / "metrics.csv", hash);
  if (result.x.cols() >= kMinSampleSize) {
    const MetricReport m = evaluate_sample(result.x, target, 0.0, rng.child(9));
    report["metrics"] = metrics_json(m);
    csv.row("w2", m.w2.value, m.w2.stderr_, m.n);
    csv.row("tv_lower_bound", m.tv.lower_bound, m.tv.stderr_, m.n);
    if (!std::isnan(m.tv.gaussian_fit)) csv.row("tv_gaussian_fit", m.tv.gaussian_fit, 0.0, m.n);
  }
  csv.row("parallel_rounds", static_cast<double>(result.work.parallel_rounds), 0.0, result.x.cols());
  csv.row("score_evaluations", static_cast<double>(result.work.score_evaluations), 0.0, result.x.cols());
  write_json(config.out / "report.json", report);
  return kOk;
}

int cmd_convergence_study(const RunConfig& config) {
  const TargetModel& target = *config.target;
  const StudyConfig& s = config.study;
  if (!(s.t_start > s.t_end) || s.t_end < 0.0) throw ConfigError("study needs t_start > t_end >= 0");
  const RngStream rng(config.seed);
  const ScoreFn score = target.score_fn();
  const WorkerPool pool(config.workers);
  const Batch x0 = target.sample_exact(s.t_start, s.particles, rng.child(0));
  double h_min = s.h_grid.front();
  for (double h : s.h_grid) h_min = std::min(h_min, h);
  const Batch reference = target.single_gaussian() ? gaussian_flow_map(target, s.t_start, s.t_end, x0)
                                                   : reference_flow(x0, s.t_start, s.t_end, score, h_min / 100.0);
  std::filesystem::create_directories(config.out);
  std::ofstream table(config.out / "convergence.csv");
  table << "algorithm,h,w2,w2_stderr,w2_sorted,w2_coupling,tv_lower_bound\n" << std::setprecision(17);
  const std::string hash = config_hash(config.raw);
  CsvWriter csv(config.out / "metrics.csv", hash);
  json report = provenance(config);
  const std::pair<const char*, PredictorMethod> methods[] = {{"midpoint", PredictorMethod::RandomizedMidpoint},
                                                             {"exp", PredictorMethod::ExponentialIntegrator}};
  for (std::size_t m = 0; m < 2; ++m) {
    std::vector<double> hs, errs;
    for (std::size_t i = 0; i < s.h_grid.size(); ++i) {
      const std::vector<double> steps = fixed_steps(s.t_start - s.t_end, s.h_grid[i]);
      PredictorState out;
      try {
        out = run_predictor(x0, s.t_start, steps, score, rng.child(1).child(i), methods[m].second, pool);
      } catch (const NumericalError& e) {
        std::cerr << "error: numerical blow-up: " << e.what() << '\n';
        return kBlowUp;
      }
      // moment-matched W2 resolves the bias on Gaussian targets; the sorted
      // coupling is noise-limited there
      const Estimate sorted = w2_empirical(out.x, reference, rng.child(2));
      const Estimate w2 = target.single_gaussian() ? w2_moment_matched(out.x, reference) : sorted;
      const double coupling = std::sqrt((out.x - reference).colwise().squaredNorm().mean());
      const double tv = tv_estimate(out.x, target, s.t_end, rng.child(3)).lower_bound;
      table << methods[m].first << ',' << s.h_grid[i] << ',' << w2.value << ',' << w2.stderr_ << ',' << sorted.value
            << ',' << coupling << ',' << tv << '\n';
      hs.push_back(s.h_grid[i]);
      errs.push_back(std::max(w2.value, 1e-300));
    }
    const OrderFit fit = fit_order(hs, errs, rng.child(4));
    csv.row(std::string("order_") + methods[m].first, fit.slope, 0.5 * (fit.ci_high - fit.ci_low), s.particles);
    report["orders"][methods[m].first] = {{"slope", fit.slope}, {"ci", {fit.ci_low, fit.ci_high}}};
  }
  write_json(config.out / "report.json", report);
  return kOk;
}

int cmd_picard_study(const RunConfig& config) {
  const StudyConfig& s = config.study;
  const int K = s.rounds > 0 ? s.rounds : static_cast<int>(std::ceil(4.0 * std::log(s.midpoints))) + 4;
  const PicardTrace trace =
      picard_trace(*config.target, s.t_n, s.window, s.midpoints, K, std::min<Eigen::Index>(s.particles, 20000),
                   RngStream(config.seed));
  std::filesystem::create_directories(config.out);
  std::ofstream table(config.out / "picard.csv");
  table << "round,mse,ratio\n" << std::setprecision(17);
  for (std::size_t k = 0; k < trace.mse.size(); ++k)
    table << k << ',' << trace.mse[k] << ',' << (k == 0 ? 0.0 : trace.mse[k] / trace.mse[k - 1]) << '\n';
  CsvWriter csv(config.out / "metrics.csv", config_hash(config.raw));
  csv.row("contraction_factor", trace.factor, 0.0, s.particles);
  csv.row("picard_floor", trace.floor, 0.0, s.particles);
  json report = provenance(config);
  report["picard"] = {{"mse", trace.mse}, {"factor", trace.factor}, {"floor", trace.floor},
                      {"bound", 8.0 * s.window * s.window * std::pow(config.target->smoothness(), 2)}};
  write_json(config.out / "report.json", report);
  return kOk;
}

}  // namespace midpoint::cli
