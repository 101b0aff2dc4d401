// One PASS/FAIL line per acceptance criterion.  `acceptance 3 5` runs a subset.

#include "midpoint/corrector.hpp"
#include "midpoint/logconcave.hpp"
#include "midpoint/metrics.hpp"
#include "midpoint/noise.hpp"
#include "midpoint/parallel.hpp"
#include "midpoint/predictor.hpp"
#include "midpoint/reference.hpp"
#include "midpoint/schedule.hpp"
#include "midpoint/sequential.hpp"
#include "midpoint/target.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace midpoint;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Batch standard_normals(int d, Eigen::Index n, const RngStream& rng) {
  Batch z(d, n);
  rng.fill_normal(z, 0);
  return z;
}

TargetModel two_bumps(int d) {
  Vector a = Vector::Zero(d);
  a(0) = 2.0;
  return TargetModel::gaussian_mixture({0.5, 0.5}, {a, -a}, {Matrix::Identity(d, d), Matrix::Identity(d, d)});
}

TargetModel kappa4() {
  return TargetModel::quadratic_log_concave(Vector::Zero(2), Eigen::Vector2d(1.0, 0.25).asDiagonal().toDenseMatrix());
}

// ---------------------------------------------------------------------------
// 1. stationarity

Outcome stationarity() {
  Outcome out;
  const Eigen::Index n = 100000;
  const double root_n = std::sqrt(static_cast<double>(n));
  double worst_mean = 0.0, worst_cov = 0.0, slowest = 0.0;
  std::string worst_case;
  for (int d : {1, 4, 16}) {
    const TargetModel m = TargetModel::isotropic_gaussian(d, 1.0);
    const ScoreFn score = m.score_fn();
    // same eps as the end-to-end criteria
    const Schedule seq = make_sequential_schedule(1.0, d, 0.3, m.second_moment());
    const Schedule par = make_parallel_schedule(1.0, d, 0.3, m.second_moment(), 1.0);
    const Schedule lc = make_logconcave_schedule(1.0, 1.0, d, 0.3);
    const RngStream rng(100 + d);
    const Batch x0 = standard_normals(d, n, rng.child(0));

    std::vector<std::pair<std::string, std::function<Batch()>>> cases;
    cases.emplace_back("seq predictor", [&] {
      SequentialOptions opt;
      opt.corrector = false;
      return run_sequential(seq, score, n, rng.child(1), opt).x;
    });
    cases.emplace_back("seq corrector", [&] {
      return run_corrector(x0, 0.5, score, seq.corrector.duration, seq.corrector.step, seq.corrector.gamma, rng.child(2));
    });
    cases.emplace_back("parallel predictor", [&] {
      return run_parallel(par, score, n, rng.child(3), WorkerPool::serial(), false).x;
    });
    cases.emplace_back("parallel corrector", [&] {
      WorkReport work;
      return run_parallel_corrector(x0, 0.5, score, par.corrector, rng.child(4), work);
    });
    cases.emplace_back("Shen-Lee", [&] {
      ShenLeeState s{x0, std::sqrt(lc.u) * standard_normals(d, n, rng.child(5)), lc.u};
      run_shenlee(s, lc.h_rand, 100, score, rng.child(6));
      return s.x;
    });

    for (auto& [name, fn] : cases) {
      const Clock clock;
      const Batch x = fn();
      const double secs = clock.seconds();
      const Vector mean = x.rowwise().mean();
      const Batch c = x.colwise() - mean;
      const Matrix cov = c * c.transpose() / static_cast<double>(n - 1);
      const double mean_ratio = mean.cwiseAbs().maxCoeff() * root_n;  // in units of 1/sqrt(n)
      const double cov_ratio = (cov - Matrix::Identity(d, d)).norm() / d;
      const std::string label = name + " d=" + std::to_string(d);
      out.require(mean_ratio <= 4.0, label + " mean");
      out.require(cov_ratio <= 0.05, label + " covariance");
      out.require(secs <= 120.0, label + " runtime");
      if (cov_ratio > worst_cov) {
        worst_cov = cov_ratio;
        worst_case = label;
      }
      worst_mean = std::max(worst_mean, mean_ratio);
      slowest = std::max(slowest, secs);
    }
  }
  out.detail << "max |mean| = " << worst_mean << "/sqrt(n) (limit 4), max ||cov - I||_F / d = " << worst_cov << " at "
             << worst_case << " (limit 0.05), slowest case " << slowest << " s (limit 120)";
  return out;
}

// ---------------------------------------------------------------------------
// 2. unbiased midpoint weight

Outcome unbiasedness() {
  Outcome out;
  const long n = 1000000;
  const RngStream rng(200);
  for (double h : {0.05, 0.2}) {
    double sum = 0.0, sq = 0.0;
    const RngStream stream = rng.child(static_cast<std::uint64_t>(h * 1000));
    for (long p = 0; p < n; ++p) {
      const double alpha = stream.uniform(static_cast<std::uint64_t>(p), 0);
      const double w = h * std::exp((1.0 - alpha) * h);
      sum += w;
      sq += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
    const double z = (mean - std::expm1(h)) / se;
    out.require(std::abs(z) <= 4.0, "h=" + std::to_string(h));
    out.detail << "h=" << h << ": mean " << mean << " vs " << std::expm1(h) << " (" << z << " SE); ";
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. convergence orders

Outcome convergence_orders() {
  Outcome out;
  const Clock clock;
  const TargetModel m = TargetModel::isotropic_gaussian(1, 4.0);
  const ScoreFn score = m.score_fn();
  const Eigen::Index n = 1000000;
  const RngStream rng(300);
  const Batch x0 = m.sample_exact(1.0, n, rng.child(0));
  const Batch ref = reference_flow(x0, 1.0, 0.5, score, 2.5e-3);
  const std::vector<double> hs{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> mid, expo;
  for (double h : hs) {
    const std::vector<double> steps = fixed_steps(0.5, h);
    const PredictorState a = run_predictor(x0, 1.0, steps, score, rng.child(1), PredictorMethod::RandomizedMidpoint);
    const PredictorState b = run_predictor(x0, 1.0, steps, score, rng.child(1), PredictorMethod::ExponentialIntegrator);
    mid.push_back(w2_moment_matched(a.x, ref).value);
    expo.push_back(w2_moment_matched(b.x, ref).value);
  }
  const OrderFit fm = fit_order(hs, mid, rng.child(2));
  const OrderFit fe = fit_order(hs, expo, rng.child(3));
  const double secs = clock.seconds();
  out.require(fm.slope >= 1.3, "midpoint slope");
  out.require(fm.slope - fe.slope >= 0.3, "slope gap");
  out.require(secs <= 600.0, "runtime");
  out.detail << "midpoint slope " << fm.slope << " [" << fm.ci_low << ", " << fm.ci_high << "], exponential slope "
             << fe.slope << " [" << fe.ci_low << ", " << fe.ci_high << "], W2 at h=0.0125: " << mid.back() << " vs "
             << expo.back() << ", " << secs << " s";
  return out;
}

// ---------------------------------------------------------------------------
// 4. Picard contraction

double lattice_mse(const std::vector<Batch>& a, const std::vector<Batch>& b) {
  double sum = 0.0;
  Eigen::Index count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]).squaredNorm();
    count += a[i].cols();
  }
  return sum / static_cast<double>(count);
}

Outcome picard_contraction() {
  Outcome out;
  const TargetModel m = TargetModel::isotropic_gaussian(2, 4.0);
  const ScoreFn score = m.score_fn();
  const double L = 1.0, h = 0.25, t = 1.0;
  const int R = 32;
  const int K = static_cast<int>(std::ceil(4.0 * std::log(static_cast<double>(R))));
  const Eigen::Index n = 20000;
  const RngStream rng(400);
  const Batch x = m.sample_exact(t, n, rng.child(0));
  MidpointLattice lat = picard_init(x, t, h, draw_lattice(rng.child(1), R, n), score);
  // every particle has its own node times
  std::vector<Batch> exact;
  for (int i = 0; i < R; ++i) exact.push_back(flow_to_times(m, x, t, t - lat.alphas.row(i).transpose() * h));
  MidpointLattice fixed = lat;
  for (int k = 0; k < 80; ++k) picard_round(fixed, x, score);
  const double floor = lattice_mse(fixed.estimates, exact);

  std::vector<double> err{lattice_mse(lat.estimates, exact)};
  for (int k = 0; k < K; ++k) {
    picard_round(lat, x, score);
    err.push_back(lattice_mse(lat.estimates, exact));
  }
  const double c = 8.0 * h * h * L * L;
  double worst = 0.0;
  for (std::size_t k = 1; k < err.size(); ++k) {
    if (err[k - 1] <= 2.0 * floor) break;
    // e_k <= (sqrt(c e_{k-1}) + sqrt(floor))^2
    const double bound = std::pow(std::sqrt(c) + std::sqrt(floor / err[k - 1]), 2);
    worst = std::max(worst, err[k] / err[k - 1] / bound);
  }
  // least-squares slope of log e_k on k over the rounds above the floor
  std::size_t m_fit = 0;
  while (m_fit < err.size() && err[m_fit] > 2.0 * floor) ++m_fit;
  double factor = std::nan("");
  if (m_fit >= 2) {
    double mk = 0.0, me = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < m_fit; ++k) {
      mk += static_cast<double>(k) / m_fit;
      me += std::log(err[k]) / m_fit;
    }
    for (std::size_t k = 0; k < m_fit; ++k) {
      sxx += (k - mk) * (k - mk);
      sxy += (k - mk) * (std::log(err[k]) - me);
    }
    factor = std::exp(sxy / sxx);
  }
  out.require(worst <= 1.0, "per-round ratio");
  out.require(factor <= 0.6, "geometric factor");
  out.require(err.back() <= 2.0 * floor, "floor reached in K rounds");
  out.detail << "factor " << factor << " (limit 0.6, bound 8h^2L^2 = " << c << "), worst ratio/bound " << worst
             << ", MSE after K=" << K << " rounds " << err.back() << " vs floor " << floor;
  return out;
}

// ---------------------------------------------------------------------------
// 5. noise covariances against Euler-Maruyama

Outcome noise_oracles() {
  Outcome out;
  const long paths = 1000000;
  const int substeps = 2000;
  const RngStream rng(500);
  double worst = 0.0;
  int k = 0;
  for (const auto& [h, g] : std::vector<std::pair<double, double>>{{0.1, 1.0}, {0.5, 2.0}, {1.0, 0.5}}) {
    UldNoiseBlock block{Batch(1, paths), Batch(1, paths), 0.0, 0.0};
    fill_uld_noise(rng.child(k), h, g, 0, block);
    Eigen::Matrix2d got;
    got(0, 0) = block.zeta_x.squaredNorm() / paths;
    got(1, 1) = block.zeta_v.squaredNorm() / paths;
    got(0, 1) = got(1, 0) = block.zeta_x.cwiseProduct(block.zeta_v).sum() / paths;
    const Eigen::Matrix2d em = oracle::em_uld_covariance(h, g, substeps, paths, 510 + k);
    const double gap = oracle::scaled_gap(got, em);
    out.require(gap <= 0.02, "ULD h=" + std::to_string(h));
    worst = std::max(worst, gap);
    ++k;
  }
  for (const auto& [alpha, h] : std::vector<std::pair<double, double>>{{0.3, 0.1}, {0.7, 0.5}, {1.0, 1.0}}) {
    RngStream stream = rng.child(k);
    const ShenLeeNoiseBlock b = sample_shenlee_noise(stream, alpha, h, 1.0, static_cast<int>(paths));
    Eigen::Matrix3d got;
    const Vector* w[3] = {&b.w1, &b.w2, &b.w3};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) got(i, j) = w[i]->dot(*w[j]) / paths;
    const Eigen::Matrix3d em = oracle::em_shenlee_covariance(alpha, h, substeps, paths, 520 + k);
    const double gap = oracle::scaled_gap(got, em);
    out.require(gap <= 0.02, "Shen-Lee alpha=" + std::to_string(alpha));
    worst = std::max(worst, gap);
    ++k;
  }
  out.detail << "largest scaled entry gap " << worst << " over 6 settings (limit 0.02)";
  return out;
}

// ---------------------------------------------------------------------------
// 6-7. end-to-end on the two-bump mixture

Outcome sequential_tv() {
  Outcome out;
  const Clock clock;
  const TargetModel m = two_bumps(2);
  const Schedule s = make_sequential_schedule(m.smoothness(), 2, 0.3, m.second_moment());
  const SampleResult r = run_sequential(s, m.score_fn(), 100000, RngStream(600));
  const TvEstimate tv = tv_estimate(r.x, m, 0.0, RngStream(601));
  const double secs = clock.seconds();
  out.require(tv.lower_bound <= 0.3, "TV");
  out.require(secs <= 900.0, "runtime");
  out.detail << "TV " << tv.lower_bound << " +- " << tv.stderr_ << " (limit 0.3), " << r.work.score_evaluations
             << " score evaluations, default constants, " << secs << " s";
  return out;
}

Outcome parallel_tv_and_rounds() {
  Outcome out;
  const double beta = 2.0, eps = 0.3;
  const TargetModel m2 = two_bumps(2), m8 = two_bumps(8);
  const Schedule s2 = make_parallel_schedule(m2.smoothness(), 2, eps, m2.second_moment(), beta);
  const Schedule s8 = make_parallel_schedule(m8.smoothness(), 8, eps, m8.second_moment(), beta);
  const SampleResult r2 = run_parallel(s2, m2.score_fn(), 100000, RngStream(700));
  const TvEstimate tv = tv_estimate(r2.x, m2, 0.0, RngStream(701));
  // the work counts are per particle and do not depend on the batch size
  const SampleResult r8 = run_parallel(s8, m8.score_fn(), 1000, RngStream(702));
  const double limit = 40.0 * std::log2(2 * beta / eps);
  const long dr = std::labs(r8.work.parallel_rounds - r2.work.parallel_rounds);
  const double growth = static_cast<double>(r8.work.score_evaluations) / static_cast<double>(r2.work.score_evaluations);
  out.require(tv.lower_bound <= 0.3, "TV");
  out.require(r2.work.parallel_rounds <= limit, "rounds at d=2");
  out.require(r8.work.parallel_rounds <= 40.0 * std::log2(8 * beta / eps), "rounds at d=8");
  out.require(dr <= 8, "round gap");
  out.require(growth >= 1.5, "evaluation growth");
  out.detail << "TV " << tv.lower_bound << " (limit 0.3), rounds d=2 " << r2.work.parallel_rounds << " (limit " << limit
             << "), d=8 " << r8.work.parallel_rounds << ", gap " << dr << " (limit 8), evaluations "
             << r2.work.score_evaluations << " -> " << r8.work.score_evaluations << " (x" << growth << ", need 1.5)";
  return out;
}

// ---------------------------------------------------------------------------
// 8. log-concave sampler

Outcome logconcave_tv() {
  Outcome out;
  const Clock clock;
  const TargetModel m = kappa4();
  std::vector<TvEstimate> tv;
  for (double eps : {0.3, 0.15}) {
    const Schedule s = make_logconcave_schedule(m.strong_convexity(), m.smoothness(), 2, eps);
    const SampleResult r = run_logconcave(m, s, 100000, RngStream(800));
    tv.push_back(tv_estimate(r.x, m, 0.0, RngStream(801)));
  }
  const double secs = clock.seconds();
  const double noise = 2.0 * std::hypot(tv[0].stderr_, tv[1].stderr_);
  out.require(tv[0].lower_bound <= 0.3, "TV");
  out.require(tv[1].lower_bound <= tv[0].lower_bound + noise, "TV after halving eps");
  out.require(secs <= 600.0, "runtime");
  out.detail << "TV " << tv[0].lower_bound << " at eps=0.3 (limit 0.3), " << tv[1].lower_bound
             << " at eps=0.15 (allowed up to " << tv[0].lower_bound + noise << "), " << secs << " s";
  return out;
}

// ---------------------------------------------------------------------------
// 9. helper lemmas

Outcome helper_lemmas() {
  Outcome out;
  Matrix aniso(2, 2);
  aniso << 2.0, 0.5, 0.5, 0.5;
  const std::vector<std::pair<std::string, TargetModel>> targets{
      {"isotropic", TargetModel::isotropic_gaussian(2, 4.0)},
      {"anisotropic", TargetModel::anisotropic_gaussian(Vector::Constant(2, 0.5), aniso)},
      {"mixture", two_bumps(2)},
      {"log-concave", kappa4()}};
  const RngStream rng(900);
  double worst = 0.0;
  int k = 0;
  for (const auto& [name, m] : targets) {
    for (double t : {0.01, 0.1, 1.0}) {
      const Estimate e = score_second_moment(m, t, 200000, rng.child(k++));
      const double bound = score_norm_constant() * m.dim() / std::min(t, 1.0);
      out.require(e.value <= bound, name + " t=" + std::to_string(t));
      worst = std::max(worst, e.value / bound);
    }
  }
  const TargetModel var4 = TargetModel::isotropic_gaussian(1, 4.0);
  std::vector<double> ts, tvs;
  double bound_ratio = 0.0;
  for (double T : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    const Estimate e = tv_to_standard_normal(var4, T, 1000000, rng.child(100 + k++));
    ts.push_back(T);
    tvs.push_back(e.value);
    bound_ratio = std::max(bound_ratio, e.value / ((1.0 + var4.second_moment()) * std::exp(-T)));
  }
  // log TV against T: fit_order works on log-log, so feed it e^T
  std::vector<double> eT;
  for (double T : ts) eT.push_back(std::exp(T));
  const OrderFit fit = fit_order(eT, tvs, rng.child(999));
  out.require(bound_ratio <= 1.0, "TV bound");
  out.require(fit.slope >= -1.4 && fit.slope <= -0.6, "TV decay slope");
  out.detail << "score moment at most " << worst << " of its bound over 4 targets x 3 times; TV(q_T, N(0,1)) "
             << tvs.front() << " -> " << tvs.back() << " over T in [0.5, 3], at most " << bound_ratio
             << " of (sqrt(d) + m2) e^-T, log-linear slope " << fit.slope << " (need [-1.4, -0.6])";
  return out;
}

// ---------------------------------------------------------------------------
// 10. determinism

Outcome determinism() {
  Outcome out;
  const TargetModel m = two_bumps(2);
  const Schedule s = make_parallel_schedule(m.smoothness(), 2, 0.3, m.second_moment(), 2.0);
  const Eigen::Index n = 5000;
  const Batch a = run_parallel(s, m.score_fn(), n, RngStream(1000), WorkerPool(1)).x;
  const Batch again = run_parallel(s, m.score_fn(), n, RngStream(1000), WorkerPool(1)).x;
  const Batch w4 = run_parallel(s, m.score_fn(), n, RngStream(1000), WorkerPool(4)).x;
  const Batch w8 = run_parallel(s, m.score_fn(), n, RngStream(1000), WorkerPool(8)).x;
  const Batch other = run_parallel(s, m.score_fn(), n, RngStream(1001), WorkerPool(1)).x;
  const auto same = [](const Batch& x, const Batch& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  out.require(same(a, again), "repeat run");
  out.require(same(a, w4), "4 workers");
  out.require(same(a, w8), "8 workers");
  out.require(!same(a, other), "seed sensitivity");
  const Schedule q = make_sequential_schedule(m.smoothness(), 2, 0.3, m.second_moment());
  out.require(same(run_sequential(q, m.score_fn(), 3000, RngStream(1002)).x,
                   run_sequential(q, m.score_fn(), 3000, RngStream(1002), {}, WorkerPool(8)).x),
              "sequential 1 vs 8 workers");
  out.detail << "parallel algorithm, " << n << " particles: repeat, 4 and 8 workers bit-identical; other seed differs";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"stationarity", stationarity},
      {"unbiased midpoint", unbiasedness},
      {"convergence order", convergence_orders},
      {"Picard contraction", picard_contraction},
      {"noise covariance", noise_oracles},
      {"sequential TV", sequential_tv},
      {"parallel TV and rounds", parallel_tv_and_rounds},
      {"log-concave TV", logconcave_tv},
      {"helper lemmas", helper_lemmas},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("criterion %d %s: %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
