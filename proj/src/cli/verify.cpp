#include "midpoint/cli.hpp"

#include "midpoint/metrics.hpp"
#include "midpoint/noise.hpp"
#include "midpoint/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace midpoint::cli {
namespace {

using nlohmann::json;

struct Check {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

// Trapezoid rule on [0, s] with 20000 panels.
template <typename F>
double quad(F f, double s) {
  constexpr int n = 20000;
  if (s <= 0.0) return 0.0;
  const double dx = s / n;
  double sum = 0.5 * (f(0.0) + f(s));
  for (int i = 1; i < n; ++i) sum += f(i * dx);
  return sum * dx;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

Check uld_quadrature(double step, double gamma) {
  const Eigen::Matrix2d c = uld_noise_covariance(step, gamma);
  // zeta = sqrt(2g) int k(r) dB with r the time to go
  const auto kv = [&](double r) { return std::exp(-gamma * r); };
  const auto kx = [&](double r) { return (1.0 - std::exp(-gamma * r)) / gamma; };
  const double vv = 2.0 * gamma * quad([&](double r) { return kv(r) * kv(r); }, step);
  const double xv = 2.0 * gamma * quad([&](double r) { return kx(r) * kv(r); }, step);
  const double xx = 2.0 * gamma * quad([&](double r) { return kx(r) * kx(r); }, step);
  const double err = std::max({rel(c(1, 1), vv), rel(c(0, 1), xv), rel(c(0, 0), xx)});
  return {"uld_covariance_quadrature(step=" + std::to_string(step) + ",gamma=" + std::to_string(gamma) + ")", err, 1e-6,
          err <= 1e-6};
}

Check shenlee_quadrature(double alpha, double h) {
  const Eigen::Matrix3d c = shenlee_noise_covariance(alpha, h);
  const double a = alpha * h;
  // integrands over s in [0, h]; W1 lives on [0, a]
  const auto k1 = [&](double s) { return s <= a ? 1.0 - std::exp(-2.0 * (a - s)) : 0.0; };
  const auto k2 = [&](double s) { return 1.0 - std::exp(-2.0 * (h - s)); };
  const auto k3 = [&](double s) { return std::exp(-2.0 * (h - s)); };
  Eigen::Matrix3d q;
  const auto on_a = [&](auto f) { return quad(f, a); };
  q(0, 0) = on_a([&](double s) { return k1(s) * k1(s); });
  q(0, 1) = on_a([&](double s) { return k1(s) * k2(s); });
  q(0, 2) = on_a([&](double s) { return k1(s) * k3(s); });
  q(1, 1) = quad([&](double s) { return k2(s) * k2(s); }, h);
  q(1, 2) = quad([&](double s) { return k2(s) * k3(s); }, h);
  q(2, 2) = quad([&](double s) { return k3(s) * k3(s); }, h);
  double err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) err = std::max(err, std::abs(c(i, j) - q(i, j)) / std::max(q.diagonal().maxCoeff(), 1e-300));
  return {"shenlee_covariance_quadrature(alpha=" + std::to_string(alpha) + ",h=" + std::to_string(h) + ")", err, 1e-6,
          err <= 1e-6};
}

Check uld_monte_carlo(double step, double gamma, const RngStream& rng) {
  constexpr Eigen::Index n = 200000;
  UldNoiseBlock b{Batch(1, n), Batch(1, n), 0.0, 0.0};
  fill_uld_noise(rng, step, gamma, 0, b);
  const Eigen::Matrix2d c = uld_noise_covariance(step, gamma);
  const double vv = b.zeta_v.squaredNorm() / n;
  const double xx = b.zeta_x.squaredNorm() / n;
  const double xv = b.zeta_x.cwiseProduct(b.zeta_v).sum() / n;
  const double err = std::max({rel(vv, c(1, 1)), rel(xx, c(0, 0)), rel(xv, c(0, 1))});
  return {"uld_covariance_monte_carlo(step=" + std::to_string(step) + ")", err, 0.03, err <= 0.03};
}

Check unbiasedness(double h) {
  constexpr int n = 1000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += h * std::exp((1.0 - (k + 0.5) / n) * h);
  const double err = std::abs(sum / n - std::expm1(h));
  return {"midpoint_unbiasedness(h=" + std::to_string(h) + ")", err, 1e-6, err <= 1e-6};
}

Check telescoping(const RngStream& rng) {
  double worst = 0.0;
  for (int R : {1, 2, 5, 16, 64}) {
    for (double h : {0.05, 0.25, 1.0}) {
      const Eigen::ArrayXXd alphas = draw_lattice(rng.child(static_cast<std::uint64_t>(R)), R, 1);
      for (int i = 1; i <= R; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= i; ++j) sum += collocation_weight(i, j, h, h / R, alphas(i - 1, 0));
        worst = std::max(worst, std::abs(sum - std::expm1(alphas(i - 1, 0) * h)));
      }
    }
  }
  return {"collocation_telescoping", worst, 1e-12, worst <= 1e-12};
}

Check score_gradient(const TargetModel& target, const RngStream& rng) {
  const Batch x = target.sample_exact(0.3, 20, rng);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector s = target.score(0.3, x.col(j));
    for (int i = 0; i < target.dim(); ++i) {
      Batch p = x.col(j), m = x.col(j);
      p(i, 0) += 1e-5;
      m(i, 0) -= 1e-5;
      const double fd = (target.log_density(0.3, p)(0) - target.log_density(0.3, m)(0)) / 2e-5;
      worst = std::max(worst, std::abs(fd - s(i)) / std::max(1.0, std::abs(s(i))));
    }
  }
  return {"score_finite_difference", worst, 1e-5, worst <= 1e-5};
}

}  // namespace

int cmd_verify(const RunConfig& config) {
  const RngStream rng(config.seed);
  std::vector<Check> checks;
  const double settings[][2] = {{0.01, 1.0}, {0.1, 2.0}, {1.0, 1.0}};
  for (const auto& s : settings) checks.push_back(uld_quadrature(s[0], s[1]));
  for (std::size_t i = 0; i < 3; ++i) checks.push_back(uld_monte_carlo(settings[i][0], settings[i][1], rng.child(0).child(i)));
  for (double alpha : {0.0, 0.3, 0.5, 1.0}) checks.push_back(shenlee_quadrature(alpha, 0.1));
  checks.push_back(shenlee_quadrature(0.7, 1.0));
  checks.push_back(unbiasedness(0.05));
  checks.push_back(unbiasedness(0.2));
  checks.push_back(telescoping(rng.child(1)));
  checks.push_back(score_gradient(*config.target, rng.child(2)));
  for (const LemmaCheck& l : check_helper_lemmas(*config.target, {0.01, 0.1, 1.0}, 20000, rng.child(3)))
    checks.push_back({l.name + "(t=" + std::to_string(l.t) + ")", l.value, l.bound, l.pass});

  json out = {{"version", version()}, {"config_hash", config_hash(config.raw)}, {"checks", json::array()}};
  bool all = true;
  for (const Check& c : checks) {
    out["checks"].push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance << '\n';
    all = all && c.pass;
  }
  out["pass"] = all;
  std::filesystem::create_directories(config.out);
  std::ofstream(config.out / "verify.json") << out.dump(2) << '\n';
  return all ? kOk : kFailure;
}

}  // namespace midpoint::cli
