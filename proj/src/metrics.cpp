#include "midpoint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace midpoint {
namespace {

void require_size(Eigen::Index n) {
  if (n < kMinSampleSize) throw std::invalid_argument("sample size too small");
}

Matrix random_directions(int d, int count, const RngStream& rng) {
  Matrix u(d, count);
  rng.fill_normal(u, 0);
  for (int k = 0; k < count; ++k) u.col(k).normalize();
  return u;
}

Array sorted(Array y) {
  std::sort(y.begin(), y.end());
  return y;
}

Array plotting_positions(Eigen::Index n) {
  return (Array::LinSpaced(n, 0.0, static_cast<double>(n - 1)) + 0.5) / static_cast<double>(n);
}

double mean_square(const Array& a) { return a.square().mean(); }

// sqrt of the mean of per-direction squared distances, with a delta-method stderr.
Estimate sliced(const Array& squares, long n) {
  const double m = squares.mean();
  const double value = std::sqrt(std::max(m, 0.0));
  double se = 0.0;
  if (squares.size() > 1 && value > 0.0) {
    const double var = (squares - m).square().sum() / static_cast<double>(squares.size() - 1);
    se = std::sqrt(var / static_cast<double>(squares.size())) / (2.0 * value);
  }
  return {value, se, n};
}

double log_gaussian(const Vector& x, const Vector& m, const Eigen::LLT<Matrix>& llt, double log_det) {
  const Vector z = llt.matrixL().solve(x - m);
  return -0.5 * z.squaredNorm() - 0.5 * log_det - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

Array mixture_quantiles(const Mixture1d& law, const Array& probs) {
  double lo = law.means[0] - 12.0 * law.sds[0];
  double hi = law.means[0] + 12.0 * law.sds[0];
  for (std::size_t k = 1; k < law.weights.size(); ++k) {
    lo = std::min(lo, law.means[k] - 12.0 * law.sds[k]);
    hi = std::max(hi, law.means[k] + 12.0 * law.sds[k]);
  }
  constexpr int kTable = 8193;
  const Array grid = Array::LinSpaced(kTable, lo, hi);
  Array cdf(kTable);
  for (int i = 0; i < kTable; ++i) cdf(i) = law.cdf(grid(i));
  Array out(probs.size());
  int j = 0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = probs(k);
    if (k > 0 && p < probs(k - 1)) throw std::invalid_argument("mixture_quantiles: probabilities must increase");
    while (j < kTable - 2 && cdf(j + 1) < p) ++j;
    const double c0 = cdf(j), c1 = cdf(j + 1);
    double y = c1 > c0 ? grid(j) + (grid(j + 1) - grid(j)) * std::clamp((p - c0) / (c1 - c0), 0.0, 1.0) : grid(j);
    for (int it = 0; it < 3; ++it) {
      const double f = law.pdf(y);
      if (!(f > 0.0)) break;
      y = std::clamp(y - (law.cdf(y) - p) / f, grid(j), grid(j + 1));
    }
    out(k) = y;
  }
  return out;
}

Estimate w2_empirical(ConstBatchRef a, ConstBatchRef b, const RngStream& rng, int directions) {
  if (a.rows() != b.rows()) throw std::invalid_argument("w2: batches differ in dimension");
  if (a.cols() != b.cols()) throw std::invalid_argument("w2: batches differ in size");
  require_size(a.cols());
  const long n = a.cols();
  if (a.rows() == 1) {
    const Array sa = sorted(a.row(0).transpose().array());
    const Array sb = sorted(b.row(0).transpose().array());
    const double value = std::sqrt(mean_square(sa - sb));
    // spread between the two interleaved halves of the coupling
    const Array diff = (sa - sb).square();
    const Eigen::Index h = n / 2;
    const double even = std::sqrt(Eigen::Map<const Array, 0, Eigen::InnerStride<2>>(diff.data(), h).mean());
    const double odd = std::sqrt(Eigen::Map<const Array, 0, Eigen::InnerStride<2>>(diff.data() + 1, h).mean());
    return {value, 0.5 * std::abs(even - odd), n};
  }
  const Matrix u = random_directions(static_cast<int>(a.rows()), directions, rng);
  Array squares(directions);
  for (int k = 0; k < directions; ++k) {
    const Array pa = sorted((u.col(k).transpose() * a).transpose().array());
    const Array pb = sorted((u.col(k).transpose() * b).transpose().array());
    squares(k) = mean_square(pa - pb);
  }
  return sliced(squares, n);
}

Estimate w2_to_target(ConstBatchRef a, const TargetModel& target, double t, const RngStream& rng, int directions) {
  if (a.rows() != target.dim()) throw std::invalid_argument("w2: batch and target differ in dimension");
  require_size(a.cols());
  const long n = a.cols();
  const Array probs = plotting_positions(n);
  if (a.rows() == 1) {
    const Array q = mixture_quantiles(target.project(t, Vector::Ones(1)), probs);
    const Array diff = (sorted(a.row(0).transpose().array()) - q).square();
    const Eigen::Index h = n / 2;
    const double even = std::sqrt(Eigen::Map<const Array, 0, Eigen::InnerStride<2>>(diff.data(), h).mean());
    const double odd = std::sqrt(Eigen::Map<const Array, 0, Eigen::InnerStride<2>>(diff.data() + 1, h).mean());
    return {std::sqrt(diff.mean()), 0.5 * std::abs(even - odd), n};
  }
  const Matrix u = random_directions(static_cast<int>(a.rows()), directions, rng);
  Array squares(directions);
  for (int k = 0; k < directions; ++k) {
    const Array q = mixture_quantiles(target.project(t, u.col(k)), probs);
    squares(k) = mean_square(sorted((u.col(k).transpose() * a).transpose().array()) - q);
  }
  return sliced(squares, n);
}

namespace {

double moment_w2(ConstBatchRef a, ConstBatchRef b) {
  const Vector ma = a.rowwise().mean(), mb = b.rowwise().mean();
  const Batch ca = a.colwise() - ma, cb = b.colwise() - mb;
  const double norm = 1.0 / static_cast<double>(a.cols());
  return gaussian_w2(ma, norm * ca * ca.transpose(), mb, norm * cb * cb.transpose());
}

}  // namespace

Estimate w2_moment_matched(ConstBatchRef a, ConstBatchRef b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("w2: batches differ in shape");
  require_size(a.cols());
  const long n = a.cols();
  constexpr int kParts = 10;
  Array parts(kParts);
  for (int k = 0; k < kParts; ++k) {
    const Eigen::Index lo = n * k / kParts, hi = n * (k + 1) / kParts;
    parts(k) = moment_w2(a.middleCols(lo, hi - lo), b.middleCols(lo, hi - lo));
  }
  const double sd = std::sqrt((parts - parts.mean()).square().sum() / (kParts - 1));
  return {moment_w2(a, b), sd / std::sqrt(static_cast<double>(kParts)), n};
}

double gaussian_w2(const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2) {
  const auto sqrt_psd = [](const Matrix& c) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    return Matrix(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose());
  };
  const Matrix r = sqrt_psd(c1);
  const Matrix cross = sqrt_psd(r * c2 * r);
  double trace = c1.trace() + c2.trace() - 2.0 * cross.trace();
  // below rounding level of the traces
  if (trace < 64.0 * std::numeric_limits<double>::epsilon() * (c1.trace() + c2.trace())) trace = 0.0;
  return std::sqrt(std::max(0.0, (m1 - m2).squaredNorm() + trace));
}

double gaussian_tv_1d(double m1, double s1, double m2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw std::invalid_argument("gaussian_tv: sds must be positive");
  // Crossing points of the densities split the line into at most three pieces.
  std::vector<double> cuts;
  const double A = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
  const double B = m1 / (s1 * s1) - m2 / (s2 * s2);
  const double C = 0.5 * m2 * m2 / (s2 * s2) - 0.5 * m1 * m1 / (s1 * s1) + std::log(s2 / s1);
  if (std::abs(A) < 1e-14 * (1.0 / (s1 * s1))) {
    if (B != 0.0) cuts.push_back(-C / B);
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (disc > 0.0) {
      const double r = std::sqrt(disc);
      const double q = -0.5 * (B + std::copysign(r, B));
      double x1 = q / A, x2 = C / q;
      if (x1 > x2) std::swap(x1, x2);
      cuts = {x1, x2};
    }
  }
  double tv = 0.0;
  double prev_p = 0.0, prev_q = 0.0;
  for (double c : cuts) {
    const double p = normal_cdf((c - m1) / s1);
    const double q = normal_cdf((c - m2) / s2);
    tv += std::abs((p - prev_p) - (q - prev_q));
    prev_p = p;
    prev_q = q;
  }
  tv += std::abs((1.0 - prev_p) - (1.0 - prev_q));
  return std::min(1.0, 0.5 * tv);
}

double gaussian_tv(const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2, const RngStream& rng,
                   Eigen::Index samples) {
  if (m1.size() == 1) return gaussian_tv_1d(m1(0), std::sqrt(c1(0, 0)), m2(0), std::sqrt(c2(0, 0)));
  const Eigen::LLT<Matrix> l1(c1), l2(c2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_tv: covariances must be positive definite");
  const double ld1 = 2.0 * l1.matrixLLT().diagonal().array().log().sum();
  const double ld2 = 2.0 * l2.matrixLLT().diagonal().array().log().sum();
  Batch z(m1.size(), samples);
  rng.fill_normal(z, 0);
  const Batch x = (l1.matrixL() * z).colwise() + m1;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < samples; ++j) {
    const double r = log_gaussian(x.col(j), m2, l2, ld2) - log_gaussian(x.col(j), m1, l1, ld1);
    sum += std::max(0.0, -std::expm1(std::min(r, 0.0)));
  }
  return sum / static_cast<double>(samples);
}

double projected_tv(const Array& y, const Mixture1d& law) {
  const Eigen::Index n = y.size();
  require_size(n);
  const Array s = sorted(y);
  const double mean = s.mean();
  const double sd = std::sqrt((s - mean).square().sum() / static_cast<double>(n - 1));
  const auto at = [&](double p) { return s(static_cast<Eigen::Index>(p * static_cast<double>(n - 1))); };
  const double iqr = at(0.75) - at(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-12 * (1.0 + std::abs(mean));
  const double bw = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  const Mixture1d smooth = law.convolved(bw);
  double lo = s(0), hi = s(n - 1);
  for (std::size_t k = 0; k < smooth.weights.size(); ++k) {
    lo = std::min(lo, smooth.means[k] - 8.0 * smooth.sds[k]);
    hi = std::max(hi, smooth.means[k] + 8.0 * smooth.sds[k]);
  }
  lo -= 6.0 * bw;
  hi += 6.0 * bw;
  constexpr Eigen::Index kMaxBins = 1 << 16;
  const auto bins = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(4.0 * (hi - lo) / bw)), 512, kMaxBins);
  const double dx = (hi - lo) / static_cast<double>(bins - 1);

  // linear binning
  Array counts = Array::Zero(bins);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double pos = (s(k) - lo) / dx;
    const auto i = std::min(static_cast<Eigen::Index>(pos), bins - 2);
    const double w = pos - static_cast<double>(i);
    counts(i) += 1.0 - w;
    counts(i + 1) += w;
  }
  const auto half = static_cast<Eigen::Index>(std::ceil(6.0 * bw / dx));
  Array kernel(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double z = static_cast<double>(k) * dx / bw;
    kernel(k + half) = std::exp(-0.5 * z * z) / (bw * std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(n));
  }
  double l1 = 0.0, mass = 0.0;
  for (Eigen::Index i = 0; i < bins; ++i) {
    double f = 0.0;
    const Eigen::Index from = std::max<Eigen::Index>(0, i - half), to = std::min(bins - 1, i + half);
    for (Eigen::Index m = from; m <= to; ++m) f += counts(m) * kernel(m - i + half);
    const double g = smooth.pdf(lo + static_cast<double>(i) * dx);
    l1 += std::abs(f - g) * dx;
    mass += g * dx;
  }
  return std::clamp(0.5 * (l1 + std::max(0.0, 1.0 - mass)), 0.0, 1.0);
}

TvEstimate tv_estimate(ConstBatchRef x, const TargetModel& target, double t, const RngStream& rng, int projections) {
  if (x.rows() != target.dim()) throw std::invalid_argument("tv: batch and target differ in dimension");
  require_size(x.cols());
  const int d = static_cast<int>(x.rows());
  const int axes = std::min(d, projections);
  const int total = d == 1 ? 1 : std::max(projections, axes);
  Matrix u(d, total);
  u.leftCols(axes).setIdentity();
  if (total > axes) u.rightCols(total - axes) = random_directions(d, total - axes, rng.child(0));

  TvEstimate out;
  out.n = x.cols();
  for (int k = 0; k < total; ++k) {
    const double v = projected_tv((u.col(k).transpose() * x).transpose().array(), target.project(t, u.col(k)));
    if (v > out.lower_bound) {
      out.lower_bound = v;
      out.best_direction = k;
    }
  }
  const Eigen::Index half = x.cols() / 2;
  if (half >= kMinSampleSize) {
    const Vector dir = u.col(out.best_direction);
    const Mixture1d law = target.project(t, dir);
    const double a = projected_tv((dir.transpose() * x.leftCols(half)).transpose().array(), law);
    const double b = projected_tv((dir.transpose() * x.rightCols(half)).transpose().array(), law);
    out.stderr_ = 0.5 * std::abs(a - b);
  }
  if (target.single_gaussian()) {
    const Vector m = x.rowwise().mean();
    const Batch c = x.colwise() - m;
    const Matrix cov = c * c.transpose() / static_cast<double>(x.cols() - 1);
    const NoisedMarginal q = target.at(t);
    out.gaussian_fit = gaussian_tv(m, cov, q.mean(), q.covariance(), rng.child(1));
  }
  return out;
}

Estimate tv_to_standard_normal(const TargetModel& target, double t, Eigen::Index samples, const RngStream& rng) {
  require_size(samples);
  const Batch x = target.sample_exact(t, samples, rng);
  const Array log_q = target.log_density(t, x);
  const Array log_phi =
      -0.5 * x.colwise().squaredNorm().transpose().array() - 0.5 * target.dim() * std::log(2.0 * std::numbers::pi);
  const Array terms = (log_phi - log_q).min(0.0).unaryExpr([](double r) { return -std::expm1(r); });
  const double m = terms.mean();
  const double var = (terms - m).square().sum() / static_cast<double>(samples - 1);
  return {m, std::sqrt(var / static_cast<double>(samples)), static_cast<long>(samples)};
}

Estimate score_second_moment(const TargetModel& target, double t, Eigen::Index samples, const RngStream& rng) {
  require_size(samples);
  const Batch x = target.sample_exact(t, samples, rng);
  Batch s(x.rows(), x.cols());
  target.score(Array::Constant(samples, t), x, s);
  const Array sq = s.colwise().squaredNorm().transpose().array();
  const double m = sq.mean();
  const double var = (sq - m).square().sum() / static_cast<double>(samples - 1);
  return {m, std::sqrt(var / static_cast<double>(samples)), static_cast<long>(samples)};
}

OrderFit fit_order(const std::vector<double>& h, const std::vector<double>& err, const RngStream& rng, int resamples) {
  if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("fit_order: need two or more (h, err) pairs");
  const std::size_t m = h.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw std::invalid_argument("fit_order: h and err must be positive");
    lx[i] = std::log(h[i]);
    ly[i] = std::log(err[i]);
  }
  const auto ols = [&](const std::vector<std::size_t>& idx, double& slope, double& icept) {
    double mx = 0.0, my = 0.0;
    for (auto i : idx) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= static_cast<double>(idx.size());
    my /= static_cast<double>(idx.size());
    double sxx = 0.0, sxy = 0.0;
    for (auto i : idx) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 1e-300)) return false;
    slope = sxy / sxx;
    icept = my - slope * mx;
    return true;
  };
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), std::size_t{0});
  OrderFit fit;
  if (!ols(all, fit.slope, fit.intercept)) throw std::invalid_argument("fit_order: h values must differ");
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> idx(m);
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t k = 0; k < m; ++k)
      idx[k] = std::min(m - 1, static_cast<std::size_t>(rng.uniform(static_cast<std::uint64_t>(b), k) * static_cast<double>(m)));
    double s = 0.0, c = 0.0;
    if (ols(idx, s, c)) slopes.push_back(s);
  }
  if (slopes.empty()) {
    fit.ci_low = fit.ci_high = fit.slope;
    return fit;
  }
  std::sort(slopes.begin(), slopes.end());
  const auto pick = [&](double q) { return slopes[static_cast<std::size_t>(q * static_cast<double>(slopes.size() - 1))]; };
  fit.ci_low = std::min(fit.slope, pick(0.025));
  fit.ci_high = std::max(fit.slope, pick(0.975));
  return fit;
}

double score_norm_constant() { return std::exp(2.0) / std::expm1(2.0); }

std::vector<LemmaCheck> check_helper_lemmas(const TargetModel& target, const std::vector<double>& t_grid,
                                            Eigen::Index samples, const RngStream& rng) {
  std::vector<LemmaCheck> rows;
  const double d = target.dim();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const Estimate e = score_second_moment(target, t, samples, rng.child(0).child(i));
    const double bound = score_norm_constant() * d / std::min(t, 1.0);
    rows.push_back({"score_second_moment", t, e.value, e.stderr_, bound, e.value <= bound});
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const Estimate e = tv_to_standard_normal(target, t, samples, rng.child(1).child(i));
    const double bound = (std::sqrt(d) + target.second_moment()) * std::exp(-t);
    rows.push_back({"tv_to_gaussian", t, e.value, e.stderr_, bound, e.value <= bound});
  }
  return rows;
}

MetricReport evaluate_sample(ConstBatchRef x, const TargetModel& target, double t, const RngStream& rng) {
  MetricReport r;
  r.n = x.cols();
  r.w2 = w2_to_target(x, target, t, rng.child(0));
  r.tv = tv_estimate(x, target, t, rng.child(1));
  return r;
}

}  // namespace midpoint
