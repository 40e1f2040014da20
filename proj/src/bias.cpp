#include "metricmi/bias.hpp"

#include "metricmi/parallel.hpp"
#include "metricmi/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace metricmi {

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

std::vector<double> default_lambdas(std::size_t n_t) {
  std::vector<double> out;
  for (double lambda : lambda_grid())
    if (subsample_trials(n_t, lambda) >= 2) out.push_back(lambda);
  return out;
}

std::vector<CurvePoint> subsample_curve(const PreparedEstimator& estimator, const LabeledDataset& data,
                                        const CurveOptions& options) {
  const auto lambdas = options.lambdas.empty() ? default_lambdas(data.n_t()) : options.lambdas;
  if (lambdas.empty()) throw FitError("subsample curve: no usable subsample fractions for n_t = " + std::to_string(data.n_t()));
  if (options.repeats == 0) throw FitError("subsample curve: repeats must be >= 1");

  std::vector<std::size_t> trials(lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    trials[l] = subsample_trials(data.n_t(), lambdas[l]);
    if (trials[l] < 2)
      throw FitError("subsample fraction " + format_real(lambdas[l]) + " leaves " + std::to_string(trials[l]) +
                     " trial(s) per stimulus; at least 2 are required");
  }

  struct Task {
    std::size_t lambda_index;
    std::size_t repeat;
  };
  std::vector<Task> tasks;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const std::size_t reps = trials[l] == data.n_t() ? 1 : options.repeats;
    for (std::size_t r = 0; r < reps; ++r) tasks.push_back({l, r});
  }

  std::vector<double> results(tasks.size());
  parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const auto [l, r] = tasks[t];
    if (trials[l] == data.n_t()) {
      results[t] = estimator.full_bits();
      return;
    }
    const auto members = subsample_indices(data.labels(), data.n_s(), data.n_t(), lambdas[l],
                                           derive_seed(options.seed, {l, r}));
    results[t] = estimator.bits(members, trials[l]);
  });

  std::vector<CurvePoint> curve;
  std::size_t t = 0;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    double sum = 0.0;
    std::size_t count = 0;
    for (; t < tasks.size() && tasks[t].lambda_index == l; ++t, ++count) sum += results[t];
    curve.push_back({lambdas[l], trials[l], sum / static_cast<double>(count)});
  }
  return curve;
}

std::vector<CurvePoint> subsample_curve(const LabeledDataset& data, const DistanceMatrix& dm,
                                        const EstimatorConfig& config, const CurveOptions& options) {
  PreparedEstimator estimator(data, &dm, config, options.threads);
  return subsample_curve(estimator, data, options);
}

BiasFit quadratic_extrapolate(std::span<const CurvePoint> curve) {
  std::set<std::size_t> sizes;
  for (const auto& p : curve) {
    if (p.n_t == 0) throw FitError("bias fit: n_t must be positive");
    if (!std::isfinite(p.bits)) throw FitError("bias fit: non-finite estimate in curve");
    sizes.insert(p.n_t);
  }
  if (sizes.size() < 3)
    throw FitError("bias fit: rank-deficient design, need 3 distinct n_t but got " + std::to_string(sizes.size()));

  // regress on u = (1/n_t - mean) / scale to keep the normal equations well conditioned
  using real = long double;
  const auto n = static_cast<real>(curve.size());
  real mean = 0;
  for (const auto& p : curve) mean += 1.0L / static_cast<real>(p.n_t);
  mean /= n;
  real scale = 0;
  for (const auto& p : curve) scale = std::max(scale, std::abs(1.0L / static_cast<real>(p.n_t) - mean));

  std::array<std::array<real, 4>, 3> m{}; // augmented [X^T X | X^T y]
  for (const auto& p : curve) {
    const real u = (1.0L / static_cast<real>(p.n_t) - mean) / scale;
    const std::array<real, 3> row{1.0L, u, u * u};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += row[r] * row[c];
      m[r][3] += row[r] * static_cast<real>(p.bits);
    }
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    if (m[col][col] == 0) throw FitError("bias fit: singular normal equations");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const real f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  const real a = m[0][3] / m[0][0];
  const real b = m[1][3] / m[1][1];
  const real c = m[2][3] / m[2][2];

  // back to powers of 1/n_t
  BiasFit fit;
  fit.intercept_bits = static_cast<double>(a - b * mean / scale + c * mean * mean / (scale * scale));
  fit.a_bits = static_cast<double>(b / scale - 2 * c * mean / (scale * scale));
  fit.b_bits = static_cast<double>(c / (scale * scale));

  real residual = 0;
  for (const auto& p : curve) {
    const real x = 1.0L / static_cast<real>(p.n_t);
    const real r = static_cast<real>(p.bits) - (a + b * (x - mean) / scale + c * (x - mean) * (x - mean) / (scale * scale));
    residual += r * r;
  }
  fit.residual = static_cast<double>(residual);
  return fit;
}

} // namespace metricmi
