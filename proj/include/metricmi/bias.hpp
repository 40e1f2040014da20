#pragma once

#include "metricmi/dataset.hpp"
#include "metricmi/estimators.hpp"
#include "metricmi/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace metricmi {

/// Mean estimate at one subsample size.
struct CurvePoint {
  double lambda = 1.0;
  std::size_t n_t = 0;
  double bits = 0.0;
};

/// Fit of bits = I + A / n_t + B / n_t^2.
struct BiasFit {
  double intercept_bits = 0.0;
  double a_bits = 0.0;
  double b_bits = 0.0;
  double residual = 0.0; ///< sum of squared residuals
};

struct CurveOptions {
  std::vector<double> lambdas;   ///< empty: default_lambdas(n_t)
  std::size_t repeats = 10;      ///< subsamples averaged per lambda < 1
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

class FitError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// 0.1, 0.2, ..., 1.0.
std::vector<double> lambda_grid();

/// lambda_grid() without the fractions that leave fewer than two trials.
std::vector<double> default_lambdas(std::size_t n_t);

/// Mean estimate over `repeats` stratified subsamples per lambda (lambda = 1
/// is the full dataset, computed once). Subsample (lambda index l, repeat r)
/// draws from the stream keyed (seed, l, r), so the curve is independent of
/// thread count. Every lambda must keep at least two trials per stimulus.
std::vector<CurvePoint> subsample_curve(const PreparedEstimator& estimator, const LabeledDataset& data,
                                        const CurveOptions& options);

std::vector<CurvePoint> subsample_curve(const LabeledDataset& data, const DistanceMatrix& dm,
                                        const EstimatorConfig& config, const CurveOptions& options);

/// Least squares on regressors (1, 1/n_t, 1/n_t^2). Needs three distinct n_t.
BiasFit quadratic_extrapolate(std::span<const CurvePoint> curve);

} // namespace metricmi
