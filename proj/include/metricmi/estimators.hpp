#pragma once

#include "metricmi/dataset.hpp"
#include "metricmi/metrics.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace metricmi {

// ---------------------------------------------------------------------------
// configuration

/// Kernel volume equal to the trial count, n_h = n_t.
struct TrialsBandwidth {};

/// Kernel volume as a probability mass h in (0, 1]; n_h = floor(h * n_r).
struct FractionBandwidth {
  double h = 0.1;
};

/// Kernel volume as an explicit neighbour count n_h >= 1.
struct CountBandwidth {
  std::size_t n_h = 1;
};

struct KernelConfig {
  std::variant<TrialsBandwidth, FractionBandwidth, CountBandwidth> bandwidth;
};

/// How the "n_k-th same-stimulus neighbour" radius is turned into a count.
enum class TieRule {
  Rank,     ///< points ranked at or before the n_k-th neighbour in (distance, index) order
  Distance, ///< every point at distance <= d, ties included
};

struct KsgConfig {
  std::size_t n_k = 1;
  /// When set, r_i itself is the first same-stimulus neighbour and is counted in C.
  bool count_self = false;
  TieRule ties = TieRule::Rank;
};

/// Axis-aligned bins of edge `width`, boundaries at origin + k * width.
struct HistogramConfig {
  double width = 1.0;
  double origin = 0.0;
};

using EstimatorConfig = std::variant<KernelConfig, KsgConfig, HistogramConfig>;

enum class EstimatorKind { Kernel, Ksg, Histogram };

std::string estimator_name(EstimatorKind kind);
EstimatorKind kind_of(const EstimatorConfig& config);

struct MiEstimate {
  double bits = 0.0;
  EstimatorKind estimator = EstimatorKind::Kernel;
  EstimatorConfig config;
  /// Resolved kernel neighbour count; 0 for the other estimators.
  std::size_t n_h = 0;
};

/// Neighbour count for a dataset of n_r responses with n_t trials per stimulus.
/// Throws if it resolves outside [1, n_r].
std::size_t resolve_bandwidth(const KernelConfig& config, std::size_t n_r, std::size_t n_t);

// ---------------------------------------------------------------------------
// counts

/// Number of responses with label(i) among the n_h responses nearest to r_i.
/// r_i is always a member of its own kernel, so the result is >= 1.
std::size_t neighbor_count_c(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                             std::size_t n_h);

/// Number of responses of any stimulus no farther from r_i than its n_k-th
/// nearest same-stimulus response, under the conventions in `config`.
std::size_t neighbor_count_C(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                             const KsgConfig& config);

// ---------------------------------------------------------------------------
// estimators

/// (1/n_r) sum_i log2(n_s c_i / n_h).
MiEstimate kernel_mi(const LabeledDataset& data, const DistanceMatrix& dm, const KernelConfig& config);

/// [psi(n_k) + psi(n_r) - psi(n_t) - mean_i psi(C_i)] / ln 2.
MiEstimate ksg_mi(const LabeledDataset& data, const DistanceMatrix& dm, const KsgConfig& config);

/// Plug-in MI of the joint (bin, stimulus) frequencies, vector data only.
MiEstimate histogram_mi(const LabeledDataset& data, const HistogramConfig& config);

/// Dispatches on the config; `dm` is unused for the histogram.
MiEstimate estimate(const LabeledDataset& data, const DistanceMatrix& dm, const EstimatorConfig& config);

/// Estimator bound to one dataset, with the neighbour table (or bin
/// assignment) computed up front so that many balanced subsets can be
/// scored cheaply. Neighbour order within a subset is the full-data order
/// restricted to the subset, so subset results equal those of an estimator
/// built on the subset itself.
class PreparedEstimator {
public:
  PreparedEstimator(const LabeledDataset& data, const DistanceMatrix* dm, EstimatorConfig config,
                    unsigned threads = 1);
  ~PreparedEstimator();
  PreparedEstimator(PreparedEstimator&&) noexcept;
  PreparedEstimator& operator=(PreparedEstimator&&) noexcept;

  const EstimatorConfig& config() const noexcept { return config_; }

  /// Estimate on a balanced subset given as ascending indices with n_t_sub
  /// trials per stimulus. Kernel bandwidth is re-resolved at the subset size
  /// keeping the bandwidth fraction constant.
  double bits(std::span<const std::size_t> members, std::size_t n_t_sub) const;

  double full_bits() const;

  /// Kernel neighbour count used for a subset of the given shape.
  std::size_t kernel_count(std::size_t n_r_sub, std::size_t n_t_sub) const;

private:
  struct Impl;
  EstimatorConfig config_;
  std::unique_ptr<Impl> impl_;
};

} // namespace metricmi
