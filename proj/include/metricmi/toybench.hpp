#pragma once

#include "metricmi/bias.hpp"
#include "metricmi/dataset.hpp"
#include "metricmi/estimators.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace metricmi {

using Source = std::vector<double>;

/// Parameters of one synthetic dataset: n_s sources uniform in the unit box
/// centred at the origin, n_t responses per source with every coordinate
/// drawn from Normal(source coordinate, sigma2).
struct ToySpec {
  std::size_t n_s = 10;
  std::size_t n_d = 3;
  std::size_t n_t = 10;
  std::optional<double> sigma2; ///< unset: drawn uniformly from [0, 1)
  std::uint64_t seed = 0;
};

void validate(const ToySpec& spec);

struct ToySources {
  std::vector<Source> sources;
  double sigma2 = 0.0;
};

struct ToyDataset {
  LabeledDataset data;
  std::vector<Source> sources;
  double sigma2 = 0.0;
};

/// Variance and sources only; the same draws generate_toy uses.
ToySources draw_sources(const ToySpec& spec);

/// Responses are stimulus-major: trials of source 0, then source 1, ...
ToyDataset generate_toy(const ToySpec& spec);

/// Below this variance the channel is treated as noiseless.
inline constexpr double kNoiselessVariance = 1e-10;

/// MI of the noiseless channel: entropy of the partition of sources into
/// coincident groups (log2 n_s when all sources differ).
double noiseless_mi(const std::vector<Source>& sources);

/// Monte-Carlo mean of log2 p(r|s)/p(r) over (s, r) drawn from the model,
/// clamped to [0, log2 n_s]. Returns noiseless_mi for
/// 0 < sigma2 < kNoiselessVariance; sigma2 == 0 is rejected.
double true_mi(const std::vector<Source>& sources, double sigma2, std::size_t mc_samples, std::uint64_t seed);

/// Density of the distance between a response and its source,
///   p(d) = 2^(1 - n_d/2) / Gamma(n_d/2) * (d/sigma)^(n_d-1) * exp(-d^2 / 2 sigma^2) / sigma.
double chi_density(double d, std::size_t n_d, double sigma);

struct Protocol {
  std::size_t n_s = 10;
  std::size_t n_d = 3;
  std::size_t n_t = 10;
  std::size_t dataset_count = 200;
  bool prune = true;
  std::size_t mc_samples = 10000;
};

struct BenchmarkOptions {
  KernelConfig kernel{};
  std::vector<double> widths{0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0};
  std::vector<double> lambdas; ///< empty: default_lambdas(n_t)
  std::size_t repeats = 10;
  bool bias_correct = true;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// A dataset chosen for a benchmark, before its responses are drawn.
struct Candidate {
  std::uint64_t seed = 0;
  double sigma2 = 0.0;
  double true_bits = 0.0;
};

struct DatasetRecord {
  std::uint64_t seed = 0;
  double sigma2 = 0.0;
  double true_bits = 0.0;
  double kernel_bits = 0.0;     ///< bias-corrected when enabled
  double kernel_raw_bits = 0.0; ///< full-data estimate
  std::vector<double> hist_bits;     ///< per width, bias-corrected when enabled
  std::vector<double> hist_raw_bits; ///< per width
};

struct BenchmarkResult {
  Protocol protocol;
  BenchmarkOptions options;
  std::vector<DatasetRecord> records;
  std::size_t candidates_drawn = 0;
  std::vector<std::size_t> pruning_shortfall;
  std::size_t best_width_index = 0;
  std::vector<double> hist_mae_by_width;
  double mean_abs_err_kernel = 0.0;
  double mean_abs_err_kernel_raw = 0.0;
  double mean_abs_err_histogram = 0.0;     ///< at the best width
  double mean_abs_err_histogram_raw = 0.0; ///< at the best width

  double best_width() const { return options.widths.at(best_width_index); }
};

void validate(const Protocol& protocol);

/// Seed of candidate k in the benchmark stream.
std::uint64_t candidate_seed(std::uint64_t seed, std::size_t k);

/// Outcome of dataset selection.
struct DatasetSelection {
  std::vector<Candidate> datasets; ///< in draw order
  std::size_t drawn = 0;           ///< candidates examined
  /// Per bin of normalised true MI, slots that had to be topped up with
  /// candidates from outside the bin. All zero when pruning succeeded.
  std::vector<std::size_t> shortfall;
};

/// Picks the benchmark datasets. With pruning, candidates are drawn in order
/// and accepted while their bin of normalised true MI (10 equal bins on
/// [0, 1]) holds fewer than dataset_count / 10. After 1000 * dataset_count
/// candidates, bins still short are topped up with the rejected candidates
/// whose true MI lies nearest to the bin, and the shortfall is reported.
/// Without pruning the first dataset_count candidates are used.
///
/// Candidates are pre-screened with a short Monte-Carlo run on a separate
/// stream; only those that may land in an open bin get the full estimate,
/// so recorded true MI values do not depend on screening.
DatasetSelection select_datasets(const Protocol& protocol, std::uint64_t seed, unsigned threads);

BenchmarkResult run_benchmark(const Protocol& protocol, const BenchmarkOptions& options);

void write_records_csv(std::ostream& out, const BenchmarkResult& result);
void write_summary_json(std::ostream& out, const BenchmarkResult& result);
/// Columns: true, kernel and histogram estimates, each divided by log2 n_s.
void write_scatter(std::ostream& out, const BenchmarkResult& result);

/// records.csv, summary.json and scatter.dat under `dir` (created if needed).
void write_benchmark(const std::filesystem::path& dir, const BenchmarkResult& result);

} // namespace metricmi
