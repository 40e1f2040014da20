#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace metricmi {

/// Index of a stimulus in [0, n_s).
struct StimulusId {
  std::uint32_t index = 0;
  friend auto operator<=>(const StimulusId&, const StimulusId&) = default;
};

/// Response living in a coordinate space of dimension n_d.
struct VectorPoint {
  std::vector<double> coords;
  friend bool operator==(const VectorPoint&, const VectorPoint&) = default;
};

/// Sorted spike times in seconds.
struct SpikeTrain {
  std::vector<double> times;
  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;
};

using ResponsePoint = std::variant<VectorPoint, SpikeTrain>;

enum class DataFormat { CsvVectors, SpikeText };

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Raised when a dataset violates the balanced, dense, single-variant layout.
class DatasetError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Stimulus-response pairs from a balanced design: every stimulus in
/// [0, n_s) occurs exactly n_t times, so n_r = n_s * n_t. Immutable once
/// built; index i is the order points were supplied in.
class LabeledDataset {
public:
  LabeledDataset(std::vector<ResponsePoint> points, std::vector<StimulusId> labels);

  std::size_t n_s() const noexcept { return n_s_; }
  std::size_t n_t() const noexcept { return n_t_; }
  std::size_t n_r() const noexcept { return points_.size(); }

  std::span<const ResponsePoint> points() const noexcept { return points_; }
  std::span<const StimulusId> labels() const noexcept { return labels_; }
  const ResponsePoint& point(std::size_t i) const { return points_.at(i); }
  StimulusId label(std::size_t i) const { return labels_.at(i); }

  bool is_vector() const noexcept;
  /// Dimension of vector responses; 0 for spike trains.
  std::size_t n_d() const noexcept;

  /// Builds the dataset formed by the given indices, in the order given.
  LabeledDataset select(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
  std::vector<ResponsePoint> points_;
  std::vector<StimulusId> labels_;
  std::size_t n_s_ = 0;
  std::size_t n_t_ = 0;
};

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format);
LabeledDataset read_dataset(std::istream& in, DataFormat format, const std::string& source = "<stream>");
void save_dataset(const std::filesystem::path& path, const LabeledDataset& data, DataFormat format);
void write_dataset(std::ostream& out, const LabeledDataset& data, DataFormat format);

DataFormat parse_format(const std::string& name);
std::string format_name(DataFormat format);

/// floor(fraction * n), tolerant of representation error in fraction so that
/// e.g. 0.7 * 10 resolves to 7.
std::size_t floor_fraction(double fraction, std::size_t n);

/// Trials kept per stimulus when subsampling with fraction lambda.
std::size_t subsample_trials(std::size_t n_t, double lambda);

/// Stratified draw of floor(lambda * n_t) trials per stimulus, uniform
/// without replacement. Returns ascending indices into the dataset.
std::vector<std::size_t> subsample_indices(std::span<const StimulusId> labels, std::size_t n_s,
                                           std::size_t n_t, double lambda, std::uint64_t seed);

LabeledDataset subsample(const LabeledDataset& data, double lambda, std::uint64_t seed);

/// "%.17g" rendering, exact for round trips.
std::string format_real(double value);

} // namespace metricmi
