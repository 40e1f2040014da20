#pragma once

#include "metricmi/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace metricmi {

struct Euclidean {};

/// Spike-train edit distance: insert/delete cost 1, shift cost q per second.
struct VictorPurpura {
  double q = 1.0;
};

/// L2 distance between trains filtered by a causal exponential of time
/// constant tau (seconds), normalised by 1/tau.
struct VanRossum {
  double tau = 1.0;
};

using MetricSpec = std::variant<Euclidean, VictorPurpura, VanRossum>;

void validate(const MetricSpec& metric);
std::string metric_name(const MetricSpec& metric);

class MetricError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

double distance(const ResponsePoint& a, const ResponsePoint& b, const MetricSpec& metric);

double victor_purpura(std::span<const double> a, std::span<const double> b, double q);
double van_rossum(std::span<const double> a, std::span<const double> b, double tau);
double euclidean(std::span<const double> a, std::span<const double> b);

/// Dense symmetric matrix of pairwise response distances with zero
/// diagonal and finite nonnegative entries.
class DistanceMatrix {
public:
  /// Validates symmetry, zero diagonal and finiteness.
  static DistanceMatrix from_entries(std::size_t n, std::vector<double> entries);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {entries_.data() + i * n_, n_}; }
  std::span<const double> entries() const noexcept { return entries_; }

private:
  friend DistanceMatrix distance_matrix(const LabeledDataset&, const MetricSpec&, unsigned);
  DistanceMatrix(std::size_t n, std::vector<double> entries) : n_(n), entries_(std::move(entries)) {}

  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// threads = 0 uses every core; the result does not depend on it.
DistanceMatrix distance_matrix(const LabeledDataset& data, const MetricSpec& metric, unsigned threads = 1);

/// Indices ordered by (distance to i, index), ascending.
std::vector<std::uint32_t> neighbor_order(const DistanceMatrix& dm, std::size_t i);

/// neighbor_order for every row, computed once.
class NeighborTable {
public:
  explicit NeighborTable(const DistanceMatrix& dm, unsigned threads = 1);

  std::size_t size() const noexcept { return n_; }
  std::span<const std::uint32_t> order(std::size_t i) const noexcept { return {order_.data() + i * n_, n_}; }

private:
  std::size_t n_;
  std::vector<std::uint32_t> order_;
};

} // namespace metricmi
