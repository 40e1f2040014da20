#include "metricmi/metrics.hpp"

#include "metricmi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metricmi {

void validate(const MetricSpec& metric) {
  if (const auto* vp = std::get_if<VictorPurpura>(&metric)) {
    if (!std::isfinite(vp->q) || vp->q < 0.0) throw MetricError("victor-purpura cost q must be finite and >= 0");
  } else if (const auto* vr = std::get_if<VanRossum>(&metric)) {
    if (!std::isfinite(vr->tau) || vr->tau <= 0.0) throw MetricError("van-rossum tau must be finite and > 0");
  }
}

std::string metric_name(const MetricSpec& metric) {
  switch (metric.index()) {
    case 0: return "euclidean";
    case 1: return "victor-purpura";
    default: return "van-rossum";
  }
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw MetricError("euclidean: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double victor_purpura(std::span<const double> a, std::span<const double> b, double q) {
  // cost[j] holds the minimal cost of editing a[0..i) into b[0..j)
  std::vector<double> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<double>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<double>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const double shift = prev[j - 1] + q * std::abs(a[i - 1] - b[j - 1]);
      cur[j] = std::min({prev[j] + 1.0, cur[j - 1] + 1.0, shift});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

double exp_kernel_sum(std::span<const double> a, std::span<const double> b, double tau) {
  double sum = 0.0;
  for (double x : a)
    for (double y : b) sum += std::exp(-std::abs(x - y) / tau);
  return sum;
}

} // namespace

double van_rossum(std::span<const double> a, std::span<const double> b, double tau) {
  // (1/tau) * integral of (f - g)^2 with f = sum_i exp(-(t - a_i)/tau) H(t - a_i);
  // each product integrates to (tau/2) exp(-|a_i - b_j| / tau).
  const double aa = exp_kernel_sum(a, a, tau);
  const double bb = exp_kernel_sum(b, b, tau);
  const double ab = exp_kernel_sum(a, b, tau);
  const double sq = 0.5 * (aa + bb - 2.0 * ab);
  return sq > 0.0 ? std::sqrt(sq) : 0.0;
}

double distance(const ResponsePoint& a, const ResponsePoint& b, const MetricSpec& metric) {
  validate(metric);
  if (a.index() != b.index()) throw MetricError("distance: responses are of different variants");

  if (std::holds_alternative<Euclidean>(metric)) {
    const auto* va = std::get_if<VectorPoint>(&a);
    if (!va) throw MetricError("euclidean metric requires vector responses");
    return euclidean(va->coords, std::get<VectorPoint>(b).coords);
  }

  const auto* ta = std::get_if<SpikeTrain>(&a);
  if (!ta) throw MetricError(metric_name(metric) + " metric requires spike-train responses");
  std::span<const double> x = ta->times;
  std::span<const double> y = std::get<SpikeTrain>(b).times;
  // a fixed argument order makes floating-point results exactly symmetric
  if (std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end())) std::swap(x, y);

  if (const auto* vp = std::get_if<VictorPurpura>(&metric)) return victor_purpura(x, y, vp->q);
  return van_rossum(x, y, std::get<VanRossum>(metric).tau);
}

DistanceMatrix DistanceMatrix::from_entries(std::size_t n, std::vector<double> entries) {
  if (n == 0) throw std::invalid_argument("distance matrix: empty");
  if (entries.size() != n * n)
    throw std::invalid_argument("distance matrix: expected " + std::to_string(n * n) + " entries, got " +
                                std::to_string(entries.size()));
  for (std::size_t i = 0; i < n; ++i) {
    if (entries[i * n + i] != 0.0) throw std::invalid_argument("distance matrix: nonzero diagonal at " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double v = entries[i * n + j];
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("distance matrix: invalid entry at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      if (v != entries[j * n + i]) throw std::invalid_argument("distance matrix: not symmetric");
    }
  }
  return DistanceMatrix(n, std::move(entries));
}

DistanceMatrix distance_matrix(const LabeledDataset& data, const MetricSpec& metric, unsigned threads) {
  validate(metric);
  const std::size_t n = data.n_r();
  std::vector<double> entries(n * n, 0.0);
  auto points = data.points();
  // row i fills the upper triangle; mirrored afterwards
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) entries[i * n + j] = distance(points[i], points[j], metric);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = entries[i * n + j];
      if (!std::isfinite(v)) throw MetricError("distance is not finite");
      entries[j * n + i] = v;
    }
  return DistanceMatrix(n, std::move(entries));
}

namespace {

void sort_row(std::span<const double> dist, std::span<std::uint32_t> out) {
  std::iota(out.begin(), out.end(), 0u);
  std::sort(out.begin(), out.end(), [&](std::uint32_t x, std::uint32_t y) {
    return dist[x] < dist[y] || (dist[x] == dist[y] && x < y);
  });
}

} // namespace

std::vector<std::uint32_t> neighbor_order(const DistanceMatrix& dm, std::size_t i) {
  if (i >= dm.size()) throw std::out_of_range("neighbor_order: index " + std::to_string(i) + " out of range");
  std::vector<std::uint32_t> out(dm.size());
  sort_row(dm.row(i), out);
  return out;
}

NeighborTable::NeighborTable(const DistanceMatrix& dm, unsigned threads) : n_(dm.size()), order_(n_ * n_) {
  parallel_for(n_, threads, [&](std::size_t i) {
    sort_row(dm.row(i), std::span<std::uint32_t>(order_.data() + i * n_, n_));
  });
}

} // namespace metricmi
