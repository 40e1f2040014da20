#include "metricmi/estimators.hpp"

#include "metricmi/digamma.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace metricmi {

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Kernel: return "kernel";
    case EstimatorKind::Ksg: return "ksg";
    case EstimatorKind::Histogram: return "histogram";
  }
  return "unknown";
}

EstimatorKind kind_of(const EstimatorConfig& config) {
  return static_cast<EstimatorKind>(config.index());
}

std::size_t resolve_bandwidth(const KernelConfig& config, std::size_t n_r, std::size_t n_t) {
  std::size_t n_h = 0;
  if (std::holds_alternative<TrialsBandwidth>(config.bandwidth)) {
    n_h = n_t;
  } else if (const auto* f = std::get_if<FractionBandwidth>(&config.bandwidth)) {
    if (!(f->h > 0.0 && f->h <= 1.0))
      throw std::invalid_argument("kernel bandwidth fraction must lie in (0, 1], got " + format_real(f->h));
    n_h = floor_fraction(f->h, n_r);
    if (n_h == 0)
      throw std::invalid_argument("kernel bandwidth fraction " + format_real(f->h) + " resolves to n_h = 0 at n_r = " +
                                  std::to_string(n_r));
  } else {
    n_h = std::get<CountBandwidth>(config.bandwidth).n_h;
  }
  if (n_h == 0) throw std::invalid_argument("kernel bandwidth n_h must be >= 1");
  if (n_h > n_r)
    throw std::invalid_argument("kernel bandwidth n_h = " + std::to_string(n_h) + " exceeds n_r = " +
                                std::to_string(n_r));
  return n_h;
}

// ---------------------------------------------------------------------------
// neighbour walks
//
// Both walks scan one row of the neighbour table. `mask` restricts the scan
// to a subset (empty span: every response is a member).

namespace {

bool member(std::span<const char> mask, std::uint32_t j) {
  return mask.empty() || mask[j] != 0;
}

std::size_t walk_c(std::span<const std::uint32_t> order, std::span<const char> mask,
                   std::span<const StimulusId> labels, std::size_t i, std::size_t n_h) {
  std::size_t in_kernel = 1;
  std::size_t same = 1;
  const StimulusId own = labels[i];
  for (auto j : order) {
    if (in_kernel == n_h) break;
    if (j == i || !member(mask, j)) continue;
    ++in_kernel;
    if (labels[j] == own) ++same;
  }
  return same;
}

std::size_t walk_C(std::span<const std::uint32_t> order, std::span<const double> dist, std::span<const char> mask,
                   std::span<const StimulusId> labels, std::size_t i, const KsgConfig& config) {
  const StimulusId own = labels[i];
  std::size_t same = 0;
  std::size_t total = 0;
  std::size_t pos = 0;
  for (; pos < order.size(); ++pos) {
    const auto j = order[pos];
    if (!member(mask, j)) continue;
    if (j == i && !config.count_self) continue;
    ++total;
    if (labels[j] == own && ++same == config.n_k) break;
  }
  if (same < config.n_k)
    throw std::invalid_argument("ksg: fewer than n_k = " + std::to_string(config.n_k) +
                                " same-stimulus neighbours for response " + std::to_string(i));
  if (config.ties == TieRule::Distance) {
    const double radius = dist[order[pos]];
    for (++pos; pos < order.size(); ++pos) {
      const auto j = order[pos];
      if (dist[j] > radius) break;
      if (!member(mask, j)) continue;
      if (j == i && !config.count_self) continue;
      ++total;
    }
  }
  return total;
}

void check_labels(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i) {
  if (labels.size() != dm.size())
    throw std::invalid_argument("label count " + std::to_string(labels.size()) + " does not match distance matrix size " +
                                std::to_string(dm.size()));
  if (i >= dm.size()) throw std::out_of_range("response index " + std::to_string(i) + " out of range");
}

void check_ksg(const KsgConfig& config, std::size_t n_t) {
  if (config.n_k == 0) throw std::invalid_argument("ksg: n_k must be >= 1");
  const std::size_t available = config.count_self ? n_t : n_t - 1;
  if (config.n_k > available)
    throw std::invalid_argument("ksg: n_k = " + std::to_string(config.n_k) + " needs more than " +
                                std::to_string(n_t) + " trials per stimulus");
}

// Sum of weight(v) * f(v) over a histogram of integer values, with weights
// count / n, in ascending v. Grouping keeps the reduction order fixed and
// makes a constant summand come back exactly.
template <typename F>
double grouped_mean(const std::vector<std::size_t>& histogram, std::size_t n, F&& f) {
  double sum = 0.0;
  for (std::size_t v = 0; v < histogram.size(); ++v) {
    if (histogram[v] == 0) continue;
    sum += static_cast<double>(histogram[v]) / static_cast<double>(n) * f(v);
  }
  return sum;
}

double kernel_bits(const NeighborTable& table, std::span<const char> mask, std::span<const StimulusId> labels,
                   std::span<const std::size_t> members, std::size_t n_s, std::size_t n_h) {
  std::vector<std::size_t> histogram(n_h + 1, 0);
  for (auto i : members) ++histogram[walk_c(table.order(i), mask, labels, i, n_h)];
  return grouped_mean(histogram, members.size(), [&](std::size_t c) {
    return std::log2(static_cast<double>(n_s * c) / static_cast<double>(n_h));
  });
}

double ksg_bits(const NeighborTable& table, const DistanceMatrix& dm, std::span<const char> mask,
                std::span<const StimulusId> labels, std::span<const std::size_t> members, std::size_t n_s,
                std::size_t n_t, const KsgConfig& config) {
  std::vector<std::size_t> histogram(members.size() + 1, 0);
  for (auto i : members) ++histogram[walk_C(table.order(i), dm.row(i), mask, labels, i, config)];
  const double mean_psi = grouped_mean(histogram, members.size(), [](std::size_t c) {
    return digamma(static_cast<double>(c));
  });
  const double n_r = static_cast<double>(n_s * n_t);
  // grouped so that the n_s = 1 case cancels exactly
  const double nats = (digamma(static_cast<double>(config.n_k)) - mean_psi) +
                      (digamma(n_r) - digamma(static_cast<double>(n_t)));
  return nats / std::numbers::ln2;
}

struct Bins {
  std::vector<std::size_t> id; // per response
  std::size_t count = 0;
};

Bins assign_bins(const LabeledDataset& data, const HistogramConfig& config) {
  if (!(std::isfinite(config.width) && config.width > 0.0))
    throw std::invalid_argument("histogram bin width must be finite and > 0");
  if (!std::isfinite(config.origin)) throw std::invalid_argument("histogram origin must be finite");
  if (!data.is_vector()) throw std::invalid_argument("histogram estimator requires vector responses");

  std::map<std::vector<long long>, std::size_t> ids;
  Bins bins;
  bins.id.reserve(data.n_r());
  std::vector<long long> key(data.n_d());
  for (const auto& p : data.points()) {
    const auto& x = std::get<VectorPoint>(p).coords;
    for (std::size_t k = 0; k < x.size(); ++k)
      key[k] = static_cast<long long>(std::floor((x[k] - config.origin) / config.width));
    auto [it, inserted] = ids.try_emplace(key, ids.size());
    bins.id.push_back(it->second);
  }
  // number bins in key order so any subset sums its terms in the same order
  std::vector<std::size_t> rank(ids.size());
  std::size_t next = 0;
  for (const auto& [_, id] : ids) rank[id] = next++;
  for (auto& id : bins.id) id = rank[id];
  bins.count = ids.size();
  return bins;
}

double histogram_bits(const Bins& bins, std::span<const StimulusId> labels, std::span<const std::size_t> members,
                      std::size_t n_s, std::size_t n_t) {
  std::vector<std::size_t> joint(bins.count * n_s, 0);
  std::vector<std::size_t> marginal(bins.count, 0);
  for (auto i : members) {
    ++joint[bins.id[i] * n_s + labels[i].index];
    ++marginal[bins.id[i]];
  }
  const double n = static_cast<double>(members.size());
  double bits = 0.0;
  for (std::size_t b = 0; b < bins.count; ++b) {
    for (std::size_t s = 0; s < n_s; ++s) {
      const auto nbs = joint[b * n_s + s];
      if (nbs == 0) continue;
      const double ratio = static_cast<double>(nbs) * n /
                           (static_cast<double>(marginal[b]) * static_cast<double>(n_t));
      bits += static_cast<double>(nbs) / n * std::log2(ratio);
    }
  }
  // rounding can push the sum a hair outside [0, H(S)]
  return std::clamp(bits, 0.0, std::log2(static_cast<double>(n_s)));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void check_matrix(const LabeledDataset& data, const DistanceMatrix& dm) {
  if (dm.size() != data.n_r())
    throw std::invalid_argument("distance matrix size " + std::to_string(dm.size()) + " does not match n_r = " +
                                std::to_string(data.n_r()));
}

} // namespace

std::size_t neighbor_count_c(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                             std::size_t n_h) {
  check_labels(dm, labels, i);
  if (n_h == 0 || n_h > dm.size())
    throw std::invalid_argument("n_h = " + std::to_string(n_h) + " outside [1, " + std::to_string(dm.size()) + "]");
  return walk_c(neighbor_order(dm, i), {}, labels, i, n_h);
}

std::size_t neighbor_count_C(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                             const KsgConfig& config) {
  check_labels(dm, labels, i);
  if (config.n_k == 0) throw std::invalid_argument("ksg: n_k must be >= 1");
  return walk_C(neighbor_order(dm, i), dm.row(i), {}, labels, i, config);
}

MiEstimate kernel_mi(const LabeledDataset& data, const DistanceMatrix& dm, const KernelConfig& config) {
  check_matrix(data, dm);
  const std::size_t n_h = resolve_bandwidth(config, data.n_r(), data.n_t());
  NeighborTable table(dm);
  const auto members = all_indices(data.n_r());
  const double bits = kernel_bits(table, {}, data.labels(), members, data.n_s(), n_h);
  return {bits, EstimatorKind::Kernel, config, n_h};
}

MiEstimate ksg_mi(const LabeledDataset& data, const DistanceMatrix& dm, const KsgConfig& config) {
  check_matrix(data, dm);
  check_ksg(config, data.n_t());
  NeighborTable table(dm);
  const auto members = all_indices(data.n_r());
  const double bits = ksg_bits(table, dm, {}, data.labels(), members, data.n_s(), data.n_t(), config);
  return {bits, EstimatorKind::Ksg, config, 0};
}

MiEstimate histogram_mi(const LabeledDataset& data, const HistogramConfig& config) {
  const auto bins = assign_bins(data, config);
  const auto members = all_indices(data.n_r());
  const double bits = histogram_bits(bins, data.labels(), members, data.n_s(), data.n_t());
  return {bits, EstimatorKind::Histogram, config, 0};
}

MiEstimate estimate(const LabeledDataset& data, const DistanceMatrix& dm, const EstimatorConfig& config) {
  return std::visit(
      [&](const auto& cfg) -> MiEstimate {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, KernelConfig>) return kernel_mi(data, dm, cfg);
        else if constexpr (std::is_same_v<T, KsgConfig>) return ksg_mi(data, dm, cfg);
        else return histogram_mi(data, cfg);
      },
      config);
}

// ---------------------------------------------------------------------------
// PreparedEstimator

struct PreparedEstimator::Impl {
  const LabeledDataset* data = nullptr;
  const DistanceMatrix* dm = nullptr;
  std::unique_ptr<NeighborTable> table;
  Bins bins;
};

PreparedEstimator::PreparedEstimator(const LabeledDataset& data, const DistanceMatrix* dm, EstimatorConfig config,
                                     unsigned threads)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  impl_->data = &data;
  impl_->dm = dm;
  if (kind_of(config_) == EstimatorKind::Histogram) {
    impl_->bins = assign_bins(data, std::get<HistogramConfig>(config_));
    return;
  }
  if (dm == nullptr) throw std::invalid_argument(estimator_name(kind_of(config_)) + " estimator needs a distance matrix");
  check_matrix(data, *dm);
  if (const auto* k = std::get_if<KernelConfig>(&config_)) resolve_bandwidth(*k, data.n_r(), data.n_t());
  if (const auto* k = std::get_if<KsgConfig>(&config_)) check_ksg(*k, data.n_t());
  impl_->table = std::make_unique<NeighborTable>(*dm, threads);
}

PreparedEstimator::~PreparedEstimator() = default;
PreparedEstimator::PreparedEstimator(PreparedEstimator&&) noexcept = default;
PreparedEstimator& PreparedEstimator::operator=(PreparedEstimator&&) noexcept = default;

std::size_t PreparedEstimator::kernel_count(std::size_t n_r_sub, std::size_t n_t_sub) const {
  const auto& cfg = std::get<KernelConfig>(config_);
  const std::size_t n_r = impl_->data->n_r();
  std::size_t n_h = 0;
  if (std::holds_alternative<TrialsBandwidth>(cfg.bandwidth)) {
    n_h = n_t_sub;
  } else if (const auto* f = std::get_if<FractionBandwidth>(&cfg.bandwidth)) {
    n_h = floor_fraction(f->h, n_r_sub);
  } else {
    // the fraction n_h / n_r, applied exactly in integers
    n_h = std::get<CountBandwidth>(cfg.bandwidth).n_h * n_r_sub / n_r;
  }
  if (n_h == 0)
    throw std::invalid_argument("kernel bandwidth resolves to n_h = 0 on a subsample of " + std::to_string(n_r_sub) +
                                " responses");
  return n_h;
}

double PreparedEstimator::bits(std::span<const std::size_t> members, std::size_t n_t_sub) const {
  const auto& data = *impl_->data;
  const std::size_t n_s = data.n_s();
  if (members.size() != n_s * n_t_sub)
    throw std::invalid_argument("subset of " + std::to_string(members.size()) + " responses is not " +
                                std::to_string(n_s) + " x " + std::to_string(n_t_sub));
  const bool full = members.size() == data.n_r();
  std::vector<char> mask;
  if (!full) {
    mask.assign(data.n_r(), 0);
    for (auto i : members) mask.at(i) = 1;
  }

  switch (kind_of(config_)) {
    case EstimatorKind::Kernel:
      return kernel_bits(*impl_->table, mask, data.labels(), members, n_s, kernel_count(members.size(), n_t_sub));
    case EstimatorKind::Ksg: {
      const auto& cfg = std::get<KsgConfig>(config_);
      check_ksg(cfg, n_t_sub);
      return ksg_bits(*impl_->table, *impl_->dm, mask, data.labels(), members, n_s, n_t_sub, cfg);
    }
    case EstimatorKind::Histogram:
      return histogram_bits(impl_->bins, data.labels(), members, n_s, n_t_sub);
  }
  return 0.0;
}

double PreparedEstimator::full_bits() const {
  const auto members = all_indices(impl_->data->n_r());
  return bits(members, impl_->data->n_t());
}

} // namespace metricmi
