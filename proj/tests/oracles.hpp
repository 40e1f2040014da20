#pragma once

// Reference computations used to check the library. They favour plain,
// slow formulations over the library's algorithms.

#include "metricmi/dataset.hpp"
#include "metricmi/estimators.hpp"
#include "metricmi/metrics.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

using metricmi::DistanceMatrix;
using metricmi::StimulusId;

// Minimum cost over every partial matching of spikes in a to spikes in b:
// matched pairs cost q |t_a - t_b|, unmatched spikes cost 1 each.
inline double vp_enumerate(const std::vector<double>& a, const std::vector<double>& b, double q) {
  std::vector<bool> used(b.size(), false);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double, std::size_t)> rec = [&](std::size_t k, double cost, std::size_t matched) {
    if (k == a.size()) {
      best = std::min(best, cost + static_cast<double>(b.size() - matched));
      return;
    }
    rec(k + 1, cost + 1.0, matched);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      rec(k + 1, cost + q * std::abs(a[k] - b[j]), matched + 1);
      used[j] = false;
    }
  };
  rec(0, 0.0, 0);
  return best;
}

// sqrt((1/tau) * integral of (f - g)^2), f and g the trains convolved with
// exp(-t/tau) for t >= 0, by the trapezoid rule.
inline double van_rossum_numeric(const std::vector<double>& a, const std::vector<double>& b, double tau,
                                 double step = 1e-4) {
  double lo = 0.0;
  double hi = 0.0;
  for (double t : a) lo = std::min(lo, t), hi = std::max(hi, t);
  for (double t : b) lo = std::min(lo, t), hi = std::max(hi, t);
  hi += 40.0 * tau;
  auto trace = [&](const std::vector<double>& train, double x) {
    double v = 0.0;
    for (double t : train)
      if (x >= t) v += std::exp(-(x - t) / tau);
    return v;
  };
  const auto n = static_cast<std::size_t>((hi - lo) / step);
  double sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double x = lo + static_cast<double>(k) * step;
    const double d = trace(a, x) - trace(b, x);
    sum += (k == 0 || k == n ? 0.5 : 1.0) * d * d;
  }
  return std::sqrt(sum * step / tau);
}

using big = boost::multiprecision::cpp_bin_float_50;

inline double digamma(double x) {
  return static_cast<double>(boost::math::digamma(big(x)));
}

// psi(n) = -gamma + sum_{k < n} 1/k, summed in 50 digits.
inline double digamma_harmonic(unsigned n) {
  big sum = 0;
  for (unsigned k = 1; k < n; ++k) sum += big(1) / k;
  return static_cast<double>(sum - boost::math::constants::euler<big>());
}

// Position of j in the order of responses by (distance to i, index), with
// i itself left out unless keep_self.
inline std::size_t rank_of(const DistanceMatrix& dm, std::size_t i, std::size_t j, bool keep_self) {
  std::size_t r = 0;
  for (std::size_t k = 0; k < dm.size(); ++k) {
    if (k == i && !keep_self) continue;
    if (dm(i, k) < dm(i, j) || (dm(i, k) == dm(i, j) && k < j)) ++r;
  }
  return r;
}

// Self plus the same-label responses among the n_h - 1 nearest others.
inline std::size_t c_count(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                           std::size_t n_h) {
  std::size_t c = 1;
  for (std::size_t j = 0; j < dm.size(); ++j)
    if (j != i && labels[j] == labels[i] && rank_of(dm, i, j, false) + 1 < n_h) ++c;
  return c;
}

inline std::size_t C_count(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t i,
                           const metricmi::KsgConfig& config) {
  const bool self = config.count_self;
  std::vector<std::size_t> same_ranks;
  for (std::size_t j = 0; j < dm.size(); ++j)
    if (labels[j] == labels[i] && (self || j != i)) same_ranks.push_back(rank_of(dm, i, j, self));
  std::sort(same_ranks.begin(), same_ranks.end());
  const std::size_t kth = same_ranks.at(config.n_k - 1);
  if (config.ties == metricmi::TieRule::Rank) return kth + 1;
  std::size_t j_kth = 0;
  for (std::size_t j = 0; j < dm.size(); ++j)
    if (labels[j] == labels[i] && (self || j != i) && rank_of(dm, i, j, self) == kth) j_kth = j;
  std::size_t count = 0;
  for (std::size_t j = 0; j < dm.size(); ++j)
    if ((self || j != i) && dm(i, j) <= dm(i, j_kth)) ++count;
  return count;
}

inline double kernel_bits(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t n_s,
                          std::size_t n_h) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dm.size(); ++i)
    sum += std::log2(static_cast<double>(n_s * c_count(dm, labels, i, n_h)) / static_cast<double>(n_h));
  return sum / static_cast<double>(dm.size());
}

inline double ksg_bits(const DistanceMatrix& dm, std::span<const StimulusId> labels, std::size_t n_s,
                       const metricmi::KsgConfig& config) {
  const std::size_t n_r = dm.size();
  const std::size_t n_t = n_r / n_s;
  double mean = 0.0;
  for (std::size_t i = 0; i < n_r; ++i) mean += digamma(static_cast<double>(C_count(dm, labels, i, config)));
  mean /= static_cast<double>(n_r);
  return (digamma(static_cast<double>(config.n_k)) + digamma(static_cast<double>(n_r)) -
          digamma(static_cast<double>(n_t)) - mean) /
         std::numbers::ln2;
}

// I(R;S) in bits for equiprobable 1-D sources with Gaussian noise of
// standard deviation sigma, by Simpson's rule on a grid of `cells` cells.
inline double mi_quadrature_1d(const std::vector<double>& sources, double sigma, std::size_t cells = 200000) {
  const auto [lo_it, hi_it] = std::minmax_element(sources.begin(), sources.end());
  const double lo = *lo_it - 12.0 * sigma;
  const double hi = *hi_it + 12.0 * sigma;
  const double h = (hi - lo) / static_cast<double>(cells);
  const double ns = static_cast<double>(sources.size());
  auto gauss = [&](double r, double s) {
    const double z = (r - s) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  auto integrand = [&](double r) {
    double mix = 0.0;
    for (double s : sources) mix += gauss(r, s) / ns;
    double v = 0.0;
    for (double s : sources) {
      const double p = gauss(r, s);
      if (p > 0.0) v += p / ns * std::log2(p / mix);
    }
    return v;
  };
  double sum = integrand(lo) + integrand(hi);
  for (std::size_t k = 1; k < cells; ++k)
    sum += (k % 2 ? 4.0 : 2.0) * integrand(lo + static_cast<double>(k) * h);
  return sum * h / 3.0;
}

// Plug-in MI in bits of a joint count table [stimulus][bin].
inline double plugin_bits(const std::vector<std::vector<double>>& counts) {
  double n = 0.0;
  std::vector<double> row(counts.size(), 0.0);
  std::vector<double> col(counts.at(0).size(), 0.0);
  for (std::size_t s = 0; s < counts.size(); ++s)
    for (std::size_t b = 0; b < counts[s].size(); ++b) {
      n += counts[s][b];
      row[s] += counts[s][b];
      col[b] += counts[s][b];
    }
  auto entropy = [n](const std::vector<double>& v) {
    double h = 0.0;
    for (double x : v)
      if (x > 0) h -= x / n * std::log2(x / n);
    return h;
  };
  std::vector<double> joint;
  for (const auto& r : counts) joint.insert(joint.end(), r.begin(), r.end());
  return entropy(row) + entropy(col) - entropy(joint);
}

} // namespace oracle
