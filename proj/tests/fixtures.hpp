#pragma once

#include "metricmi/dataset.hpp"
#include "metricmi/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fixture {

using namespace metricmi;

inline LabeledDataset vectors(const std::vector<std::vector<double>>& coords, const std::vector<std::uint32_t>& labels) {
  std::vector<ResponsePoint> points;
  std::vector<StimulusId> ids;
  for (const auto& c : coords) points.emplace_back(VectorPoint{c});
  for (auto l : labels) ids.push_back(StimulusId{l});
  return LabeledDataset(std::move(points), std::move(ids));
}

/// Points on a line, one label per point.
inline LabeledDataset line(const std::vector<double>& xs, const std::vector<std::uint32_t>& labels) {
  std::vector<std::vector<double>> coords;
  for (double x : xs) coords.push_back({x});
  return vectors(coords, labels);
}

/// Stimulus s spread over [100 s, 100 s + 1)^n_d; labels interleaved so
/// that index order says nothing about the label.
inline LabeledDataset separated(std::size_t n_s, std::size_t n_t, std::size_t n_d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> coords;
  std::vector<std::uint32_t> labels;
  for (std::size_t t = 0; t < n_t; ++t)
    for (std::size_t s = 0; s < n_s; ++s) {
      std::vector<double> x(n_d);
      for (auto& v : x) v = 100.0 * static_cast<double>(s) + rng.uniform01();
      coords.push_back(x);
      labels.push_back(static_cast<std::uint32_t>(s));
    }
  return vectors(coords, labels);
}

/// Random balanced dataset. With `grid` set, coordinates are small
/// integers so distance ties are common.
inline LabeledDataset random(std::size_t n_s, std::size_t n_t, std::size_t n_d, std::uint64_t seed, bool grid = false) {
  Rng rng(seed);
  std::vector<std::vector<double>> coords;
  std::vector<std::uint32_t> labels;
  for (std::size_t s = 0; s < n_s; ++s)
    for (std::size_t t = 0; t < n_t; ++t) {
      std::vector<double> x(n_d);
      for (auto& v : x) v = grid ? static_cast<double>(rng.below(4)) : 0.3 * static_cast<double>(s) + rng.normal();
      coords.push_back(x);
      labels.push_back(static_cast<std::uint32_t>(s));
    }
  // shuffle so labels are not in blocks
  for (std::size_t i = coords.size(); i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(coords[i - 1], coords[j]);
    std::swap(labels[i - 1], labels[j]);
  }
  return vectors(coords, labels);
}

} // namespace fixture
