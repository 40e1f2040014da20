#include "metricmi/dataset.hpp"

#include "metricmi/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

namespace metricmi {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

LabeledDataset::LabeledDataset(std::vector<ResponsePoint> points, std::vector<StimulusId> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.size() != labels_.size())
    throw DatasetError("dataset: " + std::to_string(points_.size()) + " points but " +
                       std::to_string(labels_.size()) + " labels");
  if (points_.empty()) throw DatasetError("dataset: no responses");

  std::uint32_t max_label = 0;
  for (auto s : labels_) max_label = std::max(max_label, s.index);
  n_s_ = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::size_t> counts(n_s_, 0);
  for (auto s : labels_) ++counts[s.index];
  n_t_ = counts[0];
  for (std::size_t s = 0; s < n_s_; ++s) {
    if (counts[s] == 0)
      throw DatasetError("dataset: stimulus " + std::to_string(s) + " has no responses (labels must be dense)");
    if (counts[s] != n_t_)
      throw DatasetError("dataset: unbalanced design, stimulus " + std::to_string(s) + " has " +
                         std::to_string(counts[s]) + " trials, stimulus 0 has " + std::to_string(n_t_));
  }

  const bool vectors = std::holds_alternative<VectorPoint>(points_.front());
  const std::size_t dim = vectors ? std::get<VectorPoint>(points_.front()).coords.size() : 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (std::holds_alternative<VectorPoint>(p) != vectors)
      throw DatasetError("dataset: response " + std::to_string(i) + " mixes vector and spike-train variants");
    if (vectors) {
      const auto& c = std::get<VectorPoint>(p).coords;
      if (c.size() != dim)
        throw DatasetError("dataset: response " + std::to_string(i) + " has dimension " + std::to_string(c.size()) +
                           ", expected " + std::to_string(dim));
      if (!std::all_of(c.begin(), c.end(), [](double x) { return std::isfinite(x); }))
        throw DatasetError("dataset: response " + std::to_string(i) + " has a non-finite coordinate");
    } else {
      const auto& t = std::get<SpikeTrain>(p).times;
      if (!std::all_of(t.begin(), t.end(), [](double x) { return std::isfinite(x); }))
        throw DatasetError("dataset: response " + std::to_string(i) + " has a non-finite spike time");
      if (!std::is_sorted(t.begin(), t.end()))
        throw DatasetError("dataset: response " + std::to_string(i) + " has unsorted spike times");
    }
  }
}

bool LabeledDataset::is_vector() const noexcept {
  return std::holds_alternative<VectorPoint>(points_.front());
}

std::size_t LabeledDataset::n_d() const noexcept {
  return is_vector() ? std::get<VectorPoint>(points_.front()).coords.size() : 0;
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
  std::vector<ResponsePoint> pts;
  std::vector<StimulusId> labs;
  pts.reserve(indices.size());
  labs.reserve(indices.size());
  for (auto i : indices) {
    pts.push_back(points_.at(i));
    labs.push_back(labels_.at(i));
  }
  return LabeledDataset(std::move(pts), std::move(labs));
}

// ---------------------------------------------------------------------------
// text formats

namespace {

std::vector<std::string_view> split(std::string_view line, bool on_comma) {
  std::vector<std::string_view> out;
  if (on_comma) {
    std::size_t start = 0;
    for (;;) {
      auto pos = line.find(',', start);
      out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct LineParser {
  const std::string& source;
  std::size_t line;

  double real(std::string_view tok) const {
    tok = trim(tok);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
      throw ParseError(source, line, "invalid real '" + std::string(tok) + "'");
    if (!std::isfinite(v)) throw ParseError(source, line, "non-finite value '" + std::string(tok) + "'");
    return v;
  }

  std::uint64_t count(std::string_view tok, const char* what) const {
    tok = trim(tok);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
      throw ParseError(source, line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
    return v;
  }

  StimulusId label(std::string_view tok) const {
    auto v = count(tok, "label");
    if (v > 0xffffffffu) throw ParseError(source, line, "label out of range");
    return StimulusId{static_cast<std::uint32_t>(v)};
  }
};

} // namespace

LabeledDataset read_dataset(std::istream& in, DataFormat format, const std::string& source) {
  std::vector<ResponsePoint> points;
  std::vector<StimulusId> labels;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    LineParser p{source, line_no};
    if (format == DataFormat::CsvVectors) {
      auto fields = split(line, true);
      if (fields.size() < 2) throw ParseError(source, line_no, "expected 'label,x0,...'");
      labels.push_back(p.label(fields[0]));
      VectorPoint v;
      v.coords.reserve(fields.size() - 1);
      for (std::size_t k = 1; k < fields.size(); ++k) v.coords.push_back(p.real(fields[k]));
      points.emplace_back(std::move(v));
    } else {
      auto fields = split(line, false);
      if (fields.size() < 2) throw ParseError(source, line_no, "expected 'label k t1 ... tk'");
      labels.push_back(p.label(fields[0]));
      auto k = p.count(fields[1], "spike count");
      if (fields.size() - 2 != k)
        throw ParseError(source, line_no,
                         "spike count " + std::to_string(k) + " but " + std::to_string(fields.size() - 2) + " times");
      SpikeTrain t;
      t.times.reserve(k);
      for (std::size_t j = 2; j < fields.size(); ++j) t.times.push_back(p.real(fields[j]));
      if (!std::is_sorted(t.times.begin(), t.times.end()))
        throw ParseError(source, line_no, "spike times not ascending");
      points.emplace_back(std::move(t));
    }
  }
  if (points.empty()) throw ParseError(source, line_no, "no data lines");
  return LabeledDataset(std::move(points), std::move(labels));
}

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return read_dataset(in, format, path.string());
}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_dataset(std::ostream& out, const LabeledDataset& data, DataFormat format) {
  for (std::size_t i = 0; i < data.n_r(); ++i) {
    const auto& p = data.point(i);
    if (format == DataFormat::CsvVectors) {
      const auto* v = std::get_if<VectorPoint>(&p);
      if (!v) throw DatasetError("csv-vectors output requires vector responses");
      out << data.label(i).index;
      for (double x : v->coords) out << ',' << format_real(x);
    } else {
      const auto* t = std::get_if<SpikeTrain>(&p);
      if (!t) throw DatasetError("spike-text output requires spike-train responses");
      out << data.label(i).index << ' ' << t->times.size();
      for (double x : t->times) out << ' ' << format_real(x);
    }
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data, DataFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_dataset(out, data, format);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

DataFormat parse_format(const std::string& name) {
  if (name == "csv-vectors") return DataFormat::CsvVectors;
  if (name == "spike-text") return DataFormat::SpikeText;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv-vectors or spike-text)");
}

std::string format_name(DataFormat format) {
  return format == DataFormat::CsvVectors ? "csv-vectors" : "spike-text";
}

// ---------------------------------------------------------------------------
// subsampling

std::size_t floor_fraction(double fraction, std::size_t n) {
  const double x = fraction * static_cast<double>(n);
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(x));
}

std::size_t subsample_trials(std::size_t n_t, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("subsample fraction must lie in (0, 1], got " + format_real(lambda));
  return floor_fraction(lambda, n_t);
}

std::vector<std::size_t> subsample_indices(std::span<const StimulusId> labels, std::size_t n_s, std::size_t n_t,
                                           double lambda, std::uint64_t seed) {
  const std::size_t keep = subsample_trials(n_t, lambda);
  if (keep == 0)
    throw std::invalid_argument("subsample fraction " + format_real(lambda) + " keeps no trials of " +
                                std::to_string(n_t));

  std::vector<std::vector<std::size_t>> by_stimulus(n_s);
  for (auto& v : by_stimulus) v.reserve(n_t);
  for (std::size_t i = 0; i < labels.size(); ++i) by_stimulus.at(labels[i].index).push_back(i);

  std::vector<std::size_t> out;
  out.reserve(keep * n_s);
  if (keep == n_t) {
    out.resize(labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }

  Rng rng(seed);
  for (auto& pool : by_stimulus) {
    // partial Fisher-Yates: the first `keep` slots end up a uniform draw
    for (std::size_t k = 0; k < keep; ++k) {
      std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(out.begin(), out.end());
  return out;
}

LabeledDataset subsample(const LabeledDataset& data, double lambda, std::uint64_t seed) {
  auto idx = subsample_indices(data.labels(), data.n_s(), data.n_t(), lambda, seed);
  return data.select(idx);
}

} // namespace metricmi
