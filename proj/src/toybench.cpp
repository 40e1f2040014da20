#include "metricmi/toybench.hpp"

#include "metricmi/metrics.hpp"
#include "metricmi/parallel.hpp"
#include "metricmi/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace metricmi {

namespace {

// substream keys under a dataset seed
constexpr std::uint64_t kSourcesStream = 1;
constexpr std::uint64_t kResponsesStream = 2;
constexpr std::uint64_t kTruthStream = 3;
constexpr std::uint64_t kSubsampleStream = 4;
constexpr std::uint64_t kScreenStream = 5;
constexpr std::size_t kScreenSamples = 1000;
constexpr std::size_t kPruneBins = 10;

double mean_abs_error(const std::vector<DatasetRecord>& records, auto&& estimate) {
  double sum = 0.0;
  for (const auto& r : records) sum += std::abs(estimate(r) - r.true_bits);
  return records.empty() ? 0.0 : sum / static_cast<double>(records.size());
}

} // namespace

void validate(const ToySpec& spec) {
  if (spec.n_s < 2) throw std::invalid_argument("toy data needs n_s >= 2");
  if (spec.n_d < 1) throw std::invalid_argument("toy data needs n_d >= 1");
  if (spec.n_t < 2) throw std::invalid_argument("toy data needs n_t >= 2");
  if (spec.sigma2 && !(*spec.sigma2 >= 0.0 && *spec.sigma2 <= 1.0))
    throw std::invalid_argument("toy variance must lie in [0, 1], got " + format_real(*spec.sigma2));
}

ToySources draw_sources(const ToySpec& spec) {
  validate(spec);
  auto rng = Rng::substream(spec.seed, {kSourcesStream});
  ToySources out;
  // always consumed so that the sources do not depend on whether sigma2 is fixed
  const double drawn = rng.uniform01();
  out.sigma2 = spec.sigma2.value_or(drawn);
  out.sources.assign(spec.n_s, Source(spec.n_d));
  for (auto& s : out.sources)
    for (auto& x : s) x = rng.uniform01() - 0.5;
  return out;
}

ToyDataset generate_toy(const ToySpec& spec) {
  auto [sources, sigma2] = draw_sources(spec);
  auto rng = Rng::substream(spec.seed, {kResponsesStream});
  const double sigma = std::sqrt(sigma2);

  std::vector<ResponsePoint> points;
  std::vector<StimulusId> labels;
  points.reserve(spec.n_s * spec.n_t);
  labels.reserve(spec.n_s * spec.n_t);
  for (std::size_t s = 0; s < spec.n_s; ++s) {
    for (std::size_t t = 0; t < spec.n_t; ++t) {
      VectorPoint r;
      r.coords.resize(spec.n_d);
      for (std::size_t k = 0; k < spec.n_d; ++k) r.coords[k] = sources[s][k] + sigma * rng.normal();
      points.emplace_back(std::move(r));
      labels.push_back(StimulusId{static_cast<std::uint32_t>(s)});
    }
  }
  return ToyDataset{LabeledDataset(std::move(points), std::move(labels)), std::move(sources), sigma2};
}

double noiseless_mi(const std::vector<Source>& sources) {
  if (sources.empty()) throw std::invalid_argument("noiseless_mi: no sources");
  std::map<Source, std::size_t> groups;
  for (const auto& s : sources) ++groups[s];
  const double n = static_cast<double>(sources.size());
  double bits = 0.0;
  for (const auto& [_, count] : groups) {
    const double p = static_cast<double>(count) / n;
    bits -= p * std::log2(p);
  }
  return groups.size() == sources.size() ? std::log2(n) : bits;
}

namespace {

struct McStats {
  double mean_bits = 0.0;
  double stderr_bits = 0.0;
};

McStats log_ratio_mc(const std::vector<Source>& sources, double sigma2, std::size_t samples, Rng& rng) {
  const std::size_t n_s = sources.size();
  const std::size_t n_d = sources.front().size();
  const double sigma = std::sqrt(sigma2);
  const double log_ns = std::log(static_cast<double>(n_s));

  std::vector<double> r(n_d);
  std::vector<double> exponent(n_s);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t m = 0; m < samples; ++m) {
    const std::size_t s = rng.below(n_s);
    for (std::size_t k = 0; k < n_d; ++k) r[k] = sources[s][k] + sigma * rng.normal();
    for (std::size_t j = 0; j < n_s; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < n_d; ++k) {
        const double d = r[k] - sources[j][k];
        d2 += d * d;
      }
      exponent[j] = -d2 / (2.0 * sigma2);
    }
    // ln p(r|s) - ln p(r), with p(r) the equal-weight mixture
    const double top = *std::max_element(exponent.begin(), exponent.end());
    double mix = 0.0;
    for (double e : exponent) mix += std::exp(e - top);
    const double v = exponent[s] - (top + std::log(mix) - log_ns);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean / std::numbers::ln2, std::sqrt(var / n) / std::numbers::ln2};
}

void check_truth_args(const std::vector<Source>& sources, double sigma2, std::size_t mc_samples) {
  if (sources.empty()) throw std::invalid_argument("true_mi: no sources");
  if (mc_samples == 0) throw std::invalid_argument("true_mi: mc_samples must be >= 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("true_mi: variance must be finite and > 0 (use noiseless_mi for sigma2 = 0)");
}

} // namespace

double true_mi(const std::vector<Source>& sources, double sigma2, std::size_t mc_samples, std::uint64_t seed) {
  check_truth_args(sources, sigma2, mc_samples);
  if (sigma2 < kNoiselessVariance) return noiseless_mi(sources);
  auto rng = Rng::substream(seed, {kTruthStream});
  // sampling noise and rounding can leave the mean just outside [0, log2 n_s]
  const double top = std::log2(static_cast<double>(sources.size()));
  return std::clamp(log_ratio_mc(sources, sigma2, mc_samples, rng).mean_bits, 0.0, top);
}

double chi_density(double d, std::size_t n_d, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("chi_density: sigma must be > 0");
  if (n_d == 0) throw std::invalid_argument("chi_density: n_d must be >= 1");
  if (d < 0.0) return 0.0;
  const double k = static_cast<double>(n_d);
  const double x = d / sigma;
  if (x == 0.0) {
    if (n_d > 1) return 0.0;
    return std::sqrt(2.0 / std::numbers::pi) / sigma;
  }
  const double log_p = (1.0 - k / 2.0) * std::numbers::ln2 - std::lgamma(k / 2.0) + (k - 1.0) * std::log(x) -
                       x * x / 2.0;
  return std::exp(log_p) / sigma;
}

// ---------------------------------------------------------------------------
// benchmark

void validate(const Protocol& protocol) {
  validate(ToySpec{protocol.n_s, protocol.n_d, protocol.n_t, std::nullopt, 0});
  if (protocol.dataset_count == 0) throw std::invalid_argument("benchmark needs at least one dataset");
  if (protocol.prune && protocol.dataset_count % 10 != 0)
    throw std::invalid_argument("pruned benchmark needs a dataset count divisible by 10, got " +
                                std::to_string(protocol.dataset_count));
  if (protocol.mc_samples == 0) throw std::invalid_argument("benchmark needs mc_samples >= 1");
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t k) {
  return derive_seed(seed, {0x746f79ULL, k});
}

namespace {

std::size_t prune_bin(double normalized) {
  return std::min(kPruneBins - 1, static_cast<std::size_t>(std::clamp(normalized, 0.0, 1.0) * kPruneBins));
}

// distance from a normalised MI value to bin b's interval
double bin_gap(double normalized, std::size_t b) {
  const double lo = static_cast<double>(b) / kPruneBins;
  const double hi = static_cast<double>(b + 1) / kPruneBins;
  if (normalized < lo) return lo - normalized;
  if (normalized > hi) return normalized - hi;
  return 0.0;
}

} // namespace

DatasetSelection select_datasets(const Protocol& protocol, std::uint64_t seed, unsigned threads) {
  validate(protocol);
  const std::size_t target = protocol.dataset_count;
  const std::size_t max_candidates = protocol.prune ? 1000 * target : target;
  const double max_bits = std::log2(static_cast<double>(protocol.n_s));
  const std::size_t quota = target / kPruneBins;

  struct Scored {
    Candidate candidate;
    std::size_t index = 0;
    double estimate = 0.0; // normalised; screened or full
    bool full = false;
  };

  auto full_truth = [&](Scored& sc, const ToySources& src) {
    sc.candidate.true_bits = src.sigma2 < kNoiselessVariance
                                 ? noiseless_mi(src.sources)
                                 : true_mi(src.sources, src.sigma2, protocol.mc_samples, sc.candidate.seed);
    sc.estimate = sc.candidate.true_bits / max_bits;
    sc.full = true;
  };
  auto sources_of = [&](std::uint64_t s) {
    return draw_sources(ToySpec{protocol.n_s, protocol.n_d, protocol.n_t, std::nullopt, s});
  };

  DatasetSelection out;
  out.shortfall.assign(protocol.prune ? kPruneBins : 0, 0);
  std::vector<Scored> accepted;
  std::vector<Scored> rejected;
  std::vector<std::size_t> filled(kPruneBins, 0);
  // candidates are scored in parallel batches and accepted in draw order
  const std::size_t batch = std::max<std::size_t>(64, resolve_threads(threads));
  std::size_t next = 0;
  while (accepted.size() < target && next < max_candidates) {
    const std::size_t n = std::min(batch, max_candidates - next);
    std::vector<Scored> scored(n);
    const auto open = filled; // bins only close during a batch, so this is conservative
    parallel_for(n, threads, [&](std::size_t b) {
      Scored& sc = scored[b];
      sc.index = next + b;
      sc.candidate.seed = candidate_seed(seed, sc.index);
      const auto src = sources_of(sc.candidate.seed);
      sc.candidate.sigma2 = src.sigma2;
      if (protocol.prune && src.sigma2 >= kNoiselessVariance) {
        auto rng = Rng::substream(sc.candidate.seed, {kScreenStream});
        const auto screen = log_ratio_mc(src.sources, src.sigma2, kScreenSamples, rng);
        const double centre = screen.mean_bits / max_bits;
        const double margin = (5.0 * screen.stderr_bits) / max_bits + 0.01;
        sc.estimate = centre;
        bool reachable = false;
        for (std::size_t bin = 0; bin < kPruneBins; ++bin)
          if (open[bin] < quota && bin_gap(centre, bin) <= margin) reachable = true;
        if (!reachable) return;
      }
      full_truth(sc, src);
    });
    for (std::size_t b = 0; b < n && accepted.size() < target; ++b) {
      ++next;
      Scored& sc = scored[b];
      if (!protocol.prune) {
        accepted.push_back(sc);
        continue;
      }
      const std::size_t bin = prune_bin(sc.estimate);
      if (sc.full && filled[bin] < quota) {
        ++filled[bin];
        accepted.push_back(sc);
      } else {
        rejected.push_back(sc);
      }
    }
  }
  out.drawn = next;

  if (accepted.size() < target) {
    // top up each short bin from the rejected candidates nearest to it
    std::vector<char> used(rejected.size(), 0);
    for (std::size_t bin = 0; bin < kPruneBins; ++bin) {
      if (filled[bin] >= quota) continue;
      std::vector<std::size_t> order(rejected.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return bin_gap(rejected[x].estimate, bin) < bin_gap(rejected[y].estimate, bin);
      });
      for (auto k : order) {
        if (filled[bin] >= quota) break;
        if (used[k]) continue;
        used[k] = 1;
        if (!rejected[k].full) full_truth(rejected[k], sources_of(rejected[k].candidate.seed));
        accepted.push_back(rejected[k]);
        ++filled[bin];
        ++out.shortfall[bin];
      }
    }
    if (accepted.size() < target) throw std::runtime_error("dataset selection could not fill every bin");
    std::sort(accepted.begin(), accepted.end(), [](const Scored& x, const Scored& y) { return x.index < y.index; });
  }
  for (auto& sc : accepted) out.datasets.push_back(sc.candidate);
  return out;
}

BenchmarkResult run_benchmark(const Protocol& protocol, const BenchmarkOptions& options) {
  validate(protocol);
  if (options.widths.empty()) throw std::invalid_argument("benchmark needs at least one histogram width");

  BenchmarkResult result;
  result.protocol = protocol;
  result.options = options;
  auto selection = select_datasets(protocol, options.seed, options.threads);
  result.candidates_drawn = selection.drawn;
  result.pruning_shortfall = selection.shortfall;
  const auto& chosen = selection.datasets;
  result.records.resize(chosen.size());

  parallel_for(chosen.size(), options.threads, [&](std::size_t d) {
    const auto& c = chosen[d];
    auto toy = generate_toy(ToySpec{protocol.n_s, protocol.n_d, protocol.n_t, std::nullopt, c.seed});
    const auto dm = distance_matrix(toy.data, Euclidean{});

    CurveOptions curve_options;
    curve_options.lambdas = options.lambdas;
    curve_options.repeats = options.repeats;
    curve_options.seed = derive_seed(c.seed, {kSubsampleStream});
    curve_options.threads = 1;

    auto score = [&](const EstimatorConfig& config, double& raw, double& corrected) {
      PreparedEstimator estimator(toy.data, &dm, config);
      if (!options.bias_correct) {
        raw = corrected = estimator.full_bits();
        return;
      }
      const auto curve = subsample_curve(estimator, toy.data, curve_options);
      raw = curve.back().n_t == protocol.n_t ? curve.back().bits : estimator.full_bits();
      corrected = quadratic_extrapolate(curve).intercept_bits;
    };

    DatasetRecord& rec = result.records[d];
    rec.seed = c.seed;
    rec.sigma2 = c.sigma2;
    rec.true_bits = c.true_bits;
    score(options.kernel, rec.kernel_raw_bits, rec.kernel_bits);
    rec.hist_bits.resize(options.widths.size());
    rec.hist_raw_bits.resize(options.widths.size());
    for (std::size_t w = 0; w < options.widths.size(); ++w)
      score(HistogramConfig{options.widths[w], 0.0}, rec.hist_raw_bits[w], rec.hist_bits[w]);
  });

  result.hist_mae_by_width.resize(options.widths.size());
  for (std::size_t w = 0; w < options.widths.size(); ++w)
    result.hist_mae_by_width[w] = mean_abs_error(result.records, [w](const DatasetRecord& r) { return r.hist_bits[w]; });
  result.best_width_index = static_cast<std::size_t>(
      std::min_element(result.hist_mae_by_width.begin(), result.hist_mae_by_width.end()) -
      result.hist_mae_by_width.begin());
  const std::size_t best = result.best_width_index;
  result.mean_abs_err_kernel = mean_abs_error(result.records, [](const DatasetRecord& r) { return r.kernel_bits; });
  result.mean_abs_err_kernel_raw = mean_abs_error(result.records, [](const DatasetRecord& r) { return r.kernel_raw_bits; });
  result.mean_abs_err_histogram = result.hist_mae_by_width[best];
  result.mean_abs_err_histogram_raw =
      mean_abs_error(result.records, [best](const DatasetRecord& r) { return r.hist_raw_bits[best]; });
  return result;
}

void write_records_csv(std::ostream& out, const BenchmarkResult& result) {
  const std::size_t best = result.best_width_index;
  out << "seed,sigma2,true_bits,kernel_bits,hist_bits,hist_width\n";
  for (const auto& r : result.records) {
    out << r.seed << ',' << format_real(r.sigma2) << ',' << format_real(r.true_bits) << ','
        << format_real(r.kernel_bits) << ',' << format_real(r.hist_bits[best]) << ',' << format_real(result.best_width())
        << '\n';
  }
}

void write_summary_json(std::ostream& out, const BenchmarkResult& result) {
  const auto& p = result.protocol;
  const auto& o = result.options;
  nlohmann::ordered_json j;
  j["protocol"] = {{"n_s", p.n_s},
                   {"n_d", p.n_d},
                   {"n_t", p.n_t},
                   {"datasets", p.dataset_count},
                   {"prune", p.prune},
                   {"mc_samples", p.mc_samples}};
  nlohmann::ordered_json kernel;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, TrialsBandwidth>) kernel["bandwidth"] = "n_t";
        else if constexpr (std::is_same_v<T, FractionBandwidth>) kernel["h"] = b.h;
        else kernel["n_h"] = b.n_h;
      },
      o.kernel.bandwidth);
  j["seed"] = o.seed;
  j["bias_correct"] = o.bias_correct;
  j["repeats"] = o.repeats;
  j["lambdas"] = o.lambdas.empty() ? default_lambdas(p.n_t) : o.lambdas;
  j["kernel"] = kernel;
  j["histogram_widths"] = o.widths;
  j["histogram_mae_by_width"] = result.hist_mae_by_width;
  j["hist_width"] = result.best_width();
  j["mean_abs_err_kernel"] = result.mean_abs_err_kernel;
  j["mean_abs_err_histogram"] = result.mean_abs_err_histogram;
  j["mean_abs_err_kernel_raw"] = result.mean_abs_err_kernel_raw;
  j["mean_abs_err_histogram_raw"] = result.mean_abs_err_histogram_raw;
  j["candidates_drawn"] = result.candidates_drawn;
  j["pruning_shortfall"] = result.pruning_shortfall;
  out << j.dump(2) << '\n';
}

void write_scatter(std::ostream& out, const BenchmarkResult& result) {
  const double scale = std::log2(static_cast<double>(result.protocol.n_s));
  const std::size_t best = result.best_width_index;
  out << "# true kernel histogram (bits / log2 n_s)\n";
  for (const auto& r : result.records)
    out << format_real(r.true_bits / scale) << ' ' << format_real(r.kernel_bits / scale) << ' '
        << format_real(r.hist_bits[best] / scale) << '\n';
}

void write_benchmark(const std::filesystem::path& dir, const BenchmarkResult& result) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, auto&& writer) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    writer(out, result);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  };
  write("records.csv", write_records_csv);
  write("summary.json", write_summary_json);
  write("scatter.dat", write_scatter);
}

} // namespace metricmi
