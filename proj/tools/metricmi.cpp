// Command-line front end: toy data generation, distance matrices, MI
// estimation with optional bias correction, and the toy benchmark.

#include "metricmi/bias.hpp"
#include "metricmi/dataset.hpp"
#include "metricmi/estimators.hpp"
#include "metricmi/metrics.hpp"
#include "metricmi/toybench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace metricmi;
using nlohmann::ordered_json;

/// Flag combinations CLI11 cannot express; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricFlags {
  std::string metric;
  std::optional<double> q;
  std::optional<double> tau;

  void add(CLI::App* app) {
    app->add_option("--metric", metric, "euclidean | victor-purpura | van-rossum (required for spike-text)")
        ->check(CLI::IsMember({"euclidean", "victor-purpura", "van-rossum"}));
    app->add_option("--q", q, "victor-purpura shift cost per second (>= 0)");
    app->add_option("--tau", tau, "van-rossum time constant in seconds (> 0)");
  }

  MetricSpec resolve(DataFormat format) const {
    std::string name = metric;
    if (name.empty()) {
      if (format == DataFormat::SpikeText) throw UsageError("--metric is required for spike-text input");
      name = "euclidean";
    }
    if (q && name != "victor-purpura") throw UsageError("--q applies only to --metric victor-purpura");
    if (tau && name != "van-rossum") throw UsageError("--tau applies only to --metric van-rossum");
    MetricSpec spec = Euclidean{};
    if (name == "victor-purpura") {
      if (!q) throw UsageError("--metric victor-purpura needs --q");
      spec = VictorPurpura{*q};
    } else if (name == "van-rossum") {
      if (!tau) throw UsageError("--metric van-rossum needs --tau");
      spec = VanRossum{*tau};
    }
    try {
      validate(spec);
    } catch (const MetricError& e) {
      throw UsageError(std::string("--metric: ") + e.what());
    }
    return spec;
  }
};

ordered_json metric_json(const MetricSpec& metric) {
  ordered_json j;
  j["name"] = metric_name(metric);
  if (const auto* vp = std::get_if<VictorPurpura>(&metric)) j["q"] = vp->q;
  if (const auto* vr = std::get_if<VanRossum>(&metric)) j["tau"] = vr->tau;
  return j;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

DataFormat format_flag(const std::string& name) {
  try {
    return parse_format(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--format: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

struct GenToy {
  std::size_t n_s = 0, n_d = 0, n_t = 0;
  std::optional<double> sigma2;
  std::uint64_t seed = 0;
  std::string output;
  std::string sources;

  void add(CLI::App* app) {
    app->add_option("--ns", n_s, "number of stimuli (sources), >= 2")->required();
    app->add_option("--nd", n_d, "response dimension, >= 1")->required();
    app->add_option("--nt", n_t, "trials per stimulus, >= 2")->required();
    app->add_option("--sigma2", sigma2, "response variance in [0, 1]; drawn uniformly when omitted");
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("-o,--output", output, "csv-vectors output file")->required();
    app->add_option("--sources", sources, "optional CSV file receiving the source vectors");
  }

  void run() const {
    ToySpec spec{n_s, n_d, n_t, sigma2, seed};
    try {
      validate(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto toy = generate_toy(spec);
    save_dataset(output, toy.data, DataFormat::CsvVectors);
    if (!sources.empty()) {
      std::string text;
      for (std::size_t s = 0; s < toy.sources.size(); ++s) {
        text += std::to_string(s);
        for (double x : toy.sources[s]) text += "," + format_real(x);
        text += '\n';
      }
      emit(sources, text);
    }
  }
};

struct Distances {
  std::string input;
  std::string format = "csv-vectors";
  MetricFlags metric;
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--input", input, "dataset file")->required();
    app->add_option("--format", format, "csv-vectors | spike-text")->capture_default_str();
    metric.add(app);
    app->add_option("-o,--output", output, "CSV output file (default: stdout)");
  }

  void run(unsigned threads) const {
    const auto fmt = format_flag(format);
    const auto spec = metric.resolve(fmt);
    const auto data = load_dataset(input, fmt);
    const auto dm = distance_matrix(data, spec, threads);
    std::string text;
    for (std::size_t i = 0; i < dm.size(); ++i) {
      for (std::size_t j = 0; j < dm.size(); ++j) {
        if (j) text += ',';
        text += format_real(dm(i, j));
      }
      text += '\n';
    }
    emit(output, text);
  }
};

struct Estimate {
  std::string input;
  std::string format = "csv-vectors";
  MetricFlags metric;
  bool kernel = false, ksg = false, histogram = false;
  std::optional<std::size_t> nh;
  std::optional<double> h_frac;
  std::size_t nk = 1;
  bool ksg_count_self = false;
  std::string ksg_ties = "rank";
  double bin_width = 5.0;
  double bin_origin = 0.0;
  bool bias_correct = false;
  std::vector<double> lambdas;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  std::string output;
  CLI::App* app = nullptr;

  void add(CLI::App* sub) {
    app = sub;
    sub->add_option("--input", input, "dataset file")->required();
    sub->add_option("--format", format, "csv-vectors | spike-text")->capture_default_str();
    metric.add(sub);
    auto* k = sub->add_flag("--kernel", kernel, "kernel (nearest-neighbour volume) estimator [default]");
    auto* g = sub->add_flag("--ksg", ksg, "digamma k-nearest-neighbour estimator");
    auto* h = sub->add_flag("--histogram", histogram, "plug-in histogram estimator (vector data)");
    k->excludes(g)->excludes(h);
    g->excludes(h);
    auto* nh_opt = sub->add_option("--nh", nh, "kernel neighbour count n_h (default: n_t)");
    auto* hf_opt = sub->add_option("--h-frac", h_frac, "kernel bandwidth as a fraction of n_r, in (0, 1]");
    nh_opt->excludes(hf_opt);
    sub->add_option("--nk", nk, "ksg neighbour order n_k")->capture_default_str();
    sub->add_flag("--ksg-count-self", ksg_count_self, "ksg: count r_i as its own first neighbour");
    sub->add_option("--ksg-ties", ksg_ties, "ksg radius rule: rank | distance")
        ->check(CLI::IsMember({"rank", "distance"}))
        ->capture_default_str();
    sub->add_option("--bin-width", bin_width, "histogram bin width")->capture_default_str();
    sub->add_option("--bin-origin", bin_origin, "histogram bin boundary anchor")->capture_default_str();
    sub->add_flag("--bias-correct", bias_correct, "extrapolate over subsamples in 1/n_t");
    sub->add_option("--lambdas", lambdas, "subsample fractions (default 0.1..1.0 keeping >= 2 trials)")->delimiter(',');
    sub->add_option("--repeats", repeats, "subsamples per fraction")->capture_default_str();
    sub->add_option("--seed", seed, "subsampling seed")->capture_default_str();
    sub->add_option("-o,--output", output, "JSON output file (default: stdout)");
  }

  EstimatorConfig config() const {
    if (!ksg && (ksg_count_self || app->count("--nk") || app->count("--ksg-ties")))
      throw UsageError("--nk, --ksg-count-self and --ksg-ties apply only to --ksg");
    if (!histogram && (app->count("--bin-width") || app->count("--bin-origin")))
      throw UsageError("--bin-width and --bin-origin apply only to --histogram");
    if ((ksg || histogram) && (nh || h_frac)) throw UsageError("--nh and --h-frac apply only to --kernel");
    if (ksg) {
      if (nk == 0) throw UsageError("--nk must be >= 1");
      return KsgConfig{nk, ksg_count_self, ksg_ties == "distance" ? TieRule::Distance : TieRule::Rank};
    }
    if (histogram) {
      if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw UsageError("--bin-width must be > 0");
      return HistogramConfig{bin_width, bin_origin};
    }
    KernelConfig k;
    if (nh) {
      if (*nh == 0) throw UsageError("--nh must be >= 1");
      k.bandwidth = CountBandwidth{*nh};
    } else if (h_frac) {
      if (!(*h_frac > 0.0 && *h_frac <= 1.0)) throw UsageError("--h-frac must lie in (0, 1]");
      k.bandwidth = FractionBandwidth{*h_frac};
    }
    return k;
  }

  void run(unsigned threads) const {
    const auto fmt = format_flag(format);
    const auto cfg = config();
    if (repeats == 0) throw UsageError("--repeats must be >= 1");
    std::optional<MetricSpec> spec;
    if (kind_of(cfg) != EstimatorKind::Histogram) spec = metric.resolve(fmt);
    else if (!metric.metric.empty()) throw UsageError("--metric does not apply to --histogram");

    const auto data = load_dataset(input, fmt);
    std::optional<DistanceMatrix> dm;
    if (spec) dm = distance_matrix(data, *spec, threads);
    PreparedEstimator estimator(data, dm ? &*dm : nullptr, cfg, threads);

    ordered_json out;
    out["estimator"] = estimator_name(kind_of(cfg));
    ordered_json c;
    c["input"] = input;
    c["format"] = format_name(fmt);
    c["n_s"] = data.n_s();
    c["n_t"] = data.n_t();
    c["n_r"] = data.n_r();
    if (spec) c["metric"] = metric_json(*spec);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, KernelConfig>) {
            if (const auto* f = std::get_if<FractionBandwidth>(&v.bandwidth)) c["h"] = f->h;
            c["n_h"] = resolve_bandwidth(v, data.n_r(), data.n_t());
          } else if constexpr (std::is_same_v<T, KsgConfig>) {
            c["n_k"] = v.n_k;
            c["count_self"] = v.count_self;
            c["ties"] = v.ties == TieRule::Rank ? "rank" : "distance";
          } else {
            c["bin_width"] = v.width;
            c["bin_origin"] = v.origin;
          }
        },
        cfg);
    out["config"] = c;
    out["bits"] = estimator.full_bits();

    if (bias_correct) {
      CurveOptions opts{lambdas, repeats, seed, threads};
      const auto curve = subsample_curve(estimator, data, opts);
      const auto fit = quadratic_extrapolate(curve);
      ordered_json points = ordered_json::array();
      for (const auto& p : curve) points.push_back({{"lambda", p.lambda}, {"n_t", p.n_t}, {"bits", p.bits}});
      out["curve"] = points;
      out["intercept_bits"] = fit.intercept_bits;
      out["A_bits"] = fit.a_bits;
      out["B_bits"] = fit.b_bits;
      out["residual"] = fit.residual;
    }
    emit(output, out.dump(2) + "\n");
  }
};

struct Benchmark {
  Protocol protocol;
  bool no_prune = false;
  bool no_bias_correct = false;
  std::optional<std::size_t> nh;
  std::optional<double> h_frac;
  std::vector<double> widths{0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0};
  std::vector<double> lambdas;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--ns", protocol.n_s, "number of stimuli")->required();
    app->add_option("--nd", protocol.n_d, "response dimension")->required();
    app->add_option("--nt", protocol.n_t, "trials per stimulus")->required();
    app->add_option("--datasets", protocol.dataset_count, "number of datasets")->capture_default_str();
    app->add_flag("--no-prune", no_prune, "skip pruning to a flat true-MI distribution");
    app->add_option("--mc-samples", protocol.mc_samples, "Monte-Carlo samples for the true MI")->capture_default_str();
    auto* nh_opt = app->add_option("--nh", nh, "kernel neighbour count (default: n_t)");
    auto* hf_opt = app->add_option("--h-frac", h_frac, "kernel bandwidth fraction");
    nh_opt->excludes(hf_opt);
    app->add_option("--widths", widths, "histogram widths to sweep")->delimiter(',');
    app->add_option("--lambdas", lambdas, "subsample fractions (default 0.1..1.0 keeping >= 2 trials)")->delimiter(',');
    app->add_option("--repeats", repeats, "subsamples per fraction")->capture_default_str();
    app->add_flag("--no-bias-correct", no_bias_correct, "report full-data estimates without extrapolation");
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("-o,--output", output, "output directory")->required();
  }

  void run(unsigned threads) {
    protocol.prune = !no_prune;
    try {
      validate(protocol);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (repeats == 0) throw UsageError("--repeats must be >= 1");
    if (widths.empty()) throw UsageError("--widths needs at least one value");
    for (double w : widths)
      if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("--widths values must be > 0");

    BenchmarkOptions opts;
    if (nh) opts.kernel.bandwidth = CountBandwidth{*nh};
    if (h_frac) opts.kernel.bandwidth = FractionBandwidth{*h_frac};
    opts.widths = widths;
    opts.lambdas = lambdas;
    opts.repeats = repeats;
    opts.bias_correct = !no_bias_correct;
    opts.seed = seed;
    opts.threads = threads;

    const auto result = run_benchmark(protocol, opts);
    write_benchmark(output, result);
    std::cout << "kernel mean |err| " << format_real(result.mean_abs_err_kernel) << " bits, histogram (width "
              << format_real(result.best_width()) << ") " << format_real(result.mean_abs_err_histogram) << " bits over "
              << result.records.size() << " datasets\n";
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutual information between a discrete stimulus and metric-space responses"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0: all cores); results do not depend on it")
      ->capture_default_str();

  GenToy gen;
  Distances dist;
  Estimate est;
  Benchmark bench;
  auto* gen_cmd = app.add_subcommand("gen-toy", "generate a toy dataset (csv-vectors)");
  gen.add(gen_cmd);
  auto* dist_cmd = app.add_subcommand("distances", "write the pairwise distance matrix as CSV");
  dist.add(dist_cmd);
  auto* est_cmd = app.add_subcommand("estimate", "estimate mutual information in bits (JSON)");
  est.add(est_cmd);
  auto* bench_cmd = app.add_subcommand("benchmark", "run the toy benchmark and write records/summary/scatter");
  bench.add(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen_cmd) gen.run();
    else if (*dist_cmd) dist.run(threads);
    else if (*est_cmd) est.run(threads);
    else bench.run(threads);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
