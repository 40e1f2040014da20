#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("metricmi_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run cli(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const auto err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + METRICMI_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-toy writes n_s * n_t rows") {
  auto r = cli("gen-toy --ns 10 --nd 3 --nt 10 --seed 1 -o " + path("d.csv") + " --sources " + path("s.csv"));
  REQUIRE(r.code == 0);
  CHECK(lines(slurp(path("d.csv"))) == 100);
  CHECK(lines(slurp(path("s.csv"))) == 10);
  REQUIRE(cli("gen-toy --ns 10 --nd 3 --nt 10 --seed 1 -o " + path("d2.csv")).code == 0);
  CHECK(slurp(path("d.csv")) == slurp(path("d2.csv")));
}

TEST_CASE("estimate prints bounded json") {
  REQUIRE(cli("gen-toy --ns 10 --nd 3 --nt 10 --seed 1 -o " + path("d.csv")).code == 0);
  auto r = cli("estimate --input " + path("d.csv") + " --format csv-vectors --metric euclidean --kernel --nh 10");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["estimator"] == "kernel");
  CHECK(j["config"]["n_h"] == 10);
  CHECK(j["config"]["n_s"] == 10);
  const double bits = j["bits"];
  CHECK(bits >= 0.0);
  CHECK(bits <= std::log2(10.0));

  auto again = cli("estimate --input " + path("d.csv") + " --format csv-vectors --metric euclidean --kernel --nh 10");
  CHECK(again.out == r.out);
}

TEST_CASE("noiseless toy data give log2 n_s exactly") {
  REQUIRE(cli("gen-toy --ns 10 --nd 3 --nt 10 --sigma2 1e-12 --seed 4 -o " + path("z.csv")).code == 0);
  auto r = cli("estimate --input " + path("z.csv") + " --format csv-vectors");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["bits"].get<double>() == std::log2(10.0));
}

TEST_CASE("estimator variants and bias correction") {
  REQUIRE(cli("gen-toy --ns 3 --nd 2 --nt 20 --seed 2 -o " + path("e.csv")).code == 0);
  const std::string in = " --input " + path("e.csv") + " --format csv-vectors";
  auto ksg = cli("estimate --ksg --nk 3" + in);
  REQUIRE(ksg.code == 0);
  auto jk = nlohmann::json::parse(ksg.out);
  CHECK(jk["estimator"] == "ksg");
  CHECK(jk["config"]["n_k"] == 3);
  auto hist = cli("estimate --histogram --bin-width 0.5" + in);
  REQUIRE(hist.code == 0);
  CHECK(nlohmann::json::parse(hist.out)["estimator"] == "histogram");
  auto bc = cli("estimate --bias-correct --seed 3 -o " + path("bc.json") + in);
  REQUIRE(bc.code == 0);
  auto jb = nlohmann::json::parse(slurp(path("bc.json")));
  CHECK(jb["curve"].size() == 10);
  CHECK(jb.contains("intercept_bits"));
  CHECK(jb.contains("A_bits"));
  CHECK(jb.contains("B_bits"));
  CHECK(jb.contains("residual"));
  auto raw = cli("estimate" + in);
  REQUIRE(raw.code == 0);
  CHECK(jb["bits"] == nlohmann::json::parse(raw.out)["bits"]);
}

TEST_CASE("spike trains and distances") {
  {
    std::ofstream f(path("t.txt"));
    f << "0 3 0.01 0.05 0.20\n0 2 0.02 0.3\n1 1 0.5\n1 2 0.45 0.9\n";
  }
  auto d = cli("distances --input " + path("t.txt") + " --format spike-text --metric victor-purpura --q 10 -o " +
               path("dm.csv"));
  REQUIRE(d.code == 0);
  const auto text = slurp(path("dm.csv"));
  CHECK(lines(text) == 4);
  CHECK(text.rfind("0,", 0) == 0);
  auto e = cli("estimate --input " + path("t.txt") + " --format spike-text --metric van-rossum --tau 0.1 --nh 2");
  REQUIRE(e.code == 0);
  CHECK(nlohmann::json::parse(e.out)["config"]["metric"]["name"] == "van-rossum");
  CHECK(cli("estimate --input " + path("t.txt") + " --format spike-text").code == 2);
  CHECK(cli("estimate --input " + path("t.txt") + " --format spike-text --metric euclidean").code != 0);
}

TEST_CASE("usage errors exit 2") {
  auto none = cli("");
  CHECK(none.code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("gen-toy --ns 10").code == 2);
  CHECK(cli("estimate --input x --format csv").code == 2);
  CHECK(cli("estimate --input x --format csv-vectors --kernel --ksg").code == 2);
  CHECK(cli("estimate --input x --format csv-vectors --nh 3 --h-frac 0.1").code == 2);
  auto bad = cli("gen-toy --ns 10 --nd 3 --nt 10 --bogus -o " + path("b.csv"));
  CHECK(bad.code == 2);
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("runtime errors exit 1 with a diagnostic") {
  auto missing = cli("estimate --input " + path("no_such_file.csv") + " --format csv-vectors");
  CHECK(missing.code == 1);
  CHECK(missing.err.find("no_such_file.csv") != std::string::npos);
  {
    std::ofstream f(path("unbalanced.csv"));
    f << "0,1\n0,2\n1,3\n";
  }
  auto unbalanced = cli("estimate --input " + path("unbalanced.csv") + " --format csv-vectors");
  CHECK(unbalanced.code == 1);
  CHECK(unbalanced.err.find("unbalanced") != std::string::npos);
  {
    std::ofstream f(path("broken.csv"));
    f << "0,1\n1,oops\n";
  }
  auto broken = cli("estimate --input " + path("broken.csv") + " --format csv-vectors");
  CHECK(broken.code == 1);
  CHECK(broken.err.find(":2:") != std::string::npos);
  CHECK(cli("gen-toy --ns 10 --nd 3 --nt 10 --sigma2 2 -o " + path("v.csv")).code != 0);
}

TEST_CASE("benchmark writes its tables and is reproducible") {
  const auto a = path("bench_a");
  const auto b = path("bench_b");
  auto r = cli("--threads 1 benchmark --ns 10 --nd 3 --nt 10 --datasets 50 --seed 7 -o " + a);
  REQUIRE(r.code == 0);
  CHECK(lines(slurp(fs::path(a) / "records.csv")) == 51);
  auto summary = nlohmann::json::parse(slurp(fs::path(a) / "summary.json"));
  CHECK(summary.contains("mean_abs_err_kernel"));
  CHECK(summary.contains("mean_abs_err_histogram"));
  CHECK(lines(slurp(fs::path(a) / "scatter.dat")) == 51);
  REQUIRE(cli("--threads 2 benchmark --ns 10 --nd 3 --nt 10 --datasets 50 --seed 7 -o " + b).code == 0);
  for (const char* f : {"records.csv", "summary.json", "scatter.dat"})
    CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
}

} // TEST_SUITE
