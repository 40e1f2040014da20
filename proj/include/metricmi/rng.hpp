#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

namespace metricmi {

/// Seedable generator with portable output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The std distributions are implementation-defined, so uniform,
/// normal and bounded-integer draws are derived here from raw engine words.
/// Normals use the Box-Muller transform and cache the second variate.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream keyed by (seed, path...), mixed through
  /// std::seed_seq so neighbouring keys give unrelated streams.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  double normal();

  /// Uniform integer in [0, n), n > 0, without modulo bias.
  std::size_t below(std::size_t n);

private:
  explicit Rng(std::seed_seq& seq);

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Derives a 64-bit seed from a base and a path, for recording in outputs.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

} // namespace metricmi
