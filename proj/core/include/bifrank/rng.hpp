#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace bifrank {

/// Labels for the independent sample streams of a run.
enum class StreamId : std::uint64_t {
  Theta = 1,    // outer-objective samples
  Xi = 2,       // inner-objective / inner-map samples
  Hessian = 3,  // Neumann chain and cross-Hessian samples
  Data = 4,     // output-iterate selection and data splits
  Lmo = 5,      // power-iteration starts
  Problem = 6,  // synthetic problem generation
};

/// Deterministic random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and normal variates are derived here rather than through
/// std::*_distribution, whose algorithms are implementation-defined, so the
/// draws are identical across standard libraries.
///
/// Streams are plain values: copying one snapshots its position, and
/// assigning the copy back rewinds it. Trackers rely on that to replay the
/// same samples at two points.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] StreamId id() const { return id_; }
  /// Number of 64-bit words consumed so far.
  [[nodiscard]] std::uint64_t position() const { return position_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (one variate per call, no caching).
  double normal();

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.seed_ == b.seed_ && a.id_ == b.id_ && a.position_ == b.position_;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  StreamId id_;
  std::uint64_t position_ = 0;
};

/// The three sample streams consumed by stochastic oracles.
struct SampleStreams {
  explicit SampleStreams(std::uint64_t seed)
      : theta(seed, StreamId::Theta), xi(seed, StreamId::Xi), hessian(seed, StreamId::Hessian) {}

  RngStream theta;
  RngStream xi;
  RngStream hessian;
};

}  // namespace bifrank
