#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>

namespace zoibmed {

/// Mixes (master, tag, index) into an independent 64-bit seed (splitmix64
/// finalizer applied in sequence). Used to hand each replicate, unit, or grid
/// point its own stream so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t index = 0) noexcept;

/// Stream tags. Values are part of the reproducibility contract.
namespace stream_tag {
inline constexpr std::uint64_t kWeights = 0x57;
inline constexpr std::uint64_t kCells = 0xCE11;
inline constexpr std::uint64_t kBootstrap = 0xB007;
inline constexpr std::uint64_t kReplicate = 0x5EED;
inline constexpr std::uint64_t kRerun = 0x4E4E;
inline constexpr std::uint64_t kGenerate = 0x6E6E;
inline constexpr std::uint64_t kTruth = 0x7207;
inline constexpr std::uint64_t kPoint = 0x9017;
}  // namespace stream_tag

/// Owned by one caller at a time. All variates are produced by explicit
/// transforms of the 64-bit engine output so draws are identical across
/// standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unit-rate exponential.
  double exponential();

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair();

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads using static
/// contiguous chunks. Callers write into per-index slots and reduce afterward
/// in index order, so results are independent of the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace zoibmed
