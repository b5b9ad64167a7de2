#pragma once

// Counter-based random streams addressed by a path in an index tree.
//
// Every node of the tree owns an independent stream: its Philox4x64-10 key is
// derived from (seed, path), so no generator state is stored per node and a
// stream can be re-created anywhere from its descriptor alone.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

#include <boost/random/normal_distribution.hpp>

namespace mlmcq {

/// Philox4x64 with 10 rounds. `counter` and `key` are used as-is.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// Uniform random bit generator reading consecutive Philox blocks of one key.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::array<std::uint64_t, 2> key, std::uint64_t block = 0)
      : key_(key), block_(block) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (pos_ == buffer_.size()) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(*this); }

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal_(*this);
  }

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill() {
    buffer_ = philox4x64({block_, 0, 0, 0}, key_);
    ++block_;
    pos_ = 0;
  }

  std::array<std::uint64_t, 2> key_;
  std::uint64_t block_;
  std::array<std::uint64_t, 4> buffer_{};
  std::size_t pos_ = 4;
  boost::random::normal_distribution<double> normal_{};  // ziggurat
};

/// Immutable descriptor of one node of the stream tree.
class RngStream {
 public:
  static constexpr std::size_t kMaxDepth = 40;

  explicit RngStream(std::uint64_t seed);

  /// Stream whose path is this path extended by `index`.
  /// Throws ResourceError past kMaxDepth.
  RngStream child(std::int64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::span<const std::int64_t> path() const { return {path_.data(), depth_}; }
  std::size_t depth() const { return depth_; }
  std::array<std::uint64_t, 2> key() const { return key_; }

  CounterEngine engine() const { return CounterEngine(key_); }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.seed_ == b.seed_ && a.key_ == b.key_ && a.depth_ == b.depth_;
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 2> key_;
  RngStream(std::uint64_t seed, std::array<std::uint64_t, 2> key, std::size_t depth)
      : seed_(seed), key_(key), depth_(depth) {}

  // Entries past depth_ are never read, so they are left uninitialized.
  std::array<std::int64_t, kMaxDepth> path_;
  std::size_t depth_ = 0;
};

}  // namespace mlmcq
