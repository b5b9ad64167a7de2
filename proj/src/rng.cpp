#include "mlmcq/rng.hpp"

#include <algorithm>
#include <string>

#include "mlmcq/errors.hpp"

namespace mlmcq {
namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed)
    : seed_(seed),
      key_{mix64(seed ^ 0x6A09E667F3BCC908ULL),
           mix64(seed + 0x3C6EF372FE94F82BULL)} {}

RngStream RngStream::child(std::int64_t index) const {
  if (depth_ == kMaxDepth) {
    throw ResourceError("random stream path exceeds depth " +
                        std::to_string(kMaxDepth));
  }
  const auto u = static_cast<std::uint64_t>(index);
  // Two independent hash chains give a 128-bit path fingerprint.
  RngStream out(seed_,
                {mix64(key_[0] ^ mix64(u + 0x9E3779B97F4A7C15ULL)),
                 mix64(key_[1] + mix64(u ^ 0xA54FF53A5F1D36F1ULL) +
                       static_cast<std::uint64_t>(depth_ + 1))},
                depth_ + 1);
  std::copy_n(path_.begin(), depth_, out.path_.begin());
  out.path_[depth_] = index;
  return out;
}

}  // namespace mlmcq
