#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mamsim {

/// Philox4x32-10 block function (Salmon et al., Random123). Maps a 128-bit
/// counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t fnv1a64(std::string_view bytes);

/// Counter-based random stream satisfying UniformRandomBitGenerator.
///
/// A stream is a 64-bit key plus a block counter. Draw i of a stream is the
/// Philox encryption of counter i under the key, so the output never depends
/// on how many other streams exist or in which thread they run. Sub-streams
/// are derived with split(): the child key is the Philox encryption of the
/// label under the parent key in a counter region ordinary draws never reach.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : key_(key) {}

  /// Root stream of one Monte Carlo replicate.
  static Stream for_seed(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  Stream split(std::string_view label) const;
  Stream split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
};

}  // namespace mamsim
