#include "mamsim/rng.hpp"

namespace mamsim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Reserved counter tag for key derivation; draws keep words 2 and 3 at zero.
constexpr std::uint32_t kSplitTag = 0xFFFFFFFFu;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 2> split_key(std::uint64_t key) {
  return {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
}

std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

std::uint64_t derive(std::uint64_t parent, std::uint64_t tag, std::uint32_t kind) {
  const auto out = philox4x32({static_cast<std::uint32_t>(tag),
                               static_cast<std::uint32_t>(tag >> 32), kind, kSplitTag},
                              split_key(parent));
  return join(out[0], out[1]) ^ join(out[2], out[3]);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Stream Stream::for_seed(std::uint64_t seed) {
  return Stream(derive(0x6d616d73696d2d31ull, seed, 0));  // "mamsim-1"
}

Stream::result_type Stream::operator()() {
  if (buffered_ == 0) {
    buffer_ = philox4x32({static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32), 0u, 0u},
                         split_key(key_));
    ++block_;
    buffered_ = 4;
  }
  const int i = 4 - buffered_;
  buffered_ -= 2;
  return join(buffer_[i], buffer_[i + 1]);
}

Stream Stream::split(std::string_view label) const {
  return Stream(derive(key_, fnv1a64(label), 1));
}

Stream Stream::split(std::uint64_t index) const {
  return Stream(derive(key_, index, 2));
}

}  // namespace mamsim
