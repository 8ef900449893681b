#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "mamsim/montecarlo.hpp"

namespace mamsim {

class ShardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kShardVersion = 1;

// Layout (all integers little-endian):
//   "MAMSSHRD" | u32 version | u64 header_len | header | u64 payload_len |
//   payload | u64 fnv1a64(header + payload)
// The header holds fingerprint, seed range and count, timestamp, engine tag
// and canonical spec. The payload holds seeds and results only, so it is a
// pure function of (spec, seeds).

/// Replicate data in the container encoding.
std::string encode_payload(const BatchResult& batch);

void write_shard(std::ostream& out, const BatchResult& batch);
void write_shard_file(const std::string& path, const BatchResult& batch);

BatchResult read_shard(std::istream& in);
BatchResult read_shard_file(const std::string& path);

nlohmann::json shard_to_json(const BatchResult& batch);

}  // namespace mamsim
