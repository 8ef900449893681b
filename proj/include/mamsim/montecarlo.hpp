#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamsim/config.hpp"
#include "mamsim/engine.hpp"

namespace mamsim {

class BatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replicates of one design, ordered by seed. `null_results` is filled when
/// the design asks for the matched global-null companion run.
struct BatchResult {
  std::uint64_t fingerprint = 0;
  std::string spec_canonical;
  std::vector<std::uint64_t> seeds;  // ascending
  int extended = 0;
  std::vector<TrialResult> results;
  std::vector<TrialResult> null_results;
  std::int64_t created_unix = 0;  // metadata only; not part of the payload
  std::string engine_version = "mamsim " MAMSIM_VERSION;

  bool has_null() const { return !null_results.empty(); }
  /// The design this batch was generated from (seed set not included).
  TrialSpec design() const;
};

std::vector<std::uint64_t> seeds_from_count(std::uint64_t count);

/// "a..b" (inclusive) or a comma-separated list.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Worker count: an explicit request wins; otherwise MAMSIM_WORKERS, then
/// the OpenMP default. The environment variable also caps the default.
int resolve_workers(std::optional<int> requested);

/// Parallel map of run_trial over seeds with static chunking. Output is
/// identical for every worker count.
BatchResult run_batch(const ValidatedSpec& spec, const std::vector<std::uint64_t>& seeds,
                      int workers);

/// Single-threaded reference for run_batch.
BatchResult run_batch_serial(const ValidatedSpec& spec, const std::vector<std::uint64_t>& seeds);

/// Union of disjoint shards of one design. Throws BatchError naming the
/// overlapping seeds or the differing spec fields.
BatchResult combine_shards(const std::vector<BatchResult>& shards);

/// Compact "a..b, c" rendering of a sorted seed list.
std::string format_seed_ranges(const std::vector<std::uint64_t>& seeds);

}  // namespace mamsim
