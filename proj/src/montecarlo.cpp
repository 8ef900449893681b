#include "mamsim/montecarlo.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <omp.h>

namespace mamsim {

TrialSpec BatchResult::design() const { return parse_spec(std::string_view(spec_canonical)); }

std::vector<std::uint64_t> seeds_from_count(std::uint64_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::uint64_t i = 0; i < count; ++i) seeds[i] = i + 1;
  return seeds;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw BatchError("bad seed value '" + s + "'");
    return v;
  };
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t a = number(text.substr(0, dots));
    const std::uint64_t b = number(text.substr(dots + 2));
    if (b < a) throw BatchError("seed range " + text + " is empty");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    seeds.push_back(number(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

int resolve_workers(std::optional<int> requested) {
  if (requested) {
    if (*requested < 1) throw BatchError("worker count must be >= 1");
    return *requested;
  }
  int workers = omp_get_max_threads();
  if (const char* env = std::getenv("MAMSIM_WORKERS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) workers = std::min(workers, cap);
  }
  return std::max(1, workers);
}

namespace {

std::vector<std::uint64_t> checked_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw BatchError("seed list is empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw BatchError("duplicate seed " + std::to_string(*dup));
  return sorted;
}

BatchResult empty_batch(const ValidatedSpec& spec, std::vector<std::uint64_t> seeds) {
  BatchResult batch;
  batch.fingerprint = spec.fingerprint();
  batch.spec_canonical = spec.canonical();
  batch.extended = spec.spec().extended;
  batch.seeds = std::move(seeds);
  batch.results.resize(batch.seeds.size());
  if (spec.spec().h0) batch.null_results.resize(batch.seeds.size());
  return batch;
}

}  // namespace

BatchResult run_batch(const ValidatedSpec& spec, const std::vector<std::uint64_t>& seeds,
                      int workers) {
  if (workers < 1) throw BatchError("worker count must be >= 1");
  BatchResult batch = empty_batch(spec, checked_seeds(seeds));
  const bool with_null = spec.spec().h0;
  const auto count = static_cast<std::ptrdiff_t>(batch.seeds.size());

  // Each index writes only its own slot; replicate streams depend on the seed
  // alone, so the schedule cannot change the output.
#pragma omp parallel for schedule(static) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    batch.results[idx] = run_trial(spec, batch.seeds[idx], Scenario::alternative);
    if (with_null) batch.null_results[idx] = run_trial(spec, batch.seeds[idx], Scenario::null);
  }
  return batch;
}

BatchResult run_batch_serial(const ValidatedSpec& spec, const std::vector<std::uint64_t>& seeds) {
  BatchResult batch = empty_batch(spec, checked_seeds(seeds));
  for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
    batch.results[i] = run_trial(spec, batch.seeds[i], Scenario::alternative);
    if (spec.spec().h0) batch.null_results[i] = run_trial(spec, batch.seeds[i], Scenario::null);
  }
  return batch;
}

std::string format_seed_ranges(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size();) {
    std::size_t j = i;
    while (j + 1 < seeds.size() && seeds[j + 1] == seeds[j] + 1) ++j;
    if (!out.empty()) out += ", ";
    out += std::to_string(seeds[i]);
    if (j > i) out += ".." + std::to_string(seeds[j]);
    i = j + 1;
  }
  return out;
}

BatchResult combine_shards(const std::vector<BatchResult>& shards) {
  if (shards.empty()) throw BatchError("combine needs at least one shard");
  const BatchResult& first = shards.front();

  for (std::size_t s = 1; s < shards.size(); ++s) {
    const BatchResult& other = shards[s];
    if (other.fingerprint != first.fingerprint || other.spec_canonical != first.spec_canonical) {
      std::string fields;
      for (const auto& path : spec_diff(first.spec_canonical, other.spec_canonical)) {
        fields += (fields.empty() ? "" : ", ") + path;
      }
      throw BatchError("fingerprint mismatch between shard 0 and shard " + std::to_string(s) +
                       "; differing fields: " + (fields.empty() ? "<none>" : fields));
    }
    if (other.has_null() != first.has_null()) {
      throw BatchError("shards disagree on the null companion scenario");
    }
  }

  std::vector<std::uint64_t> all;
  for (const auto& s : shards) all.insert(all.end(), s.seeds.begin(), s.seeds.end());
  std::sort(all.begin(), all.end());
  std::vector<std::uint64_t> overlap;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i] == all[i - 1] && (overlap.empty() || overlap.back() != all[i])) {
      overlap.push_back(all[i]);
    }
  }
  if (!overlap.empty()) {
    throw BatchError("shards overlap in seeds " + format_seed_ranges(overlap));
  }

  struct Entry {
    std::uint64_t seed;
    const TrialResult* alt;
    const TrialResult* null;
  };
  std::vector<Entry> entries;
  for (const auto& s : shards) {
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      entries.push_back({s.seeds[i], &s.results[i], s.has_null() ? &s.null_results[i] : nullptr});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.seed < b.seed; });

  BatchResult out;
  out.fingerprint = first.fingerprint;
  out.spec_canonical = first.spec_canonical;
  out.extended = first.extended;
  out.engine_version = first.engine_version;
  out.created_unix = first.created_unix;
  for (const auto& e : entries) {
    out.seeds.push_back(e.seed);
    out.results.push_back(*e.alt);
    if (e.null) out.null_results.push_back(*e.null);
  }
  return out;
}

}  // namespace mamsim
