#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mamsim/montecarlo.hpp"
#include "mamsim/shard.hpp"

using namespace mamsim;
using nlohmann::json;

namespace {

json design(const std::string& name) {
  std::ifstream in(std::string(MAMSIM_DESIGNS_DIR "/") + name);
  return json::parse(in);
}

ValidatedSpec validated(const json& doc) { return validate_spec(parse_spec(doc)); }

std::vector<std::uint64_t> range(std::uint64_t a, std::uint64_t b) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = a; i <= b; ++i) s.push_back(i);
  return s;
}

bool same(const BatchResult& a, const BatchResult& b) {
  return a.fingerprint == b.fingerprint && a.spec_canonical == b.spec_canonical &&
         a.seeds == b.seeds && a.extended == b.extended &&
         encode_payload(a) == encode_payload(b);
}

std::string message_of(const std::vector<BatchResult>& shards) {
  try {
    combine_shards(shards);
  } catch (const BatchError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("seed sets") {
  CHECK(seeds_from_count(3) == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(seeds_from_count(10000).back() == 10000);
  CHECK(parse_seed_list("4..7") == std::vector<std::uint64_t>{4, 5, 6, 7});
  CHECK(parse_seed_list("9,2,5") == std::vector<std::uint64_t>{9, 2, 5});
  CHECK_THROWS(parse_seed_list("7..4"));
  CHECK_THROWS(parse_seed_list("x"));
  CHECK(format_seed_ranges({1, 2, 3, 7, 9, 10}) == "1..3, 7, 9..10");
}

TEST_CASE("batch preconditions") {
  const ValidatedSpec v = validated(design("case_study_1.json"));
  CHECK_THROWS_AS(run_batch(v, {3, 3}, 1), BatchError);
  CHECK_THROWS_AS(run_batch(v, {1, 2}, 0), BatchError);
  CHECK_THROWS_AS(run_batch(v, {}, 1), BatchError);
}

TEST_CASE("worker count does not change the output") {
  const ValidatedSpec v = validated(design("case_study_2_1.json"));
  const auto seeds = range(1, 48);
  const BatchResult serial = run_batch_serial(v, seeds);
  CHECK(serial.results.size() == 48);
  CHECK(serial.null_results.size() == 48);
  for (int k : {1, 4, 8}) CHECK(same(run_batch(v, seeds, k), serial));
  // Results are keyed by seed, so input order does not matter either.
  std::vector<std::uint64_t> shuffled(seeds.rbegin(), seeds.rend());
  CHECK(same(run_batch(v, shuffled, 3), serial));
}

TEST_CASE("combine of a partition equals the monolithic batch") {
  const ValidatedSpec v = validated(design("case_study_1.json"));
  const BatchResult whole = run_batch(v, range(1, 40), 4);
  const BatchResult a = run_batch(v, range(1, 13), 2);
  const BatchResult b = run_batch(v, {14, 20, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40}, 2);
  std::vector<std::uint64_t> rest;
  for (std::uint64_t s = 15; s <= 29; ++s) {
    if (s != 20) rest.push_back(s);
  }
  const BatchResult c = run_batch(v, rest, 1);
  CHECK(same(combine_shards({c, a, b}), whole));
  CHECK(same(combine_shards({whole}), whole));
}

TEST_CASE("disjoint shards combine") {
  json doc = design("case_study_1.json");
  doc["extended"] = 0;
  const ValidatedSpec v = validated(doc);
  const BatchResult merged = combine_shards({run_batch(v, range(1, 500), 8), run_batch(v, range(501, 1000), 8)});
  CHECK(merged.seeds.size() == 1000);
  CHECK(merged.results.front().seed == 1);
  CHECK(merged.results.back().seed == 1000);
}

TEST_CASE("overlapping shards are rejected with the overlap") {
  json doc = design("case_study_1.json");
  doc["extended"] = 0;
  const ValidatedSpec v = validated(doc);
  const std::string msg = message_of({run_batch(v, range(1, 500), 8), run_batch(v, range(400, 900), 8)});
  CHECK(msg.find("400..500") != std::string::npos);
}

TEST_CASE("shards of different designs are rejected naming the field") {
  json doc = design("case_study_1.json");
  const BatchResult a = run_batch(validated(doc), {1, 2}, 1);
  doc["fut_arm"]["params"]["b_f"] = 0.3;
  const BatchResult b = run_batch(validated(doc), {3, 4}, 1);
  const std::string msg = message_of({a, b});
  CHECK(msg.find("fingerprint mismatch") != std::string::npos);
  CHECK(msg.find("/fut_arm/params/b_f") != std::string::npos);
}

TEST_CASE("shard round trip") {
  json doc = design("case_study_2_1.json");
  doc["extended"] = 2;
  const BatchResult batch = run_batch(validated(doc), {5, 6, 9}, 2);
  std::stringstream buf;
  write_shard(buf, batch);
  const BatchResult back = read_shard(buf);
  CHECK(same(back, batch));
  CHECK(back.created_unix == batch.created_unix);
  CHECK(back.engine_version == batch.engine_version);
  for (std::size_t i = 0; i < batch.results.size(); ++i) {
    CHECK(back.results[i] == batch.results[i]);
    CHECK(back.null_results[i] == batch.null_results[i]);
  }
  CHECK(validate_spec(back.design()).fingerprint() == batch.fingerprint);

  const json exported = shard_to_json(batch);
  CHECK(exported["seeds"].size() == 3);
  CHECK(exported["results"].size() == 3);
  CHECK(exported["null_results"].size() == 3);
}

TEST_CASE("corrupt shards are detected") {
  const BatchResult batch = run_batch(validated(design("case_study_1.json")), {1, 2, 3}, 1);
  std::stringstream buf;
  write_shard(buf, batch);
  const std::string bytes = buf.str();

  auto reads = [](const std::string& data) {
    std::stringstream in(data);
    read_shard(in);
  };
  CHECK_NOTHROW(reads(bytes));
  CHECK_THROWS_AS(reads(bytes.substr(0, bytes.size() - 3)), ShardError);
  CHECK_THROWS_AS(reads(bytes + "x"), ShardError);
  CHECK_THROWS_AS(reads("NOTSHARD" + bytes.substr(8)), ShardError);
  for (std::size_t pos : {std::size_t{9}, bytes.size() / 2, bytes.size() - 20}) {
    std::string flipped = bytes;
    flipped[pos] = static_cast<char>(flipped[pos] ^ 0x40);
    CAPTURE(pos);
    CHECK_THROWS_AS(reads(flipped), ShardError);
  }
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  ::unsetenv("MAMSIM_WORKERS");
  const int fallback = resolve_workers(std::nullopt);
  ::setenv("MAMSIM_WORKERS", "2", 1);
  CHECK(resolve_workers(std::nullopt) == std::min(2, fallback));
  ::setenv("MAMSIM_WORKERS", "1", 1);
  CHECK(resolve_workers(std::nullopt) == 1);
  CHECK(resolve_workers(6) == 6);
  ::unsetenv("MAMSIM_WORKERS");
  CHECK(resolve_workers(std::nullopt) >= 1);
  CHECK_THROWS(resolve_workers(0));
}
