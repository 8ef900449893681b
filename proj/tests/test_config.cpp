#include <cmath>
#include <fstream>

#include "doctest.h"
#include "mamsim/config.hpp"

using namespace mamsim;
using nlohmann::json;

namespace {

json case_study_1() {
  return json::parse(R"({
    "model": {"response": "y", "treatment": "treatment", "arms": ["control", "A", "B", "C"],
              "family": "nbinomial", "link": "log", "nuisance": {"size": 0.5},
              "allocation": "balanced"},
    "beta": [1.3862943611198906, 0.0, 0.0, -0.916290731874155],
    "targets": [1, 2, 3],
    "alternative": "less",
    "n_max": 260,
    "interim": {"recruited": [100, 140, 180, 220]},
    "prob0": {"control": 1, "A": 1, "B": 1, "C": 1},
    "delta_eff": 0,
    "eff_arm": {"rule": "infofract", "params": {"b": 0.009, "p": 3}},
    "delta_fut": -0.2231435513142097,
    "fut_arm": {"rule": "fixed", "params": {"b_f": 0.2025}},
    "replicates": 100
  })");
}

std::vector<std::string> problems_of(const json& doc) {
  try {
    validate_spec(parse_spec(doc));
  } catch (const SpecError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("case study 1 document parses") {
  TrialSpec spec = parse_spec(case_study_1());
  CHECK(spec.model.n_arms() == 4);
  CHECK(spec.targets == std::vector<std::size_t>{1, 2, 3});
  CHECK(spec.alternative == std::vector<Direction>(3, Direction::less));
  CHECK(spec.schedule() == std::vector<int>{100, 140, 180, 220, 260});
  CHECK(spec.seeds.size() == 100);
  CHECK(spec.seeds.front() == 1);
  CHECK(spec.seeds.back() == 100);
  CHECK(spec.eff_trial.family == "never");
  CHECK_FALSE(spec.rar.has_value());
}

TEST_CASE("replicates default to 10000 seeds 1..R") {
  json doc = case_study_1();
  doc.erase("replicates");
  TrialSpec spec = parse_spec(doc);
  REQUIRE(spec.seeds.size() == 10000);
  CHECK(spec.seeds.front() == 1);
  CHECK(spec.seeds.back() == 10000);
}

TEST_CASE("prob0 is normalised") {
  ValidatedSpec v = validate_spec(parse_spec(case_study_1()));
  for (double p : v.spec().prob0) CHECK(p == 0.25);
}

TEST_CASE("missing required keys are reported") {
  json doc = json::parse(R"({
    "model": {"arms": ["control", "A"], "family": "gaussian", "link": "identity",
              "nuisance": {"sd": 1}},
    "beta": [0, 0.5], "targets": [1], "n_max": 100, "prob0": {"control": 1, "A": 1},
    "eff_arm": {"rule": "fixed", "params": {"b_e": 0.05}},
    "fut_arm": {"rule": "fixed", "params": {"b_f": 0.1}}
  })");
  auto problems = problems_of(doc);
  CHECK(mentions(problems, "interim"));
}

TEST_CASE("rule registry completeness is checked while parsing") {
  json doc = case_study_1();
  doc["rar"] = {{"rule", "trippa"}, {"params", {{"gamma", 2}, {"eta", 0.5}}}};
  CHECK(mentions(problems_of(doc), "nu"));

  doc["rar"] = {{"rule", "bandit"}};
  CHECK(mentions(problems_of(doc), "bandit"));
}

TEST_CASE("unknown fields and syntax errors") {
  json doc = case_study_1();
  doc["colour"] = "blue";
  CHECK(mentions(problems_of(doc), "colour"));

  try {
    parse_spec(std::string_view("{\"model\": [1, 2,"));
    FAIL("expected a syntax error");
  } catch (const SpecError& e) {
    CHECK(mentions(e.problems(), "byte"));
  }
}

TEST_CASE("every violated invariant is collected") {
  json doc = case_study_1();
  doc["interim"]["recruited"] = {100, 100, 180};
  doc["beta"] = {1.0, 0.0};
  doc["targets"] = {0, 7};
  auto problems = problems_of(doc);
  CHECK(mentions(problems, "strictly increasing"));
  CHECK(mentions(problems, "beta has"));
  CHECK(mentions(problems, "intercept"));
  CHECK(problems.size() >= 3);
}

TEST_CASE("invalid nuisance is rejected") {
  json doc = json::parse(R"({
    "model": {"arms": ["control", "A"], "family": "gaussian", "link": "identity",
              "nuisance": {"sd": 0}},
    "beta": [2, 0], "targets": [1], "n_max": 40, "interim": {"recruited": [20]},
    "prob0": {"control": 1, "A": 1},
    "eff_arm": {"rule": "fixed", "params": {"b_e": 0.05}},
    "fut_arm": {"rule": "fixed", "params": {"b_f": 0.1}}
  })");
  CHECK(mentions(problems_of(doc), "sd"));
}

TEST_CASE("fingerprint ignores seeds and field order") {
  json a = case_study_1();
  json b = case_study_1();
  b.erase("replicates");
  b["seeds"] = {5, 9, 11};
  auto fa = validate_spec(parse_spec(a)).fingerprint();
  auto fb = validate_spec(parse_spec(b)).fingerprint();
  CHECK(fa == fb);

  // Same document written with keys in reverse order.
  std::string reversed = "{";
  std::vector<std::string> keys;
  for (auto it = a.begin(); it != a.end(); ++it) keys.push_back(it.key());
  for (auto k = keys.rbegin(); k != keys.rend(); ++k) {
    if (reversed.size() > 1) reversed += ",";
    reversed += json(*k).dump() + ":" + a[*k].dump();
  }
  reversed += "}";
  CHECK(validate_spec(parse_spec(std::string_view(reversed))).fingerprint() == fa);

  json c = case_study_1();
  c["fut_arm"]["params"]["b_f"] = 0.25;
  CHECK(validate_spec(parse_spec(c)).fingerprint() != fa);
}

TEST_CASE("serialise and parse round trip") {
  ValidatedSpec v = validate_spec(parse_spec(case_study_1()));
  TrialSpec back = parse_spec(std::string_view(serialize_spec(v.spec())));
  CHECK(back == v.spec());
  ValidatedSpec again = validate_spec(back);
  CHECK(again.canonical() == v.canonical());

  json doc = case_study_1();
  doc.erase("replicates");
  doc["seeds"] = {3, 8, 1000};
  TrialSpec odd = parse_spec(doc);
  CHECK(parse_spec(std::string_view(serialize_spec(odd))).seeds == odd.seeds);
}

TEST_CASE("per-look and per-target delta shapes") {
  json doc = case_study_1();
  doc["delta_eff"] = {nullptr, nullptr, nullptr, nullptr, 0};
  TrialSpec spec = parse_spec(doc);
  CHECK_FALSE(spec.delta_eff[2][0].has_value());
  CHECK(spec.delta_eff[0][4] == 0.0);

  doc["delta_eff"] = json::array({json::array({0, 0, 0, 0, 0}), json::array({1, 1, 1, 1, 1}),
                                  json::array({nullptr, 0, 0, 0, 0})});
  spec = parse_spec(doc);
  CHECK(spec.delta_eff[1][3] == 1.0);
  CHECK_FALSE(spec.delta_eff[2][0].has_value());

  doc["delta_eff"] = {0, 0};
  CHECK(mentions(problems_of(doc), "delta_eff"));
}

TEST_CASE("spec diff names the differing path") {
  json a = case_study_1();
  json b = case_study_1();
  b["fut_arm"]["params"]["b_f"] = 0.3;
  auto diff = spec_diff(validate_spec(parse_spec(a)).canonical(),
                        validate_spec(parse_spec(b)).canonical());
  REQUIRE(diff.size() == 1);
  CHECK(diff[0] == "/fut_arm/params/b_f");
}

TEST_CASE("shipped designs validate") {
  for (const char* name : {"case_study_1.json", "case_study_2_1.json", "case_study_2_2.json",
                           "pathological_binomial.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(validate_spec(load_spec_file(std::string(MAMSIM_DESIGNS_DIR "/") + name)));
  }
}

TEST_CASE("canonical form is a fixed point") {
  for (const char* name : {"case_study_1.json", "case_study_2_1.json", "case_study_2_2.json",
                           "pathological_binomial.json"}) {
    CAPTURE(name);
    const ValidatedSpec v = validate_spec(load_spec_file(std::string(MAMSIM_DESIGNS_DIR "/") + name));
    const ValidatedSpec again = validate_spec(parse_spec(std::string_view(v.canonical())));
    CHECK(again.canonical() == v.canonical());
    CHECK(again.fingerprint() == v.fingerprint());
  }
}
