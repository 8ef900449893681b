#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "mamsim/report.hpp"

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

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// Random but structurally valid replicates for a design with `arms` arms.
std::vector<TrialResult> random_results(std::size_t arms, std::size_t count, std::uint64_t seed) {
  Stream rng = Stream::for_seed(seed);
  std::vector<TrialResult> out;
  for (std::size_t r = 0; r < count; ++r) {
    TrialResult t;
    t.seed = r + 1;
    t.n_looks_planned = 4;
    t.looks = 1 + static_cast<std::uint32_t>(uniform_index(rng, 4));
    t.arms.resize(arms);
    t.decision_look.assign(arms, t.looks - 1);
    for (std::size_t a = 0; a < arms; ++a) {
      t.n.push_back(static_cast<int>(uniform_index(rng, 50)));
      t.total += t.n.back();
      if (a == 0) continue;
      ArmDecision& d = t.arms[a];
      d.efficacy_met = uniform01(rng) < 0.4;
      d.futility_met = uniform01(rng) < 0.4;
      if (d.decided()) {
        const auto look = static_cast<std::uint32_t>(uniform_index(rng, t.looks));
        t.decision_look[a] = look;
        d.timing = look + 1 == t.n_looks_planned ? Timing::last : Timing::early;
      }
    }
    out.push_back(t);
  }
  return out;
}

bool same_batch(const BatchResult& a, const BatchResult& b) {
  return summarize(a, true).text == summarize(b, true).text;
}

}  // namespace

TEST_CASE("nearest-rank quantiles") {
  const std::vector<double> v{15, 20, 35, 40, 50};
  CHECK(nearest_rank(v, 0.0) == 15);
  CHECK(nearest_rank(v, 0.05) == 15);
  CHECK(nearest_rank(v, 0.3) == 20);
  CHECK(nearest_rank(v, 0.4) == 20);
  CHECK(nearest_rank(v, 0.5) == 35);
  CHECK(nearest_rank(v, 1.0) == 50);
  std::vector<double> ten;
  for (int i = 1; i <= 10; ++i) ten.push_back(i);
  CHECK(nearest_rank(ten, 0.1) == 1);
  CHECK(nearest_rank(ten, 0.9) == 9);
  CHECK_THROWS_AS(nearest_rank({}, 0.5), ReportError);
  CHECK_THROWS_AS(nearest_rank(v, 1.5), ReportError);

  const SizeStats s = size_stats({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(s.median == 4);
  CHECK(s.p10 == 2);
  CHECK(s.p90 == 9);
}

TEST_CASE("operating characteristics are consistent") {
  const std::vector<std::string> names{"ctl", "a", "b", "c"};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto results = random_results(4, 97, seed);
    const auto oc = operating_characteristics(results, names);
    CHECK(oc.replicates == 97);
    REQUIRE(oc.arms.size() == 3);
    double max_eff = 0.0, min_eff = 1.0;
    for (const auto& a : oc.arms) {
      CHECK(a.efficacy_only + a.futility_only + a.both + a.none == doctest::Approx(1.0).epsilon(1e-12));
      for (double p : {a.efficacy_only, a.futility_only, a.both, a.none, a.efficacy_early,
                       a.efficacy_last, a.futility_early, a.futility_last}) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
      CHECK(a.efficacy_early + a.efficacy_last == doctest::Approx(a.efficacy()).epsilon(1e-12));
      CHECK(a.futility_early + a.futility_last == doctest::Approx(a.futility()).epsilon(1e-12));
      max_eff = std::max(max_eff, a.efficacy());
      min_eff = std::min(min_eff, a.efficacy());
    }
    CHECK(oc.at_least_one >= max_eff - 1e-12);
    CHECK(oc.all <= min_eff + 1e-12);
    std::size_t rows = 0;
    for (const auto& p : oc.patterns) rows += p.count;
    CHECK(rows == 97);
    CHECK(oc.size_labels.back() == "overall");
    CHECK(oc.sizes.size() == names.size() + 1);
  }
}

TEST_CASE("every replicate efficacious for one arm at the final look") {
  const ValidatedSpec v = validated(design("case_study_2_1.json"));
  const auto& names = v.spec().model.arm_names;
  std::vector<TrialResult> results;
  for (std::uint64_t s = 1; s <= 25; ++s) {
    TrialResult t;
    t.seed = s;
    t.n_looks_planned = t.looks = 14;
    t.arms.resize(names.size());
    t.arms[1] = {true, false, Timing::last};
    t.decision_look.assign(names.size(), 13);
    t.n.assign(names.size(), 36);
    t.total = 216;
    results.push_back(t);
  }
  const auto oc = operating_characteristics(results, names);
  CHECK(oc.arms[0].arm == "B");
  CHECK(oc.arms[0].efficacy() == 1.0);
  CHECK(oc.arms[0].efficacy_early == 0.0);
  CHECK(oc.arms[0].efficacy_last == 1.0);
  CHECK(oc.arms[1].none == 1.0);
  CHECK(oc.at_least_one == 1.0);
  CHECK(oc.all == 0.0);
  CHECK(oc.early_stop == 0.0);
  REQUIRE(oc.patterns.size() == 1);
  CHECK(oc.patterns[0].pattern == "E----");
  CHECK(oc.sizes.back().mean == 216.0);
  CHECK(oc.sizes.back().sd == 0.0);
  CHECK_THROWS_AS(operating_characteristics({}, names), ReportError);
}

TEST_CASE("summaries of combined shards equal the monolithic summary") {
  const ValidatedSpec v = validated(design("case_study_2_1.json"));
  const BatchResult whole = run_batch(v, range(1, 60), 4);
  const BatchResult merged =
      combine_shards({run_batch(v, range(31, 60), 2), run_batch(v, range(1, 30), 3)});
  const Summary a = summarize(whole, true);
  const Summary b = summarize(merged, true);
  CHECK(a.alternative == b.alternative);
  REQUIRE(a.null.has_value());
  REQUIRE(b.null.has_value());
  CHECK(*a.null == *b.null);
  CHECK(a.text == b.text);
  CHECK(same_batch(whole, merged));
  CHECK(a.text.find("Null scenario") < a.text.find("Alternative scenario"));
  const Summary brief = summarize(whole, false);
  CHECK(brief.text.size() < a.text.size());
}

TEST_CASE("plot data tables") {
  json doc = design("case_study_1.json");
  const BatchResult batch = run_batch(validated(doc), range(1, 200), 4);

  const auto est = csv_rows(emit_plot_data(batch, PlotKind::estimates));
  REQUIRE(est.size() == 1 + 200 * 3);
  CHECK(est[0] == std::vector<std::string>{"scenario", "seed", "arm", "estimate", "n", "decision", "timing"});
  double sum_c = 0.0;
  int count_c = 0;
  for (std::size_t i = 1; i < est.size(); ++i) {
    REQUIRE(est[i].size() == 7);
    if (est[i][2] == "C" && est[i][5] == "efficacy" && !est[i][3].empty()) {
      sum_c += std::stod(est[i][3]);
      ++count_c;
    }
  }
  REQUIRE(count_c > 100);
  CHECK(std::abs(sum_c / count_c - std::log(0.4)) < 0.15);

  const auto size = csv_rows(emit_plot_data(batch, PlotKind::size));
  REQUIRE(size.size() == 1 + 200 * 5);
  std::map<std::string, int> by_seed, overall;
  for (std::size_t i = 1; i < size.size(); ++i) {
    if (size[i][2] == "overall") {
      overall[size[i][1]] = std::stoi(size[i][3]);
    } else {
      by_seed[size[i][1]] += std::stoi(size[i][3]);
    }
  }
  CHECK(by_seed == overall);

  BatchResult one = run_batch(validated(doc), {7}, 1);
  CHECK(csv_rows(emit_plot_data(one, PlotKind::estimates)).size() == 1 + 3);
  doc["extended"] = 0;
  const BatchResult shallow = run_batch(validated(doc), {1, 2}, 1);
  CHECK_THROWS_AS(emit_plot_data(shallow, PlotKind::estimates), ReportError);
  CHECK_NOTHROW(emit_plot_data(shallow, PlotKind::size));
}
