#include <cmath>

#include "doctest.h"
#include "mamsim/rules.hpp"

using namespace mamsim;

namespace {

// Control plus `k` interventions, all active, with the given posteriors.
RuleContext context(std::vector<double> posterior, std::vector<int> n, int n_max) {
  RuleContext ctx;
  const std::size_t arms = posterior.size();
  ctx.active.assign(arms, true);
  ctx.posterior = std::move(posterior);
  ctx.evaluable.assign(arms, true);
  ctx.evaluable[0] = false;
  ctx.n = std::move(n);
  ctx.ref.assign(arms, false);
  ctx.ref[0] = true;
  ctx.prob.assign(arms, 1.0 / static_cast<double>(arms));
  ctx.n_max = n_max;
  return ctx;
}

}  // namespace

TEST_CASE("fixed efficacy") {
  auto ctx = context({0.0, 0.96, 0.94}, {10, 10, 10}, 100);
  auto eff = efficacy_fixed(ctx, 0.05);
  CHECK_FALSE(eff[0]);
  CHECK(eff[1]);
  CHECK_FALSE(eff[2]);
}

TEST_CASE("information-fraction efficacy threshold") {
  CHECK(std::abs(infofract_threshold(1.0, 0.009, 3) - 0.991) < 1e-12);
  CHECK(std::abs(infofract_threshold(100.0 / 260.0, 0.009, 3) - 0.999487938097405553) < 1e-12);

  auto ctx = context({0.0, 0.9992, 0.9996}, {25, 25, 50}, 260);  // 100 of 260
  auto eff = efficacy_infofract(ctx, 0.009, 3);
  CHECK_FALSE(eff[1]);
  CHECK(eff[2]);
}

TEST_CASE("infofract threshold is non-increasing and reaches 1 - b") {
  double previous = 1.0;
  for (int n = 0; n <= 260; n += 5) {
    const double t = infofract_threshold(n / 260.0, 0.009, 3);
    CHECK(t <= previous);
    previous = t;
  }
  CHECK(previous == doctest::Approx(1 - 0.009).epsilon(1e-15));
}

TEST_CASE("fixed and increasing futility") {
  auto ctx = context({0.0, 0.04, 0.2}, {30, 30, 40}, 200);
  auto fut = futility_fixed(ctx, 0.1);
  CHECK(fut[1]);
  CHECK_FALSE(fut[2]);

  // sum n / N = 0.5, b_f = 0.1, p_f = 1 -> boundary 0.05
  CHECK(std::abs(increasing_futility_boundary(0.5, 0.1, 1) - 0.05) < 1e-12);
  auto inc = futility_increasing(ctx, 0.1, 1);
  CHECK(inc[1]);
  CHECK_FALSE(inc[2]);
  CHECK(increasing_futility_boundary(1.0, 0.37, 2.5) == 0.37);
}

TEST_CASE("increasing futility boundary stays below b_f before N") {
  for (double f = 0.0; f < 1.0; f += 0.05) {
    for (double p : {0.0, 0.5, 1.0, 3.0}) {
      const double b = increasing_futility_boundary(f, 0.3, p);
      CHECK(b <= 0.3);
      if (p > 0 && f > 0) CHECK(b < 0.3);
    }
  }
}

TEST_CASE("arm rules skip control, inactive and unevaluable arms") {
  auto ctx = context({0.99, 0.99, 0.99, 0.99}, {10, 10, 10, 10}, 100);
  ctx.active[2] = false;
  ctx.evaluable[3] = false;
  auto eff = efficacy_fixed(ctx, 0.05);
  CHECK(eff == std::vector<bool>{false, true, false, false});
}

TEST_CASE("trippa allocation") {
  // equal counts: control weight exp(0) / K_j
  auto equal = context({0.0, 0.3, 0.3, 0.3, 0.3, 0.3}, {12, 12, 12, 12, 12, 12}, 216);
  auto w = rar_trippa(equal, 2.0, 0.5, 1.0);
  CHECK(std::abs(w[0] - 0.2) < 1e-12);
  for (std::size_t k = 1; k < w.size(); ++k) CHECK(std::abs(w[k] - 0.2) < 1e-12);

  // posteriors [0.9, 0.1], gamma 1, eta 1, sum n / N = 0.5 -> h = 0.5
  auto two = context({0.0, 0.9, 0.1}, {10, 10, 10}, 60);
  auto t = rar_trippa(two, 1.0, 1.0, 0.7);
  CHECK(std::abs(t[1] - 0.75) < 1e-12);
  CHECK(std::abs(t[2] - 0.25) < 1e-12);
  CHECK(std::abs(t[0] - 0.5) < 1e-12);  // exp(0) / 2

  // control behind the leading active arm by 4, nu = 0.5, two active arms
  auto behind = context({0.0, 0.5, 0.5, 0.5}, {6, 10, 8, 30}, 100);
  behind.active[3] = false;
  auto b = rar_trippa(behind, 1.0, 1.0, 0.5);
  CHECK(std::abs(b[0] - std::exp(2.0) / 2.0) < 1e-12);
  CHECK(b[3] == 0.0);
}

TEST_CASE("trippa errors") {
  auto none = context({0.0, 0.5}, {5, 5}, 20);
  none.active[1] = false;
  CHECK_THROWS_AS(rar_trippa(none, 1, 1, 1), RuleError);

  auto missing = context({0.0, 0.5, 0.5}, {5, 5, 5}, 20);
  missing.evaluable[2] = false;
  CHECK_THROWS_AS(rar_trippa(missing, 1, 1, 1), RuleError);
}

TEST_CASE("normalize allocation") {
  auto equal = normalize_allocation({1, 1, 1, 1});
  for (double p : equal) CHECK(p == 0.25);

  auto dropped = normalize_allocation({0.25, 0.25, 0.25, 0.25}, {true, true, true, false});
  CHECK(std::abs(dropped[0] - 1.0 / 3) < 1e-15);
  CHECK(std::abs(dropped[2] - 1.0 / 3) < 1e-15);
  CHECK(dropped[3] == 0.0);

  auto abs = normalize_allocation({-0.2, 0.2});
  CHECK(abs[0] == 0.5);
  CHECK(abs[1] == 0.5);

  CHECK_THROWS_AS(normalize_allocation({0.0, 0.0}), RuleError);
}

TEST_CASE("futility margin from response rates") {
  CHECK(std::abs(delta_from_orr(0.4, 0.1) - 0.405465108108164382) < 1e-12);
  CHECK(delta_from_orr(0.4, 0.0) == 0.0);
  CHECK(std::abs(delta_from_orr(0.4, 0.3) - 1.252762968495367996) < 1e-12);
  CHECK_THROWS_AS(delta_from_orr(0.4, 0.7), std::invalid_argument);
}

TEST_CASE("trial rules") {
  RuleContext ctx = context({0.0, 0.5, 0.5, 0.5, 0.5, 0.5}, {10, 10, 10, 10, 10, 10}, 216);
  std::vector<ArmDecision> d(6);
  d[2].efficacy_met = true;
  d[2].timing = Timing::early;
  CHECK(trial_stop(d, ctx, {"any_arm_efficacious", {}}, {"never", {}}) ==
        TrialAction::stop_efficacy);
  CHECK(trial_stop(d, ctx, {"never", {}}, {"never", {}}) == TrialAction::continue_trial);

  std::vector<ArmDecision> fut(6);
  for (std::size_t a = 1; a < 5; ++a) fut[a] = {false, true, Timing::early};
  CHECK(trial_stop(fut, ctx, {"never", {}}, {"all_arms_futile", {}}) ==
        TrialAction::continue_trial);
  fut[5] = {false, true, Timing::early};
  CHECK(trial_stop(fut, ctx, {"never", {}}, {"all_arms_futile", {}}) ==
        TrialAction::stop_futility);
}

TEST_CASE("both flags are kept") {
  ArmDecision d{true, true, Timing::last};
  CHECK(d.decision() == Decision::both);
  CHECK(d.decided());
}

TEST_CASE("registry checks parameters") {
  const auto& reg = RuleRegistry::builtin();
  auto missing = reg.check(RuleKind::rar, {"trippa", {{"gamma", 1}, {"eta", 1}}});
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].find("nu") != std::string::npos);
  CHECK_FALSE(reg.check(RuleKind::eff_arm, {"fixed", {{"b_e", 1.5}}}).empty());
  CHECK_FALSE(reg.check(RuleKind::eff_arm, {"bogus", {}}).empty());
  CHECK(reg.check(RuleKind::fut_arm, {"increasing", {{"b_f", 0.3}, {"p_f", 2}}}).empty());
}

TEST_CASE("registry accepts extensions") {
  RuleRegistry reg = RuleRegistry::builtin();
  reg.add_eff_arm("always", {{}, nullptr, [](const RuleContext& c, const ParamMap&) {
                               std::vector<bool> out(c.active.size(), true);
                               out[0] = false;
                               return out;
                             }});
  auto ctx = context({0.0, 0.1}, {5, 5}, 20);
  CHECK(reg.eff_arm(ctx, {"always", {}}) == std::vector<bool>{false, true});
}

TEST_CASE("rules are pure") {
  auto ctx = context({0.0, 0.3, 0.8}, {20, 25, 15}, 120);
  auto a = rar_trippa(ctx, 2, 0.5, 1);
  auto b = rar_trippa(ctx, 2, 0.5, 1);
  CHECK(a == b);
}
