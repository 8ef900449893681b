#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mamsim/config.hpp"
#include "mamsim/datagen.hpp"
#include "mamsim/rules.hpp"

namespace mamsim {

enum class StopReason { all_decided, trial_rule_efficacy, trial_rule_futility, reached_max };
std::string to_string(StopReason r);

enum class Scenario { alternative, null };

/// State of one look. Posterior vectors are indexed by target and hold NaN
/// when the margin is absent or the fit did not converge.
struct LookRecord {
  int n_total = 0;
  bool converged = false;
  std::vector<int> n;            // per arm, after this cohort
  std::vector<bool> active;      // per arm, before this look's decisions
  std::vector<double> prob;      // allocation used for this look's cohort
  std::vector<double> post_eff;  // per target
  std::vector<double> post_fut;
  std::vector<double> post_rar;
  std::vector<double> est_mean;  // per target
  std::vector<double> est_sd;
  std::vector<ArmDecision> decisions;  // per arm, made at this look

  bool operator==(const LookRecord&) const = default;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<ArmDecision> arms;  // per arm; the control entry stays undecided
  std::vector<int> n;             // per-arm final sample sizes
  int total = 0;
  StopReason stop = StopReason::reached_max;
  std::uint32_t looks = 0;  // looks performed
  std::uint32_t n_looks_planned = 0;
  std::uint32_t nonconverged = 0;
  std::uint32_t rar_fallbacks = 0;
  std::vector<std::uint32_t> decision_look;  // per arm; look of the decision or of the stop
  std::vector<LookRecord> history;           // extended >= 1
  std::optional<Cohort> data;                // extended == 2

  /// True when the trial ended at an interim look.
  bool stopped_early() const { return looks < n_looks_planned; }
  bool operator==(const TrialResult& o) const;
};

/// Runs one replicate of the adaptive design.
///
/// Cohort j (sizes from the interim schedule, then N) is allocated, simulated
/// and appended; the GLM is refitted on all accumulated data; efficacy then
/// futility rules decide active interventions with margins present at this
/// look; decided arms stop recruiting but keep their data in later fits.
/// Trial rules may then stop the trial; otherwise allocation is refreshed
/// (RAR or rescaled prob0) for the next cohort. A look whose fit does not
/// converge takes no decisions and keeps the allocation.
TrialResult run_trial(const ValidatedSpec& spec, std::uint64_t seed,
                      Scenario scenario = Scenario::alternative,
                      const RuleRegistry& registry = RuleRegistry::builtin());

/// beta_true with every target coefficient set to zero.
std::vector<double> null_beta(const TrialSpec& spec);

}  // namespace mamsim
