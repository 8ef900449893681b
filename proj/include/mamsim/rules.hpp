#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamsim/config.hpp"

namespace mamsim {

/// Quantities handed to every adaptation rule at a look. Per-arm vectors are
/// indexed by arm (control = 0); `posterior` is indexed by arm as well and is
/// only meaningful for active interventions whose margin is present.
struct RuleContext {
  std::vector<bool> active;
  std::vector<double> posterior;
  std::vector<bool> evaluable;  // posterior present for this arm at this look
  std::vector<int> n;
  std::vector<bool> ref;
  std::vector<double> prob;
  int m = 0;
  int n_max = 0;
  std::size_t look_index = 0;
  bool is_final = false;

  int n_total() const;
  double information_fraction() const;
  std::size_t control_index() const;
  std::size_t n_active_interventions() const;
};

enum class Timing { none, early, last };
enum class Decision { none, efficacy, futility, both };
enum class TrialAction { continue_trial, stop_efficacy, stop_futility };

std::string to_string(Timing t);
std::string to_string(Decision d);

struct ArmDecision {
  bool efficacy_met = false;
  bool futility_met = false;
  Timing timing = Timing::none;

  Decision decision() const;
  bool decided() const { return efficacy_met || futility_met; }
  bool operator==(const ArmDecision&) const = default;
};

class RuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ArmRuleFn = std::function<std::vector<bool>(const RuleContext&, const ParamMap&)>;
using TrialRuleFn =
    std::function<bool(const std::vector<ArmDecision>&, const RuleContext&, const ParamMap&)>;
using RarRuleFn = std::function<std::vector<double>(const RuleContext&, const ParamMap&)>;
/// Returns problems with a parameter set (empty when valid).
using ParamCheckFn = std::function<std::vector<std::string>(const ParamMap&)>;

template <class Fn>
struct RuleFamily {
  std::vector<std::string> required;
  ParamCheckFn check;
  Fn evaluate;
};

enum class RuleKind { eff_arm, fut_arm, eff_trial, fut_trial, rar };
std::string to_string(RuleKind k);

/// Named, parameterised rule families. builtin() holds every family the
/// design-document schema accepts; add_* registers library-level extensions.
class RuleRegistry {
 public:
  static const RuleRegistry& builtin();

  void add_eff_arm(std::string name, RuleFamily<ArmRuleFn> family);
  void add_fut_arm(std::string name, RuleFamily<ArmRuleFn> family);
  void add_eff_trial(std::string name, RuleFamily<TrialRuleFn> family);
  void add_fut_trial(std::string name, RuleFamily<TrialRuleFn> family);
  void add_rar(std::string name, RuleFamily<RarRuleFn> family);

  /// Problems with a RuleSpec of the given kind: unknown family, missing or
  /// unexpected keys, out-of-range values.
  std::vector<std::string> check(RuleKind kind, const RuleSpec& rule) const;

  std::vector<bool> eff_arm(const RuleContext& ctx, const RuleSpec& rule) const;
  std::vector<bool> fut_arm(const RuleContext& ctx, const RuleSpec& rule) const;
  bool eff_trial(const std::vector<ArmDecision>& d, const RuleContext& ctx,
                 const RuleSpec& rule) const;
  bool fut_trial(const std::vector<ArmDecision>& d, const RuleContext& ctx,
                 const RuleSpec& rule) const;
  std::vector<double> rar(const RuleContext& ctx, const RuleSpec& rule) const;

 private:
  std::map<std::string, RuleFamily<ArmRuleFn>> eff_arm_;
  std::map<std::string, RuleFamily<ArmRuleFn>> fut_arm_;
  std::map<std::string, RuleFamily<TrialRuleFn>> eff_trial_;
  std::map<std::string, RuleFamily<TrialRuleFn>> fut_trial_;
  std::map<std::string, RuleFamily<RarRuleFn>> rar_;
};

// Built-in rule formulas. Arm rules return one flag per arm (false for the
// control, inactive arms and arms without a posterior this look).

std::vector<bool> efficacy_fixed(const RuleContext& ctx, double b_e);
std::vector<bool> efficacy_infofract(const RuleContext& ctx, double b, double p);
/// Posterior threshold of the information-fraction efficacy rule.
double infofract_threshold(double information_fraction, double b, double p);

std::vector<bool> futility_fixed(const RuleContext& ctx, double b_f);
std::vector<bool> futility_increasing(const RuleContext& ctx, double b_f, double p_f);
double increasing_futility_boundary(double information_fraction, double b_f, double p_f);

/// Trippa-style allocation weights over all arms (0 for inactive arms).
/// Control: exp(max_active_k n_k - n_ref)^nu / K_j. Interventions:
/// posterior^h / sum posterior^h with h = gamma * (sum n / N)^eta.
std::vector<double> rar_trippa(const RuleContext& ctx, double gamma, double eta, double nu);

TrialAction trial_stop(const std::vector<ArmDecision>& decisions, const RuleContext& ctx,
                       const RuleSpec& eff_rule, const RuleSpec& fut_rule,
                       const RuleRegistry& registry = RuleRegistry::builtin());

/// |w| / sum |w| over active arms; inactive arms get 0.
std::vector<double> normalize_allocation(const std::vector<double>& weights,
                                         const std::vector<bool>& active);
std::vector<double> normalize_allocation(const std::vector<double>& weights);

/// Log odds-ratio margin for an absolute lift over control proportion pi0.
double delta_from_orr(double pi0, double lift);

}  // namespace mamsim
