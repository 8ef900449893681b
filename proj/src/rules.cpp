#include "mamsim/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mamsim {

int RuleContext::n_total() const { return std::accumulate(n.begin(), n.end(), 0); }

double RuleContext::information_fraction() const {
  return static_cast<double>(n_total()) / static_cast<double>(n_max);
}

std::size_t RuleContext::control_index() const {
  const auto it = std::find(ref.begin(), ref.end(), true);
  if (it == ref.end()) throw RuleError("rule context has no reference arm");
  return static_cast<std::size_t>(it - ref.begin());
}

std::size_t RuleContext::n_active_interventions() const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < active.size(); ++a) k += (active[a] && !ref[a]) ? 1 : 0;
  return k;
}

std::string to_string(Timing t) {
  switch (t) {
    case Timing::early: return "early";
    case Timing::last: return "last";
    default: return "none";
  }
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::efficacy: return "efficacy";
    case Decision::futility: return "futility";
    case Decision::both: return "both";
    default: return "none";
  }
}

std::string to_string(RuleKind k) {
  switch (k) {
    case RuleKind::eff_arm: return "eff_arm";
    case RuleKind::fut_arm: return "fut_arm";
    case RuleKind::eff_trial: return "eff_trial";
    case RuleKind::fut_trial: return "fut_trial";
    default: return "rar";
  }
}

Decision ArmDecision::decision() const {
  if (efficacy_met && futility_met) return Decision::both;
  if (efficacy_met) return Decision::efficacy;
  if (futility_met) return Decision::futility;
  return Decision::none;
}

namespace {

bool rule_applies(const RuleContext& ctx, std::size_t arm) {
  return ctx.active[arm] && !ctx.ref[arm] && ctx.evaluable[arm];
}

template <class Pred>
std::vector<bool> per_arm(const RuleContext& ctx, Pred pred) {
  std::vector<bool> out(ctx.active.size(), false);
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (rule_applies(ctx, a)) out[a] = pred(ctx.posterior[a]);
  }
  return out;
}

ParamCheckFn open_unit(std::string key) {
  return [key](const ParamMap& p) -> std::vector<std::string> {
    const double v = p.at(key);
    if (!(v > 0.0 && v < 1.0)) return {key + " must lie in (0, 1)"};
    return {};
  };
}

ParamCheckFn nonnegative(std::vector<std::string> keys) {
  return [keys](const ParamMap& p) {
    std::vector<std::string> problems;
    for (const auto& k : keys) {
      const double v = p.at(k);
      if (!(std::isfinite(v) && v >= 0.0)) problems.push_back(k + " must be finite and >= 0");
    }
    return problems;
  };
}

ParamCheckFn both(ParamCheckFn a, ParamCheckFn b) {
  return [a, b](const ParamMap& p) {
    auto out = a(p);
    auto more = b(p);
    out.insert(out.end(), more.begin(), more.end());
    return out;
  };
}

ParamCheckFn no_check() {
  return [](const ParamMap&) { return std::vector<std::string>{}; };
}

template <class Fn>
std::vector<std::string> check_family(const std::map<std::string, RuleFamily<Fn>>& table,
                                      RuleKind kind, const RuleSpec& rule) {
  const auto it = table.find(rule.family);
  if (it == table.end()) {
    std::string known;
    for (const auto& [name, _] : table) known += (known.empty() ? "" : ", ") + name;
    return {to_string(kind) + ": unknown rule family '" + rule.family + "' (known: " + known +
            ")"};
  }
  std::vector<std::string> problems;
  const auto& fam = it->second;
  for (const auto& key : fam.required) {
    if (!rule.params.count(key)) {
      problems.push_back(to_string(kind) + " '" + rule.family + "': missing parameter " + key);
    }
  }
  for (const auto& [key, _] : rule.params) {
    if (std::find(fam.required.begin(), fam.required.end(), key) == fam.required.end()) {
      problems.push_back(to_string(kind) + " '" + rule.family + "': unexpected parameter " +
                         key);
    }
  }
  if (problems.empty() && fam.check) {
    for (auto& p : fam.check(rule.params)) {
      problems.push_back(to_string(kind) + " '" + rule.family + "': " + p);
    }
  }
  return problems;
}

template <class Fn>
const RuleFamily<Fn>& lookup(const std::map<std::string, RuleFamily<Fn>>& table,
                             RuleKind kind, const RuleSpec& rule) {
  auto problems = check_family(table, kind, rule);
  if (!problems.empty()) throw RuleError(problems.front());
  return table.at(rule.family);
}

RuleRegistry make_builtin() {
  RuleRegistry r;
  r.add_eff_arm("fixed", {{"b_e"}, open_unit("b_e"), [](const RuleContext& c, const ParamMap& p) {
                            return efficacy_fixed(c, p.at("b_e"));
                          }});
  r.add_eff_arm("infofract", {{"b", "p"}, both(open_unit("b"), nonnegative({"p"})),
                              [](const RuleContext& c, const ParamMap& p) {
                                return efficacy_infofract(c, p.at("b"), p.at("p"));
                              }});
  r.add_fut_arm("fixed", {{"b_f"}, open_unit("b_f"), [](const RuleContext& c, const ParamMap& p) {
                            return futility_fixed(c, p.at("b_f"));
                          }});
  r.add_fut_arm("increasing", {{"b_f", "p_f"}, both(open_unit("b_f"), nonnegative({"p_f"})),
                               [](const RuleContext& c, const ParamMap& p) {
                                 return futility_increasing(c, p.at("b_f"), p.at("p_f"));
                               }});

  auto never = [](const std::vector<ArmDecision>&, const RuleContext&, const ParamMap&) {
    return false;
  };
  r.add_eff_trial("never", {{}, no_check(), never});
  r.add_fut_trial("never", {{}, no_check(), never});
  r.add_eff_trial("any_arm_efficacious",
                  {{}, no_check(),
                   [](const std::vector<ArmDecision>& d, const RuleContext& c, const ParamMap&) {
                     for (std::size_t a = 0; a < d.size(); ++a) {
                       if (!c.ref[a] && d[a].efficacy_met) return true;
                     }
                     return false;
                   }});
  r.add_fut_trial("all_arms_futile",
                  {{}, no_check(),
                   [](const std::vector<ArmDecision>& d, const RuleContext& c, const ParamMap&) {
                     for (std::size_t a = 0; a < d.size(); ++a) {
                       if (!c.ref[a] && !d[a].futility_met) return false;
                     }
                     return true;
                   }});

  r.add_rar("trippa", {{"gamma", "eta", "nu"}, nonnegative({"gamma", "eta", "nu"}),
                       [](const RuleContext& c, const ParamMap& p) {
                         return rar_trippa(c, p.at("gamma"), p.at("eta"), p.at("nu"));
                       }});
  return r;
}

}  // namespace

const RuleRegistry& RuleRegistry::builtin() {
  static const RuleRegistry registry = make_builtin();
  return registry;
}

void RuleRegistry::add_eff_arm(std::string name, RuleFamily<ArmRuleFn> f) {
  eff_arm_.insert_or_assign(std::move(name), std::move(f));
}
void RuleRegistry::add_fut_arm(std::string name, RuleFamily<ArmRuleFn> f) {
  fut_arm_.insert_or_assign(std::move(name), std::move(f));
}
void RuleRegistry::add_eff_trial(std::string name, RuleFamily<TrialRuleFn> f) {
  eff_trial_.insert_or_assign(std::move(name), std::move(f));
}
void RuleRegistry::add_fut_trial(std::string name, RuleFamily<TrialRuleFn> f) {
  fut_trial_.insert_or_assign(std::move(name), std::move(f));
}
void RuleRegistry::add_rar(std::string name, RuleFamily<RarRuleFn> f) {
  rar_.insert_or_assign(std::move(name), std::move(f));
}

std::vector<std::string> RuleRegistry::check(RuleKind kind, const RuleSpec& rule) const {
  switch (kind) {
    case RuleKind::eff_arm: return check_family(eff_arm_, kind, rule);
    case RuleKind::fut_arm: return check_family(fut_arm_, kind, rule);
    case RuleKind::eff_trial: return check_family(eff_trial_, kind, rule);
    case RuleKind::fut_trial: return check_family(fut_trial_, kind, rule);
    default: return check_family(rar_, kind, rule);
  }
}

std::vector<bool> RuleRegistry::eff_arm(const RuleContext& ctx, const RuleSpec& rule) const {
  return lookup(eff_arm_, RuleKind::eff_arm, rule).evaluate(ctx, rule.params);
}

std::vector<bool> RuleRegistry::fut_arm(const RuleContext& ctx, const RuleSpec& rule) const {
  return lookup(fut_arm_, RuleKind::fut_arm, rule).evaluate(ctx, rule.params);
}

bool RuleRegistry::eff_trial(const std::vector<ArmDecision>& d, const RuleContext& ctx,
                             const RuleSpec& rule) const {
  return lookup(eff_trial_, RuleKind::eff_trial, rule).evaluate(d, ctx, rule.params);
}

bool RuleRegistry::fut_trial(const std::vector<ArmDecision>& d, const RuleContext& ctx,
                             const RuleSpec& rule) const {
  return lookup(fut_trial_, RuleKind::fut_trial, rule).evaluate(d, ctx, rule.params);
}

std::vector<double> RuleRegistry::rar(const RuleContext& ctx, const RuleSpec& rule) const {
  return lookup(rar_, RuleKind::rar, rule).evaluate(ctx, rule.params);
}

std::vector<bool> efficacy_fixed(const RuleContext& ctx, double b_e) {
  return per_arm(ctx, [b_e](double post) { return post > 1.0 - b_e; });
}

double infofract_threshold(double fraction, double b, double p) {
  return 1.0 - b * std::pow(fraction, p);
}

std::vector<bool> efficacy_infofract(const RuleContext& ctx, double b, double p) {
  const double threshold = infofract_threshold(ctx.information_fraction(), b, p);
  return per_arm(ctx, [threshold](double post) { return post > threshold; });
}

double increasing_futility_boundary(double fraction, double b_f, double p_f) {
  return b_f * std::pow(fraction, p_f);
}

std::vector<bool> futility_fixed(const RuleContext& ctx, double b_f) {
  return per_arm(ctx, [b_f](double post) { return post < b_f; });
}

std::vector<bool> futility_increasing(const RuleContext& ctx, double b_f, double p_f) {
  const double boundary = increasing_futility_boundary(ctx.information_fraction(), b_f, p_f);
  return per_arm(ctx, [boundary](double post) { return post < boundary; });
}

std::vector<double> rar_trippa(const RuleContext& ctx, double gamma, double eta, double nu) {
  const std::size_t control = ctx.control_index();
  const std::size_t k_active = ctx.n_active_interventions();
  if (k_active == 0) throw RuleError("trippa: no active intervention arm");

  int max_n = 0;
  for (std::size_t a = 0; a < ctx.active.size(); ++a) {
    if (ctx.active[a] && !ctx.ref[a]) {
      if (!ctx.evaluable[a]) throw RuleError("trippa: active arm without a posterior");
      max_n = std::max(max_n, ctx.n[a]);
    }
  }

  const double h = gamma * std::pow(ctx.information_fraction(), eta);
  std::vector<double> w(ctx.active.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    if (ctx.active[a] && !ctx.ref[a]) {
      w[a] = std::pow(ctx.posterior[a], h);
      total += w[a];
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw RuleError("trippa: all intervention posteriors are zero");
  }
  for (std::size_t a = 0; a < w.size(); ++a) w[a] /= total;
  w[control] = std::exp(nu * static_cast<double>(max_n - ctx.n[control])) /
               static_cast<double>(k_active);
  return w;
}

TrialAction trial_stop(const std::vector<ArmDecision>& decisions, const RuleContext& ctx,
                       const RuleSpec& eff_rule, const RuleSpec& fut_rule,
                       const RuleRegistry& registry) {
  if (registry.eff_trial(decisions, ctx, eff_rule)) return TrialAction::stop_efficacy;
  if (registry.fut_trial(decisions, ctx, fut_rule)) return TrialAction::stop_futility;
  return TrialAction::continue_trial;
}

std::vector<double> normalize_allocation(const std::vector<double>& weights,
                                         const std::vector<bool>& active) {
  if (weights.size() != active.size()) {
    throw RuleError("allocation weights and active flags differ in length");
  }
  double total = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (active[a]) total += std::abs(weights[a]);
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw RuleError("allocation weights are all zero over the active arms");
  }
  std::vector<double> out(weights.size(), 0.0);
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (active[a]) out[a] = std::abs(weights[a]) / total;
  }
  return out;
}

std::vector<double> normalize_allocation(const std::vector<double>& weights) {
  return normalize_allocation(weights, std::vector<bool>(weights.size(), true));
}

double delta_from_orr(double pi0, double lift) {
  const double pi1 = pi0 + lift;
  if (!(pi0 > 0.0 && pi0 < 1.0 && pi1 > 0.0 && pi1 < 1.0)) {
    throw std::invalid_argument("delta_from_orr: proportions must lie in (0, 1)");
  }
  return std::log((pi1 / (1.0 - pi1)) / (pi0 / (1.0 - pi0)));
}

}  // namespace mamsim
