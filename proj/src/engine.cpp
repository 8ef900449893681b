#include "mamsim/engine.hpp"

#include <cmath>
#include <limits>

#include "mamsim/glm.hpp"

namespace mamsim {

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::all_decided: return "all_decided";
    case StopReason::trial_rule_efficacy: return "trial_rule_efficacy";
    case StopReason::trial_rule_futility: return "trial_rule_futility";
    default: return "reached_max";
  }
}

bool TrialResult::operator==(const TrialResult& o) const {
  if (!(seed == o.seed && arms == o.arms && n == o.n && total == o.total && stop == o.stop &&
        looks == o.looks && n_looks_planned == o.n_looks_planned &&
        nonconverged == o.nonconverged && rar_fallbacks == o.rar_fallbacks &&
        decision_look == o.decision_look && history.size() == o.history.size() &&
        data.has_value() == o.data.has_value())) {
    return false;
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    // NaN-aware: compare bit patterns of the record fields through their values.
    const auto& a = history[i];
    const auto& b = o.history[i];
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] == y[k] || (std::isnan(x[k]) && std::isnan(y[k])))) return false;
      }
      return true;
    };
    if (!(a.n_total == b.n_total && a.converged == b.converged && a.n == b.n &&
          a.active == b.active && same(a.prob, b.prob) && same(a.post_eff, b.post_eff) &&
          same(a.post_fut, b.post_fut) && same(a.post_rar, b.post_rar) &&
          same(a.est_mean, b.est_mean) && same(a.est_sd, b.est_sd) &&
          a.decisions == b.decisions)) {
      return false;
    }
  }
  if (data) {
    return data->arm == o.data->arm && data->response == o.data->response &&
           data->covariates == o.data->covariates;
  }
  return true;
}

std::vector<double> null_beta(const TrialSpec& spec) {
  std::vector<double> beta = spec.beta_true;
  for (auto t : spec.targets) beta[t] = 0.0;
  return beta;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append(Cohort& all, const Cohort& next) {
  all.arm.insert(all.arm.end(), next.arm.begin(), next.arm.end());
  all.response.insert(all.response.end(), next.response.begin(), next.response.end());
  Eigen::MatrixXd merged(all.covariates.rows() + next.covariates.rows(), next.covariates.cols());
  if (all.covariates.rows() > 0) merged.topRows(all.covariates.rows()) = all.covariates;
  merged.bottomRows(next.covariates.rows()) = next.covariates;
  all.covariates = std::move(merged);
}

bool any_active_intervention(const std::vector<bool>& active) {
  for (std::size_t a = 1; a < active.size(); ++a) {
    if (active[a]) return true;
  }
  return false;
}

// Posterior tail probabilities for one margin table at look j; `record`
// receives the per-target values.
void fill_posteriors(RuleContext& ctx, const TrialSpec& spec, const PosteriorFit& fit,
                     const DeltaTable& deltas, std::size_t look, std::vector<double>& record) {
  const std::size_t arms = spec.model.n_arms();
  ctx.posterior.assign(arms, kNaN);
  ctx.evaluable.assign(arms, false);
  record.assign(spec.targets.size(), kNaN);
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    const auto& delta = deltas[t][look];
    if (!delta) continue;
    const double post = marginal_posterior_prob(fit, spec.targets[t], *delta, spec.alternative[t]);
    record[t] = post;
    const std::size_t arm = spec.target_arm(t);
    if (ctx.active[arm]) {
      ctx.posterior[arm] = post;
      ctx.evaluable[arm] = true;
    }
  }
}

}  // namespace

TrialResult run_trial(const ValidatedSpec& validated, std::uint64_t seed, Scenario scenario,
                      const RuleRegistry& registry) {
  const TrialSpec& spec = validated.spec();
  const ModelSpec& model = spec.model;
  const std::size_t arms = model.n_arms();
  const std::vector<int> schedule = spec.schedule();
  const std::vector<double> beta = scenario == Scenario::null ? null_beta(spec) : spec.beta_true;
  const auto cov_count = static_cast<Eigen::Index>(model.covariate_columns().size());
  const Eigen::Map<const Eigen::VectorXd> beta_cov(beta.data() + arms, cov_count);

  TrialResult result;
  result.seed = seed;
  result.arms.assign(arms, ArmDecision{});
  result.n.assign(arms, 0);
  result.n_looks_planned = static_cast<std::uint32_t>(schedule.size());
  result.decision_look.assign(arms, 0);

  std::vector<bool> active(arms, true);
  std::vector<bool> ref(arms, false);
  ref[0] = true;
  std::vector<double> prob = spec.prob0;

  Cohort data;
  data.covariates.resize(0, cov_count);
  const Stream root = Stream::for_seed(seed);

  int previous = 0;
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    const int m = schedule[j] - previous;
    previous = schedule[j];
    const bool is_final = j + 1 == schedule.size();

    // Recruit and simulate cohort j.
    const Stream look_stream = root.split(static_cast<std::uint64_t>(j));
    Stream alloc_stream = look_stream.split("allocation");
    Stream resp_stream = look_stream.split("response");
    Cohort cohort;
    cohort.arm = allocate_arms(m, prob, model.allocation, alloc_stream);
    cohort.covariates = simulate_covariates(model.covariates, m, look_stream.split("covariates"));
    std::vector<double> eta(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const std::size_t arm = cohort.arm[static_cast<std::size_t>(i)];
      double e = beta[0] + (arm > 0 ? beta[arm] : 0.0);
      if (cov_count > 0) e += cohort.covariates.row(i).dot(beta_cov);
      eta[static_cast<std::size_t>(i)] = e;
    }
    cohort.response =
        simulate_response(eta, model.family, model.link, model.nuisance, resp_stream);
    for (std::size_t arm : cohort.arm) ++result.n[arm];
    append(data, cohort);

    // Fit.
    const ParamMap nuisance = spec.nuisance_mode == NuisanceMode::moments
                                  ? estimate_nuisance(data, model, model.nuisance)
                                  : model.nuisance;
    const DesignMatrix dm = build_design_matrix(data, model);
    const Eigen::Map<const Eigen::VectorXd> y(data.response.data(),
                                              static_cast<Eigen::Index>(data.response.size()));
    PosteriorFit fit;
    try {
      fit = fit_laplace(dm.values, y, model.family, model.link, nuisance, spec.prior);
    } catch (const GlmError&) {
      fit.converged = false;
    }

    LookRecord record;
    record.n_total = schedule[j];
    record.converged = fit.converged;
    record.n = result.n;
    record.active = active;
    record.prob = prob;
    record.decisions.assign(arms, ArmDecision{});
    record.post_eff.assign(spec.targets.size(), kNaN);
    record.post_fut.assign(spec.targets.size(), kNaN);
    record.post_rar.assign(spec.targets.size(), kNaN);
    record.est_mean.assign(spec.targets.size(), kNaN);
    record.est_sd.assign(spec.targets.size(), kNaN);
    if (fit.converged) {
      for (std::size_t t = 0; t < spec.targets.size(); ++t) {
        record.est_mean[t] = fit.marginal_mean[static_cast<Eigen::Index>(spec.targets[t])];
        record.est_sd[t] = fit.marginal_sd[static_cast<Eigen::Index>(spec.targets[t])];
      }
    }
    result.looks = static_cast<std::uint32_t>(j + 1);

    auto finish = [&](StopReason reason) {
      result.stop = reason;
      for (std::size_t a = 0; a < arms; ++a) {
        if (!result.arms[a].decided()) result.decision_look[a] = static_cast<std::uint32_t>(j);
      }
      if (spec.extended >= 1) result.history.push_back(std::move(record));
    };

    if (!fit.converged) {
      ++result.nonconverged;
      if (is_final) {
        finish(StopReason::reached_max);
        break;
      }
      if (spec.extended >= 1) result.history.push_back(std::move(record));
      continue;
    }

    RuleContext ctx;
    ctx.active = active;
    ctx.n = result.n;
    ctx.ref = ref;
    ctx.prob = prob;
    ctx.m = m;
    ctx.n_max = spec.n_max;
    ctx.look_index = j;
    ctx.is_final = is_final;

    RuleContext eff_ctx = ctx;
    fill_posteriors(eff_ctx, spec, fit, spec.delta_eff, j, record.post_eff);
    RuleContext fut_ctx = ctx;
    fill_posteriors(fut_ctx, spec, fit, spec.delta_fut, j, record.post_fut);
    const std::vector<bool> eff = registry.eff_arm(eff_ctx, spec.eff_arm);
    const std::vector<bool> fut = registry.fut_arm(fut_ctx, spec.fut_arm);

    for (std::size_t a = 1; a < arms; ++a) {
      if (!active[a] || !(eff[a] || fut[a])) continue;
      ArmDecision d{eff[a], fut[a], is_final ? Timing::last : Timing::early};
      result.arms[a] = d;
      result.decision_look[a] = static_cast<std::uint32_t>(j);
      record.decisions[a] = d;
      active[a] = false;
    }
    ctx.active = active;

    const TrialAction action =
        trial_stop(result.arms, ctx, spec.eff_trial, spec.fut_trial, registry);
    if (action == TrialAction::stop_efficacy) {
      finish(StopReason::trial_rule_efficacy);
      break;
    }
    if (action == TrialAction::stop_futility) {
      finish(StopReason::trial_rule_futility);
      break;
    }
    if (!any_active_intervention(active)) {
      finish(StopReason::all_decided);
      break;
    }
    if (is_final) {
      finish(StopReason::reached_max);
      break;
    }

    // Allocation for the next cohort.
    bool refreshed = false;
    if (spec.rar) {
      RuleContext rar_ctx = ctx;
      fill_posteriors(rar_ctx, spec, fit, spec.delta_rar, j, record.post_rar);
      bool complete = true;
      for (std::size_t a = 1; a < arms; ++a) complete = complete && (!active[a] || rar_ctx.evaluable[a]);
      if (complete) {
        try {
          prob = normalize_allocation(registry.rar(rar_ctx, *spec.rar), active);
          refreshed = true;
        } catch (const RuleError&) {
          ++result.rar_fallbacks;
        }
      }
    }
    if (!refreshed) {
      const std::vector<double>& base = spec.rar ? prob : spec.prob0;
      try {
        prob = normalize_allocation(base, active);
      } catch (const RuleError&) {
        prob = normalize_allocation(spec.prob0, active);
      }
    }
    if (spec.extended >= 1) result.history.push_back(std::move(record));
  }

  result.total = 0;
  for (int c : result.n) result.total += c;
  if (spec.extended >= 2) result.data = std::move(data);
  return result;
}

}  // namespace mamsim
