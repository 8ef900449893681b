#include "mamsim/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mamsim {

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw ReportError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ReportError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // The small slack keeps exact products such as 0.1 * 10 on their integer.
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

SizeStats size_stats(const std::vector<double>& values) {
  if (values.empty()) throw ReportError("size statistics of an empty sample");
  SizeStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.median = nearest_rank(values, 0.5);
  s.p10 = nearest_rank(values, 0.1);
  s.p90 = nearest_rank(values, 0.9);
  return s;
}

namespace {

char pattern_code(const ArmDecision& d) {
  switch (d.decision()) {
    case Decision::efficacy: return 'E';
    case Decision::futility: return 'F';
    case Decision::both: return 'B';
    default: return '-';
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string padr(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void render(std::ostringstream& out, const OperatingCharacteristics& oc, const std::string& title,
            bool full) {
  out << title << " (" << oc.replicates << " replicates)\n";
  std::size_t w = 10;
  for (const auto& a : oc.arms) w = std::max(w, a.arm.size() + 2);

  out << "  Probability of declaring an intervention effective / futile\n";
  out << "  " << padr("arm", w) << pad("efficacy", 10) << pad("futility", 10) << "\n";
  for (const auto& a : oc.arms) {
    out << "  " << padr(a.arm, w) << pad(fmt("%.4f", a.efficacy()), 10)
        << pad(fmt("%.4f", a.futility()), 10) << "\n";
  }
  out << "  at least one effective: " << fmt("%.4f", oc.at_least_one) << "\n";
  out << "  all effective:          " << fmt("%.4f", oc.all) << "\n";
  if (oc.both_any > 0) {
    out << "  Arms meeting both criteria simultaneously\n";
    for (const auto& a : oc.arms) {
      if (a.both > 0) out << "  " << padr(a.arm, w) << pad(fmt("%.4f", a.both), 10) << "\n";
    }
  }
  if (!full) return;

  out << "  Timing of declarations\n";
  out << "  " << padr("arm", w) << pad("eff.early", 11) << pad("eff.last", 11)
      << pad("fut.early", 11) << pad("fut.last", 11) << pad("none", 11) << "\n";
  for (const auto& a : oc.arms) {
    out << "  " << padr(a.arm, w) << pad(fmt("%.4f", a.efficacy_early), 11)
        << pad(fmt("%.4f", a.efficacy_last), 11) << pad(fmt("%.4f", a.futility_early), 11)
        << pad(fmt("%.4f", a.futility_last), 11) << pad(fmt("%.4f", a.none), 11) << "\n";
  }

  out << "  Sample size\n";
  out << "  " << padr("arm", w) << pad("mean", 10) << pad("sd", 10) << pad("median", 10)
      << pad("p10", 10) << pad("p90", 10) << "\n";
  for (std::size_t i = 0; i < oc.sizes.size(); ++i) {
    const auto& s = oc.sizes[i];
    out << "  " << padr(oc.size_labels[i], w) << pad(fmt("%.2f", s.mean), 10)
        << pad(fmt("%.2f", s.sd), 10) << pad(fmt("%g", s.median), 10) << pad(fmt("%g", s.p10), 10)
        << pad(fmt("%g", s.p90), 10) << "\n";
  }
  out << "  stopped early: " << fmt("%.4f", oc.early_stop) << "\n";

  out << "  Decision combinations (E efficacy, F futility, B both, - none; arms";
  for (const auto& a : oc.arms) out << " " << a.arm;
  out << ")\n";
  out << "  " << padr("pattern", std::max<std::size_t>(oc.arms.size() + 2, 9)) << pad("count", 8)
      << pad("share", 9) << pad("early", 9) << "\n";
  for (const auto& p : oc.patterns) {
    out << "  " << padr(p.pattern, std::max<std::size_t>(oc.arms.size() + 2, 9))
        << pad(std::to_string(p.count), 8)
        << pad(fmt("%.4f", static_cast<double>(p.count) / static_cast<double>(oc.replicates)), 9)
        << pad(fmt("%.4f", p.early_stop), 9) << "\n";
  }

  out << "  Diagnostics\n";
  for (const auto& [reason, count] : oc.stop_reasons) {
    out << "    stop " << reason << ": " << count << "\n";
  }
  out << "    non-converged looks: " << oc.nonconverged_looks << " (in "
      << oc.replicates_with_nonconvergence << " replicates)\n";
  out << "    allocation fallbacks: " << oc.rar_fallbacks << "\n";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  return fmt("%.10g", v);
}

}  // namespace

OperatingCharacteristics operating_characteristics(const std::vector<TrialResult>& results,
                                                   const std::vector<std::string>& arm_names) {
  if (results.empty()) throw ReportError("cannot summarise an empty batch");
  const std::size_t arms = arm_names.size();
  const double R = static_cast<double>(results.size());
  OperatingCharacteristics oc;
  oc.replicates = results.size();

  std::vector<std::array<std::size_t, 8>> counts(arms, std::array<std::size_t, 8>{});
  std::size_t at_least_one = 0, all = 0, both_any = 0, early = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> patterns;
  std::vector<std::vector<double>> sizes(arms + 1);

  for (const auto& r : results) {
    if (r.arms.size() != arms || r.n.size() != arms) {
      throw ReportError("replicate " + std::to_string(r.seed) + " has the wrong number of arms");
    }
    bool any_eff = false, every_eff = true, any_both = false;
    std::string pattern;
    for (std::size_t a = 1; a < arms; ++a) {
      const ArmDecision& d = r.arms[a];
      auto& c = counts[a];
      switch (d.decision()) {
        case Decision::efficacy: ++c[0]; break;
        case Decision::futility: ++c[1]; break;
        case Decision::both: ++c[2]; break;
        default: ++c[3]; break;
      }
      const bool is_early = d.timing == Timing::early;
      if (d.efficacy_met) ++c[is_early ? 4 : 5];
      if (d.futility_met) ++c[is_early ? 6 : 7];
      any_eff = any_eff || d.efficacy_met;
      every_eff = every_eff && d.efficacy_met;
      any_both = any_both || (d.efficacy_met && d.futility_met);
      pattern += pattern_code(d);
    }
    at_least_one += any_eff;
    all += every_eff;
    both_any += any_both;
    early += r.stopped_early();
    auto& p = patterns[pattern];
    ++p.first;
    p.second += r.stopped_early();
    for (std::size_t a = 0; a < arms; ++a) sizes[a].push_back(r.n[a]);
    sizes[arms].push_back(r.total);
    ++oc.stop_reasons[to_string(r.stop)];
    oc.nonconverged_looks += r.nonconverged;
    oc.replicates_with_nonconvergence += r.nonconverged > 0;
    oc.rar_fallbacks += r.rar_fallbacks;
  }

  for (std::size_t a = 1; a < arms; ++a) {
    const auto& c = counts[a];
    ArmCharacteristics ac;
    ac.arm = arm_names[a];
    ac.efficacy_only = static_cast<double>(c[0]) / R;
    ac.futility_only = static_cast<double>(c[1]) / R;
    ac.both = static_cast<double>(c[2]) / R;
    ac.none = static_cast<double>(c[3]) / R;
    ac.efficacy_early = static_cast<double>(c[4]) / R;
    ac.efficacy_last = static_cast<double>(c[5]) / R;
    ac.futility_early = static_cast<double>(c[6]) / R;
    ac.futility_last = static_cast<double>(c[7]) / R;
    oc.arms.push_back(ac);
  }
  oc.at_least_one = static_cast<double>(at_least_one) / R;
  oc.all = static_cast<double>(all) / R;
  oc.both_any = static_cast<double>(both_any) / R;
  oc.early_stop = static_cast<double>(early) / R;

  for (std::size_t a = 0; a < arms; ++a) {
    oc.size_labels.push_back(arm_names[a]);
    oc.sizes.push_back(size_stats(sizes[a]));
  }
  oc.size_labels.push_back("overall");
  oc.sizes.push_back(size_stats(sizes[arms]));

  for (const auto& [pattern, c] : patterns) {
    oc.patterns.push_back(
        {pattern, c.first, static_cast<double>(c.second) / static_cast<double>(c.first)});
  }
  std::stable_sort(oc.patterns.begin(), oc.patterns.end(),
                   [](const DecisionPattern& a, const DecisionPattern& b) { return a.count > b.count; });
  return oc;
}

Summary summarize(const BatchResult& batch, bool full) {
  if (batch.results.empty()) throw ReportError("cannot summarise an empty batch");
  const TrialSpec design = batch.design();
  const auto& names = design.model.arm_names;

  Summary s;
  s.alternative = operating_characteristics(batch.results, names);
  if (batch.has_null()) s.null = operating_characteristics(batch.null_results, names);

  std::ostringstream out;
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(batch.fingerprint));
  out << "Design " << fp << ": " << to_string(design.model.family) << "/"
      << to_string(design.model.link) << ", " << names.size() << " arms, control arm "
      << names.front() << ", N = " << design.n_max << ", looks at";
  for (int n : design.schedule()) out << " " << n;
  out << "\n";
  out << "Seeds " << format_seed_ranges(batch.seeds) << "\n\n";
  if (s.null) {
    render(out, *s.null, "Null scenario", full);
    out << "\n";
    render(out, s.alternative, "Alternative scenario", full);
  } else {
    render(out, s.alternative, "Alternative scenario", full);
  }
  s.text = out.str();
  return s;
}

std::string emit_plot_data(const BatchResult& batch, PlotKind kind) {
  const TrialSpec design = batch.design();
  const auto& names = design.model.arm_names;
  std::ostringstream out;

  struct Part {
    const char* label;
    const std::vector<TrialResult>* results;
  };
  std::vector<Part> parts{{"alternative", &batch.results}};
  if (batch.has_null()) parts.push_back({"null", &batch.null_results});

  if (kind == PlotKind::size) {
    out << "scenario,seed,arm,n\n";
    for (const auto& part : parts) {
      for (const auto& r : *part.results) {
        for (std::size_t a = 0; a < names.size(); ++a) {
          out << part.label << "," << r.seed << "," << names[a] << "," << r.n[a] << "\n";
        }
        out << part.label << "," << r.seed << ",overall," << r.total << "\n";
      }
    }
    return out.str();
  }

  if (batch.extended < 1) {
    throw ReportError("estimates need per-look histories; rerun with extended >= 1");
  }
  // Target index per arm, if the arm is a target.
  std::vector<std::optional<std::size_t>> target_of(names.size());
  for (std::size_t t = 0; t < design.targets.size(); ++t) target_of[design.target_arm(t)] = t;

  out << "scenario,seed,arm,estimate,n,decision,timing\n";
  for (const auto& part : parts) {
    for (const auto& r : *part.results) {
      for (std::size_t a = 1; a < names.size(); ++a) {
        double estimate = std::nan("");
        if (target_of[a] && !r.history.empty()) {
          std::size_t look = std::min<std::size_t>(r.decision_look[a], r.history.size() - 1);
          // Step back over looks whose fit failed.
          for (std::size_t j = look + 1; j-- > 0;) {
            const double v = r.history[j].est_mean[*target_of[a]];
            if (std::isfinite(v)) {
              estimate = v;
              break;
            }
          }
        }
        std::string decision;
        switch (r.arms[a].decision()) {
          case Decision::efficacy: decision = "efficacy"; break;
          case Decision::futility: decision = "futility"; break;
          case Decision::both: decision = "both"; break;
          default: decision = "none"; break;
        }
        out << part.label << "," << r.seed << "," << names[a] << "," << csv_number(estimate) << ","
            << r.n[a] << "," << decision << "," << to_string(r.arms[a].timing) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace mamsim
