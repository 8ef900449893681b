#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamsim/montecarlo.hpp"

namespace mamsim {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exclusive outcome per intervention: efficacy_only + futility_only + both +
// none == 1. The early/last split counts every declaration, including arms
// that met both criteria.
struct ArmCharacteristics {
  std::string arm;
  double efficacy_only = 0;
  double futility_only = 0;
  double both = 0;
  double none = 0;
  double efficacy_early = 0;
  double efficacy_last = 0;
  double futility_early = 0;
  double futility_last = 0;

  double efficacy() const { return efficacy_only + both; }
  double futility() const { return futility_only + both; }
  bool operator==(const ArmCharacteristics&) const = default;
};

// mean, sd (n - 1 denominator), nearest-rank percentiles.
struct SizeStats {
  double mean = 0;
  double sd = 0;
  double median = 0;
  double p10 = 0;
  double p90 = 0;
  bool operator==(const SizeStats&) const = default;
};

struct DecisionPattern {
  std::string pattern;  // one code per intervention: E, F, B (both) or - (none)
  std::size_t count = 0;
  double early_stop = 0;  // proportion of these replicates that stopped at an interim
  bool operator==(const DecisionPattern&) const = default;
};

struct OperatingCharacteristics {
  std::size_t replicates = 0;
  std::vector<ArmCharacteristics> arms;  // interventions only
  double at_least_one = 0;
  double all = 0;
  double both_any = 0;  // replicates with at least one arm meeting both criteria
  std::vector<std::string> size_labels;  // every arm, then "overall"
  std::vector<SizeStats> sizes;
  std::vector<DecisionPattern> patterns;  // by count, then pattern
  std::map<std::string, std::size_t> stop_reasons;
  std::size_t nonconverged_looks = 0;
  std::size_t replicates_with_nonconvergence = 0;
  std::size_t rar_fallbacks = 0;
  double early_stop = 0;

  bool operator==(const OperatingCharacteristics&) const = default;
};

/// Nearest-rank quantile: the ceil(q * n)-th smallest value (first for q = 0).
double nearest_rank(std::vector<double> values, double q);

SizeStats size_stats(const std::vector<double>& values);

OperatingCharacteristics operating_characteristics(const std::vector<TrialResult>& results,
                                                   const std::vector<std::string>& arm_names);

struct Summary {
  OperatingCharacteristics alternative;
  std::optional<OperatingCharacteristics> null;
  std::string text;
};

Summary summarize(const BatchResult& batch, bool full);

enum class PlotKind { estimates, size };

/// CSV text. estimates: scenario,seed,arm,estimate,n,decision,timing (one row
/// per replicate and intervention; estimate is the posterior mean at the
/// arm's last look, empty when unavailable). size: scenario,seed,arm,n (one
/// row per replicate and arm plus an "overall" row).
std::string emit_plot_data(const BatchResult& batch, PlotKind kind);

}  // namespace mamsim
