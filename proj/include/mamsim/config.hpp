#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mamsim {

using ParamMap = std::map<std::string, double>;

enum class Family { gaussian, binomial, poisson, nbinomial };
enum class Link { identity, logit, log };
enum class Direction { greater, less };
enum class AllocationMethod { balanced, simple };
enum class NuisanceMode { fixed, moments };

std::string to_string(Family f);
std::string to_string(Link l);
std::string to_string(Direction d);
std::string to_string(AllocationMethod a);
std::string to_string(NuisanceMode n);

/// One covariate generator. Univariate generators have a single name;
/// multivariate ones (bvnormal) produce one column per name.
struct CovariateSpec {
  std::vector<std::string> names;
  std::string generator;
  ParamMap params;

  bool operator==(const CovariateSpec&) const = default;
};

struct ModelSpec {
  std::string response_name = "y";
  std::string treatment_name = "treatment";
  std::vector<std::string> arm_names;  // control first
  std::vector<CovariateSpec> covariates;
  Family family = Family::gaussian;
  Link link = Link::identity;
  ParamMap nuisance;  // gaussian: sd; nbinomial: size (dispersion phi)
  AllocationMethod allocation = AllocationMethod::simple;

  std::size_t n_arms() const { return arm_names.size(); }
  std::size_t n_interventions() const { return arm_names.size() - 1; }
  /// Covariate column names in design-matrix order.
  std::vector<std::string> covariate_columns() const;
  std::size_t n_coefficients() const { return n_arms() + covariate_columns().size(); }

  bool operator==(const ModelSpec&) const = default;
};

struct RuleSpec {
  std::string family;
  ParamMap params;

  bool operator==(const RuleSpec&) const = default;
};

/// Independent gaussian priors on the fixed effects.
struct PriorSpec {
  std::vector<double> mean;
  std::vector<double> precision;

  static PriorSpec weak(std::size_t p, double precision = 0.001) {
    return {std::vector<double>(p, 0.0), std::vector<double>(p, precision)};
  }

  bool operator==(const PriorSpec&) const = default;
};

/// [target][look] margins on the link scale; nullopt disables the
/// corresponding evaluation at that look.
using DeltaTable = std::vector<std::vector<std::optional<double>>>;

struct TrialSpec {
  ModelSpec model;
  std::vector<double> beta_true;
  std::vector<std::size_t> targets;  // 0-based coefficient indices
  std::vector<Direction> alternative;  // one per target
  int n_max = 0;
  std::vector<int> interim_recruited;
  std::vector<double> prob0;  // aligned with model.arm_names
  DeltaTable delta_eff;
  DeltaTable delta_fut;
  DeltaTable delta_rar;
  RuleSpec eff_arm;
  RuleSpec fut_arm;
  RuleSpec eff_trial{"never", {}};
  RuleSpec fut_trial{"never", {}};
  std::optional<RuleSpec> rar;
  bool h0 = false;
  std::vector<std::uint64_t> seeds;
  int extended = 0;
  PriorSpec prior;
  NuisanceMode nuisance_mode = NuisanceMode::fixed;

  std::size_t n_looks() const { return interim_recruited.size() + 1; }
  /// Cumulative recruitment at each look, final look included.
  std::vector<int> schedule() const;
  /// Arm index (into arm_names) of target t; targets are treatment coefficients.
  std::size_t target_arm(std::size_t t) const { return targets[t]; }

  bool operator==(const TrialSpec&) const = default;
};

/// Thrown for malformed documents and violated invariants. All problems found
/// in one pass are collected in problems().
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A TrialSpec whose invariants hold, with normalised prob0 and a content
/// fingerprint. Only validate_spec creates one.
class ValidatedSpec {
 public:
  const TrialSpec& spec() const { return spec_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  /// Canonical JSON without the seed set; the fingerprint hashes this text.
  const std::string& canonical() const { return canonical_; }

 private:
  friend ValidatedSpec validate_spec(TrialSpec spec);
  ValidatedSpec() = default;

  TrialSpec spec_;
  std::uint64_t fingerprint_ = 0;
  std::string canonical_;
};

TrialSpec parse_spec(std::string_view text);
TrialSpec parse_spec(const nlohmann::json& doc);
TrialSpec load_spec_file(const std::string& path);

ValidatedSpec validate_spec(TrialSpec spec);

nlohmann::json spec_to_json(const TrialSpec& spec);
std::string serialize_spec(const TrialSpec& spec);

/// JSON-pointer paths whose values differ between two canonical spec texts.
std::vector<std::string> spec_diff(const std::string& canonical_a,
                                   const std::string& canonical_b);

}  // namespace mamsim
