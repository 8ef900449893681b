#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mamsim/config.hpp"
#include "mamsim/rng.hpp"

namespace mamsim {

/// One recruited cohort. Rows of `covariates` follow ModelSpec::covariate_columns().
struct Cohort {
  std::vector<std::size_t> arm;
  Eigen::MatrixXd covariates;
  std::vector<double> response;

  std::size_t size() const { return arm.size(); }
};

class DatagenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-subject arm indices for a cohort of m. `weights` has one entry per arm
/// (zero for dropped arms); probabilities are |w| / sum |w|.
///   simple:   i.i.d. categorical draws.
///   balanced: largest-remainder apportionment of m |w| / sum |w| (ties to the
///             lower arm index), then a uniform random permutation.
std::vector<std::size_t> allocate_arms(int m, const std::vector<double>& weights,
                                       AllocationMethod method, Stream& rng);

/// Exact apportionment used by `balanced`.
std::vector<int> apportion(int m, const std::vector<double>& weights);

/// Problems with a covariate generator spec (unknown id, key set, ranges).
std::vector<std::string> covariate_problems(const CovariateSpec& spec);

/// m draws per covariate column. Each spec draws from its own sub-stream,
/// keyed by its first column name.
Eigen::MatrixXd simulate_covariates(const std::vector<CovariateSpec>& specs, int m,
                                    const Stream& rng);

/// Responses with mean inverse_link(eta) for the family. nbinomial uses the
/// gamma-poisson mixture with Var(Y) = mu + mu^2 / size.
std::vector<double> simulate_response(const std::vector<double>& eta, Family family, Link link,
                                      const ParamMap& nuisance, Stream& rng);

double uniform01(Stream& rng);
std::size_t uniform_index(Stream& rng, std::size_t n);

}  // namespace mamsim
