#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mamsim/config.hpp"
#include "mamsim/datagen.hpp"

namespace mamsim {

class GlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Columns: intercept, one indicator per intervention (control is the
/// reference level), then covariate columns.
struct DesignMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};

DesignMatrix build_design_matrix(const Cohort& data, const ModelSpec& model);

/// Gaussian (Laplace) approximation of the fixed-effect posterior.
struct PosteriorFit {
  Eigen::VectorXd mode;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd marginal_mean;
  Eigen::VectorXd marginal_sd;
  bool converged = false;
  int iterations = 0;
  double log_det_precision = 0.0;
  double log_posterior = 0.0;
};

struct LogPosterior {
  double value;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Unnormalised log posterior (log-likelihood up to data-only constants plus
/// independent gaussian log-priors) with analytic gradient and observed Hessian.
LogPosterior log_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                           Link link, const ParamMap& nuisance, const PriorSpec& prior,
                           const Eigen::VectorXd& beta, bool derivatives = true);

/// Newton iterations with step-halving from beta = 0. Converges when the
/// largest score component is below 1e-8 or the relative mode change is below
/// 1e-10, within 100 iterations. A failed Cholesky factorisation of the
/// precision, or running out of iterations, leaves converged = false and the
/// best iterate in `mode`.
PosteriorFit fit_laplace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                         Link link, const ParamMap& nuisance, const PriorSpec& prior);

double normal_cdf(double z);

/// P(beta_k > delta) or P(beta_k < delta) under the gaussian marginal.
double marginal_posterior_prob(const PosteriorFit& fit, std::size_t k, double delta,
                               Direction direction);

/// Arm-level method-of-moments re-estimate of the nuisance parameters
/// (gaussian sd from pooled within-arm variance, nbinomial size from
/// pooled mean/variance). Returns `current` when the data cannot support one.
ParamMap estimate_nuisance(const Cohort& data, const ModelSpec& model, const ParamMap& current);

}  // namespace mamsim
