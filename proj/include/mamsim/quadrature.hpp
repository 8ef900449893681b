#pragma once

#include <Eigen/Core>

#include "mamsim/config.hpp"

namespace mamsim {

struct QuadratureOptions {
  int points_per_axis = 401;
  double half_width_sds = 10.0;
};

/// Posterior tail probability P(beta_k > delta) (or < delta) by dense
/// tensor-grid quadrature of the unnormalised posterior. Independent of the
/// Laplace fitter: the integration box is found by iteratively zooming coarse
/// grids onto the posterior mass, then the fine grid spans +-10 marginal sds
/// with `delta` on a node of axis k. Intended for small test models (p <= 3).
double quadrature_oracle_prob(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                              Link link, const ParamMap& nuisance, const PriorSpec& prior,
                              std::size_t k, double delta, Direction direction,
                              const QuadratureOptions& options = {});

/// Posterior mean of beta_k by the same grid (used for separation checks).
double quadrature_oracle_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                              Link link, const ParamMap& nuisance, const PriorSpec& prior,
                              std::size_t k, const QuadratureOptions& options = {});

}  // namespace mamsim
