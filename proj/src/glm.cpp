#include "mamsim/glm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "mamsim/family.hpp"

namespace mamsim {

DesignMatrix build_design_matrix(const Cohort& data, const ModelSpec& model) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n == 0) throw GlmError("design matrix needs at least one subject");
  const auto cov_cols = model.covariate_columns();
  const auto k = static_cast<Eigen::Index>(model.n_interventions());
  const auto q = static_cast<Eigen::Index>(cov_cols.size());
  if (data.covariates.rows() != n || data.covariates.cols() != q) {
    throw GlmError("covariate block does not match the model");
  }

  DesignMatrix dm;
  dm.columns.push_back("(Intercept)");
  for (std::size_t a = 1; a < model.n_arms(); ++a) {
    dm.columns.push_back(model.treatment_name + model.arm_names[a]);
  }
  dm.columns.insert(dm.columns.end(), cov_cols.begin(), cov_cols.end());

  dm.values = Eigen::MatrixXd::Zero(n, 1 + k + q);
  dm.values.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t arm = data.arm[static_cast<std::size_t>(i)];
    if (arm >= model.n_arms()) throw GlmError("unknown arm label in data");
    if (arm > 0) dm.values(i, static_cast<Eigen::Index>(arm)) = 1.0;
  }
  if (q > 0) dm.values.rightCols(q) = data.covariates;
  return dm;
}

namespace {

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct Pointwise {
  double loglik;
  double d1;  // d loglik / d eta
  double d2;  // d^2 loglik / d eta^2
};

inline Pointwise pointwise(Family family, double y, double eta, double sd, double size) {
  switch (family) {
    case Family::gaussian: {
      const double r = y - eta;
      const double prec = 1.0 / (sd * sd);
      return {-0.5 * r * r * prec, r * prec, -prec};
    }
    case Family::binomial: {
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      return {y * eta - log1pexp(eta), y - mu, -mu * (1.0 - mu)};
    }
    case Family::poisson: {
      const double mu = std::exp(eta);
      return {y * eta - mu, y - mu, -mu};
    }
    default: {
      // log(size + mu) computed as log(size) + log1p(exp(eta - log size)).
      const double log_size = std::log(size);
      const double log_sum = log_size + log1pexp(eta - log_size);
      const double frac = std::exp(eta - log_sum);  // mu / (size + mu)
      return {y * eta - (y + size) * log_sum + size * log_size, size * (y - std::exp(eta)) /
                                                                    std::exp(log_sum),
              -(y + size) * frac * (1.0 - frac)};
    }
  }
}

}  // namespace

LogPosterior log_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                           Link link, const ParamMap& nuisance, const PriorSpec& prior,
                           const Eigen::VectorXd& beta, bool derivatives) {
  if (!supported_pair(family, link)) throw GlmError("unsupported family/link pair");
  const Eigen::Index n = X.rows(), p = X.cols();
  const double sd = family == Family::gaussian ? nuisance_sd(nuisance) : 1.0;
  const double size = family == Family::nbinomial ? nuisance_size(nuisance) : 1.0;

  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd d1(n), d2(n);
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Pointwise pw = pointwise(family, y[i], eta[i], sd, size);
    value += pw.loglik;
    d1[i] = pw.d1;
    d2[i] = pw.d2;
  }
  const Eigen::Map<const Eigen::VectorXd> pm(prior.mean.data(), p);
  const Eigen::Map<const Eigen::VectorXd> pp(prior.precision.data(), p);
  const Eigen::VectorXd centred = beta - pm;
  value -= 0.5 * (pp.array() * centred.array().square()).sum();

  LogPosterior out{value, {}, {}};
  if (derivatives) {
    out.gradient = X.transpose() * d1 - (pp.array() * centred.array()).matrix();
    out.hessian = X.transpose() * d2.asDiagonal() * X;
    out.hessian.diagonal() -= pp;
  }
  return out;
}

PosteriorFit fit_laplace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                         Link link, const ParamMap& nuisance, const PriorSpec& prior) {
  const Eigen::Index p = X.cols();
  if (X.rows() != y.size()) throw GlmError("X and y disagree in length");
  if (static_cast<Eigen::Index>(prior.mean.size()) != p ||
      static_cast<Eigen::Index>(prior.precision.size()) != p) {
    throw GlmError("prior dimension does not match the design matrix");
  }
  for (double prec : prior.precision) {
    if (!(prec > 0.0)) throw GlmError("prior precisions must be > 0");
  }
  if (!nuisance_problems(family, nuisance).empty()) throw GlmError("invalid nuisance parameters");

  constexpr int kMaxIter = 100;
  constexpr int kMaxHalvings = 30;
  constexpr double kScoreTol = 1e-8;
  constexpr double kStepTol = 1e-10;

  PosteriorFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  LogPosterior lp = log_posterior(X, y, family, link, nuisance, prior, beta);
  if (!std::isfinite(lp.value)) throw GlmError("non-finite log posterior at the start point");

  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    if (lp.gradient.cwiseAbs().maxCoeff() < kScoreTol) {
      converged = true;
      break;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(-lp.hessian);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = llt.solve(lp.gradient);

    double t = 1.0;
    bool accepted = false;
    LogPosterior candidate;
    Eigen::VectorXd next;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      next = beta + t * step;
      candidate = log_posterior(X, y, family, link, nuisance, prior, next, false);
      if (std::isfinite(candidate.value) && candidate.value >= lp.value) {
        accepted = true;
        break;
      }
    }
    const double scale = std::max(1.0, beta.cwiseAbs().maxCoeff());
    if (!accepted) {
      // No ascent possible: at the optimum up to rounding if the Newton step is negligible.
      converged = step.cwiseAbs().maxCoeff() < 1e-8 * scale;
      break;
    }
    const double change = (next - beta).cwiseAbs().maxCoeff() / scale;
    beta = next;
    lp = log_posterior(X, y, family, link, nuisance, prior, beta);
    if (change < kStepTol) {
      converged = true;
      ++iter;
      break;
    }
  }

  fit.mode = beta;
  fit.iterations = iter;
  fit.log_posterior = lp.value;
  fit.marginal_mean = beta;

  Eigen::LLT<Eigen::MatrixXd> llt(-lp.hessian);
  if (llt.info() != Eigen::Success || !lp.hessian.allFinite()) {
    fit.converged = false;
    fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    fit.marginal_sd = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    return fit;
  }
  const Eigen::MatrixXd L = llt.matrixL();
  fit.log_det_precision = 2.0 * L.diagonal().array().log().sum();
  fit.covariance = llt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  fit.marginal_sd = fit.covariance.diagonal().cwiseSqrt();
  fit.converged = converged && fit.marginal_sd.allFinite() && (fit.marginal_sd.array() > 0).all();
  return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double marginal_posterior_prob(const PosteriorFit& fit, std::size_t k, double delta,
                               Direction direction) {
  if (!fit.converged) throw GlmError("posterior probability requested from a non-converged fit");
  if (static_cast<Eigen::Index>(k) >= fit.mode.size()) throw GlmError("coefficient index out of range");
  const double z = (delta - fit.marginal_mean[static_cast<Eigen::Index>(k)]) /
                   fit.marginal_sd[static_cast<Eigen::Index>(k)];
  return direction == Direction::greater ? normal_cdf(-z) : normal_cdf(z);
}

ParamMap estimate_nuisance(const Cohort& data, const ModelSpec& model, const ParamMap& current) {
  if (model.family != Family::gaussian && model.family != Family::nbinomial) return current;
  const std::size_t arms = model.n_arms();
  std::vector<double> sum(arms, 0.0), sumsq(arms, 0.0);
  std::vector<int> count(arms, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t a = data.arm[i];
    sum[a] += data.response[i];
    sumsq[a] += data.response[i] * data.response[i];
    ++count[a];
  }

  ParamMap out = current;
  if (model.family == Family::gaussian) {
    double ss = 0.0;
    int df = 0;
    for (std::size_t a = 0; a < arms; ++a) {
      if (count[a] < 2) continue;
      ss += sumsq[a] - sum[a] * sum[a] / count[a];
      df += count[a] - 1;
    }
    if (df > 0 && ss > 0.0) out["sd"] = std::sqrt(ss / df);
    return out;
  }

  // Var = mu + mu^2 / size pooled over arms: size = sum n mu^2 / sum n (s^2 - mu).
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < arms; ++a) {
    if (count[a] < 2) continue;
    const double mean = sum[a] / count[a];
    const double var = (sumsq[a] - sum[a] * sum[a] / count[a]) / (count[a] - 1);
    num += count[a] * mean * mean;
    den += count[a] * (var - mean);
  }
  if (num > 0.0) {
    const double size = den > 0.0 ? num / den : 1e8;
    out["size"] = std::clamp(size, 1e-3, 1e8);
  }
  return out;
}

}  // namespace mamsim
