#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mamsim/config.hpp"

namespace mamsim {

inline double inverse_link(Link link, double eta) {
  switch (link) {
    case Link::identity: return eta;
    case Link::logit: return 1.0 / (1.0 + std::exp(-eta));
    default: return std::exp(eta);
  }
}

/// Supported family/link pairs: gaussian+identity, binomial+logit,
/// poisson+log, nbinomial+log.
inline bool supported_pair(Family family, Link link) {
  switch (family) {
    case Family::gaussian: return link == Link::identity;
    case Family::binomial: return link == Link::logit;
    default: return link == Link::log;
  }
}

/// Problems with the nuisance parameters a family needs (gaussian: sd > 0,
/// nbinomial: size > 0).
std::vector<std::string> nuisance_problems(Family family, const ParamMap& nuisance);

double nuisance_sd(const ParamMap& nuisance);
double nuisance_size(const ParamMap& nuisance);

}  // namespace mamsim
