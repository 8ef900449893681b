#include "mamsim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "mamsim/family.hpp"

namespace mamsim {

std::vector<std::string> nuisance_problems(Family family, const ParamMap& nuisance) {
  std::vector<std::string> problems;
  if (family == Family::gaussian) {
    auto it = nuisance.find("sd");
    if (it == nuisance.end()) {
      problems.push_back("gaussian family requires nuisance parameter sd");
    } else if (!(std::isfinite(it->second) && it->second > 0.0)) {
      problems.push_back("gaussian sd must be finite and > 0");
    }
  } else if (family == Family::nbinomial) {
    auto it = nuisance.find("size");
    if (it == nuisance.end()) {
      problems.push_back("nbinomial family requires nuisance parameter size");
    } else if (!(std::isfinite(it->second) && it->second > 0.0)) {
      problems.push_back("nbinomial size must be finite and > 0");
    }
  }
  return problems;
}

double nuisance_sd(const ParamMap& nuisance) { return nuisance.at("sd"); }
double nuisance_size(const ParamMap& nuisance) { return nuisance.at("size"); }

double uniform01(Stream& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Stream& rng, std::size_t n) {
  // Lemire's multiply-shift with rejection; unbiased for any n.
  const std::uint64_t range = n;
  std::uint64_t x = rng();
  __uint128_t product = static_cast<__uint128_t>(x) * range;
  std::uint64_t low = static_cast<std::uint64_t>(product);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = rng();
      product = static_cast<__uint128_t>(x) * range;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::size_t>(product >> 64);
}

namespace {

std::vector<double> probabilities(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += std::abs(w);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DatagenError("allocation weights are all zero");
  }
  std::vector<double> p(weights.size());
  for (std::size_t a = 0; a < p.size(); ++a) p[a] = std::abs(weights[a]) / total;
  return p;
}

}  // namespace

std::vector<int> apportion(int m, const std::vector<double>& weights) {
  if (m < 1) throw DatagenError("cohort size must be >= 1");
  const auto p = probabilities(weights);
  std::vector<int> counts(p.size(), 0);
  std::vector<double> remainder(p.size(), 0.0);
  int assigned = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    const double quota = m * p[a];
    counts[a] = static_cast<int>(std::floor(quota));
    remainder[a] = quota - counts[a];
    assigned += counts[a];
  }
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < m; ++i) {
    const std::size_t a = order[i % order.size()];
    if (p[a] > 0.0) {
      ++counts[a];
      ++assigned;
    }
  }
  return counts;
}

std::vector<std::size_t> allocate_arms(int m, const std::vector<double>& weights,
                                       AllocationMethod method, Stream& rng) {
  if (m < 1) throw DatagenError("cohort size must be >= 1");
  std::vector<std::size_t> labels;
  labels.reserve(static_cast<std::size_t>(m));

  if (method == AllocationMethod::balanced) {
    const auto counts = apportion(m, weights);
    for (std::size_t a = 0; a < counts.size(); ++a) labels.insert(labels.end(), counts[a], a);
    for (std::size_t i = labels.size(); i > 1; --i) {
      std::swap(labels[i - 1], labels[uniform_index(rng, i)]);
    }
    return labels;
  }

  const auto p = probabilities(weights);
  std::vector<double> cumulative(p.size());
  std::partial_sum(p.begin(), p.end(), cumulative.begin());
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] > 0.0) last_positive = a;
  }
  for (int i = 0; i < m; ++i) {
    const double u = uniform01(rng);
    std::size_t a = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    // Rounding can leave the last cumulative value just below 1.
    if (a >= p.size() || p[a] == 0.0) a = std::min(a, last_positive);
    labels.push_back(a);
  }
  return labels;
}

namespace {

struct GeneratorInfo {
  std::vector<std::string> keys;
  std::size_t columns;
};

const std::map<std::string, GeneratorInfo>& generators() {
  static const std::map<std::string, GeneratorInfo> table = {
      {"normal", {{"mean", "sd"}, 1}},
      {"bernoulli", {{"p"}, 1}},
      {"uniform", {{"min", "max"}, 1}},
      {"bvnormal", {{"mean1", "mean2", "sd1", "sd2", "rho"}, 2}},
  };
  return table;
}

}  // namespace

std::vector<std::string> covariate_problems(const CovariateSpec& spec) {
  std::vector<std::string> problems;
  const std::string label = spec.names.empty() ? "<unnamed>" : spec.names.front();
  const auto it = generators().find(spec.generator);
  if (it == generators().end()) {
    problems.push_back("covariate " + label + ": unknown generator '" + spec.generator + "'");
    return problems;
  }
  const auto& info = it->second;
  if (spec.names.size() != info.columns) {
    problems.push_back("covariate " + label + ": generator " + spec.generator + " produces " +
                       std::to_string(info.columns) + " column(s)");
  }
  for (const auto& k : info.keys) {
    if (!spec.params.count(k)) problems.push_back("covariate " + label + ": missing parameter " + k);
  }
  for (const auto& [k, v] : spec.params) {
    if (std::find(info.keys.begin(), info.keys.end(), k) == info.keys.end()) {
      problems.push_back("covariate " + label + ": unexpected parameter " + k);
    } else if (!std::isfinite(v)) {
      problems.push_back("covariate " + label + ": parameter " + k + " is not finite");
    }
  }
  if (!problems.empty()) return problems;

  const auto& p = spec.params;
  if (spec.generator == "normal" && !(p.at("sd") > 0.0)) {
    problems.push_back("covariate " + label + ": sd must be > 0");
  } else if (spec.generator == "bernoulli" && !(p.at("p") >= 0.0 && p.at("p") <= 1.0)) {
    problems.push_back("covariate " + label + ": p must lie in [0, 1]");
  } else if (spec.generator == "uniform" && !(p.at("min") < p.at("max"))) {
    problems.push_back("covariate " + label + ": min must be < max");
  } else if (spec.generator == "bvnormal" &&
             !(p.at("sd1") > 0.0 && p.at("sd2") > 0.0 && std::abs(p.at("rho")) < 1.0)) {
    problems.push_back("covariate " + label + ": needs sd1, sd2 > 0 and |rho| < 1");
  }
  return problems;
}

Eigen::MatrixXd simulate_covariates(const std::vector<CovariateSpec>& specs, int m,
                                    const Stream& rng) {
  std::size_t columns = 0;
  for (const auto& s : specs) {
    auto problems = covariate_problems(s);
    if (!problems.empty()) throw DatagenError(problems.front());
    columns += s.names.size();
  }
  Eigen::MatrixXd out(m, static_cast<Eigen::Index>(columns));
  Eigen::Index col = 0;
  for (const auto& s : specs) {
    Stream stream = rng.split(s.names.front());
    const auto& p = s.params;
    if (s.generator == "normal") {
      std::normal_distribution<double> dist(p.at("mean"), p.at("sd"));
      for (int i = 0; i < m; ++i) out(i, col) = dist(stream);
    } else if (s.generator == "bernoulli") {
      const double prob = p.at("p");
      for (int i = 0; i < m; ++i) out(i, col) = uniform01(stream) < prob ? 1.0 : 0.0;
    } else if (s.generator == "uniform") {
      const double lo = p.at("min"), hi = p.at("max");
      for (int i = 0; i < m; ++i) out(i, col) = lo + (hi - lo) * uniform01(stream);
    } else {
      std::normal_distribution<double> z;
      const double rho = p.at("rho");
      const double tail = std::sqrt(1.0 - rho * rho);
      for (int i = 0; i < m; ++i) {
        const double z1 = z(stream), z2 = z(stream);
        out(i, col) = p.at("mean1") + p.at("sd1") * z1;
        out(i, col + 1) = p.at("mean2") + p.at("sd2") * (rho * z1 + tail * z2);
      }
    }
    col += static_cast<Eigen::Index>(s.names.size());
  }
  return out;
}

std::vector<double> simulate_response(const std::vector<double>& eta, Family family, Link link,
                                      const ParamMap& nuisance, Stream& rng) {
  auto problems = nuisance_problems(family, nuisance);
  if (!problems.empty()) throw DatagenError("invalid nuisance: " + problems.front());
  if (!supported_pair(family, link)) throw DatagenError("unsupported family/link pair");

  std::vector<double> y(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta[i])) throw DatagenError("non-finite linear predictor");
    const double mu = inverse_link(link, eta[i]);
    if (!std::isfinite(mu)) throw DatagenError("non-finite mean");
    switch (family) {
      case Family::gaussian: {
        std::normal_distribution<double> dist(mu, nuisance_sd(nuisance));
        y[i] = dist(rng);
        break;
      }
      case Family::binomial:
        y[i] = uniform01(rng) < mu ? 1.0 : 0.0;
        break;
      case Family::poisson: {
        if (mu <= 0.0) {
          y[i] = 0.0;
        } else {
          std::poisson_distribution<long long> dist(mu);
          y[i] = static_cast<double>(dist(rng));
        }
        break;
      }
      case Family::nbinomial: {
        const double size = nuisance_size(nuisance);
        if (mu <= 0.0) {
          y[i] = 0.0;
          break;
        }
        std::gamma_distribution<double> gamma(size, mu / size);
        const double rate = gamma(rng);
        if (rate <= 0.0) {
          y[i] = 0.0;
        } else {
          std::poisson_distribution<long long> dist(rate);
          y[i] = static_cast<double>(dist(rng));
        }
        break;
      }
    }
  }
  return y;
}

}  // namespace mamsim
