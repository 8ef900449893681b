#include "mamsim/quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mamsim {

namespace {

constexpr int kDims = 3;

// Rows of X with identical values share sufficient statistics.
struct RowGroup {
  std::array<double, kDims> x{};
  double sum_y = 0.0;
  double sum_y2 = 0.0;
  double count = 0.0;
};

class GridPosterior {
 public:
  GridPosterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                const ParamMap& nuisance, const PriorSpec& prior)
      : p_(static_cast<int>(X.cols())), family_(family) {
    if (p_ < 1 || p_ > kDims) throw std::invalid_argument("quadrature oracle supports 1 <= p <= 3");
    if (X.rows() != y.size()) throw std::invalid_argument("X and y disagree in length");
    if (family == Family::gaussian) sd_ = nuisance.at("sd");
    if (family == Family::nbinomial) size_ = nuisance.at("size");
    for (int a = 0; a < kDims; ++a) {
      prior_mean_[a] = a < p_ ? prior.mean[a] : 0.0;
      prior_prec_[a] = a < p_ ? prior.precision[a] : 1.0;
    }
    std::map<std::array<double, kDims>, RowGroup> grouped;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      std::array<double, kDims> key{};
      for (int a = 0; a < p_; ++a) key[a] = X(i, a);
      RowGroup& g = grouped[key];
      g.x = key;
      g.sum_y += y[i];
      g.sum_y2 += y[i] * y[i];
      g.count += 1.0;
    }
    for (auto& [_, g] : grouped) groups_.push_back(g);
  }

  int dims() const { return p_; }
  double prior_mean(int a) const { return prior_mean_[a]; }
  double prior_sd(int a) const { return 1.0 / std::sqrt(prior_prec_[a]); }
  const std::vector<RowGroup>& groups() const { return groups_; }

  double log_prior(int a, double b) const {
    if (a >= p_) return 0.0;
    const double c = b - prior_mean_[a];
    return -0.5 * prior_prec_[a] * c * c;
  }

  // Summed log-likelihood of a row group at linear predictor eta.
  double group_term(const RowGroup& g, double eta) const {
    switch (family_) {
      case Family::gaussian:
        return -(g.sum_y2 - 2.0 * eta * g.sum_y + g.count * eta * eta) / (2.0 * sd_ * sd_);
      case Family::binomial: {
        const double softplus =
            eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
        return g.sum_y * eta - g.count * softplus;
      }
      case Family::poisson:
        return g.sum_y * eta - g.count * std::exp(eta);
      default: {
        const double ls = std::log(size_);
        const double t = eta - ls;
        const double log_sum = ls + (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)));
        return g.sum_y * eta - (g.sum_y + g.count * size_) * log_sum;
      }
    }
  }

  double eval(const std::array<double, kDims>& b) const {
    double lp = 0.0;
    for (int a = 0; a < kDims; ++a) lp += log_prior(a, b[a]);
    for (const auto& g : groups_) {
      double eta = 0.0;
      for (int a = 0; a < p_; ++a) eta += g.x[a] * b[a];
      lp += group_term(g, eta);
    }
    return lp;
  }

 private:
  int p_;
  Family family_;
  double sd_ = 1.0;
  double size_ = 1.0;
  std::array<double, kDims> prior_mean_{};
  std::array<double, kDims> prior_prec_{};
  std::vector<RowGroup> groups_;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

struct Box {
  std::array<double, kDims> center{};
  std::array<double, kDims> half{};
  double log_ref = 0.0;  // largest log posterior seen on the last coarse grid
};

// Zooms a coarse grid onto the posterior mass: each pass recentres on the
// grid mean (or argmax when the mass sits in one cell) and resizes the box
// to +-width marginal sds.
Box locate(const GridPosterior& post, double width) {
  constexpr int kCoarse = 41;
  const int p = post.dims();
  Box box;
  for (int a = 0; a < kDims; ++a) {
    box.center[a] = a < p ? post.prior_mean(a) : 0.0;
    box.half[a] = a < p ? width * post.prior_sd(a) : 0.0;
  }

  for (int pass = 0; pass < 80; ++pass) {
    std::array<std::vector<double>, kDims> nodes;
    for (int a = 0; a < kDims; ++a) {
      nodes[a] = a < p ? linspace(box.center[a] - box.half[a], box.center[a] + box.half[a], kCoarse)
                       : std::vector<double>{0.0};
    }
    const auto n0 = nodes[0].size(), n1 = nodes[1].size(), n2 = nodes[2].size();
    std::vector<double> lp(n0 * n1 * n2);
    double best = -std::numeric_limits<double>::infinity();
    std::array<std::size_t, kDims> arg{};
    for (std::size_t i = 0; i < n0; ++i) {
      for (std::size_t j = 0; j < n1; ++j) {
        for (std::size_t l = 0; l < n2; ++l) {
          const double v = post.eval({nodes[0][i], nodes[1][j], nodes[2][l]});
          lp[(i * n1 + j) * n2 + l] = v;
          if (v > best) {
            best = v;
            arg = {i, j, l};
          }
        }
      }
    }
    if (!std::isfinite(best)) throw std::runtime_error("quadrature oracle: posterior underflow");

    std::array<double, kDims> s1{}, s2{};
    double total = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
      for (std::size_t j = 0; j < n1; ++j) {
        for (std::size_t l = 0; l < n2; ++l) {
          const double w = std::exp(lp[(i * n1 + j) * n2 + l] - best);
          total += w;
          const std::array<double, kDims> b{nodes[0][i], nodes[1][j], nodes[2][l]};
          for (int a = 0; a < kDims; ++a) {
            s1[a] += w * b[a];
            s2[a] += w * b[a] * b[a];
          }
        }
      }
    }
    box.log_ref = best;

    bool stable = pass > 0;
    for (int a = 0; a < p; ++a) {
      const double mean = s1[a] / total;
      const double sd = std::sqrt(std::max(0.0, s2[a] / total - mean * mean));
      const double step = 2.0 * box.half[a] / (kCoarse - 1);
      const std::size_t idx = arg[a];
      const bool on_edge = idx == 0 || idx + 1 == nodes[a].size();
      double centre, half;
      if (on_edge) {
        centre = nodes[a][idx];
        half = 2.0 * box.half[a];
      } else if (sd < step) {
        centre = nodes[a][idx];
        half = std::max(width * sd, 2.0 * step);
      } else {
        centre = mean;
        half = width * sd;
      }
      if (std::abs(half - box.half[a]) > 0.02 * box.half[a] ||
          std::abs(centre - box.center[a]) > 0.02 * box.half[a]) {
        stable = false;
      }
      box.center[a] = centre;
      box.half[a] = half;
    }
    if (stable) return box;
  }
  return box;
}

struct FineResult {
  std::vector<double> nodes_k;
  std::vector<double> marginal_k;
  std::ptrdiff_t delta_index = -1;
  double h = 0.0;
};

FineResult integrate(const GridPosterior& post, const Box& box, int k, std::optional<double> delta,
                     int points) {
  const int p = post.dims();
  std::array<std::vector<double>, kDims> nodes;
  FineResult out;
  for (int a = 0; a < kDims; ++a) {
    if (a >= p) {
      nodes[a] = {0.0};
    } else if (a == k && delta) {
      const double lo = box.center[a] - box.half[a], hi = box.center[a] + box.half[a];
      const double h = (hi - lo) / (points - 1);
      const auto jlo = static_cast<long>(std::floor((lo - *delta) / h));
      const auto jhi = static_cast<long>(std::ceil((hi - *delta) / h));
      for (long j = jlo; j <= jhi; ++j) nodes[a].push_back(*delta + static_cast<double>(j) * h);
      if (jlo <= 0 && jhi >= 0) out.delta_index = -jlo;
      out.h = h;
    } else {
      nodes[a] = linspace(box.center[a] - box.half[a], box.center[a] + box.half[a], points);
      if (a == k) out.h = nodes[a][1] - nodes[a][0];
    }
  }
  const std::array<std::size_t, kDims> n{nodes[0].size(), nodes[1].size(), nodes[2].size()};

  // Row groups whose support spans at most two axes are tabulated over those
  // axes; full-support groups are evaluated point by point.
  struct Table {
    std::array<std::size_t, kDims> stride{};
    std::vector<double> values;
  };
  std::map<unsigned, Table> tables;
  std::vector<const RowGroup*> direct;
  for (const auto& g : post.groups()) {
    unsigned mask = 0;
    for (int a = 0; a < p; ++a) {
      if (g.x[a] != 0.0) mask |= 1u << a;
    }
    if (__builtin_popcount(mask) == kDims) {
      direct.push_back(&g);
      continue;
    }
    Table& t = tables[mask];
    if (t.values.empty()) {
      std::size_t size = 1;
      for (int a = kDims - 1; a >= 0; --a) {
        if (mask & (1u << a)) {
          t.stride[a] = size;
          size *= n[a];
        }
      }
      t.values.assign(size, 0.0);
    }
    for (std::size_t i = 0; i < n[0]; ++i) {
      if (!(mask & 1u) && i > 0) break;
      for (std::size_t j = 0; j < n[1]; ++j) {
        if (!(mask & 2u) && j > 0) break;
        for (std::size_t l = 0; l < n[2]; ++l) {
          if (!(mask & 4u) && l > 0) break;
          const double eta = g.x[0] * nodes[0][i] + g.x[1] * nodes[1][j] + g.x[2] * nodes[2][l];
          t.values[i * t.stride[0] + j * t.stride[1] + l * t.stride[2]] += post.group_term(g, eta);
        }
      }
    }
  }
  std::vector<const Table*> table_list;
  for (const auto& [_, t] : tables) table_list.push_back(&t);

  std::array<std::vector<double>, kDims> prior;
  for (int a = 0; a < kDims; ++a) {
    for (double b : nodes[a]) prior[a].push_back(post.log_prior(a, b));
  }

  out.nodes_k = nodes[k];
  out.marginal_k.assign(n[k], 0.0);
  const double ref = box.log_ref;
  for (std::size_t i = 0; i < n[0]; ++i) {
    for (std::size_t j = 0; j < n[1]; ++j) {
      const double base = prior[0][i] + prior[1][j];
      for (std::size_t l = 0; l < n[2]; ++l) {
        double lp = base + prior[2][l];
        for (const Table* t : table_list) {
          lp += t->values[i * t->stride[0] + j * t->stride[1] + l * t->stride[2]];
        }
        for (const RowGroup* g : direct) {
          lp += post.group_term(*g, g->x[0] * nodes[0][i] + g->x[1] * nodes[1][j] +
                                        g->x[2] * nodes[2][l]);
        }
        const std::size_t idx = k == 0 ? i : (k == 1 ? j : l);
        out.marginal_k[idx] += std::exp(lp - ref);
      }
    }
  }
  return out;
}

}  // namespace

double quadrature_oracle_prob(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                              Link, const ParamMap& nuisance, const PriorSpec& prior,
                              std::size_t k, double delta, Direction direction,
                              const QuadratureOptions& options) {
  const GridPosterior post(X, y, family, nuisance, prior);
  if (static_cast<int>(k) >= post.dims()) throw std::invalid_argument("coefficient index out of range");
  if (options.points_per_axis < 401) throw std::invalid_argument("need >= 401 points per axis");
  const Box box = locate(post, options.half_width_sds);
  const FineResult fine = integrate(post, box, static_cast<int>(k), delta, options.points_per_axis);

  const auto& m = fine.marginal_k;
  double total = 0.0;
  for (double v : m) total += v;
  total *= fine.h;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::runtime_error("quadrature oracle: grid underflow");
  }

  double upper;
  if (fine.delta_index < 0) {
    upper = delta < fine.nodes_k.front() ? total : 0.0;
  } else {
    const auto j0 = static_cast<std::size_t>(fine.delta_index);
    double tail = 0.5 * m[j0];
    for (std::size_t j = j0 + 1; j < m.size(); ++j) tail += m[j];
    tail *= fine.h;
    // Euler-Maclaurin end correction at the cut: + h^2/12 f'(delta).
    if (j0 > 0 && j0 + 1 < m.size()) {
      const double slope = (m[j0 + 1] - m[j0 - 1]) / (2.0 * fine.h);
      tail += fine.h * fine.h / 12.0 * slope;
    }
    upper = tail;
  }
  const double greater = upper / total;
  return direction == Direction::greater ? greater : 1.0 - greater;
}

double quadrature_oracle_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                              Link, const ParamMap& nuisance, const PriorSpec& prior,
                              std::size_t k, const QuadratureOptions& options) {
  const GridPosterior post(X, y, family, nuisance, prior);
  if (static_cast<int>(k) >= post.dims()) throw std::invalid_argument("coefficient index out of range");
  const Box box = locate(post, options.half_width_sds);
  const FineResult fine =
      integrate(post, box, static_cast<int>(k), std::nullopt, options.points_per_axis);
  double total = 0.0, first = 0.0;
  for (std::size_t j = 0; j < fine.marginal_k.size(); ++j) {
    total += fine.marginal_k[j];
    first += fine.marginal_k[j] * fine.nodes_k[j];
  }
  if (!(total > 0.0)) throw std::runtime_error("quadrature oracle: grid underflow");
  return first / total;
}

}  // namespace mamsim
