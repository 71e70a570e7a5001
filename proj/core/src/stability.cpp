#include "matchq/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace matchq {

namespace {

constexpr double kConservativityTol = 1e-9;
constexpr double kDriftMargin = 1e-12;
constexpr std::int64_t kWitnessCap = 1'000'000;

// Strong connectivity of the support graph via forward and backward BFS.
bool strongly_connected(const Matrix& G) {
  const auto dim = G.rows();
  if (dim <= 1) return true;
  const auto reach = [&](bool transpose) {
    std::vector<char> seen(dim, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < dim; ++v) {
        const double w = transpose ? G(v, u) : G(u, v);
        if (u != v && w > 0.0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}

}  // namespace

Matrix drift_generator_A(std::int64_t k, const Params& p) {
  if (k < 1) throw std::invalid_argument("drift_generator_A: k must be >= 1");
  GeneratorBlocks g(p);
  return g.a0(k) + g.a1(k) + g.a2(k);
}

Matrix drift_generator_B(std::int64_t l, const Params& p) {
  if (l > -2) throw std::invalid_argument("drift_generator_B: l must be <= -2");
  GeneratorBlocks g(p);
  return g.b0(l) + g.b1(l) + g.b2(l);
}

RowVector stationary_of_finite_generator(const Matrix& G) {
  const auto dim = G.rows();
  if (dim != G.cols()) throw std::invalid_argument("generator must be square");
  const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
  if ((G.rowwise().sum()).cwiseAbs().maxCoeff() > kConservativityTol * scale)
    throw std::invalid_argument("generator is not conservative");
  if (!strongly_connected(G))
    throw std::invalid_argument("generator is reducible");

  // Replace the last balance equation by the normalization alpha e = 1.
  Matrix A = G.transpose();
  A.row(dim - 1).setOnes();
  Vector rhs = Vector::Zero(dim);
  rhs(dim - 1) = 1.0;
  Vector alpha = A.partialPivLu().solve(rhs);

  const double residual = (alpha.transpose() * G).cwiseAbs().maxCoeff();
  if (residual > 1e-12 * scale || !(alpha.minCoeff() > -1e-12)) {
    // One refinement step through least squares on the stacked system.
    Matrix aug(dim + 1, dim);
    aug.topRows(dim) = G.transpose();
    aug.row(dim).setOnes();
    Vector b = Vector::Zero(dim + 1);
    b(dim) = 1.0;
    alpha = aug.colPivHouseholderQr().solve(b);
  }
  alpha = alpha.cwiseMax(0.0);
  alpha /= alpha.sum();
  return alpha.transpose();
}

DriftReport drift_rates_A(std::int64_t k, const Params& p) {
  GeneratorBlocks g(p);
  DriftReport rep;
  rep.level = k;
  rep.stationary = stationary_of_finite_generator(g.a0(k) + g.a1(k) + g.a2(k));
  rep.up_rate = rep.stationary * g.a0(k) * Vector::Ones(p.phase_count());
  rep.down_rate = rep.stationary * g.a2(k) * Vector::Ones(p.phase_count());
  return rep;
}

DriftReport drift_rates_B(std::int64_t l, const Params& p) {
  GeneratorBlocks g(p);
  DriftReport rep;
  rep.level = l;
  rep.stationary = stationary_of_finite_generator(g.b0(l) + g.b1(l) + g.b2(l));
  rep.up_rate = rep.stationary * g.b0(l) * Vector::Ones(p.phase_count());
  rep.down_rate = rep.stationary * g.b2(l) * Vector::Ones(p.phase_count());
  return rep;
}

StabilityReport is_stable(const Params& p) {
  p.validate();
  StabilityReport rep;
  for (std::int64_t k = 1; k <= kWitnessCap; ++k) {
    const DriftReport d = drift_rates_A(k, p);
    if (d.up_rate < d.down_rate - kDriftMargin) {
      rep.k_star = k;
      break;
    }
  }
  for (std::int64_t l = -2; l >= -kWitnessCap; --l) {
    const DriftReport d = drift_rates_B(l, p);
    if (d.up_rate < d.down_rate - kDriftMargin) {
      rep.l_star = l;
      break;
    }
  }
  rep.stable = rep.k_star != 0 && rep.l_star != 0;
  return rep;
}

}  // namespace matchq
