#include "matchq/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matchq {

namespace {

// Stacks the three block equations of levels 1, 0, -1 into one homogeneous
// system x M = 0 for x = [pi~_-1, pi~_0, pi~_1].
Matrix boundary_matrix(const GeneratorBlocks& g, const RgMeasures& pos,
                       const RgMeasures& neg) {
  const int d = g.params().phase_count();
  Matrix M = Matrix::Zero(3 * d, 3 * d);
  // Level 1 balance: pi~_0 A0(0) + pi~_1 [A1(1) + R_1 A2(2)] = 0.
  M.block(d, 0, d, d) = g.a0(0);
  M.block(2 * d, 0, d, d) = g.a1(1) + pos.R_at(1) * g.a2(2);
  // Level 0 balance: pi~_-1 B2(-1) + pi~_0 C + pi~_1 A2(1) = 0.
  M.block(0, d, d, d) = g.b2(-1);
  M.block(d, d, d, d) = g.c0();
  M.block(2 * d, d, d, d) = g.a2(1);
  // Level -1 balance: pi~_0 B0(0) + pi~_-1 [B1(-1) + R_-1 B2(-2)] = 0.
  M.block(0, 2 * d, d, d) = g.b1(-1) + neg.R_at(-1) * g.b2(-2);
  M.block(d, 2 * d, d, d) = g.b0(0);
  return M;
}

RowVector nullspace_by_pin(const Matrix& M, Eigen::Index pin) {
  const auto dim = M.rows();
  Matrix Mh = M;
  // Trade one scalar equation for the pin x[pin] = 1.
  Mh.col(0).setZero();
  Mh(pin, 0) = 1.0;
  Vector rhs = Vector::Zero(dim);
  rhs(0) = 1.0;
  return Mh.transpose().partialPivLu().solve(rhs).transpose();
}

RowVector nullspace_by_svd(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
  RowVector x = svd.matrixU().col(M.rows() - 1).transpose();
  if (x.sum() < 0) x = -x;
  return x;
}

double boundary_defect(const Matrix& M, const RowVector& x) {
  return (x * M).cwiseAbs().maxCoeff() / std::max(1.0, x.cwiseAbs().maxCoeff());
}

}  // namespace

BoundaryVectors solve_boundary(const GeneratorBlocks& g, const RgMeasures& pos,
                               const RgMeasures& neg) {
  const int d = g.params().phase_count();
  const Matrix M = boundary_matrix(g, pos, neg);
  const double scale = M.cwiseAbs().maxCoeff();

  // Pin the first entry of pi~_0 to 1; fall back to a full nullspace
  // decomposition when the pinned solve is degenerate or signs come out
  // wrong.
  RowVector x = nullspace_by_pin(M, d);
  const bool pin_ok = x.allFinite() && x.minCoeff() > -1e-9 * x.cwiseAbs().maxCoeff() &&
                      boundary_defect(M, x) <= 1e-10 * scale;
  if (!pin_ok) x = nullspace_by_svd(M);

  if (!x.allFinite() || x.cwiseAbs().maxCoeff() == 0.0)
    throw std::runtime_error("solve_boundary: no nontrivial solution found");
  if (x.minCoeff() < -1e-8 * x.cwiseAbs().maxCoeff())
    throw std::runtime_error("solve_boundary: solution is not nonnegative");

  x = x.cwiseMax(0.0);
  x /= x.maxCoeff();

  BoundaryVectors b;
  b.pi_neg1 = x.segment(0, d);
  b.pi_0 = x.segment(d, d);
  b.pi_pos1 = x.segment(2 * d, d);
  b.residual = (x * M).cwiseAbs().maxCoeff();
  if (b.residual > 1e-9 * std::max(1.0, scale))
    throw std::runtime_error("solve_boundary: residual too large");
  return b;
}

const RowVector& StationaryDist::level(std::int64_t k) const {
  if (k < -k_neg || k > k_pos)
    throw std::out_of_range("StationaryDist::level outside window");
  return levels[static_cast<std::size_t>(k + k_neg)];
}

double StationaryDist::prob(StateCoords s) const {
  const LevelPhase lp = to_level_phase(s, params);
  if (lp.level < -k_neg || lp.level > k_pos) return 0.0;
  return level(lp.level)(lp.phase);
}

RowVector StationaryDist::flatten() const {
  RowVector out(dim());
  const int d = params.phase_count();
  for (std::int64_t k = 0; k < level_count(); ++k) out.segment(k * d, d) = levels[k];
  return out;
}

StationaryDist assemble_stationary(const GeneratorBlocks& g, const RgMeasures& pos,
                                   const RgMeasures& neg, const BoundaryVectors& b,
                                   double tail_tol) {
  const Params& p = g.params();

  // Weighted by the largest customer count in the level so that the queue
  // length sums converge along with the probability mass.
  const auto level_weight = [&](std::int64_t k) {
    return static_cast<double>((std::abs(k) + 1) * std::max(p.m, p.n));
  };

  std::vector<RowVector> up{b.pi_pos1};
  std::vector<RowVector> down{b.pi_neg1};
  double total = b.pi_0.sum() + b.pi_pos1.sum() + b.pi_neg1.sum();

  for (std::int64_t k = 2; k <= pos.levels + 1; ++k) {
    RowVector next = up.back() * pos.R_at(k - 1);
    const double mass = next.sum();
    if (!(mass > 0)) break;
    up.push_back(std::move(next));
    total += mass;
    if (mass * level_weight(k) <= tail_tol * total) break;
  }
  for (std::int64_t l = -2; l >= -(neg.levels + 1); --l) {
    RowVector next = down.back() * neg.R_at(l + 1);
    const double mass = next.sum();
    if (!(mass > 0)) break;
    down.push_back(std::move(next));
    total += mass;
    if (mass * level_weight(l) <= tail_tol * total) break;
  }

  StationaryDist dist;
  dist.params = p;
  dist.boundary = b;
  dist.k_pos = static_cast<std::int64_t>(up.size());
  dist.k_neg = static_cast<std::int64_t>(down.size());
  dist.c = 1.0 / total;

  dist.levels.resize(dist.level_count());
  dist.levels[dist.k_neg] = dist.c * b.pi_0;
  for (std::int64_t k = 1; k <= dist.k_pos; ++k)
    dist.levels[dist.k_neg + k] = dist.c * up[k - 1];
  for (std::int64_t l = 1; l <= dist.k_neg; ++l)
    dist.levels[dist.k_neg - l] = dist.c * down[l - 1];

  // Geometric extrapolation of the dropped tail on each axis.
  const auto tail_bound = [&](const std::vector<RowVector>& seq) {
    if (seq.size() < 2) return 1.0;
    const double last = seq.back().sum();
    const double prev = seq[seq.size() - 2].sum();
    if (last <= 0.0) return 0.0;
    const double ratio = last / prev;
    if (!(ratio < 1.0)) return 1.0;
    return dist.c * last * ratio / (1.0 - ratio);
  };
  dist.tail_mass_bound = tail_bound(up) + tail_bound(down);
  return dist;
}

StationaryDist solve_stationary(const Params& p, const AnalysisOptions& opt) {
  p.validate();
  GeneratorBlocks g(p);
  RgOptions rg_opt;
  rg_opt.tol_cap = opt.rg_tol_cap;

  for (std::int64_t levels = std::max<std::int64_t>(opt.min_levels, 3);
       levels <= opt.max_levels; levels *= 2) {
    const RgMeasures pos = compute_rg_positive(g, levels, rg_opt);
    const RgMeasures neg = compute_rg_negative(g, levels, rg_opt);
    const BoundaryVectors b = solve_boundary(g, pos, neg);
    StationaryDist dist = assemble_stationary(g, pos, neg, b, opt.tail_tol);
    // Converged when both axes stopped before exhausting the R window.
    if (dist.k_pos <= levels && dist.k_neg <= levels &&
        dist.tail_mass_bound <= 1e3 * opt.tail_tol)
      return dist;
    if (levels * 2 > opt.max_levels)
      throw std::runtime_error("solve_stationary: window cap reached before the "
                               "tail converged");
  }
  throw std::runtime_error("solve_stationary: unreachable");
}

double mean_queue_length_A(const StationaryDist& d) {
  double total = 0.0;
  for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
    for (int phase = 0; phase < d.params.phase_count(); ++phase)
      total += static_cast<double>(to_coords({k, phase}, d.params).i) *
               d.level(k)(phase);
  return total;
}

double mean_queue_length_B(const StationaryDist& d) {
  double total = 0.0;
  for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
    for (int phase = 0; phase < d.params.phase_count(); ++phase)
      total += static_cast<double>(to_coords({k, phase}, d.params).j) *
               d.level(k)(phase);
  return total;
}

double balance_residual(const StationaryDist& d, const GeneratorBlocks& g) {
  const auto blk = [&g](std::int64_t from, std::int64_t to) -> const Matrix& {
    if (from == to) return from == 0 ? g.c0() : (from > 0 ? g.a1(from) : g.b1(from));
    if (to == from + 1) return from >= 0 ? g.a0(from) : g.b2(from);
    return from >= 1 ? g.a2(from) : g.b0(from);
  };
  double worst = 0.0;
  for (std::int64_t k = -d.k_neg + 1; k <= d.k_pos - 1; ++k) {
    RowVector r = d.level(k) * blk(k, k);
    r += d.level(k - 1) * blk(k - 1, k);
    r += d.level(k + 1) * blk(k + 1, k);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace matchq
