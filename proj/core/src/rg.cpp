#include "matchq/rg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace matchq {

namespace {

constexpr double kPivotFloor = 1e-13;

void check_pivots(const Eigen::PartialPivLU<Matrix>& lu, double scale,
                  std::int64_t level) {
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > kPivotFloor * std::max(1.0, scale)))
    throw std::runtime_error("singular U block at engine level " +
                             std::to_string(level));
}

// X = A * inv(U) given the LU factors of U.
Matrix right_divide(const Matrix& A, const Eigen::PartialPivLU<Matrix>& luU) {
  const Matrix xt = luU.transpose().solve(A.transpose());
  return xt.transpose();
}

}  // namespace

const Matrix& RgMeasures::R_at(std::int64_t paper_level) const {
  const std::int64_t k = axis == Axis::Positive ? paper_level : -paper_level;
  return R.at(static_cast<std::size_t>(k - 1));
}
const Matrix& RgMeasures::G_at(std::int64_t paper_level) const {
  const std::int64_t k = axis == Axis::Positive ? paper_level : -paper_level;
  return G.at(static_cast<std::size_t>(k - 1));
}
const Matrix& RgMeasures::U_at(std::int64_t paper_level) const {
  const std::int64_t k = axis == Axis::Positive ? paper_level : -paper_level;
  return U.at(static_cast<std::size_t>(k - 1));
}

RgMeasures compute_rg(const BlockSeq& seq, std::int64_t levels, Axis axis,
                      const RgOptions& opt) {
  if (levels < 1) throw std::invalid_argument("compute_rg: levels must be >= 1");

  // One backward pass from the cap; returns U_k, R_k, G_k for k in
  // [1, levels+1] (one spare level so the residuals cover [1, levels]).
  const auto sweep = [&](std::int64_t cap, std::vector<Matrix>& U,
                         std::vector<Matrix>& R, std::vector<Matrix>& G) {
    const std::int64_t keep = levels + 1;
    U.assign(keep, Matrix());
    R.assign(keep, Matrix());
    G.assign(keep, Matrix());
    Matrix u_above = seq.diag(cap);  // seed: neglect the outward term
    for (std::int64_t k = cap - 1; k >= 1; --k) {
      Eigen::PartialPivLU<Matrix> lu(u_above);
      check_pivots(lu, u_above.cwiseAbs().maxCoeff(), k + 1);
      const Matrix r = -right_divide(seq.up(k), lu);
      if (k + 1 <= keep) G[k] = -lu.solve(seq.down(k + 1));
      if (k <= keep) R[k - 1] = r;
      if (k + 1 <= keep) U[k] = u_above;
      u_above = seq.diag(k) + r * seq.down(k + 1);
    }
    {
      Eigen::PartialPivLU<Matrix> lu(u_above);
      check_pivots(lu, u_above.cwiseAbs().maxCoeff(), 1);
      G[0] = -lu.solve(seq.down(1));
      U[0] = u_above;
    }
  };

  RgMeasures out;
  out.axis = axis;
  out.levels = levels;

  std::vector<Matrix> U, R, G;
  std::int64_t cap = levels + 8;
  sweep(cap, U, R, G);
  for (;;) {
    std::vector<Matrix> U2, R2, G2;
    const std::int64_t cap2 = cap * 2;
    if (cap2 > opt.max_cap)
      throw std::runtime_error("compute_rg: cap exhausted without convergence");
    sweep(cap2, U2, R2, G2);
    const double change = (R2[0] - R[0]).cwiseAbs().maxCoeff();
    U.swap(U2);
    R.swap(R2);
    G.swap(G2);
    cap = cap2;
    if (change < opt.tol_cap) break;
  }

  out.U.assign(U.begin(), U.begin() + levels);
  out.R.assign(R.begin(), R.begin() + levels);
  out.G.assign(G.begin(), G.begin() + levels);

  for (std::int64_t k = 1; k <= levels; ++k) {
    const Matrix& rk = R[k - 1];
    const Matrix res_r = seq.up(k) + rk * seq.diag(k + 1) + rk * R[k] * seq.down(k + 2);
    out.residual_R = std::max(out.residual_R, res_r.cwiseAbs().maxCoeff());
    const Matrix res_g =
        seq.up(k) * G[k] * G[k - 1] + seq.diag(k) * G[k - 1] + seq.down(k);
    out.residual_G = std::max(out.residual_G, res_g.cwiseAbs().maxCoeff());
  }
  return out;
}

RgMeasures compute_rg_positive(const GeneratorBlocks& g, std::int64_t levels,
                               const RgOptions& opt) {
  BlockSeq seq{[&g](std::int64_t k) { return g.a1(k); },
               [&g](std::int64_t k) { return g.a0(k); },
               [&g](std::int64_t k) { return g.a2(k); }};
  return compute_rg(seq, levels, Axis::Positive, opt);
}

RgMeasures compute_rg_negative(const GeneratorBlocks& g, std::int64_t levels,
                               const RgOptions& opt) {
  BlockSeq seq{[&g](std::int64_t k) { return g.b1(-k); },
               [&g](std::int64_t k) { return g.b0(-k); },
               [&g](std::int64_t k) { return g.b2(-k); }};
  return compute_rg(seq, levels, Axis::Negative, opt);
}

UlFactorization UlFactorization::factorize(const BlockSeq& seq, std::int64_t L) {
  if (L < 1) throw std::invalid_argument("ul_factorize: window must be >= 1 level");
  UlFactorization f;
  f.U_.resize(L);
  f.R_.resize(L - 1);
  f.G_.resize(L >= 2 ? L - 1 : 0);
  f.lu_.reserve(L);

  f.U_[L - 1] = seq.diag(L);
  for (std::int64_t k = L - 1; k >= 1; --k) {
    Eigen::PartialPivLU<Matrix> lu(f.U_[k]);
    check_pivots(lu, f.U_[k].cwiseAbs().maxCoeff(), k + 1);
    const Matrix up = seq.up(k);
    f.R_[k - 1] = -right_divide(up, lu);
    f.G_[k - 1] = -lu.solve(seq.down(k + 1));
    f.U_[k - 1] = seq.diag(k) + f.R_[k - 1] * seq.down(k + 1);
  }
  for (std::int64_t k = 0; k < L; ++k) {
    f.lu_.emplace_back(f.U_[k]);
    check_pivots(f.lu_.back(), f.U_[k].cwiseAbs().maxCoeff(), k + 1);
  }
  f.offsets_.resize(L + 1);
  f.offsets_[0] = 0;
  for (std::int64_t k = 0; k < L; ++k)
    f.offsets_[k + 1] = f.offsets_[k] + f.U_[k].rows();
  return f;
}

std::vector<Vector> UlFactorization::solve_right(const std::vector<Vector>& v) const {
  const std::int64_t L = levels();
  if (static_cast<std::int64_t>(v.size()) != L)
    throw std::invalid_argument("solve_right: block count mismatch");
  std::vector<Vector> w(v);
  for (std::int64_t k = L - 1; k >= 1; --k) w[k - 1] += R_[k - 1] * w[k];
  for (std::int64_t k = 0; k < L; ++k) w[k] = lu_[k].solve(w[k]).eval();
  for (std::int64_t k = 1; k < L; ++k) w[k] += G_[k - 1] * w[k - 1];
  return w;
}

std::vector<RowVector> UlFactorization::solve_left(
    const std::vector<RowVector>& v) const {
  const std::int64_t L = levels();
  if (static_cast<std::int64_t>(v.size()) != L)
    throw std::invalid_argument("solve_left: block count mismatch");
  std::vector<RowVector> w(v);
  for (std::int64_t k = L - 1; k >= 1; --k) w[k - 1] += w[k] * G_[k - 1];
  for (std::int64_t k = 0; k < L; ++k) {
    const Vector col = lu_[k].transpose().solve(w[k].transpose());
    w[k] = col.transpose();
  }
  for (std::int64_t k = 1; k < L; ++k) w[k] += w[k - 1] * R_[k - 1];
  return w;
}

Matrix UlFactorization::solve_u1(const Matrix& B) const { return lu_[0].solve(B); }

Matrix UlFactorization::dense() const {
  const std::int64_t L = levels();
  const Eigen::Index dim = offsets_[L];
  Matrix ru = Matrix::Identity(dim, dim);
  Matrix ud = Matrix::Zero(dim, dim);
  Matrix gl = Matrix::Identity(dim, dim);
  for (std::int64_t k = 0; k < L; ++k) {
    ud.block(offsets_[k], offsets_[k], U_[k].rows(), U_[k].cols()) = U_[k];
    if (k + 1 < L) {
      ru.block(offsets_[k], offsets_[k + 1], R_[k].rows(), R_[k].cols()) = -R_[k];
      gl.block(offsets_[k + 1], offsets_[k], G_[k].rows(), G_[k].cols()) = -G_[k];
    }
  }
  return ru * ud * gl;
}

BidirectionalOperator::BidirectionalOperator(const BlockSeq& neg,
                                             std::int64_t levels_neg,
                                             const BlockSeq& pos,
                                             std::int64_t levels_pos,
                                             const Matrix& to_pos,
                                             const Matrix& to_neg)
    : levels_neg_(levels_neg),
      pos_(UlFactorization::factorize(pos, levels_pos)),
      to_pos_(to_pos),
      to_neg_(to_neg) {
  if (levels_neg_ > 0) {
    // Schur complement onto the negative part: only its first diagonal
    // block sees the positive side, through the two corner couplings.
    Matrix correction;
    if (to_pos_.size() > 0 && to_neg_.size() > 0)
      correction = to_pos_ * (-pos_.solve_u1(to_neg_));
    BlockSeq schur{
        [&neg, correction](std::int64_t k) -> Matrix {
          Matrix d = neg.diag(k);
          if (k == 1 && correction.size() > 0) d += correction;
          return d;
        },
        neg.up, neg.down};
    neg_ = UlFactorization::factorize(schur, levels_neg_);
  }
}

BidirVectors BidirectionalOperator::solve_right(const BidirVectors& v) const {
  BidirVectors x;
  if (levels_neg_ == 0) {
    x.pos = pos_.solve_right(v.pos);
    return x;
  }
  // x_neg = S^{-1} (v_neg - T12 T22^{-1} v_pos), S the Schur complement.
  std::vector<Vector> y = pos_.solve_right(v.pos);
  std::vector<Vector> w = v.neg;
  if (to_pos_.size() > 0) w[0] -= to_pos_ * y[0];
  x.neg = neg_.solve_right(w);
  // x_pos = T22^{-1} (v_pos - T21 x_neg).
  std::vector<Vector> rhs = v.pos;
  if (to_neg_.size() > 0) rhs[0] -= to_neg_ * x.neg[0];
  x.pos = pos_.solve_right(rhs);
  return x;
}

BidirRowVectors BidirectionalOperator::solve_left(const BidirRowVectors& v) const {
  BidirRowVectors x;
  if (levels_neg_ == 0) {
    x.pos = pos_.solve_left(v.pos);
    return x;
  }
  std::vector<RowVector> w = pos_.solve_left(v.pos);
  std::vector<RowVector> u = v.neg;
  if (to_neg_.size() > 0) u[0] -= w[0] * to_neg_;
  x.neg = neg_.solve_left(u);
  std::vector<RowVector> rhs = v.pos;
  if (to_pos_.size() > 0) rhs[0] -= x.neg[0] * to_pos_;
  x.pos = pos_.solve_left(rhs);
  return x;
}

}  // namespace matchq
