#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "matchq/blocks.hpp"

namespace matchq {

/// Block row of a one-sided level-dependent QBD chain, indexed by engine
/// levels 1, 2, ... counted away from the boundary.  `up` moves outward
/// (level k to k+1), `down` moves inward (k to k-1).  On the positive axis
/// of the queue these are A1/A0/A2; on the negative axis B1/B0/B2 with the
/// level sign flipped.
struct BlockSeq {
  std::function<Matrix(std::int64_t)> diag;
  std::function<Matrix(std::int64_t)> up;
  std::function<Matrix(std::int64_t)> down;
};

enum class Axis { Positive, Negative };

/// Converged R-, G- and U-measures of one axis.  Engine index k corresponds
/// to paper level k on the positive axis and to paper level -k on the
/// negative axis.  The sequences solve the nonlinear systems
///   up(k) + R_k diag(k+1) + R_k R_{k+1} down(k+2) = 0        (R)
///   up(k) G_{k+1} G_k + diag(k) G_k + down(k) = 0            (G)
/// as the minimal nonnegative solutions; `residual_R`/`residual_G` report
/// the largest infinity-norm defect over the reported window.
struct RgMeasures {
  Axis axis = Axis::Positive;
  std::int64_t levels = 0;
  std::vector<Matrix> R;  // R[k-1] = R_k, k in [1, levels]
  std::vector<Matrix> G;  // G[k-1] = G_k
  std::vector<Matrix> U;  // U[k-1] = U_k
  double residual_R = 0.0;
  double residual_G = 0.0;

  const Matrix& R_at(std::int64_t paper_level) const;
  const Matrix& G_at(std::int64_t paper_level) const;
  const Matrix& U_at(std::int64_t paper_level) const;
};

struct RgOptions {
  double tol_residual = 1e-12;  // accepted nonlinear-equation defect
  double tol_cap = 1e-10;       // cap-doubling convergence of R_1
  std::int64_t max_cap = 1 << 16;
};

/// Backward U-recursion seeded with U_cap = diag(cap); the cap doubles until
/// R_1 is stable to `tol_cap`.  Throws on a singular U block or cap
/// exhaustion.
RgMeasures compute_rg(const BlockSeq& seq, std::int64_t levels, Axis axis,
                      const RgOptions& opt = {});

RgMeasures compute_rg_positive(const GeneratorBlocks& g, std::int64_t levels,
                               const RgOptions& opt = {});
RgMeasures compute_rg_negative(const GeneratorBlocks& g, std::int64_t levels,
                               const RgOptions& opt = {});

/// Exact UL-type factorization (I - R_U) U_D (I - G_L) of the finite
/// block-tridiagonal matrix spanned by engine levels [1, L].  For a
/// transient sub-generator the inverse image of a nonnegative vector is
/// entrywise nonpositive (maximal non-positive inverse).
class UlFactorization {
 public:
  static UlFactorization factorize(const BlockSeq& seq, std::int64_t L);

  std::int64_t levels() const { return static_cast<std::int64_t>(U_.size()); }
  const Matrix& U(std::int64_t k) const { return U_[k - 1]; }
  const Matrix& R(std::int64_t k) const { return R_[k - 1]; }  // 1 <= k <= L-1
  const Matrix& G(std::int64_t k) const { return G_[k - 2]; }  // 2 <= k <= L

  /// x with T x = v, blocks indexed by engine level.
  std::vector<Vector> solve_right(const std::vector<Vector>& v) const;
  /// x with x T = v.
  std::vector<RowVector> solve_left(const std::vector<RowVector>& v) const;

  /// X with U_1 X = B (the leading block of the inverse is U_1^{-1}).
  Matrix solve_u1(const Matrix& B) const;

  /// Reassembles the three factors into a dense matrix (testing aid).
  Matrix dense() const;

 private:
  std::vector<Matrix> U_, R_, G_;
  std::vector<Eigen::PartialPivLU<Matrix>> lu_;
  std::vector<Eigen::Index> offsets_;  // block start per engine level
};

/// Block vector split along the two-sided partition: `neg` holds the levels
/// of the inner-plus-negative part ordered from the boundary outward
/// (engine 1 first), `pos` the positive part.
struct BidirVectors {
  std::vector<Vector> neg;
  std::vector<Vector> pos;
};
struct BidirRowVectors {
  std::vector<RowVector> neg;
  std::vector<RowVector> pos;
};

/// Inverse of a 2x2-partitioned two-sided block-tridiagonal matrix whose
/// off-diagonal parts couple only through single corner blocks.  The Schur
/// complement of the positive part folds `to_pos * (-U_1^{-1}) * to_neg`
/// into the first diagonal block of the negative side, which is then
/// factored as a unilateral chain of its own.
class BidirectionalOperator {
 public:
  BidirectionalOperator(const BlockSeq& neg, std::int64_t levels_neg,
                        const BlockSeq& pos, std::int64_t levels_pos,
                        const Matrix& to_pos,   // corner: neg level 1 -> pos level 1
                        const Matrix& to_neg);  // corner: pos level 1 -> neg level 1

  BidirVectors solve_right(const BidirVectors& v) const;
  BidirRowVectors solve_left(const BidirRowVectors& v) const;

  std::int64_t levels_neg() const { return levels_neg_; }
  std::int64_t levels_pos() const { return pos_.levels(); }

 private:
  std::int64_t levels_neg_;
  UlFactorization pos_;
  UlFactorization neg_;  // of the Schur-corrected negative chain
  Matrix to_pos_, to_neg_;
};

}  // namespace matchq
