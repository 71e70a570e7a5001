#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "matchq/model.hpp"

namespace matchq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Roles of the mn x mn blocks of the bidirectional block-tridiagonal
/// generator.  A-roles live on levels >= 0, B-roles on levels <= 0, C is the
/// level-0 diagonal.  The boundary specials bridge the order change between
/// level 0 and level -1.
enum class BlockRole { A0, A1, A2, C, B0, B1, B2, B0Boundary, B2Boundary };

/// Transition-rate block from `from_level` into `to_level` (|difference| <= 1).
/// When the two levels coincide, the diagonal carries the negated total exit
/// rate of each state, so that the block row of the full generator sums to 0.
Matrix level_block(std::int64_t from_level, std::int64_t to_level, const Params& p);

/// Role-checked block constructor.  Throws on an inconsistent (role, level)
/// pair, e.g. an A-role on a negative level.
Matrix build_block(BlockRole role, std::int64_t level, const Params& p);

/// Cached block access for one parameter set.  All results are dense
/// mn x mn matrices owned by the cache; references stay valid for the
/// lifetime of the object.  Lookups are pure and the cache is pre-populated
/// lazily, so const access from several threads must be externally ordered.
class GeneratorBlocks {
 public:
  explicit GeneratorBlocks(const Params& p) : p_(p) { p_.validate(); }

  const Params& params() const { return p_; }

  const Matrix& a0(std::int64_t k) const;  // level k -> k+1, k >= 0
  const Matrix& a1(std::int64_t k) const;  // diagonal at level k >= 1
  const Matrix& a2(std::int64_t k) const;  // level k -> k-1, k >= 1
  const Matrix& c0() const;                // diagonal at level 0
  const Matrix& b0(std::int64_t l) const;  // level l -> l-1, l <= 0
  const Matrix& b1(std::int64_t l) const;  // diagonal at level l <= -1
  const Matrix& b2(std::int64_t l) const;  // level l -> l+1, l <= -1

 private:
  const Matrix& block(std::int64_t from, std::int64_t to) const;

  Params p_;
  mutable std::map<std::pair<std::int64_t, std::int64_t>, Matrix> cache_;
};

/// Finite section of the generator over levels [-k_neg, k_pos] with
/// reflecting closure: outward transitions at the two retained extremes are
/// dropped and their rates folded into the diagonal, keeping every row
/// conservative.  `truncation_defect` records the folded rate per row.
struct TruncatedGenerator {
  Params params;
  std::int64_t k_neg = 0;
  std::int64_t k_pos = 0;
  Matrix dense;
  Vector truncation_defect;

  std::int64_t dim() const { return dense.rows(); }
  std::int64_t level_count() const { return k_neg + k_pos + 1; }

  /// Row index of the first phase of `level`.
  std::int64_t level_offset(std::int64_t level) const;

  /// States in row order.
  std::vector<StateCoords> state_order() const;
};

/// Requires k_neg >= 2 and k_pos >= 2 so that the three boundary levels and
/// at least one regular level per axis are retained.
TruncatedGenerator build_truncated_generator(const Params& p, std::int64_t k_neg,
                                             std::int64_t k_pos);

}  // namespace matchq
