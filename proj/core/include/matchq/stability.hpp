#pragma once

#include <cstdint>

#include "matchq/blocks.hpp"

namespace matchq {

/// Level-wise mean drift of one axis of the QBD process: the stationary
/// vector of the within-level drift generator together with the expected
/// rates of moving outward (away from level 0) and inward.
struct DriftReport {
  std::int64_t level = 0;
  double up_rate = 0.0;    // outward
  double down_rate = 0.0;  // inward
  RowVector stationary;    // of the drift generator, length m*n
};

/// Drift generator of positive level k: the sum of the three blocks of its
/// block row, a conservative irreducible generator on the level's phases.
Matrix drift_generator_A(std::int64_t k, const Params& p);

/// Mirror on the negative axis, defined for regular levels l <= -2.
Matrix drift_generator_B(std::int64_t l, const Params& p);

/// Unique solution of alpha G = 0, alpha e = 1 with alpha > 0 for a
/// conservative irreducible generator.  Throws std::invalid_argument when a
/// row does not sum to zero or the transition graph is not strongly
/// connected.
RowVector stationary_of_finite_generator(const Matrix& G);

DriftReport drift_rates_A(std::int64_t k, const Params& p);
DriftReport drift_rates_B(std::int64_t l, const Params& p);

struct StabilityReport {
  bool stable = false;
  std::int64_t k_star = 0;  // first positive level with strict downward drift
  std::int64_t l_star = 0;  // first negative level (<= -2) with strict drift
};

/// Both axes drift inward beyond finite witness levels whenever the
/// impatience rates are positive; the witnesses are found by upward scan.
StabilityReport is_stable(const Params& p);

}  // namespace matchq
