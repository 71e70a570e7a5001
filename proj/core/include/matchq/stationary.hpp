#pragma once

#include <cstdint>
#include <vector>

#include "matchq/blocks.hpp"
#include "matchq/rg.hpp"

namespace matchq {

/// The three boundary vectors tying the two axes together, solved from the
/// homogeneous balance equations of levels 1, 0, -1 and scaled so the
/// largest entry is 1 (the global constant c is applied later).
struct BoundaryVectors {
  RowVector pi_neg1;
  RowVector pi_0;
  RowVector pi_pos1;
  double residual = 0.0;  // infinity norm over the three block equations
};

BoundaryVectors solve_boundary(const GeneratorBlocks& g, const RgMeasures& pos,
                               const RgMeasures& neg);

/// Stationary distribution assembled over the window [-k_neg, k_pos]:
/// pi_k = c pi~_1 R_1 ... R_{k-1} on the positive axis and the mirrored
/// product on the negative axis, with c the normalizing constant over the
/// retained window.
struct StationaryDist {
  Params params;
  std::int64_t k_neg = 0;
  std::int64_t k_pos = 0;
  std::vector<RowVector> levels;  // index 0 <-> level -k_neg
  double c = 0.0;
  double tail_mass_bound = 0.0;
  BoundaryVectors boundary;

  std::int64_t dim() const { return level_count() * params.phase_count(); }
  std::int64_t level_count() const { return k_neg + k_pos + 1; }
  const RowVector& level(std::int64_t k) const;
  double prob(StateCoords s) const;  // 0 outside the window
  RowVector flatten() const;         // window order, level -k_neg first
};

struct AnalysisOptions {
  double tail_tol = 1e-12;       // level mass cut-off, relative
  double rg_tol_cap = 1e-10;     // cap-doubling tolerance of the R recursion
  std::int64_t min_levels = 8;   // smallest window per axis
  std::int64_t max_levels = 4096;
};

StationaryDist assemble_stationary(const GeneratorBlocks& g, const RgMeasures& pos,
                                   const RgMeasures& neg, const BoundaryVectors& b,
                                   double tail_tol = 1e-12);

/// Full pipeline: R/G/U measures on both axes, boundary solve, assembly.
/// The per-axis window grows until the level tail mass is below tail_tol.
StationaryDist solve_stationary(const Params& p, const AnalysisOptions& opt = {});

double mean_queue_length_A(const StationaryDist& d);
double mean_queue_length_B(const StationaryDist& d);

/// Infinity norm of pi Q over the interior rows of the window (excludes the
/// two reflecting edge levels).
double balance_residual(const StationaryDist& d, const GeneratorBlocks& g);

}  // namespace matchq
