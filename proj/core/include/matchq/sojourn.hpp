#pragma once

#include <cstdint>
#include <vector>

#include "matchq/rg.hpp"
#include "matchq/stationary.hpp"

namespace matchq {

/// integral_0^inf e^{-theta x} P{Erlang(r, lam) > x} dx
///   = sum_{k<r} lam^k / (lam+theta)^{k+1}.
/// Expected time until the r-th arrival of a Poisson(lam) stream, cut off by
/// an independent Exp(theta) clock.
double erlang_tail_integral(double lam, double theta, int r);

/// integral_0^inf e^{-theta x} (1 - F1(x) F2(x)) dx for two independent
/// Erlang variables: expected wait for the later of the two arrival batches,
/// cut off by an Exp(theta) clock.
double erlang_max_sojourn(double lam1, int r1, double lam2, int r2, double theta);

/// Expected residual sojourn of a tagged A customer given the post-arrival
/// counts (i, j), evaluated before any triggered match is applied (so i = m
/// with j >= n is the instantly-matched case and returns 0).  Requires
/// i >= 1; the pair must be reachable as a post-arrival configuration.
double conditional_sojourn_A(std::int64_t i, std::int64_t j, const Params& p);

enum class WeightConvention { Pasta, Paper };

const char* convention_name(WeightConvention c);

/// Distribution of the post-arrival counts seen by a tagged A customer.
/// Entries are pre-match pairs (i, j) with i >= 1.  Pasta weights each
/// observed stationary state and shifts i by the arrival itself; Paper
/// reproduces the stationary distribution conditioned on i >= 1.
struct ArrivalWeights {
  WeightConvention convention = WeightConvention::Pasta;
  struct Entry {
    std::int64_t i;
    std::int64_t j;
    double weight;
  };
  std::vector<Entry> entries;

  double total() const;
};

ArrivalWeights arrival_weights(const StationaryDist& d,
                               WeightConvention conv = WeightConvention::Pasta);

/// E[W] = E[Q1] / lambda1.
double mean_sojourn_little(const StationaryDist& d);

/// Weighted sum of the per-state case formulas.
double mean_sojourn_probabilistic(const StationaryDist& d, const ArrivalWeights& w);

/// First passage of the A queue to empty, computed on the sub-generator with
/// the states (0, .) absorbed.  `e_xi` is an upper bound for the mean
/// sojourn time.
struct FirstPassageResult {
  double e_xi = 0.0;
  double e_w_little = 0.0;
  bool upper_bound_holds = false;  // e_w_little <= e_xi + 1e-9
  std::int64_t k_neg = 0;          // window of the absorbing chain
  std::int64_t k_pos = 0;
};

FirstPassageResult mean_first_passage_upper(const StationaryDist& d,
                                            const ArrivalWeights& w);

/// Mean absorption time per transient state of the absorbing chain on the
/// given window, solved through the two-sided factorization.  Exposed for
/// cross-checks against a dense solve; `ph_dense`/`ph_initial_dense` build
/// the identical matrix and initial vector in window order (levels from
/// -k_neg to k_pos, kept phases in level order).
Vector ph_absorption_times(const Params& p, std::int64_t k_neg, std::int64_t k_pos);
Matrix ph_dense(const Params& p, std::int64_t k_neg, std::int64_t k_pos);
RowVector ph_initial_dense(const ArrivalWeights& w, const Params& p,
                           std::int64_t k_neg, std::int64_t k_pos);

struct SojournSummary {
  double e_w_little = 0.0;
  double e_w_probabilistic = 0.0;
  double e_xi_upper = 0.0;
  bool upper_bound_holds = false;
  WeightConvention convention = WeightConvention::Pasta;
};

SojournSummary compute_sojourn(const StationaryDist& d,
                               WeightConvention conv = WeightConvention::Pasta);

}  // namespace matchq
