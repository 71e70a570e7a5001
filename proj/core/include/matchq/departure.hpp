#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "matchq/rg.hpp"
#include "matchq/stationary.hpp"

namespace matchq {

/// Marked decomposition of the truncated generator: DA carries the
/// single-A reneging transitions, DB the single-B ones, DAB the
/// match-completing arrivals, and D0 = Q - DA - DB - DAB the unmarked part
/// (remaining arrivals plus the diagonal).
struct MmapSet {
  Params params;
  std::int64_t k_neg = 0;
  std::int64_t k_pos = 0;
  Matrix D0, DA, DB, DAB;

  std::int64_t dim() const { return D0.rows(); }
  const Matrix& of(Mark mark) const;
};

/// Classifies every transition of the window by its physical event.  Throws
/// if any positive rate ends up unclassified (which would leave a negative
/// off-diagonal in D0).
MmapSet build_mmap(const Params& p, std::int64_t k_neg, std::int64_t k_pos);

struct DepartureRates {
  double mu_A_impatient = 0.0;
  double mu_B_impatient = 0.0;
  double mu_AB = 0.0;
  double mu_A_total = 0.0;  // = mu_A_impatient + m * mu_AB
  double mu_B_total = 0.0;
  double mu_all = 0.0;
};

DepartureRates departure_rates(const StationaryDist& d, const MmapSet& mmap);

enum class Direction { Backward, Forward };

/// Mark distributions of the departure stream seen from a stationary time
/// point, each over {A, B, AB}.
struct MarkTriples {
  std::array<double, 3> backward{};
  std::array<double, 3> forward{};
  std::array<double, 3> at_departure{};

  static constexpr std::array<Mark, 3> order{Mark::A, Mark::B, Mark::AB};
};

/// Applies (-D0^{-1}) through the two-sided factorization of the unmarked
/// part, reusing the same machinery as the first-passage analysis.
class MarkCalculator {
 public:
  MarkCalculator(const StationaryDist& d, const MmapSet& mmap);

  MarkTriples triples() const;
  double sequence_probability(const std::vector<Mark>& seq, Direction dir) const;

 private:
  RowVector apply_neg_d0_inverse(const RowVector& v) const;  // v (-D0^{-1})
  Vector apply_neg_d0_inverse(const Vector& v) const;        // (-D0^{-1}) v

  const MmapSet& mmap_;
  RowVector pi_;
  BidirectionalOperator op_;
};

MarkTriples mark_probabilities(const StationaryDist& d, const MmapSet& mmap);

/// Probability that the next (forward) or last (backward) |seq| departures
/// carry the given marks.  Sequences up to length 8.
double consecutive_mark_probability(const StationaryDist& d, const MmapSet& mmap,
                                    const std::vector<Mark>& seq, Direction dir);

}  // namespace matchq
