#pragma once

#include <cstdint>
#include <vector>

namespace matchq {

/// Event class of a single transition of the queue.  Reneging departures are
/// marked by customer class, a completed (m,n) match is one AB-marked
/// transition, and arrivals that do not complete a match are unmarked.
enum class Mark : std::uint8_t { None = 0, A = 1, B = 2, AB = 3 };

const char* mark_name(Mark m);

/// The six scalars defining the matched queue: Poisson arrival rates,
/// per-customer exponential impatience rates, and the matching batch sizes.
struct Params {
  double lambda1 = 0.0;  // A-arrival rate
  double lambda2 = 0.0;  // B-arrival rate
  double theta1 = 0.0;   // impatience rate of one waiting A customer
  double theta2 = 0.0;   // impatience rate of one waiting B customer
  int m = 0;             // A customers consumed per match
  int n = 0;             // B customers consumed per match

  int phase_count() const { return m * n; }

  /// Throws std::invalid_argument unless all four rates are strictly
  /// positive and m, n >= 1.
  void validate() const;

  /// The mirror model with the roles of the two classes exchanged.
  Params swapped() const;
};

/// Counts (i, j) of waiting A and B customers.  Valid states never have
/// i >= m and j >= n simultaneously: such a configuration matches instantly.
struct StateCoords {
  std::int64_t i = 0;
  std::int64_t j = 0;

  bool operator==(const StateCoords&) const = default;
};

/// Position of a state in the level/phase layout of the generator.
/// Positive levels track surplus A customers (i >= m), negative levels
/// surplus B customers (j >= n); every level holds m*n phases.
struct LevelPhase {
  std::int64_t level = 0;
  int phase = 0;

  bool operator==(const LevelPhase&) const = default;
};

bool in_state_space(StateCoords s, const Params& p);

/// Removes matched groups while both batches are available.
StateCoords apply_matching(StateCoords s, const Params& p);

/// Level/phase of a state.  Level 0 and positive levels are ordered
/// lexicographically in (i, j); negative levels use the reversed order
/// (j descending, then i descending).  Throws on states outside the
/// state space.
LevelPhase to_level_phase(StateCoords s, const Params& p);

/// Exact inverse of to_level_phase.  Throws if the phase is out of range.
StateCoords to_coords(LevelPhase lp, const Params& p);

struct Transition {
  StateCoords to;
  double rate = 0.0;
  Mark mark = Mark::None;
};

/// All outgoing transitions of a state: the two arrivals (with eager
/// matching applied to the target) and the two class reneges.  The total
/// rate is lambda1 + lambda2 + i*theta1 + j*theta2.
std::vector<Transition> transitions_from(StateCoords s, const Params& p);

double exit_rate(StateCoords s, const Params& p);

}  // namespace matchq
