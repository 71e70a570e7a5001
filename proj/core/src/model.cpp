#include "matchq/model.hpp"

#include <stdexcept>
#include <string>

namespace matchq {

const char* mark_name(Mark m) {
  switch (m) {
    case Mark::None: return "none";
    case Mark::A: return "A";
    case Mark::B: return "B";
    case Mark::AB: return "AB";
  }
  return "?";
}

void Params::validate() const {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
    throw std::invalid_argument("arrival rates must be strictly positive");
  if (!(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::invalid_argument("impatience rates must be strictly positive");
  if (m < 1 || n < 1)
    throw std::invalid_argument("batch sizes m, n must be >= 1");
}

Params Params::swapped() const {
  return Params{lambda2, lambda1, theta2, theta1, n, m};
}

bool in_state_space(StateCoords s, const Params& p) {
  if (s.i < 0 || s.j < 0) return false;
  return s.i < p.m || s.j < p.n;
}

StateCoords apply_matching(StateCoords s, const Params& p) {
  while (s.i >= p.m && s.j >= p.n) {
    s.i -= p.m;
    s.j -= p.n;
  }
  return s;
}

LevelPhase to_level_phase(StateCoords s, const Params& p) {
  if (!in_state_space(s, p))
    throw std::invalid_argument("state (" + std::to_string(s.i) + "," +
                                std::to_string(s.j) + ") is not reachable");
  if (s.i < p.m && s.j < p.n) {
    return LevelPhase{0, static_cast<int>(s.i * p.n + s.j)};
  }
  if (s.i >= p.m) {
    const std::int64_t level = s.i / p.m;
    const int offset = static_cast<int>(s.i % p.m);
    return LevelPhase{level, static_cast<int>(offset * p.n + s.j)};
  }
  // j >= n: reversed lexicographic order within the level.
  const std::int64_t level = -(s.j / p.n);
  const int jp = static_cast<int>(s.j % p.n);
  const int phase = (p.n - 1 - jp) * p.m + (p.m - 1 - static_cast<int>(s.i));
  return LevelPhase{level, phase};
}

StateCoords to_coords(LevelPhase lp, const Params& p) {
  if (lp.phase < 0 || lp.phase >= p.phase_count())
    throw std::invalid_argument("phase out of range");
  if (lp.level == 0) {
    return StateCoords{lp.phase / p.n, lp.phase % p.n};
  }
  if (lp.level > 0) {
    const std::int64_t offset = lp.phase / p.n;
    return StateCoords{lp.level * p.m + offset, lp.phase % p.n};
  }
  const int a = lp.phase / p.m;  // n-1-j'
  const int b = lp.phase % p.m;  // m-1-i
  return StateCoords{p.m - 1 - b, (-lp.level) * p.n + (p.n - 1 - a)};
}

std::vector<Transition> transitions_from(StateCoords s, const Params& p) {
  if (!in_state_space(s, p))
    throw std::invalid_argument("transitions_from: state outside state space");
  std::vector<Transition> out;
  out.reserve(4);

  // A arrival, possibly completing a match.
  {
    StateCoords t{s.i + 1, s.j};
    const bool matched = t.i >= p.m && t.j >= p.n;
    out.push_back({apply_matching(t, p), p.lambda1, matched ? Mark::AB : Mark::None});
  }
  // B arrival.
  {
    StateCoords t{s.i, s.j + 1};
    const bool matched = t.i >= p.m && t.j >= p.n;
    out.push_back({apply_matching(t, p), p.lambda2, matched ? Mark::AB : Mark::None});
  }
  if (s.i >= 1)
    out.push_back({StateCoords{s.i - 1, s.j}, static_cast<double>(s.i) * p.theta1, Mark::A});
  if (s.j >= 1)
    out.push_back({StateCoords{s.i, s.j - 1}, static_cast<double>(s.j) * p.theta2, Mark::B});
  return out;
}

double exit_rate(StateCoords s, const Params& p) {
  return p.lambda1 + p.lambda2 + static_cast<double>(s.i) * p.theta1 +
         static_cast<double>(s.j) * p.theta2;
}

}  // namespace matchq
