#include "matchq/sojourn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace matchq {

namespace {

// Index layout of the absorbing chain: the states (0, .) are removed, so
// negative levels and level 0 keep (m-1)*n phases each, positive levels all
// m*n.  Window order runs from level -k_neg to k_pos.
struct PhIndex {
  Params p;
  std::int64_t k_neg = 0;
  std::int64_t k_pos = 0;

  std::int64_t reduced_size() const {
    return static_cast<std::int64_t>(p.m - 1) * p.n;
  }
  std::int64_t offset(std::int64_t level) const {
    if (level <= 0) return (level + k_neg) * reduced_size();
    return (k_neg + 1) * reduced_size() + (level - 1) * p.phase_count();
  }
  std::int64_t dim() const { return offset(k_pos) + (k_pos >= 1 ? p.phase_count() : 0); }

  // -1: absorbed (i == 0); -2: outside the window.
  std::int64_t index_of(StateCoords s) const {
    if (s.i == 0) return -1;
    const LevelPhase lp = to_level_phase(s, p);
    if (lp.level < -k_neg || lp.level > k_pos) return -2;
    if (lp.level >= 1) return offset(lp.level) + lp.phase;
    if (lp.level == 0) return offset(0) + (lp.phase - p.n);
    const int b = lp.phase % p.m;  // m-1-i
    return offset(lp.level) + (lp.phase / p.m) * (p.m - 1) + b;
  }
};

std::vector<int> iota_phases(int count, int start = 0) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), start);
  return v;
}

// Phases of a negative level with i >= 1 (drop every m-th, the i = 0 slots).
std::vector<int> reduced_neg_phases(const Params& p) {
  std::vector<int> v;
  v.reserve(static_cast<std::size_t>(p.m - 1) * p.n);
  for (int q = 0; q < p.phase_count(); ++q)
    if (q % p.m != p.m - 1) v.push_back(q);
  return v;
}

Matrix slice(const Matrix& M, const std::vector<int>& rows,
             const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          M(rows[r], cols[c]);
  return out;
}

}  // namespace

double erlang_tail_integral(double lam, double theta, int r) {
  if (!(theta > 0.0)) throw std::invalid_argument("erlang_tail_integral: theta <= 0");
  if (lam < 0.0 || r < 1) throw std::invalid_argument("erlang_tail_integral: bad args");
  double term = 1.0 / (lam + theta);
  double sum = term;
  for (int k = 1; k < r; ++k) {
    term *= lam / (lam + theta);
    sum += term;
  }
  return sum;
}

double erlang_max_sojourn(double lam1, int r1, double lam2, int r2, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("erlang_max_sojourn: theta <= 0");
  if (!(lam1 > 0.0) || !(lam2 > 0.0) || r1 < 1 || r2 < 1)
    throw std::invalid_argument("erlang_max_sojourn: bad args");
  const double big = lam1 + lam2 + theta;
  // 1 - F1 F2 = (1-F1) + (1-F2) - (1-F1)(1-F2); the cross term integrates
  // to a double sum of negative-binomial weights.
  double cross = 0.0;
  double row = 1.0 / big;  // T(0, l) running over l
  for (int l = 0; l < r2; ++l) {
    if (l > 0) row *= lam2 / big;
    double term = row;  // T(k, l) running over k
    cross += term;
    for (int k = 1; k < r1; ++k) {
      term *= lam1 * static_cast<double>(k + l) / (static_cast<double>(k) * big);
      cross += term;
    }
  }
  return erlang_tail_integral(lam1, theta, r1) + erlang_tail_integral(lam2, theta, r2) -
         cross;
}

double conditional_sojourn_A(std::int64_t i, std::int64_t j, const Params& p) {
  if (i < 1)
    throw std::invalid_argument("conditional_sojourn_A: i >= 1 required");
  if (j >= p.n) {  // case a: enough B customers are already waiting
    if (i > p.m)
      throw std::invalid_argument("conditional_sojourn_A: unreachable state");
    if (i == p.m) return 0.0;
    return erlang_tail_integral(p.lambda1, p.theta1, static_cast<int>(p.m - i));
  }
  if (i <= p.m) {  // case b
    if (i == p.m)
      return erlang_tail_integral(p.lambda2, p.theta1, static_cast<int>(p.n - j));
    return erlang_max_sojourn(p.lambda1, static_cast<int>(p.m - i), p.lambda2,
                              static_cast<int>(p.n - j), p.theta1);
  }
  // case c: the tagged customer waits through h full matches ahead of it.
  const std::int64_t h = (i - 1) / p.m;
  const std::int64_t f = (i - 1) % p.m;
  const int b_needed = static_cast<int>(h * p.n + p.n - j);
  if (f == p.m - 1) return erlang_tail_integral(p.lambda2, p.theta1, b_needed);
  return erlang_max_sojourn(p.lambda1, static_cast<int>(p.m - f - 1), p.lambda2,
                            b_needed, p.theta1);
}

const char* convention_name(WeightConvention c) {
  return c == WeightConvention::Pasta ? "pasta" : "paper";
}

double ArrivalWeights::total() const {
  double t = 0.0;
  for (const Entry& e : entries) t += e.weight;
  return t;
}

ArrivalWeights arrival_weights(const StationaryDist& d, WeightConvention conv) {
  ArrivalWeights w;
  w.convention = conv;
  const Params& p = d.params;
  if (conv == WeightConvention::Pasta) {
    // The arriving customer sees the stationary state and joins it.
    for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
      for (int phase = 0; phase < p.phase_count(); ++phase) {
        const StateCoords s = to_coords({k, phase}, p);
        w.entries.push_back({s.i + 1, s.j, d.level(k)(phase)});
      }
    return w;
  }
  // Paper convention: the stationary distribution conditioned on i >= 1.
  double mass_i0 = 0.0;
  for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
    for (int phase = 0; phase < p.phase_count(); ++phase)
      if (to_coords({k, phase}, p).i == 0) mass_i0 += d.level(k)(phase);
  const double norm = 1.0 - mass_i0;
  if (!(norm > 0.0)) throw std::runtime_error("arrival_weights: no mass on i >= 1");
  for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
    for (int phase = 0; phase < p.phase_count(); ++phase) {
      const StateCoords s = to_coords({k, phase}, p);
      if (s.i >= 1) w.entries.push_back({s.i, s.j, d.level(k)(phase) / norm});
    }
  return w;
}

double mean_sojourn_little(const StationaryDist& d) {
  return mean_queue_length_A(d) / d.params.lambda1;
}

double mean_sojourn_probabilistic(const StationaryDist& d, const ArrivalWeights& w) {
  const Params& p = d.params;
  double total = 0.0;
  for (const ArrivalWeights::Entry& e : w.entries) {
    if (e.weight <= 0.0) continue;
    if (e.i >= p.m && e.j >= p.n) continue;  // matched on arrival, W = 0
    total += e.weight * conditional_sojourn_A(e.i, e.j, p);
  }
  return total;
}

Vector ph_absorption_times(const Params& p, std::int64_t k_neg, std::int64_t k_pos) {
  if (k_neg < 1 || k_pos < 1)
    throw std::invalid_argument("ph_absorption_times: window too small");
  GeneratorBlocks g(p);
  const PhIndex idx{p, k_neg, k_pos};
  const std::vector<int> all = iota_phases(p.phase_count());
  const std::vector<int> t0 = iota_phases((p.m - 1) * p.n, p.n);
  const std::vector<int> tneg = reduced_neg_phases(p);

  BlockSeq pos{[&g](std::int64_t k) { return g.a1(k); },
               [&g](std::int64_t k) { return g.a0(k); },
               [&g](std::int64_t k) { return g.a2(k); }};
  // Engine level 1 of the negative side is reduced level 0, level e >= 2 is
  // queue level -(e-1).
  BlockSeq neg{
      [&](std::int64_t e) {
        return e == 1 ? slice(g.c0(), t0, t0) : slice(g.b1(-(e - 1)), tneg, tneg);
      },
      [&](std::int64_t e) {
        return e == 1 ? slice(g.b0(0), t0, tneg) : slice(g.b0(-(e - 1)), tneg, tneg);
      },
      [&](std::int64_t e) {
        return e == 2 ? slice(g.b2(-1), tneg, t0) : slice(g.b2(-(e - 1)), tneg, tneg);
      }};

  const std::int64_t levels_neg = p.m == 1 ? 0 : k_neg + 1;
  const Matrix to_pos = slice(g.a0(0), t0, all);
  const Matrix to_neg = slice(g.a2(1), all, t0);
  BidirectionalOperator op(neg, levels_neg, pos, k_pos, to_pos, to_neg);

  BidirVectors ones;
  for (std::int64_t e = 1; e <= levels_neg; ++e)
    ones.neg.push_back(Vector::Ones(idx.reduced_size()));
  for (std::int64_t k = 1; k <= k_pos; ++k)
    ones.pos.push_back(Vector::Ones(p.phase_count()));
  const BidirVectors x = op.solve_right(ones);

  Vector tau(idx.dim());
  for (std::int64_t level = -k_neg; level <= 0; ++level) {
    if (idx.reduced_size() == 0) break;
    tau.segment(idx.offset(level), idx.reduced_size()) = -x.neg[-level];
  }
  for (std::int64_t k = 1; k <= k_pos; ++k)
    tau.segment(idx.offset(k), p.phase_count()) = -x.pos[k - 1];
  return tau;
}

Matrix ph_dense(const Params& p, std::int64_t k_neg, std::int64_t k_pos) {
  const PhIndex idx{p, k_neg, k_pos};
  Matrix T = Matrix::Zero(idx.dim(), idx.dim());
  for (std::int64_t level = -k_neg; level <= k_pos; ++level) {
    const std::vector<int> kept =
        level >= 1 ? iota_phases(p.phase_count())
                   : (level == 0 ? iota_phases((p.m - 1) * p.n, p.n)
                                 : reduced_neg_phases(p));
    for (int phase : kept) {
      const StateCoords s = to_coords({level, phase}, p);
      const std::int64_t row = idx.index_of(s);
      T(row, row) = -exit_rate(s, p);
      for (const Transition& tr : transitions_from(s, p)) {
        const std::int64_t col = idx.index_of(tr.to);
        if (col >= 0) T(row, col) += tr.rate;
      }
    }
  }
  return T;
}

RowVector ph_initial_dense(const ArrivalWeights& w, const Params& p,
                           std::int64_t k_neg, std::int64_t k_pos) {
  const PhIndex idx{p, k_neg, k_pos};
  RowVector phi = RowVector::Zero(idx.dim());
  for (const ArrivalWeights::Entry& e : w.entries) {
    if (e.i >= p.m && e.j >= p.n) continue;  // absorbed at time zero
    const std::int64_t col = idx.index_of({e.i, e.j});
    if (col >= 0) phi(col) += e.weight;
  }
  return phi;
}

FirstPassageResult mean_first_passage_upper(const StationaryDist& d,
                                            const ArrivalWeights& w) {
  const Params& p = d.params;
  FirstPassageResult res;
  res.k_neg = std::max<std::int64_t>(d.k_neg, 2);
  res.k_pos = d.k_pos + 1;  // arrivals can push one level beyond the window
  const Vector tau = ph_absorption_times(p, res.k_neg, res.k_pos);
  const RowVector phi = ph_initial_dense(w, p, res.k_neg, res.k_pos);
  res.e_xi = phi * tau;
  res.e_w_little = mean_sojourn_little(d);
  res.upper_bound_holds = res.e_w_little <= res.e_xi + 1e-9;
  return res;
}

SojournSummary compute_sojourn(const StationaryDist& d, WeightConvention conv) {
  SojournSummary s;
  s.convention = conv;
  const ArrivalWeights w = arrival_weights(d, conv);
  s.e_w_little = mean_sojourn_little(d);
  s.e_w_probabilistic = mean_sojourn_probabilistic(d, w);
  const FirstPassageResult fp = mean_first_passage_upper(d, w);
  s.e_xi_upper = fp.e_xi;
  s.upper_bound_holds = fp.upper_bound_holds;
  return s;
}

}  // namespace matchq
