#include "matchq/departure.hpp"

#include <cmath>
#include <stdexcept>

namespace matchq {

namespace {

constexpr std::int64_t kMaxSequenceLength = 8;

// The W-partition of D0: negative part holds levels 0, -1, ..., -k_neg
// (engine index 1 maps to level 0), positive part levels 1..k_pos.
BlockSeq d0_negative_seq(const MmapSet& m) {
  const int d = m.params.phase_count();
  const auto block = [&m, d](std::int64_t from, std::int64_t to) {
    return Matrix(m.D0.block((from + m.k_neg) * d, (to + m.k_neg) * d, d, d));
  };
  return BlockSeq{[block](std::int64_t e) { return block(1 - e, 1 - e); },
                  [block](std::int64_t e) { return block(1 - e, -e); },
                  [block](std::int64_t e) { return block(1 - e, 2 - e); }};
}

BlockSeq d0_positive_seq(const MmapSet& m) {
  const int d = m.params.phase_count();
  const auto block = [&m, d](std::int64_t from, std::int64_t to) {
    return Matrix(m.D0.block((from + m.k_neg) * d, (to + m.k_neg) * d, d, d));
  };
  return BlockSeq{[block](std::int64_t k) { return block(k, k); },
                  [block](std::int64_t k) { return block(k, k + 1); },
                  [block](std::int64_t k) { return block(k, k - 1); }};
}

}  // namespace

const Matrix& MmapSet::of(Mark mark) const {
  switch (mark) {
    case Mark::A: return DA;
    case Mark::B: return DB;
    case Mark::AB: return DAB;
    case Mark::None: return D0;
  }
  throw std::invalid_argument("unknown mark");
}

MmapSet build_mmap(const Params& p, std::int64_t k_neg, std::int64_t k_pos) {
  const TruncatedGenerator q = build_truncated_generator(p, k_neg, k_pos);
  MmapSet m;
  m.params = p;
  m.k_neg = k_neg;
  m.k_pos = k_pos;
  const std::int64_t dim = q.dim();
  m.D0 = Matrix::Zero(dim, dim);
  m.DA = Matrix::Zero(dim, dim);
  m.DB = Matrix::Zero(dim, dim);
  m.DAB = Matrix::Zero(dim, dim);

  // D0 is built directly (not by subtraction) so that marked cells hold
  // exact zeros; its diagonal carries the full generator diagonal including
  // the reflected window closure.
  for (std::int64_t level = -k_neg; level <= k_pos; ++level) {
    for (int phase = 0; phase < p.phase_count(); ++phase) {
      const std::int64_t row = q.level_offset(level) + phase;
      const StateCoords s = to_coords({level, phase}, p);
      m.D0(row, row) = q.dense(row, row);
      for (const Transition& tr : transitions_from(s, p)) {
        const LevelPhase lp = to_level_phase(tr.to, p);
        if (lp.level < -k_neg || lp.level > k_pos) continue;  // reflected
        const std::int64_t col = q.level_offset(lp.level) + lp.phase;
        switch (tr.mark) {
          case Mark::None: m.D0(row, col) += tr.rate; break;
          case Mark::A: m.DA(row, col) += tr.rate; break;
          case Mark::B: m.DB(row, col) += tr.rate; break;
          case Mark::AB: m.DAB(row, col) += tr.rate; break;
        }
      }
    }
  }

  // At most two event types can land in one cell and they commute, so the
  // decomposition reproduces Q exactly; anything else is a classifier bug.
  const Matrix sum = m.D0 + m.DA + m.DB + m.DAB;
  if ((sum - q.dense).cwiseAbs().maxCoeff() != 0.0)
    throw std::runtime_error("build_mmap: mark classification does not add up");
  return m;
}

DepartureRates departure_rates(const StationaryDist& d, const MmapSet& mmap) {
  if (d.k_neg != mmap.k_neg || d.k_pos != mmap.k_pos)
    throw std::invalid_argument("departure_rates: window mismatch");
  const RowVector pi = d.flatten();
  const Vector e = Vector::Ones(mmap.dim());
  DepartureRates r;
  r.mu_A_impatient = pi * mmap.DA * e;
  r.mu_B_impatient = pi * mmap.DB * e;
  r.mu_AB = pi * mmap.DAB * e;
  r.mu_A_total = r.mu_A_impatient + d.params.m * r.mu_AB;
  r.mu_B_total = r.mu_B_impatient + d.params.n * r.mu_AB;
  r.mu_all = r.mu_A_total + r.mu_B_total;
  return r;
}

MarkCalculator::MarkCalculator(const StationaryDist& d, const MmapSet& mmap)
    : mmap_(mmap),
      pi_(d.flatten()),
      op_(d0_negative_seq(mmap), mmap.k_neg + 1, d0_positive_seq(mmap), mmap.k_pos,
          // W12 corner: level 0 -> level 1; W21 corner: level 1 -> level 0.
          Matrix(mmap.D0.block(mmap.k_neg * mmap.params.phase_count(),
                               (mmap.k_neg + 1) * mmap.params.phase_count(),
                               mmap.params.phase_count(), mmap.params.phase_count())),
          Matrix(mmap.D0.block((mmap.k_neg + 1) * mmap.params.phase_count(),
                               mmap.k_neg * mmap.params.phase_count(),
                               mmap.params.phase_count(), mmap.params.phase_count()))) {
  if (d.k_neg != mmap.k_neg || d.k_pos != mmap.k_pos)
    throw std::invalid_argument("MarkCalculator: window mismatch");
}

RowVector MarkCalculator::apply_neg_d0_inverse(const RowVector& v) const {
  const int d = mmap_.params.phase_count();
  BidirRowVectors split;
  // Negative part outward from level 0; positive part from level 1.
  for (std::int64_t e = 1; e <= mmap_.k_neg + 1; ++e)
    split.neg.push_back(v.segment((1 - e + mmap_.k_neg) * d, d));
  for (std::int64_t k = 1; k <= mmap_.k_pos; ++k)
    split.pos.push_back(v.segment((k + mmap_.k_neg) * d, d));
  const BidirRowVectors x = op_.solve_left(split);
  RowVector out(v.size());
  for (std::int64_t e = 1; e <= mmap_.k_neg + 1; ++e)
    out.segment((1 - e + mmap_.k_neg) * d, d) = -x.neg[e - 1];
  for (std::int64_t k = 1; k <= mmap_.k_pos; ++k)
    out.segment((k + mmap_.k_neg) * d, d) = -x.pos[k - 1];
  return out;
}

Vector MarkCalculator::apply_neg_d0_inverse(const Vector& v) const {
  const int d = mmap_.params.phase_count();
  BidirVectors split;
  for (std::int64_t e = 1; e <= mmap_.k_neg + 1; ++e)
    split.neg.push_back(v.segment((1 - e + mmap_.k_neg) * d, d));
  for (std::int64_t k = 1; k <= mmap_.k_pos; ++k)
    split.pos.push_back(v.segment((k + mmap_.k_neg) * d, d));
  const BidirVectors x = op_.solve_right(split);
  Vector out(v.size());
  for (std::int64_t e = 1; e <= mmap_.k_neg + 1; ++e)
    out.segment((1 - e + mmap_.k_neg) * d, d) = -x.neg[e - 1];
  for (std::int64_t k = 1; k <= mmap_.k_pos; ++k)
    out.segment((k + mmap_.k_neg) * d, d) = -x.pos[k - 1];
  return out;
}

MarkTriples MarkCalculator::triples() const {
  MarkTriples t;
  const Vector e = Vector::Ones(mmap_.dim());
  const Vector y = apply_neg_d0_inverse(e);     // (-D0^{-1}) e
  const RowVector x = apply_neg_d0_inverse(pi_);  // pi (-D0^{-1})
  double dep_total = 0.0;
  std::array<double, 3> dep{};
  for (std::size_t idx = 0; idx < 3; ++idx) {
    const Matrix& D = mmap_.of(MarkTriples::order[idx]);
    t.backward[idx] = pi_ * D * y;
    t.forward[idx] = x * D * e;
    dep[idx] = pi_ * D * e;
    dep_total += dep[idx];
  }
  for (std::size_t idx = 0; idx < 3; ++idx) t.at_departure[idx] = dep[idx] / dep_total;
  return t;
}

double MarkCalculator::sequence_probability(const std::vector<Mark>& seq,
                                            Direction dir) const {
  if (seq.empty())
    throw std::invalid_argument("sequence_probability: empty sequence");
  if (static_cast<std::int64_t>(seq.size()) > kMaxSequenceLength)
    throw std::invalid_argument("sequence_probability: sequence too long");
  for (Mark mk : seq)
    if (mk == Mark::None)
      throw std::invalid_argument("sequence_probability: marks must be A, B or AB");

  RowVector v = pi_;
  for (Mark mk : seq) {
    if (dir == Direction::Backward) {
      v = v * mmap_.of(mk);
      v = apply_neg_d0_inverse(v);
    } else {
      v = apply_neg_d0_inverse(v);
      v = v * mmap_.of(mk);
    }
  }
  return v.sum();
}

MarkTriples mark_probabilities(const StationaryDist& d, const MmapSet& mmap) {
  return MarkCalculator(d, mmap).triples();
}

double consecutive_mark_probability(const StationaryDist& d, const MmapSet& mmap,
                                    const std::vector<Mark>& seq, Direction dir) {
  return MarkCalculator(d, mmap).sequence_probability(seq, dir);
}

}  // namespace matchq
