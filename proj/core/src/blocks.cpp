#include "matchq/blocks.hpp"

#include <stdexcept>
#include <string>

namespace matchq {

Matrix level_block(std::int64_t from_level, std::int64_t to_level, const Params& p) {
  const int dim = p.phase_count();
  Matrix block = Matrix::Zero(dim, dim);
  for (int phase = 0; phase < dim; ++phase) {
    const StateCoords s = to_coords(LevelPhase{from_level, phase}, p);
    if (from_level == to_level) block(phase, phase) = -exit_rate(s, p);
    for (const Transition& tr : transitions_from(s, p)) {
      const LevelPhase lp = to_level_phase(tr.to, p);
      if (lp.level == to_level) block(phase, lp.phase) += tr.rate;
    }
  }
  return block;
}

Matrix build_block(BlockRole role, std::int64_t level, const Params& p) {
  const auto fail = [&](const char* msg) {
    throw std::invalid_argument(std::string("build_block: ") + msg +
                                " (level " + std::to_string(level) + ")");
  };
  switch (role) {
    case BlockRole::A0:
      if (level < 0) fail("A0 requires level >= 0");
      return level_block(level, level + 1, p);
    case BlockRole::A1:
      if (level < 1) fail("A1 requires level >= 1");
      return level_block(level, level, p);
    case BlockRole::A2:
      if (level < 1) fail("A2 requires level >= 1");
      return level_block(level, level - 1, p);
    case BlockRole::C:
      if (level != 0) fail("C lives at level 0 only");
      return level_block(0, 0, p);
    case BlockRole::B0:
      if (level > -1) fail("B0 requires level <= -1");
      return level_block(level, level - 1, p);
    case BlockRole::B0Boundary:
      if (level != 0) fail("B0 boundary special lives at level 0");
      return level_block(0, -1, p);
    case BlockRole::B1:
      if (level > -1) fail("B1 requires level <= -1");
      return level_block(level, level, p);
    case BlockRole::B2:
      if (level > -2) fail("B2 requires level <= -2");
      return level_block(level, level + 1, p);
    case BlockRole::B2Boundary:
      if (level != -1) fail("B2 boundary special lives at level -1");
      return level_block(-1, 0, p);
  }
  fail("unknown role");
  return {};
}

const Matrix& GeneratorBlocks::block(std::int64_t from, std::int64_t to) const {
  const auto key = std::make_pair(from, to);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, level_block(from, to, p_)).first;
  return it->second;
}

const Matrix& GeneratorBlocks::a0(std::int64_t k) const {
  if (k < 0) throw std::invalid_argument("a0: level must be >= 0");
  return block(k, k + 1);
}
const Matrix& GeneratorBlocks::a1(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("a1: level must be >= 1");
  return block(k, k);
}
const Matrix& GeneratorBlocks::a2(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("a2: level must be >= 1");
  return block(k, k - 1);
}
const Matrix& GeneratorBlocks::c0() const { return block(0, 0); }
const Matrix& GeneratorBlocks::b0(std::int64_t l) const {
  if (l > 0) throw std::invalid_argument("b0: level must be <= 0");
  return block(l, l - 1);
}
const Matrix& GeneratorBlocks::b1(std::int64_t l) const {
  if (l > -1) throw std::invalid_argument("b1: level must be <= -1");
  return block(l, l);
}
const Matrix& GeneratorBlocks::b2(std::int64_t l) const {
  if (l > -1) throw std::invalid_argument("b2: level must be <= -1");
  return block(l, l + 1);
}

std::int64_t TruncatedGenerator::level_offset(std::int64_t level) const {
  return (level + k_neg) * params.phase_count();
}

std::vector<StateCoords> TruncatedGenerator::state_order() const {
  std::vector<StateCoords> order;
  order.reserve(dim());
  for (std::int64_t level = -k_neg; level <= k_pos; ++level)
    for (int phase = 0; phase < params.phase_count(); ++phase)
      order.push_back(to_coords(LevelPhase{level, phase}, params));
  return order;
}

TruncatedGenerator build_truncated_generator(const Params& p, std::int64_t k_neg,
                                             std::int64_t k_pos) {
  p.validate();
  if (k_neg < 2 || k_pos < 2)
    throw std::invalid_argument(
        "build_truncated_generator: window must retain levels -2..2");

  TruncatedGenerator gen;
  gen.params = p;
  gen.k_neg = k_neg;
  gen.k_pos = k_pos;
  const std::int64_t dim = (k_neg + k_pos + 1) * p.phase_count();
  gen.dense = Matrix::Zero(dim, dim);
  gen.truncation_defect = Vector::Zero(dim);

  for (std::int64_t level = -k_neg; level <= k_pos; ++level) {
    for (int phase = 0; phase < p.phase_count(); ++phase) {
      const std::int64_t row = gen.level_offset(level) + phase;
      const StateCoords s = to_coords(LevelPhase{level, phase}, p);
      gen.dense(row, row) = -exit_rate(s, p);
      for (const Transition& tr : transitions_from(s, p)) {
        const LevelPhase lp = to_level_phase(tr.to, p);
        if (lp.level < -k_neg || lp.level > k_pos) {
          // Reflecting closure: fold the outward rate back into the diagonal.
          gen.dense(row, row) += tr.rate;
          gen.truncation_defect(row) += tr.rate;
        } else {
          gen.dense(row, gen.level_offset(lp.level) + lp.phase) += tr.rate;
        }
      }
    }
  }
  return gen;
}

}  // namespace matchq
