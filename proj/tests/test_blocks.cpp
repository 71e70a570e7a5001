#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matchq/blocks.hpp"
#include "support/oracles.hpp"
#include "support/typeset_blocks.hpp"

using namespace matchq;

namespace {

const std::vector<Params> kParamSets = {
    {1.0, 2.0, 1.0, 1.0, 2, 3},
    {0.7, 1.3, 0.4, 2.1, 3, 2},
    {1.1, 0.8, 0.9, 1.2, 1, 1},
    {2.0, 0.5, 1.5, 0.3, 1, 4},
    {0.9, 1.9, 2.5, 0.8, 4, 2},
};

double diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("generator blocks reproduce the displayed closed forms") {
  for (const Params& p : kParamSets) {
    CAPTURE(p.m);
    CAPTURE(p.n);
    GeneratorBlocks g(p);
    CHECK(diff(g.c0(), test::typeset_C(p)) == 0.0);
    for (std::int64_t k = 1; k <= 4; ++k) {
      CHECK(diff(g.a1(k), test::typeset_A1(k, p)) == 0.0);
      CHECK(diff(g.a0(k), test::typeset_A0(p)) == 0.0);
      CHECK(diff(g.a2(k), test::typeset_A2(k, p)) == 0.0);
    }
    CHECK(diff(g.a0(0), test::typeset_A0(p)) == 0.0);
    CHECK(diff(g.b0(0), test::typeset_B0_boundary(p)) == 0.0);
    CHECK(diff(g.b2(-1), test::typeset_B2_boundary(p)) == 0.0);
    for (std::int64_t l = -1; l >= -4; --l) {
      CHECK(diff(g.b1(l), test::typeset_B1(l, p)) == 0.0);
      CHECK(diff(g.b0(l), test::typeset_B0(p)) == 0.0);
      if (l <= -2) CHECK(diff(g.b2(l), test::typeset_B2(l, p)) == 0.0);
    }
  }
}

TEST_CASE("block row sums are conservative") {
  for (const Params& p : kParamSets) {
    GeneratorBlocks g(p);
    const Vector e = Vector::Ones(p.phase_count());
    for (std::int64_t k = 1; k <= 5; ++k) {
      const Vector row = (g.a0(k) + g.a1(k) + g.a2(k)) * e;
      CHECK(row.cwiseAbs().maxCoeff() <= 1e-12);
    }
    const Vector row0 = (g.a0(0) + g.c0() + g.b0(0)) * e;
    CHECK(row0.cwiseAbs().maxCoeff() <= 1e-12);
    for (std::int64_t l = -1; l >= -5; --l) {
      const Vector row = (g.b0(l) + g.b1(l) + g.b2(l)) * e;
      CHECK(row.cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("sign structure of the blocks") {
  Params p{1.0, 2.0, 0.7, 1.1, 2, 3};
  GeneratorBlocks g(p);
  CHECK(g.a0(2).minCoeff() >= 0.0);
  CHECK(g.a2(2).minCoeff() >= 0.0);
  CHECK(g.b0(-1).minCoeff() >= 0.0);
  CHECK(g.b2(-2).minCoeff() >= 0.0);
  CHECK(g.b2(-1).minCoeff() >= 0.0);
  for (int q = 0; q < p.phase_count(); ++q) {
    CHECK(g.a1(1)(q, q) < 0.0);
    CHECK(g.b1(-1)(q, q) < 0.0);
    CHECK(g.c0()(q, q) < 0.0);
  }
}

TEST_CASE("the boundary block moves (0,2) to (0,3) at rate lambda2") {
  Params p{1.0, 2.0, 1.0, 1.0, 2, 3};
  GeneratorBlocks g(p);
  const Matrix& b = g.b0(0);
  const int row = to_level_phase({0, 2}, p).phase;
  const int col = to_level_phase({0, 3}, p).phase;
  CHECK(b(row, col) == p.lambda2);
  CHECK(b.row(row).sum() == p.lambda2);  // single nonzero in that row
}

TEST_CASE("role/level consistency is enforced") {
  Params p{1, 2, 1, 1, 2, 3};
  CHECK_THROWS_AS(build_block(BlockRole::A1, 0, p), std::invalid_argument);
  CHECK_THROWS_AS(build_block(BlockRole::A2, 0, p), std::invalid_argument);
  CHECK_THROWS_AS(build_block(BlockRole::C, 1, p), std::invalid_argument);
  CHECK_THROWS_AS(build_block(BlockRole::B1, 0, p), std::invalid_argument);
  CHECK_THROWS_AS(build_block(BlockRole::B2Boundary, -2, p), std::invalid_argument);
  CHECK_NOTHROW(build_block(BlockRole::B0Boundary, 0, p));
  CHECK(build_block(BlockRole::A1, 3, p).rows() == p.phase_count());
}

TEST_CASE("truncated generator dimensions and conservativity") {
  Params p{1.0, 2.0, 1.0, 1.0, 2, 3};
  const TruncatedGenerator q = build_truncated_generator(p, 4, 5);
  CHECK(q.dim() == (4 + 5 + 1) * p.phase_count());
  CHECK(q.dense.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
  // Off-diagonal nonnegativity.
  for (std::int64_t r = 0; r < q.dim(); ++r)
    for (std::int64_t c = 0; c < q.dim(); ++c)
      if (r != c) CHECK(q.dense(r, c) >= 0.0);
  // Reflected mass shows up only at the outermost levels.
  for (std::int64_t r = 0; r < q.dim(); ++r) {
    const std::int64_t level = r / p.phase_count() - 4;
    if (level > -4 && level < 5) CHECK(q.truncation_defect(r) == 0.0);
  }
  CHECK(q.truncation_defect.sum() > 0.0);
  CHECK_THROWS_AS(build_truncated_generator(p, 1, 5), std::invalid_argument);
}

TEST_CASE("truncated generator matches the raw-coordinate chain") {
  Params p{1.0, 2.0, 1.0, 1.0, 2, 3};
  const std::int64_t k = 8;
  const TruncatedGenerator q = build_truncated_generator(p, k, k);
  const auto chain =
      test::build_raw_grid_chain(p, (k + 1) * p.m - 1, (k + 1) * p.n - 1);
  REQUIRE(static_cast<std::int64_t>(chain.states.size()) == q.dim());

  const RowVector pi_level = test::dense_stationary(q.dense);
  const RowVector pi_raw = test::dense_stationary(chain.Q);
  double worst = 0.0;
  const auto order = q.state_order();
  for (std::size_t idx = 0; idx < order.size(); ++idx)
    worst = std::max(worst, std::abs(pi_level(static_cast<Eigen::Index>(idx)) -
                                     pi_raw(chain.at(order[idx].i, order[idx].j))));
  CHECK(worst <= 1e-10);
}
