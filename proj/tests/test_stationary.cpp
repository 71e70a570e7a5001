#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matchq/stationary.hpp"
#include "support/oracles.hpp"

using namespace matchq;

namespace {

const Params kPaper{1.0, 2.0, 1.0, 1.0, 2, 3};

const std::vector<Params> kParamSets = {
    kPaper,
    {0.7, 1.3, 0.4, 2.1, 3, 2},
    {1.1, 0.8, 0.9, 1.2, 1, 1},
    {2.0, 0.5, 1.5, 0.3, 1, 4},
};

}  // namespace

TEST_CASE("boundary system: residual, uniqueness, nonnegativity") {
  for (const Params& p : kParamSets) {
    GeneratorBlocks g(p);
    const RgMeasures pos = compute_rg_positive(g, 6);
    const RgMeasures neg = compute_rg_negative(g, 6);
    const BoundaryVectors b = solve_boundary(g, pos, neg);

    const int d = p.phase_count();
    // The three block equations of levels 1, 0, -1.
    const RowVector eq1 = b.pi_0 * g.a0(0) + b.pi_pos1 * (g.a1(1) + pos.R_at(1) * g.a2(2));
    const RowVector eq2 = b.pi_neg1 * g.b2(-1) + b.pi_0 * g.c0() + b.pi_pos1 * g.a2(1);
    const RowVector eq3 =
        b.pi_0 * g.b0(0) + b.pi_neg1 * (g.b1(-1) + neg.R_at(-1) * g.b2(-2));
    CHECK(eq1.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(eq2.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(eq3.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(b.residual <= 1e-10);
    CHECK(b.pi_neg1.minCoeff() >= 0.0);
    CHECK(b.pi_0.minCoeff() >= 0.0);
    CHECK(b.pi_pos1.minCoeff() >= 0.0);

    // Uniqueness up to scale: pinned elimination vs a full SVD nullspace.
    Matrix M = Matrix::Zero(3 * d, 3 * d);
    M.block(d, 0, d, d) = g.a0(0);
    M.block(2 * d, 0, d, d) = g.a1(1) + pos.R_at(1) * g.a2(2);
    M.block(0, d, d, d) = g.b2(-1);
    M.block(d, d, d, d) = g.c0();
    M.block(2 * d, d, d, d) = g.a2(1);
    M.block(0, 2 * d, d, d) = g.b1(-1) + neg.R_at(-1) * g.b2(-2);
    M.block(d, 2 * d, d, d) = g.b0(0);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
    RowVector null = svd.matrixU().col(3 * d - 1).transpose();
    if (null.sum() < 0) null = -null;
    null /= null.maxCoeff();
    RowVector stacked(3 * d);
    stacked << b.pi_neg1, b.pi_0, b.pi_pos1;
    CHECK((stacked - null).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("assembled distribution matches the dense oracle") {
  for (const Params& p : kParamSets) {
    CAPTURE(p.m);
    CAPTURE(p.n);
    const StationaryDist d = solve_stationary(p);
    CHECK(std::abs(d.flatten().sum() - 1.0) <= 1e-12);
    CHECK(d.tail_mass_bound <= 1e-9);

    const TruncatedGenerator q = build_truncated_generator(p, d.k_neg, d.k_pos);
    const RowVector dense = test::dense_stationary(q.dense);
    CHECK((d.flatten() - dense).cwiseAbs().maxCoeff() <= 1e-8);

    GeneratorBlocks g(p);
    CHECK(balance_residual(d, g) <= 1e-9);
  }
}

TEST_CASE("matrix-product structure of the positive tail") {
  GeneratorBlocks g(kPaper);
  const RgMeasures pos = compute_rg_positive(g, 8);
  const RgMeasures neg = compute_rg_negative(g, 8);
  const BoundaryVectors b = solve_boundary(g, pos, neg);
  const StationaryDist d = assemble_stationary(g, pos, neg, b, 1e-12);
  CHECK((d.level(2) - d.level(1) * pos.R_at(1)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((d.level(3) - d.level(2) * pos.R_at(2)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((d.level(-2) - d.level(-1) * neg.R_at(-1)).cwiseAbs().maxCoeff() <= 1e-15);
  // Boundary vectors are stored unscaled (largest entry one).
  const double scale = std::max({b.pi_neg1.maxCoeff(), b.pi_0.maxCoeff(),
                                 b.pi_pos1.maxCoeff()});
  CHECK(scale == doctest::Approx(1.0));
  CHECK((d.level(0) - d.c * b.pi_0).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("class swap mirrors the distribution and the moments") {
  const StationaryDist d = solve_stationary(kPaper);
  const StationaryDist s = solve_stationary(kPaper.swapped());
  CHECK(mean_queue_length_A(d) ==
        doctest::Approx(mean_queue_length_B(s)).epsilon(1e-12));
  CHECK(mean_queue_length_B(d) ==
        doctest::Approx(mean_queue_length_A(s)).epsilon(1e-12));
  // Level masses mirror level by level.
  for (std::int64_t k = -3; k <= 3; ++k)
    CHECK(d.level(k).sum() == doctest::Approx(s.level(-k).sum()).epsilon(1e-11));
}

TEST_CASE("symmetric parameters equalize the two queues") {
  const StationaryDist d = solve_stationary({1.3, 1.3, 0.9, 0.9, 1, 1});
  CHECK(mean_queue_length_A(d) ==
        doctest::Approx(mean_queue_length_B(d)).epsilon(1e-12));
}

TEST_CASE("queue lengths move monotonically with the impatience rates") {
  double prev_q1 = 1e100, prev_q2 = 0.0;
  for (double theta : {0.5, 1.0, 1.5, 2.0}) {
    const StationaryDist d = solve_stationary({1, 2, theta, 1, 2, 3});
    const double q1 = mean_queue_length_A(d);
    const double q2 = mean_queue_length_B(d);
    CHECK(q1 < prev_q1);
    CHECK(q2 > prev_q2);
    prev_q1 = q1;
    prev_q2 = q2;
  }
}

TEST_CASE("probability lookup by coordinates") {
  const StationaryDist d = solve_stationary(kPaper);
  double total = 0.0;
  for (std::int64_t i = 0; i <= 60; ++i)
    for (std::int64_t j = 0; j <= 60; ++j)
      if (in_state_space({i, j}, kPaper)) total += d.prob({i, j});
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.prob({55, 0}) == 0.0);  // far outside the window
}
