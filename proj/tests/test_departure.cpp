#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matchq/departure.hpp"
#include "matchq/simulator.hpp"
#include "support/typeset_blocks.hpp"

using namespace matchq;

namespace {

const Params kPaper{1.0, 2.0, 1.0, 1.0, 2, 3};

struct Setup {
  StationaryDist dist;
  MmapSet mmap;
  TruncatedGenerator gen;
};

Setup make_setup(const Params& p) {
  StationaryDist d = solve_stationary(p);
  MmapSet m = build_mmap(p, d.k_neg, d.k_pos);
  TruncatedGenerator g = build_truncated_generator(p, d.k_neg, d.k_pos);
  return {std::move(d), std::move(m), std::move(g)};
}

Matrix block_of(const MmapSet& m, const Matrix& M, std::int64_t from, std::int64_t to) {
  const int d = m.params.phase_count();
  return M.block((from + m.k_neg) * d, (to + m.k_neg) * d, d, d);
}

}  // namespace

TEST_CASE("the four matrices decompose the generator exactly") {
  for (const Params& p :
       {kPaper, Params{0.7, 1.3, 0.4, 2.1, 3, 2}, Params{1.1, 0.8, 0.9, 1.2, 1, 1}}) {
    const Setup s = make_setup(p);
    const Matrix sum = s.mmap.D0 + s.mmap.DA + s.mmap.DB + s.mmap.DAB;
    CHECK((sum - s.gen.dense).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.mmap.DA.minCoeff() >= 0.0);
    CHECK(s.mmap.DB.minCoeff() >= 0.0);
    CHECK(s.mmap.DAB.minCoeff() >= 0.0);
    for (std::int64_t r = 0; r < s.mmap.dim(); ++r) {
      CHECK(s.mmap.D0(r, r) < 0.0);
      for (std::int64_t c = 0; c < s.mmap.dim(); ++c)
        if (r != c) CHECK(s.mmap.D0(r, c) >= 0.0);
    }
  }
}

TEST_CASE("marked blocks match the displayed forms") {
  const Setup s = make_setup(kPaper);
  const Params& p = kPaper;
  const int d = p.phase_count();

  // Positive axis: the matched departures sit in the lambda2 corners of the
  // level-down blocks, the level-down reneges in the km*theta1 block.
  for (std::int64_t k = 1; k <= 2; ++k) {
    Matrix dab = Matrix::Zero(d, d);
    for (int i = 0; i < p.m; ++i) dab(i * p.n + p.n - 1, i * p.n) = p.lambda2;
    CHECK((block_of(s.mmap, s.mmap.DAB, k, k - 1) - dab).cwiseAbs().maxCoeff() == 0.0);

    Matrix da_down = Matrix::Zero(d, d);
    da_down.block(0, (p.m - 1) * p.n, p.n, p.n) =
        static_cast<double>(k * p.m) * p.theta1 * Matrix::Identity(p.n, p.n);
    CHECK((block_of(s.mmap, s.mmap.DA, k, k - 1) - da_down).cwiseAbs().maxCoeff() ==
          0.0);

    // Within-level A reneges: the sub-diagonal blocks of the diagonal block.
    Matrix da_diag = Matrix::Zero(d, d);
    for (int i = 1; i < p.m; ++i)
      da_diag.block(i * p.n, (i - 1) * p.n, p.n, p.n) =
          static_cast<double>(k * p.m + i) * p.theta1 * Matrix::Identity(p.n, p.n);
    CHECK((block_of(s.mmap, s.mmap.DA, k, k) - da_diag).cwiseAbs().maxCoeff() == 0.0);
  }

  // Negative axis: matches are the lambda1 entries, including the reordered
  // boundary block from level -1 to level 0.
  Matrix dab_boundary = Matrix::Zero(d, d);
  for (int jp = 0; jp < p.n; ++jp)
    dab_boundary((p.n - 1 - jp) * p.m, jp) = p.lambda1;
  CHECK((block_of(s.mmap, s.mmap.DAB, -1, 0) - dab_boundary).cwiseAbs().maxCoeff() ==
        0.0);
  Matrix db_boundary = test::typeset_B2_boundary(p) - dab_boundary;
  CHECK((block_of(s.mmap, s.mmap.DB, -1, 0) - db_boundary).cwiseAbs().maxCoeff() ==
        0.0);
  for (std::int64_t l = -2; l >= -3; --l) {
    Matrix dab_reg = Matrix::Zero(d, d);
    for (int i = 0; i < p.n; ++i) dab_reg(i * p.m, i * p.m + p.m - 1) = p.lambda1;
    CHECK((block_of(s.mmap, s.mmap.DAB, l, l + 1) - dab_reg).cwiseAbs().maxCoeff() ==
          0.0);
  }

  // Arrivals that do not complete a match stay unmarked.
  CHECK((block_of(s.mmap, s.mmap.D0, 0, 1) - test::typeset_A0(p)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((block_of(s.mmap, s.mmap.D0, 0, -1) - test::typeset_B0_boundary(p))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("row masses of DA and DB count the reneging rates") {
  // Reneges never leave the window (only arrivals do), so every row mass is
  // the full per-state impatience rate.
  const Setup s = make_setup(kPaper);
  const auto order = s.gen.state_order();
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const StateCoords st = order[idx];
    const auto row = static_cast<Eigen::Index>(idx);
    CHECK(s.mmap.DA.row(row).sum() ==
          doctest::Approx(static_cast<double>(st.i) * kPaper.theta1).epsilon(1e-14));
    CHECK(s.mmap.DB.row(row).sum() ==
          doctest::Approx(static_cast<double>(st.j) * kPaper.theta2).epsilon(1e-14));
  }
}

TEST_CASE("departure rates satisfy the flow identities") {
  for (const Params& p : {kPaper, Params{2.0, 0.5, 1.5, 0.3, 1, 4}}) {
    const Setup s = make_setup(p);
    const DepartureRates r = departure_rates(s.dist, s.mmap);
    CHECK(std::abs(r.mu_A_total - p.lambda1) <= 1e-8);
    CHECK(std::abs(r.mu_B_total - p.lambda2) <= 1e-8);
    CHECK(r.mu_all == doctest::Approx(r.mu_A_total + r.mu_B_total));
    CHECK(r.mu_A_total == doctest::Approx(r.mu_A_impatient + p.m * r.mu_AB));
    CHECK(r.mu_B_total == doctest::Approx(r.mu_B_impatient + p.n * r.mu_AB));
    CHECK(r.mu_AB > 0.0);
  }
}

TEST_CASE("mark triples against a dense resolvent") {
  const Setup s = make_setup(kPaper);
  const MarkTriples t = mark_probabilities(s.dist, s.mmap);
  for (const auto& family : {t.backward, t.forward, t.at_departure}) {
    CHECK(family[0] + family[1] + family[2] == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : family) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  const RowVector pi = s.dist.flatten();
  const Vector e = Vector::Ones(s.mmap.dim());
  const Matrix d0_inv_neg = -s.mmap.D0.partialPivLu().solve(
      Matrix::Identity(s.mmap.dim(), s.mmap.dim()));
  CHECK(d0_inv_neg.minCoeff() >= -1e-12);  // maximal non-positive inverse, flipped
  for (int i = 0; i < 3; ++i) {
    const Matrix& D = s.mmap.of(MarkTriples::order[static_cast<std::size_t>(i)]);
    const double backward = pi * D * d0_inv_neg * e;
    const double forward = pi * d0_inv_neg * D * e;
    CHECK(std::abs(t.backward[static_cast<std::size_t>(i)] - backward) <= 1e-10);
    CHECK(std::abs(t.forward[static_cast<std::size_t>(i)] - forward) <= 1e-10);
  }
  // At-departure distribution is the normalized rate split.
  const DepartureRates r = departure_rates(s.dist, s.mmap);
  const double total = r.mu_A_impatient + r.mu_B_impatient + r.mu_AB;
  CHECK(t.at_departure[2] == doctest::Approx(r.mu_AB / total).epsilon(1e-12));
}

TEST_CASE("consecutive mark probabilities") {
  const Setup s = make_setup(kPaper);
  MarkCalculator calc(s.dist, s.mmap);
  const MarkTriples t = mark_probabilities(s.dist, s.mmap);

  // Length one reduces to the triples.
  for (int i = 0; i < 3; ++i) {
    const Mark mk = MarkTriples::order[static_cast<std::size_t>(i)];
    CHECK(calc.sequence_probability({mk}, Direction::Forward) ==
          doctest::Approx(t.forward[static_cast<std::size_t>(i)]).epsilon(1e-12));
    CHECK(calc.sequence_probability({mk}, Direction::Backward) ==
          doctest::Approx(t.backward[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }

  // Sequences of a fixed length partition the sample paths.
  for (int len = 1; len <= 3; ++len) {
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
      double total = 0.0;
      for (const auto& seq : all_mark_sequences(len))
        total += calc.sequence_probability(seq, dir);
      CHECK(std::abs(total - 1.0) <= 1e-7);
    }
  }

  // Dense check of one length-2 product.
  const RowVector pi = s.dist.flatten();
  const Vector e = Vector::Ones(s.mmap.dim());
  const Matrix d0_inv_neg = -s.mmap.D0.partialPivLu().solve(
      Matrix::Identity(s.mmap.dim(), s.mmap.dim()));
  const double dense_abab = pi * d0_inv_neg * s.mmap.DAB * d0_inv_neg * s.mmap.DAB * e;
  CHECK(calc.sequence_probability({Mark::AB, Mark::AB}, Direction::Forward) ==
        doctest::Approx(dense_abab).epsilon(1e-10));

  CHECK_THROWS_AS(calc.sequence_probability({}, Direction::Forward),
                  std::invalid_argument);
  CHECK_THROWS_AS(calc.sequence_probability(std::vector<Mark>(9, Mark::A),
                                            Direction::Forward),
                  std::invalid_argument);
  CHECK_THROWS_AS(calc.sequence_probability({Mark::None}, Direction::Forward),
                  std::invalid_argument);
}

TEST_CASE("window mismatch is rejected") {
  const StationaryDist d = solve_stationary(kPaper);
  const MmapSet mmap = build_mmap(kPaper, d.k_neg + 1, d.k_pos);
  CHECK_THROWS_AS(departure_rates(d, mmap), std::invalid_argument);
  CHECK_THROWS_AS(mark_probabilities(d, mmap), std::invalid_argument);
}
