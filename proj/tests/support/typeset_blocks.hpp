#pragma once

// Hand-coded block matrices transcribed literally from their displayed
// closed forms, kept independent of the library's transition-enumerator
// construction so the two routes check each other.

#include <Eigen/Dense>
#include <cstdint>

#include "matchq/model.hpp"

namespace matchq::test {

using Matrix = Eigen::MatrixXd;

// --- A-side inner blocks ---------------------------------------------------

// n x n tridiagonal: diagonal -(l1+l2+(r-1)t2+(km+i-1)t1), super l2,
// sub (r-1)t2.  i runs 1..m.
inline Matrix typeset_A1_inner(std::int64_t k, int i, const Params& p) {
  Matrix b = Matrix::Zero(p.n, p.n);
  for (int r = 1; r <= p.n; ++r) {
    b(r - 1, r - 1) = -(p.lambda1 + p.lambda2 + (r - 1) * p.theta2 +
                       static_cast<double>(k * p.m + i - 1) * p.theta1);
    if (r < p.n) b(r - 1, r) = p.lambda2;
    if (r > 1) b(r - 1, r - 2) = (r - 1) * p.theta2;
  }
  return b;
}

// Diagonal block of level k >= 0 (k = 0 gives C).
inline Matrix typeset_A1(std::int64_t k, const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int i = 1; i <= p.m; ++i) {
    b.block((i - 1) * p.n, (i - 1) * p.n, p.n, p.n) = typeset_A1_inner(k, i, p);
    if (i < p.m) {
      b.block((i - 1) * p.n, i * p.n, p.n, p.n) =
          p.lambda1 * Matrix::Identity(p.n, p.n);
      b.block(i * p.n, (i - 1) * p.n, p.n, p.n) =
          static_cast<double>(k * p.m + i) * p.theta1 * Matrix::Identity(p.n, p.n);
    }
  }
  return b;
}

inline Matrix typeset_C(const Params& p) { return typeset_A1(0, p); }

// Level k -> k+1 (k >= 0): lambda1 identity in the last block row, first
// block column.
inline Matrix typeset_A0(const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  b.block((p.m - 1) * p.n, 0, p.n, p.n) = p.lambda1 * Matrix::Identity(p.n, p.n);
  return b;
}

// Level k -> k-1 (k >= 1): lambda2 in the lower-left corner of each
// diagonal n x n block, km*theta1 identity in block (1, m).
inline Matrix typeset_A2(std::int64_t k, const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int i = 0; i < p.m; ++i) b(i * p.n + p.n - 1, i * p.n) = p.lambda2;
  b.block(0, (p.m - 1) * p.n, p.n, p.n) +=
      static_cast<double>(k * p.m) * p.theta1 * Matrix::Identity(p.n, p.n);
  return b;
}

// --- B-side inner blocks (reversed ordering of the negative levels) --------

// m x m: diagonal -(l1+l2+(m-r)t1+(-l n + n - i)t2), super (m-r)t1, sub l1.
inline Matrix typeset_B1_inner(std::int64_t l, int i, const Params& p) {
  Matrix b = Matrix::Zero(p.m, p.m);
  for (int r = 1; r <= p.m; ++r) {
    b(r - 1, r - 1) = -(p.lambda1 + p.lambda2 + (p.m - r) * p.theta1 +
                       static_cast<double>(-l * p.n + p.n - i) * p.theta2);
    if (r < p.m) b(r - 1, r) = (p.m - r) * p.theta1;
    if (r > 1) b(r - 1, r - 2) = p.lambda1;
  }
  return b;
}

// Diagonal block of level l <= -1.
inline Matrix typeset_B1(std::int64_t l, const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int i = 1; i <= p.n; ++i) {
    b.block((i - 1) * p.m, (i - 1) * p.m, p.m, p.m) = typeset_B1_inner(l, i, p);
    if (i < p.n) {
      b.block((i - 1) * p.m, i * p.m, p.m, p.m) =
          static_cast<double>(-l * p.n + p.n - i) * p.theta2 *
          Matrix::Identity(p.m, p.m);
      b.block(i * p.m, (i - 1) * p.m, p.m, p.m) =
          p.lambda2 * Matrix::Identity(p.m, p.m);
    }
  }
  return b;
}

// Level l -> l-1 (l <= -1): lambda2 identity in block (1, n).
inline Matrix typeset_B0(const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  b.block(0, (p.n - 1) * p.m, p.m, p.m) = p.lambda2 * Matrix::Identity(p.m, p.m);
  return b;
}

// Level 0 -> -1: the order change puts lambda2 on an anti-diagonal of the
// last m-column block.
inline Matrix typeset_B0_boundary(const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int i = 0; i < p.m; ++i)
    b((i + 1) * p.n - 1, (p.n - 1) * p.m + (p.m - 1 - i)) = p.lambda2;
  return b;
}

// Level l -> l+1 (l <= -2): lambda1 in the upper-right corner of each
// diagonal m x m block, (-l) n theta2 identity in block (n, 1).
inline Matrix typeset_B2(std::int64_t l, const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int i = 0; i < p.n; ++i) b(i * p.m, i * p.m + p.m - 1) += p.lambda1;
  b.block((p.n - 1) * p.m, 0, p.m, p.m) +=
      static_cast<double>(-l) * p.n * p.theta2 * Matrix::Identity(p.m, p.m);
  return b;
}

// Level -1 -> 0 with the order change: lambda1 anti-diagonal over the first
// n columns, n theta2 entries for the bottom B-renege line.
inline Matrix typeset_B2_boundary(const Params& p) {
  const int d = p.phase_count();
  Matrix b = Matrix::Zero(d, d);
  for (int jp = 0; jp < p.n; ++jp)  // match completed by an A arrival at i=m-1
    b((p.n - 1 - jp) * p.m, jp) += p.lambda1;
  for (int i = 0; i < p.m; ++i)  // B renege out of j = n
    b((p.n - 1) * p.m + (p.m - 1 - i), (i + 1) * p.n - 1) +=
        static_cast<double>(p.n) * p.theta2;
  return b;
}

// --- appendix drift generators ---------------------------------------------

inline Matrix typeset_drift_A(std::int64_t k, const Params& p) {
  const int d = p.phase_count();
  Matrix b = typeset_A1(k, p);
  for (int i = 0; i < p.m; ++i) b(i * p.n + p.n - 1, i * p.n) += p.lambda2;
  b.block(0, (p.m - 1) * p.n, p.n, p.n) +=
      static_cast<double>(k * p.m) * p.theta1 * Matrix::Identity(p.n, p.n);
  b.block((p.m - 1) * p.n, 0, p.n, p.n) += p.lambda1 * Matrix::Identity(p.n, p.n);
  (void)d;
  return b;
}

inline Matrix typeset_drift_B(std::int64_t l, const Params& p) {
  Matrix b = typeset_B1(l, p);
  for (int i = 0; i < p.n; ++i) b(i * p.m, i * p.m + p.m - 1) += p.lambda1;
  b.block((p.n - 1) * p.m, 0, p.m, p.m) +=
      static_cast<double>(-l) * p.n * p.theta2 * Matrix::Identity(p.m, p.m);
  b.block(0, (p.n - 1) * p.m, p.m, p.m) += p.lambda2 * Matrix::Identity(p.m, p.m);
  return b;
}

}  // namespace matchq::test
