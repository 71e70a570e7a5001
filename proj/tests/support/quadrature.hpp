#pragma once

// Adaptive Gauss-Kronrod 15(7) quadrature, used as the independent oracle
// for the closed-form Erlang integrals.

#include <cmath>
#include <functional>

namespace matchq::test {

namespace gk {

// Nodes and weights of the 15-point Kronrod rule on [-1, 1] with the
// embedded 7-point Gauss rule (QUADPACK dqk15 values).
inline constexpr double nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

inline Estimate rule(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = wk[7] * fc;
  double gauss = wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * nodes[i];
    const double fsum = f(c - x) + f(c + x);
    kronrod += wk[i] * fsum;
    if (i % 2 == 1) gauss += wg[i / 2] * fsum;
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace gk

namespace detail {

// The |K - G| estimate bottoms out at a relative roundoff floor, so the
// recursion also stops on negligible subinterval width and bounded depth;
// the leaves left that way contribute O(1e-15 * total width) at most.
inline double integrate_rec(const std::function<double(double)>& f, double a,
                            double b, double tol, double min_width, int depth) {
  const gk::Estimate est = gk::rule(f, a, b);
  if (est.error <= tol || (b - a) <= min_width || depth >= 24) return est.value;
  const double c = 0.5 * (a + b);
  return integrate_rec(f, a, c, 0.5 * tol, min_width, depth + 1) +
         integrate_rec(f, c, b, 0.5 * tol, min_width, depth + 1);
}

}  // namespace detail

inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double tol = 1e-12) {
  return detail::integrate_rec(f, a, b, tol, 1e-9 * (b - a), 0);
}

// P{Erlang(r, lam) > x} evaluated stably in the exponent domain.
inline double erlang_survival(double lam, int r, double x) {
  if (x <= 0.0) return 1.0;
  if (lam <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 0; k < r; ++k)
    sum += std::exp(-lam * x + k * std::log(lam * x) - std::lgamma(k + 1.0));
  return sum;
}

}  // namespace matchq::test
