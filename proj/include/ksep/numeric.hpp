// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>

namespace ksep {

class ToleranceUnreachable : public std::runtime_error {
 public:
  explicit ToleranceUnreachable(const std::string& what) : std::runtime_error(what) {}
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion (x < a+1).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Survival function of a chi-square variable with df degrees of freedom.
inline double chi2_sf(double x, double df) { return gamma_q(df / 2.0, x / 2.0); }

// P(Poisson(z) <= m) = Q(m+1, z).
inline double poisson_cdf(long long m, double z) {
  if (m < 0) return 0.0;
  return gamma_q(static_cast<double>(m) + 1.0, z);
}

// Kolmogorov asymptotic survival: P(sup |B| > x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = 2.0 * std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

// One-sample KS critical distance at significance `level` (asymptotic).
inline double ks_critical(std::size_t n, double level) {
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

// Standard normal quantile by bisection (monotone cdf, machine precision).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// (k)_n = k (k-1) ... (k-n+1); zero when n > k.
inline long long falling_factorial(long long k, int n) {
  if (n < 0) throw std::invalid_argument("falling_factorial: n < 0");
  long long out = 1;
  for (int i = 0; i < n; ++i) {
    long long f = k - i;
    if (f <= 0) return 0;
    out *= f;
  }
  return out;
}

inline long long binomial_coeff(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // Richardson estimate of the remaining error
};

namespace detail {

inline void adaptive_simpson_rec(const std::function<double(double)>& f, double a, double m,
                                 double b, double fa, double fm, double fb, double whole,
                                 double tol, int depth, QuadratureResult& acc) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    acc.value += left + right + delta / 15.0;
    acc.error += std::fabs(delta) / 15.0;
    return;
  }
  adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, tol * 0.5, depth - 1, acc);
  adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, tol * 0.5, depth - 1, acc);
}

}  // namespace detail

// Composite adaptive Simpson over [a,b] with a floor of `panels` uniform panels.
inline QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a,
                                         double b, double tol, int panels = 64,
                                         int max_depth = 28) {
  QuadratureResult acc;
  if (!(b > a)) return acc;
  if (panels < 1) panels = 1;
  double h = (b - a) / panels;
  double ptol = tol / panels;
  for (int i = 0; i < panels; ++i) {
    double pa = a + i * h, pb = a + (i + 1) * h, pm = 0.5 * (pa + pb);
    double fa = f(pa), fm = f(pm), fb = f(pb);
    double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    detail::adaptive_simpson_rec(f, pa, pm, pb, fa, fm, fb, whole, ptol, max_depth, acc);
  }
  return acc;
}

}  // namespace ksep
