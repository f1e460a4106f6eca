// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "ksep/intervals.hpp"
#include "ksep/kernel.hpp"
#include "ksep/numeric.hpp"
#include "ksep/profiles.hpp"
#include "ksep/rw.hpp"
#include "ksep/scaling.hpp"

namespace ksep {

// mu_t^nu(A) = sum_x E_nu[eta(x)] P_x(zeta_{Kt} in A), with the spatial sum
// truncated once the certified remainder drops below tol.
inline double intensity(const InitialProfile& nu, int K, double t, const IntervalUnion& A,
                        const JumpKernel& kernel, double tol = 1e-10) {
  if (A.empty()) return 0.0;
  TransitionTable tab = transition_probs(kernel, 1.0, static_cast<double>(K) * t, 0,
                                         std::min(1e-12, tol * 1e-2));
  CdfTable cdf = make_cdf(tab);
  double inf_a = A.inf();
  if (!std::isfinite(inf_a)) throw std::invalid_argument("intensity: set must have inf > -inf");
  long long a_floor = static_cast<long long>(std::floor(inf_a));

  double acc = 0.0;
  long long L = nu.truncation();
  long long x = 0;
  for (;; --x) {
    if (L != kInfiniteL && x <= -L) break;  // profile support exhausted
    double m = nu.mean_occupation(x);
    if (m > 0.0) {
      double p = 0.0;
      for (const auto& seg : A.parts())
        p += cdf.interval(seg.a - static_cast<double>(x), seg.b - static_cast<double>(x));
      acc += m * p;
    }
    if ((x & 63) == 0 && x < 0) {
      // remainder over x' < x is at most K * E[(zeta - (floor(inf A) - x + 1))_+]
      double rem = static_cast<double>(K) * positive_part_mean(tab, a_floor - x + 1);
      if (rem < tol * std::max(1.0, std::fabs(acc))) break;
    }
    if (x < -(1LL << 26)) throw ToleranceUnreachable("intensity: truncation cap exceeded");
  }
  return acc;
}

// Half-line route for j-layer L-step profiles:
// mu_t(y, inf) = j (E[(zeta_{Kt} - floor(y))_+] - E[(zeta_{Kt} - floor(y) - L)_+]);
// same time convention as intensity().
inline double intensity_step_halfline(const JumpKernel& kernel, int K, int layers, double t,
                                      double y, long long L = kInfiniteL, double tol = 1e-12) {
  TransitionTable tab = transition_probs(kernel, 1.0, static_cast<double>(K) * t, 0, tol);
  long long m = static_cast<long long>(std::floor(y));
  double v = positive_part_mean(tab, m);
  if (L != kInfiniteL) v -= positive_part_mean(tab, m + L);
  return static_cast<double>(layers) * v;
}

enum class LimitCase { full, psi, block };

// Limit intensity constant times lambda(A); lambda(a,b] = e^{-a} - e^{-b}.
inline double limit_intensity(LimitCase kind, double c_nu, double sigma, double psi, int K,
                              const IntervalUnion& A) {
  double c = 0.0;
  switch (kind) {
    case LimitCase::full:
      c = static_cast<double>(K) * sigma;
      break;
    case LimitCase::psi:
      if (!(psi > 0.0)) throw std::invalid_argument("limit_intensity: psi must be > 0");
      c = c_nu * sigma * (std::isinf(psi) ? 1.0 : (1.0 - std::exp(-psi / sigma)));
      break;
    case LimitCase::block:
      c = c_nu;
      break;
  }
  return c * exp_measure(A);
}

struct KappaTauReport {
  double kappa = 0.0;
  double tau = 0.0;
  double quad_error = 0.0;
  double truncation_error = 0.0;
};

namespace detail {

// Memoized rate-1 walk laws for the time points a quadrature visits.
class WalkLawCache {
 public:
  WalkLawCache(const JumpKernel& k, double tol) : k_(&k), tol_(tol) {}

  const CdfTable& cdf_at(double s) {
    auto it = cdfs_.find(s);
    if (it != cdfs_.end()) return it->second;
    return cdfs_.emplace(s, make_cdf(table_at(s))).first->second;
  }

  const TransitionTable& table_at(double s) {
    auto it = tabs_.find(s);
    if (it != tabs_.end()) return it->second;
    TransitionTable t = (s <= 0.0)
                            ? point_mass()
                            : transition_probs(*k_, 1.0, s, 0, tol_);
    return tabs_.emplace(s, std::move(t)).first->second;
  }

 private:
  static TransitionTable point_mass() {
    TransitionTable t;
    t.origin = 0;
    t.rate = 1.0;
    t.time = 0.0;
    t.lo = t.hi = 0;
    t.values = {1.0};
    t.tail_bound = 0.0;
    return t;
  }

  const JumpKernel* k_;
  double tol_;
  std::map<double, TransitionTable> tabs_;
  std::map<double, CdfTable> cdfs_;
};

// P_x(zeta in U) from a cdf of the origin-started law.
inline double set_prob(const CdfTable& cdf, const IntervalUnion& u, long long x) {
  double p = 0.0;
  for (const auto& seg : u.parts()) {
    double top = std::isfinite(seg.b) ? cdf.cdf(static_cast<long long>(std::floor(seg.b)) - x)
                                      : (cdf.cum.empty() ? 0.0 : cdf.cum.back());
    double bot = std::isfinite(seg.a) ? cdf.cdf(static_cast<long long>(std::floor(seg.a)) - x)
                                      : 0.0;
    p += top - bot;
  }
  return p;
}

// Window of x that covers every finite endpoint of A and B plus the walk reach.
inline std::pair<long long, long long> kappa_window(const IntervalUnion& A,
                                                    const IntervalUnion& B, long long reach) {
  long long lo = std::numeric_limits<long long>::max();
  long long hi = std::numeric_limits<long long>::min();
  auto feed = [&lo, &hi](const IntervalUnion& u) {
    for (const auto& seg : u.parts()) {
      if (std::isfinite(seg.a)) {
        lo = std::min(lo, static_cast<long long>(std::floor(seg.a)));
        hi = std::max(hi, static_cast<long long>(std::floor(seg.a)));
      }
      if (std::isfinite(seg.b)) {
        lo = std::min(lo, static_cast<long long>(std::floor(seg.b)));
        hi = std::max(hi, static_cast<long long>(std::floor(seg.b)));
      }
    }
  };
  feed(A);
  feed(B);
  if (lo > hi) throw std::invalid_argument("kappa/tau sets need a finite endpoint");
  return {lo - reach, hi + reach};
}

}  // namespace detail

// tau_t(A, B) = sum_{x in A ∩ Z} P_x(zeta_t in B)^2.
inline double tau_correlation(const JumpKernel& kernel, double t, const IntervalUnion& A,
                              const IntervalUnion& B, double tol = 1e-12) {
  TransitionTable tab = transition_probs(kernel, 1.0, t, 0, std::min(tol, 1e-12));
  CdfTable cdf = make_cdf(tab);
  double acc = 0.0;
  for (const auto& seg : A.parts()) {
    if (!std::isfinite(seg.a))
      throw std::invalid_argument("tau: first set must be bounded below");
    long long zlo = lattice_lo(seg);
    long long zhi;
    if (std::isfinite(seg.b)) {
      zhi = lattice_hi(seg);
    } else {
      // remainder over x > zhi is at most E[(zeta - (zhi - floor(sup B)))_+]
      double bsup = B.sup();
      if (!std::isfinite(bsup))
        throw std::invalid_argument("tau: unbounded A needs sup B < inf");
      long long bf = static_cast<long long>(std::floor(bsup));
      zhi = std::max(zlo, bf);
      while (positive_part_mean(tab, zhi - bf) > tol) {
        zhi += 64;
        if (zhi - zlo > (1LL << 26))
          throw ToleranceUnreachable("tau: truncation cap exceeded");
      }
    }
    for (long long x = zlo; x <= zhi; ++x) {
      double p = detail::set_prob(cdf, B, x);
      acc += p * p;
    }
  }
  return acc;
}

// kappa_t(A, B) (Definition of the correlation functional): adaptive Simpson in
// s over [0, t] of
//   sum_{x,y} p(x,y) (P_x(zeta_s in B) - P_y(zeta_s in B))^2
//             P_x(zeta_{t-s} in A) P_y(zeta_{t-s} in A).
inline KappaTauReport kappa_tau(const JumpKernel& kernel, double t, const IntervalUnion& A,
                                const IntervalUnion& B, double quad_tol = 1e-9) {
  KappaTauReport rep;
  rep.tau = tau_correlation(kernel, t, A, B, std::min(quad_tol, 1e-10));
  if (t <= 0.0) return rep;  // empty integral

  detail::WalkLawCache cache(kernel, 1e-13);
  long long reach =
      static_cast<long long>(std::ceil(9.0 * std::sqrt(std::max(1.0, t)) *
                                       kernel.sigma)) +
      16 * kernel.max_abs_offset;
  auto [xlo, xhi] = detail::kappa_window(A, B, reach);

  auto integrand = [&](double s) -> double {
    const CdfTable& qb = cache.cdf_at(s);
    const CdfTable& qa = cache.cdf_at(t - s);
    const std::size_t width = static_cast<std::size_t>(xhi - xlo + 1);
    std::vector<double> fb(width + static_cast<std::size_t>(kernel.max_abs_offset), 0.0);
    std::vector<double> fa(width + static_cast<std::size_t>(kernel.max_abs_offset), 0.0);
    for (std::size_t i = 0; i < fb.size(); ++i) {
      long long x = xlo + static_cast<long long>(i);
      fb[i] = detail::set_prob(qb, B, x);
      fa[i] = detail::set_prob(qa, A, x);
    }
    double g = 0.0;
    for (std::size_t j = 0; j < kernel.offsets.size(); ++j) {
      long long d = kernel.offsets[j];
      if (d <= 0) continue;
      double pd = kernel.probs[j];
      for (std::size_t i = 0; i + static_cast<std::size_t>(d) < fb.size(); ++i) {
        double diff = fb[i] - fb[i + static_cast<std::size_t>(d)];
        if (diff == 0.0) continue;
        g += 2.0 * pd * diff * diff * fa[i] * fa[i + static_cast<std::size_t>(d)];
      }
    }
    return g;
  };

  QuadratureResult q = adaptive_simpson(integrand, 0.0, t, quad_tol, 64);
  rep.kappa = q.value;
  rep.quad_error = q.error;
  // outside the window both tails are below the table tails
  rep.truncation_error = 4.0 * t * 1e-12;
  return rep;
}

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double tol) const { return lhs <= rhs + tol; }
};

// kappa_t((b,inf), (-L,0]) <= sigma^2 I_t(L, b/2) + 8 M4 t / b^2, where
// I_t(L,u) integrates the squared point-mass differences against the
// upper-tail weight; P_x(zeta = -inf) = 0 covers L = inf.
inline InequalityCheck check_kappabound2(const JumpKernel& kernel, double t, double b,
                                         long long L, double quad_tol = 1e-11) {
  IntervalUnion A = IntervalUnion::single(b, kInf);
  IntervalUnion B = (L == kInfiniteL) ? IntervalUnion::single(-kInf, 0.0)
                                      : IntervalUnion::single(-static_cast<double>(L), 0.0);
  InequalityCheck out;
  out.lhs = kappa_tau(kernel, t, A, B, quad_tol).kappa;

  detail::WalkLawCache cache(kernel, 1e-13);
  long long reach = static_cast<long long>(
                        std::ceil(9.0 * std::sqrt(std::max(1.0, t)) * kernel.sigma)) +
                    16 * kernel.max_abs_offset;
  long long u_floor = static_cast<long long>(std::floor(b / 2.0));
  long long lo = std::min<long long>({0, (L == kInfiniteL ? 0 : -L), u_floor}) - reach;
  long long hi = std::max<long long>({0, u_floor}) + reach;

  auto integrand = [&](double s) -> double {
    const TransitionTable& qs = cache.table_at(s);
    const CdfTable& qa = cache.cdf_at(t - s);
    double g = 0.0;
    for (long long x = lo; x <= hi; ++x) {
      double dq = qs.at(-x);
      if (L != kInfiniteL) dq -= qs.at(-L - x);
      if (dq == 0.0) continue;
      double tail = 1.0 - qa.cdf(u_floor - x);
      g += dq * dq * tail * tail;
    }
    return g;
  };
  QuadratureResult q = adaptive_simpson(integrand, 0.0, t, quad_tol, 64);
  double sigma2 = kernel.moment(2);
  out.rhs = sigma2 * q.value + 8.0 * kernel.m4 * t / (b * b);
  return out;
}

// max{tau_t(A, H), tau_t(H, A)} <= K^{-1} mu_{t/K}^eta(A) P_0(zeta_t > a) for
// the K-layer L-step profile (H = (-L, 0] ∩ Z) and A = (a, inf).
inline InequalityCheck check_tauto0(const JumpKernel& kernel, int K, double t, double a,
                                    long long L, double tol = 1e-12) {
  IntervalUnion A = IntervalUnion::single(a, kInf);
  IntervalUnion H = IntervalUnion::single(-static_cast<double>(L), 0.0);
  InequalityCheck out;
  double t1 = tau_correlation(kernel, t, A, H, tol);
  double t2 = tau_correlation(kernel, t, H, A, tol);
  out.lhs = std::max(t1, t2);
  TransitionTable tab = transition_probs(kernel, 1.0, t, 0, tol);
  long long af = static_cast<long long>(std::floor(a));
  double mu_over_K = positive_part_mean(tab, af) - positive_part_mean(tab, af + L);
  out.rhs = mu_over_K * survival(tab, a);
  (void)K;  // the bound is K-free once written in rate-1 time
  return out;
}

// mu^(n)(A^n) = (mu(A))_n for counting measures.
inline long long falling_factorial_count(long long count, int n) {
  if (n < 1) throw std::invalid_argument("falling_factorial_count: n must be >= 1");
  return falling_factorial(count, n);
}

}  // namespace ksep
