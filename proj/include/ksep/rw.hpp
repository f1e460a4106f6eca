// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "ksep/kernel.hpp"
#include "ksep/numeric.hpp"
#include "ksep/rng.hpp"

namespace ksep {

// Law of a rate-`rate` continuous-time random walk at time `time`, started at
// `origin`, restricted to the window [lo, hi].  Mass outside the window plus
// the series-truncation error is certified to be at most tail_bound.
struct TransitionTable {
  long long origin = 0;
  double rate = 0.0;
  double time = 0.0;
  long long lo = 0, hi = 0;
  std::vector<double> values;
  double tail_bound = 0.0;

  double at(long long z) const {
    if (z < lo || z > hi) return 0.0;
    return values[static_cast<std::size_t>(z - lo)];
  }
  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

namespace detail {

// Drops negligible mass at both window edges; returns the removed mass.
inline double trim_edges(std::vector<double>& v, long long& lo, double budget) {
  if (budget <= 0.0 || v.empty()) return 0.0;
  double removed = 0.0;
  std::size_t b = 0, e = v.size();
  double half = budget * 0.5;
  double acc = 0.0;
  while (b < e && acc + v[b] <= half) acc += v[b++];
  removed += acc;
  acc = 0.0;
  while (e > b && acc + v[e - 1] <= half) acc += v[--e];
  removed += acc;
  if (b > 0 || e < v.size()) {
    v = std::vector<double>(v.begin() + b, v.begin() + e);
    lo += static_cast<long long>(b);
  }
  return removed;
}

// Uniformization at origin 0 for lambda = rate * t <= 64: the Poisson mixture
// of discrete convolution powers of p, truncated once the cumulative Poisson
// weight exceeds 1 - tol.
inline TransitionTable unit_table(const JumpKernel& k, double lambda, double tol) {
  if (lambda > 64.0 + 1e-9) throw std::logic_error("unit_table: lambda too large");
  // number of series terms: stop once the geometric Poisson-tail bound
  // w_{n+1} / (1 - lambda/(n+2)) drops below tol (immune to cancellation)
  int nterms = 0;
  double tail_bound = 1.0;
  {
    double w = std::exp(-lambda);
    for (;;) {
      if (static_cast<double>(nterms) >= lambda) {
        double wnext = w * lambda / (nterms + 1);
        double tail = wnext / (1.0 - lambda / (nterms + 2));
        if (tail < tol) {
          tail_bound = tail;
          break;
        }
      }
      ++nterms;
      if (nterms > 200000) throw ToleranceUnreachable("unit_table: series cap exceeded");
      w *= lambda / nterms;
    }
  }
  long long reach = k.max_abs_offset * nterms;
  std::size_t width = static_cast<std::size_t>(2 * reach + 1);
  std::vector<double> out(width, 0.0), cur(width, 0.0), next(width, 0.0);
  long long lo = -reach;
  std::size_t center = static_cast<std::size_t>(reach);
  cur[center] = 1.0;

  double w = std::exp(-lambda);
  out[center] = w;
  for (int n = 1; n <= nterms; ++n) {
    std::fill(next.begin(), next.end(), 0.0);
    long long span = k.max_abs_offset * n;
    std::size_t i0 = center - static_cast<std::size_t>(span - k.max_abs_offset);
    std::size_t i1 = center + static_cast<std::size_t>(span - k.max_abs_offset);
    for (std::size_t i = i0; i <= i1; ++i) {
      double c = cur[i];
      if (c == 0.0) continue;
      for (std::size_t j = 0; j < k.offsets.size(); ++j)
        next[static_cast<std::size_t>(static_cast<long long>(i) + k.offsets[j])] +=
            c * k.probs[j];
    }
    cur.swap(next);
    w *= lambda / n;
    for (std::size_t i = center - span; i <= center + span; ++i) out[i] += w * cur[i];
  }

  TransitionTable t;
  t.origin = 0;
  t.rate = 1.0;
  t.time = lambda;
  t.lo = lo;
  t.tail_bound = tail_bound;
  t.values = std::move(out);
  t.hi = t.lo + static_cast<long long>(t.values.size()) - 1;
  t.tail_bound += trim_edges(t.values, t.lo, tol * 1e-3);
  t.hi = t.lo + static_cast<long long>(t.values.size()) - 1;
  return t;
}

}  // namespace detail

// Chapman-Kolmogorov composition of two laws of the same walk.
inline TransitionTable convolve(const TransitionTable& a, const TransitionTable& b,
                                double trim = 0.0) {
  TransitionTable c;
  c.origin = a.origin + b.origin;
  c.rate = a.rate;
  c.time = a.time + b.time;
  c.lo = a.lo + b.lo;
  c.values.assign(a.values.size() + b.values.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double av = a.values[i];
    if (av == 0.0) continue;
    for (std::size_t j = 0; j < b.values.size(); ++j) c.values[i + j] += av * b.values[j];
  }
  c.tail_bound = a.tail_bound + b.tail_bound;
  c.tail_bound += detail::trim_edges(c.values, c.lo, trim);
  c.hi = c.lo + static_cast<long long>(c.values.size()) - 1;
  return c;
}

// Law of zeta_{rate * t} started at `origin`, with certified tail < tol.
// Large rate*t is handled by repeated squaring of half-time laws.
inline TransitionTable transition_probs(const JumpKernel& k, double rate, double t,
                                        long long origin, double tol = 1e-12) {
  if (t < 0.0) throw std::invalid_argument("transition_probs: t must be >= 0");
  if (!(rate > 0.0)) throw std::invalid_argument("transition_probs: rate must be > 0");
  if (!(tol > 0.0) || tol > 1e-3)
    throw std::invalid_argument("transition_probs: tol must lie in (0, 1e-3]");
  double lambda = rate * t;
  int splits = 0;
  double base = lambda;
  while (base > 64.0) {
    base *= 0.5;
    ++splits;
  }
  TransitionTable tab =
      detail::unit_table(k, base, tol / std::ldexp(1.0, splits + 2));
  for (int i = 1; i <= splits; ++i) {
    double trim = tol / (8.0 * splits * std::ldexp(1.0, splits - i));
    tab = convolve(tab, tab, trim);
    if (tab.values.size() > (std::size_t{1} << 24))
      throw ToleranceUnreachable("transition_probs: window cap exceeded");
  }
  tab.rate = rate;
  tab.time = t;
  tab.origin = origin;
  tab.lo += origin;
  tab.hi += origin;
  return tab;
}

// P(zeta > y) with the floor convention: counts lattice sites z >= floor(y)+1.
// Error at most tail_bound.
inline double survival(const TransitionTable& tab, double y) {
  long long m = static_cast<long long>(std::floor(y));
  double s = 0.0;
  for (long long z = std::max(m + 1, tab.lo); z <= tab.hi; ++z)
    s += tab.values[static_cast<std::size_t>(z - tab.lo)];
  return s;
}

// E[(zeta - m)_+] over the window.
inline double positive_part_mean(const TransitionTable& tab, long long m) {
  double s = 0.0;
  for (long long z = std::max(m + 1, tab.lo); z <= tab.hi; ++z)
    s += static_cast<double>(z - m) * tab.values[static_cast<std::size_t>(z - tab.lo)];
  return s;
}

// One endpoint draw of the walk (Poisson number of jumps, iid increments).
inline long long sample_increment_path(const JumpKernel& k, double rate, double t,
                                       long long origin, SplitMix64& rng) {
  if (t < 0.0) throw std::invalid_argument("sample_increment_path: t must be >= 0");
  double lambda = rate * t;
  long long pos = origin;
  if (lambda > 0.0) {
    std::poisson_distribution<long long> pois(lambda);
    long long n = pois(rng);
    for (long long i = 0; i < n; ++i) pos += k.sample(rng);
  }
  return pos;
}

// Prefix sums of a table for O(1) cdf queries P(zeta <= m).
struct CdfTable {
  long long lo = 0, hi = -1;
  std::vector<double> cum;  // cum[i] = P(zeta <= lo + i), window part only
  double tail = 0.0;

  double cdf(long long m) const {
    if (m < lo) return 0.0;
    if (m > hi) return cum.empty() ? 0.0 : cum.back();
    return cum[static_cast<std::size_t>(m - lo)];
  }
  // P(zeta in (a, b] ∩ Z) for real endpoints (floor convention), sentinels allowed.
  double interval(double a, double b) const {
    double top = std::isfinite(b) ? cdf(static_cast<long long>(std::floor(b)))
                                  : (cum.empty() ? 0.0 : cum.back());
    double bot = std::isfinite(a) ? cdf(static_cast<long long>(std::floor(a))) : 0.0;
    return top - bot;
  }
};

inline CdfTable make_cdf(const TransitionTable& tab) {
  CdfTable c;
  c.lo = tab.lo;
  c.hi = tab.hi;
  c.tail = tab.tail_bound;
  c.cum.resize(tab.values.size());
  double s = 0.0;
  for (std::size_t i = 0; i < tab.values.size(); ++i) {
    s += tab.values[i];
    c.cum[i] = s;
  }
  return c;
}

}  // namespace ksep
