// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ksep {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-open interval (a, b]; a = -inf and b = +inf sentinels are allowed.
struct HalfOpen {
  double a = 0.0;
  double b = 0.0;
  bool valid() const { return a < b; }
  bool contains(double x) const { return x > a && x <= b; }
};

class OverlappingIntervals : public std::invalid_argument {
 public:
  OverlappingIntervals() : std::invalid_argument("intervals must be pairwise disjoint") {}
};

// Finite union of disjoint half-open intervals in canonical (sorted, merged) form.
class IntervalUnion {
 public:
  IntervalUnion() = default;

  explicit IntervalUnion(std::vector<HalfOpen> parts) {
    for (const auto& p : parts)
      if (!p.valid()) throw std::invalid_argument("interval requires a < b");
    std::sort(parts.begin(), parts.end(),
              [](const HalfOpen& x, const HalfOpen& y) { return x.a < y.a; });
    for (const auto& p : parts) {
      if (!parts_.empty() && p.a <= parts_.back().b) {
        parts_.back().b = std::max(parts_.back().b, p.b);
      } else {
        parts_.push_back(p);
      }
    }
  }

  static IntervalUnion single(double a, double b) { return IntervalUnion({HalfOpen{a, b}}); }

  const std::vector<HalfOpen>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }

  bool contains(double x) const {
    for (const auto& p : parts_)
      if (p.contains(x)) return true;
    return false;
  }

  bool bounded() const {
    return parts_.empty() ||
           (std::isfinite(parts_.front().a) && std::isfinite(parts_.back().b));
  }

  double inf() const { return parts_.empty() ? kInf : parts_.front().a; }
  double sup() const { return parts_.empty() ? -kInf : parts_.back().b; }

 private:
  std::vector<HalfOpen> parts_;
};

// Lattice view: (a,b] ∩ Z = {floor(a)+1, ..., floor(b)} (floor(c) = max{n : n <= c}).
inline long long lattice_lo(const HalfOpen& h) {
  return static_cast<long long>(std::floor(h.a)) + 1;
}
inline long long lattice_hi(const HalfOpen& h) {
  return static_cast<long long>(std::floor(h.b));
}

inline bool lattice_contains(const IntervalUnion& u, long long x) {
  return u.contains(static_cast<double>(x));
}

inline long long lattice_count(const IntervalUnion& u) {
  long long n = 0;
  for (const auto& p : u.parts()) {
    if (!std::isfinite(p.a) || !std::isfinite(p.b))
      throw std::invalid_argument("lattice_count requires a bounded set");
    n += std::max<long long>(0, lattice_hi(p) - lattice_lo(p) + 1);
  }
  return n;
}

// lambda(A) for lambda(dx) = e^{-x} dx: sum of e^{-a} - e^{-b}.
inline double exp_measure(const IntervalUnion& u) {
  double s = 0.0;
  for (const auto& p : u.parts()) {
    double ea = std::isfinite(p.a) ? std::exp(-p.a) : kInf;
    double eb = std::isfinite(p.b) ? std::exp(-p.b) : 0.0;
    s += ea - eb;
  }
  return s;
}

}  // namespace ksep
