// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ksep/intervals.hpp"

namespace ksep {

class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Affine rescaling v(x) = x/(sigma b) - a mapping lattice positions to the
// coordinates in which the extremal point process has a limit.
struct ScalingMap {
  enum class Kind { time, block };

  double sigma = 1.0;
  double a = 0.0;
  double b = 1.0;
  Kind kind = Kind::time;
  double t = 0.0;
  long long L = 0;  // block maps only

  double forward(double x) const { return x / (sigma * b) - a; }
  double inverse(double u) const { return sigma * b * (u + a); }

  // v^{-1}(x, y] = (v^{-1}(x), v^{-1}(y)]
  HalfOpen preimage(const HalfOpen& h) const {
    return HalfOpen{std::isfinite(h.a) ? inverse(h.a) : h.a,
                    std::isfinite(h.b) ? inverse(h.b) : h.b};
  }

  IntervalUnion preimage(const IntervalUnion& u) const {
    std::vector<HalfOpen> parts;
    for (const auto& p : u.parts()) parts.push_back(preimage(p));
    return IntervalUnion(parts);
  }
};

// a_t = log(t / (sqrt(2 pi) log t)),  b_t = (t / log t)^{1/2};  requires t > 1.
inline ScalingMap make_time_map(double sigma, double t) {
  if (!(t > 1.0)) throw DomainError("make_time_map requires t > 1");
  if (!(sigma > 0.0)) throw DomainError("make_time_map requires sigma > 0");
  ScalingMap m;
  m.sigma = sigma;
  m.a = std::log(t / (std::sqrt(2.0 * M_PI) * std::log(t)));
  m.b = std::sqrt(t / std::log(t));
  m.kind = ScalingMap::Kind::time;
  m.t = t;
  return m;
}

// a_{t,L} = log(L^2 / sqrt(2 pi log L^2)),  b_{t,L} = (t / log L^2)^{1/2};
// requires t > 0 and L >= 2.
inline ScalingMap make_block_map(double sigma, double t, long long L) {
  if (L < 2) throw DomainError("make_block_map requires L >= 2");
  if (!(t > 0.0)) throw DomainError("make_block_map requires t > 0");
  if (!(sigma > 0.0)) throw DomainError("make_block_map requires sigma > 0");
  ScalingMap m;
  m.sigma = sigma;
  double L2 = static_cast<double>(L) * static_cast<double>(L);
  m.a = std::log(L2 / std::sqrt(2.0 * M_PI * std::log(L2)));
  m.b = std::sqrt(t / std::log(L2));
  m.kind = ScalingMap::Kind::block;
  m.t = t;
  m.L = L;
  return m;
}

}  // namespace ksep
