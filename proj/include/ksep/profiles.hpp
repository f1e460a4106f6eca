// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksep/numeric.hpp"
#include "ksep/rng.hpp"

namespace ksep {

class ProfileError : public std::invalid_argument {
 public:
  explicit ProfileError(const std::string& what) : std::invalid_argument(what) {}
};

constexpr long long kInfiniteL = std::numeric_limits<long long>::max();

// Step-type initial condition: a product law on occupancies supported on
// nonpositive sites, with at most K particles per site.  The three variants
// are the deterministic j-layer L-step, a periodic product measure, and iid
// Binomial(K, alpha) marginals.
class InitialProfile {
 public:
  enum class Variant { deterministic_step, product_periodic, binomial_step };

  static InitialProfile deterministic_step(int K, int layers, long long L = kInfiniteL) {
    if (K < 1) throw ProfileError("K must be >= 1");
    if (layers < 1 || layers > K) throw ProfileError("layers must lie in [1, K]");
    if (L < 1) throw ProfileError("L must be >= 1");
    InitialProfile p;
    p.variant_ = Variant::deterministic_step;
    p.K_ = K;
    p.layers_ = layers;
    p.L_ = L;
    return p;
  }

  // residue_pmfs[i] is the occupancy law (over {0..K}) at sites x <= 0 with
  // (-x) mod r == i.
  static InitialProfile product_periodic(int K, std::vector<std::vector<double>> residue_pmfs) {
    if (K < 1) throw ProfileError("K must be >= 1");
    if (residue_pmfs.empty()) throw ProfileError("need at least one residue law");
    for (const auto& pmf : residue_pmfs) {
      if (pmf.size() != static_cast<std::size_t>(K + 1))
        throw ProfileError("each residue law must have K+1 entries");
      double s = 0.0;
      for (double q : pmf) {
        if (q < 0.0) throw ProfileError("negative probability in residue law");
        s += q;
      }
      if (std::fabs(s - 1.0) > 1e-12) throw ProfileError("residue law must sum to 1");
    }
    InitialProfile p;
    p.variant_ = Variant::product_periodic;
    p.K_ = K;
    p.residue_pmfs_ = std::move(residue_pmfs);
    if (!(p.c_nu() > 0.0)) throw ProfileError("c_nu must be positive");
    return p;
  }

  static InitialProfile binomial_step(int K, double alpha) {
    if (K < 1) throw ProfileError("K must be >= 1");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw ProfileError("alpha must lie in (0,1)");
    InitialProfile p;
    p.variant_ = Variant::binomial_step;
    p.K_ = K;
    p.alpha_ = alpha;
    return p;
  }

  Variant variant() const { return variant_; }
  int K() const { return K_; }
  int layers() const { return layers_; }
  double alpha() const { return alpha_; }
  long long truncation() const { return L_; }
  std::size_t period() const { return residue_pmfs_.size(); }

  // nu_L: same marginals on (-L, 0], empty elsewhere.
  InitialProfile truncated(long long L) const {
    if (L < 1) throw ProfileError("L must be >= 1");
    InitialProfile p = *this;
    p.L_ = std::min(p.L_, L);
    return p;
  }

  // E[eta(x)] under the (possibly truncated) profile law.
  double mean_occupation(long long x) const {
    if (x > 0) return 0.0;
    if (L_ != kInfiniteL && x <= -L_) return 0.0;
    switch (variant_) {
      case Variant::deterministic_step:
        return static_cast<double>(layers_);
      case Variant::binomial_step:
        return static_cast<double>(K_) * alpha_;
      case Variant::product_periodic: {
        const auto& pmf = residue_pmfs_[static_cast<std::size_t>((-x) % period())];
        double m = 0.0;
        for (std::size_t j = 1; j < pmf.size(); ++j) m += static_cast<double>(j) * pmf[j];
        return m;
      }
    }
    return 0.0;
  }

  // Cesaro mean density of the untruncated profile behind the origin.
  double c_nu() const {
    switch (variant_) {
      case Variant::deterministic_step:
        return static_cast<double>(layers_);
      case Variant::binomial_step:
        return static_cast<double>(K_) * alpha_;
      case Variant::product_periodic: {
        double s = 0.0;
        for (std::size_t i = 0; i < residue_pmfs_.size(); ++i) {
          const auto& pmf = residue_pmfs_[i];
          for (std::size_t j = 1; j < pmf.size(); ++j) s += static_cast<double>(j) * pmf[j];
        }
        return s / static_cast<double>(residue_pmfs_.size());
      }
    }
    return 0.0;
  }

  // Occupancy law at site x as a pmf over {0..K} (truncation applied).
  std::vector<double> marginal_pmf(long long x) const {
    std::vector<double> pmf(static_cast<std::size_t>(K_) + 1, 0.0);
    if (x > 0 || (L_ != kInfiniteL && x <= -L_)) {
      pmf[0] = 1.0;
      return pmf;
    }
    switch (variant_) {
      case Variant::deterministic_step:
        pmf[static_cast<std::size_t>(layers_)] = 1.0;
        return pmf;
      case Variant::binomial_step: {
        for (int j = 0; j <= K_; ++j)
          pmf[static_cast<std::size_t>(j)] = static_cast<double>(binomial_coeff(K_, j)) *
                                             std::pow(alpha_, j) *
                                             std::pow(1.0 - alpha_, K_ - j);
        return pmf;
      }
      case Variant::product_periodic:
        return residue_pmfs_[static_cast<std::size_t>((-x) % period())];
    }
    return pmf;
  }

  // iid site draws over (-L, 0]; out[i] is the occupancy of site x = -L+1+i.
  std::vector<int> sample_occupancies(long long L, SplitMix64& rng) const {
    if (L < 1 || L == kInfiniteL)
      throw ProfileError("sampling requires a finite truncation L >= 1");
    std::vector<int> occ(static_cast<std::size_t>(L), 0);
    for (long long i = 0; i < L; ++i) {
      long long x = -L + 1 + i;
      std::vector<double> pmf = marginal_pmf(x);
      if (variant_ == Variant::deterministic_step) {
        occ[static_cast<std::size_t>(i)] = (x > -std::min(L_, L)) ? layers_ : 0;
        continue;
      }
      double u = rng.uniform01();
      double c = 0.0;
      int draw = K_;
      for (int j = 0; j <= K_; ++j) {
        c += pmf[static_cast<std::size_t>(j)];
        if (u < c) {
          draw = j;
          break;
        }
      }
      occ[static_cast<std::size_t>(i)] = draw;
    }
    return occ;
  }

 private:
  Variant variant_ = Variant::deterministic_step;
  int K_ = 1;
  int layers_ = 1;
  double alpha_ = 0.0;
  long long L_ = kInfiniteL;
  std::vector<std::vector<double>> residue_pmfs_;
};

}  // namespace ksep
