// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ksep/analytics.hpp"

using namespace ksep;

TEST_CASE("intensity at t=0 for the full step") {
  JumpKernel k = nearest_neighbor_kernel();
  InitialProfile full = InitialProfile::deterministic_step(2, 2);
  // only site 0 lies in (-0.5, inf)
  CHECK(intensity(full, 2, 0.0, IntervalUnion::single(-0.5, kInf), k) ==
        Catch::Approx(2.0).margin(1e-12));
  // floor(-3.5) = -4: sites -3..0 → 2*4 = 8
  CHECK(intensity(full, 2, 0.0, IntervalUnion::single(-3.5, kInf), k) ==
        Catch::Approx(8.0).margin(1e-12));
  CHECK(intensity_step_halfline(k, 2, 2, 0.0, -3.5) == Catch::Approx(8.0).margin(1e-12));
}

TEST_CASE("route agreement: spatial sum vs positive-part mean") {
  JumpKernel k = nearest_neighbor_kernel();
  for (int K : {1, 2, 3}) {
    InitialProfile full = InitialProfile::deterministic_step(K, K);
    for (double t : {0.5, 2.0, 10.0}) {
      for (double y : {-4.5, -1.0, 0.0, 2.5, 6.0}) {
        double r1 = intensity(full, K, t, IntervalUnion::single(y, kInf), k, 1e-12);
        double r2 = intensity_step_halfline(k, K, K, t, y);
        CHECK(r1 == Catch::Approx(r2).epsilon(1e-9).margin(1e-11));
      }
    }
  }
}

TEST_CASE("intensity is additive over disjoint components") {
  JumpKernel k = nearest_neighbor_kernel();
  InitialProfile p = InitialProfile::binomial_step(2, 0.5);
  double t = 3.0;
  double both = intensity(p, 2, t, IntervalUnion({HalfOpen{-2.0, 0.0}, HalfOpen{1.0, 4.0}}), k);
  double a = intensity(p, 2, t, IntervalUnion::single(-2.0, 0.0), k);
  double b = intensity(p, 2, t, IntervalUnion::single(1.0, 4.0), k);
  CHECK(both == Catch::Approx(a + b).epsilon(1e-10));
}

TEST_CASE("limit intensity constants") {
  IntervalUnion upr = IntervalUnion::single(0.0, kInf);
  CHECK(limit_intensity(LimitCase::full, 0.0, 1.0, 0.0, 2, upr) == Catch::Approx(2.0));
  // psi -> inf reproduces the full-step constant with c_nu = K
  CHECK(limit_intensity(LimitCase::psi, 2.0, 1.0, kInf, 2, upr) == Catch::Approx(2.0));
  CHECK(limit_intensity(LimitCase::block, 1.0, 1.0, 0.0, 2, IntervalUnion::single(0.0, 1.0)) ==
        Catch::Approx(0.63212055882855767).margin(1e-12));
}

TEST_CASE("tau at t=0 counts the overlap") {
  JumpKernel k = nearest_neighbor_kernel();
  // tau_0((-5,0], (-2,inf)) = |{-1, 0}| = 2
  CHECK(tau_correlation(k, 0.0, IntervalUnion::single(-5.0, 0.0),
                        IntervalUnion::single(-2.0, kInf)) == Catch::Approx(2.0).margin(1e-12));
  KappaTauReport rep = kappa_tau(k, 0.0, IntervalUnion::single(-5.0, 0.0),
                                 IntervalUnion::single(-2.0, kInf));
  CHECK(rep.kappa == 0.0);
  CHECK(rep.tau == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("tau is monotone in the truncation depth L") {
  JumpKernel k = nearest_neighbor_kernel();
  double t = 1.0;
  IntervalUnion A = IntervalUnion::single(3.0, kInf);
  double prev = 0.0;
  for (long long L : {2LL, 5LL, 10LL, 25LL}) {
    double v = tau_correlation(k, t, A, IntervalUnion::single(-double(L), 0.0));
    CHECK(v >= prev - 1e-14);
    prev = v;
  }
}

TEST_CASE("kappa bound (fourth-moment tail split) holds numerically") {
  JumpKernel nn = nearest_neighbor_kernel();
  JumpKernel spread = make_kernel({{1, 0.25}, {-1, 0.25}, {2, 0.25}, {-2, 0.25}});
  int i = 0;
  for (const JumpKernel* k : {&nn, &spread}) {
    for (double t : {1.0, 5.0}) {
      for (double b : {10.0, 20.0}) {
        long long L = (i % 2 == 0) ? 10 : kInfiniteL;
        InequalityCheck c = check_kappabound2(*k, t, b, L, 1e-11);
        INFO("kernel " << i << " t " << t << " b " << b);
        CHECK(c.holds(1e-9));
        ++i;
      }
    }
  }
}

TEST_CASE("tau upper bound by the mean measure (step profiles)") {
  JumpKernel k = nearest_neighbor_kernel();
  // both sides zero at t=0 for A=(0.5,inf): no sites of H reach A
  InequalityCheck z = check_tauto0(k, 1, 0.0, 0.5, 5);
  CHECK(z.lhs == Catch::Approx(0.0).margin(1e-14));
  CHECK(z.rhs >= -1e-14);
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    for (long long L : {5LL, 10LL}) {
      for (double a : {2.0, 3.0, 5.0}) {
        InequalityCheck c = check_tauto0(k, 1, t, a, L);
        INFO("t " << t << " L " << L << " a " << a);
        CHECK(c.holds(1e-9));
      }
    }
  }
}

TEST_CASE("mean-convergence ratio approaches 1 along a t-grid") {
  // mu^{nu_L} / ((c_nu / K) mu^{eta_L}) -> 1 with decreasing relative error;
  // a periodic profile with unequal means makes the ratio nontrivial
  JumpKernel k = nearest_neighbor_kernel();
  const int K = 2;
  InitialProfile nu = InitialProfile::product_periodic(K, {{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}});
  double prev_err = 1e9;
  for (double t : {50.0, 200.0, 800.0}) {
    ScalingMap map = make_time_map(k.sigma, t);
    long long L = static_cast<long long>(std::ceil(10.0 * map.b));
    IntervalUnion pre = map.preimage(IntervalUnion::single(0.0, 1.0));
    double mu_nu = intensity(nu.truncated(L), K, t / K, pre, k, 1e-10);
    double mu_eta =
        intensity(InitialProfile::deterministic_step(K, K, L), K, t / K, pre, k, 1e-10);
    double ratio = mu_nu / ((nu.c_nu() / K) * mu_eta);
    double err = std::fabs(ratio - 1.0);
    CHECK(err < prev_err + 1e-12);
    prev_err = err;
  }
  CHECK(prev_err < 0.05);
}

TEST_CASE("falling factorial counting identity vs tuple enumeration") {
  CHECK(falling_factorial_count(3, 2) == 6);
  CHECK(falling_factorial_count(2, 3) == 0);

  // property: ordered distinct index tuples over a multiset of atoms
  SplitMix64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(trial));
    int atoms = 1 + static_cast<int>(sub.below(12));
    std::vector<double> xs;
    for (int i = 0; i < atoms; ++i)
      xs.push_back(static_cast<double>(sub.below(6)) + 0.5);  // repeated atoms allowed
    double a = static_cast<double>(sub.below(6));
    double b = a + 1.0 + static_cast<double>(sub.below(3));
    int n = 1 + static_cast<int>(sub.below(4));

    long long in_count = 0;
    std::vector<int> in_idx;
    for (int i = 0; i < atoms; ++i)
      if (xs[static_cast<std::size_t>(i)] > a && xs[static_cast<std::size_t>(i)] <= b) {
        ++in_count;
        in_idx.push_back(i);
      }

    // brute force: ordered tuples of distinct indices, all atoms inside (a,b]
    long long brute = 0;
    std::vector<int> tuple(static_cast<std::size_t>(n));
    std::function<void(int, unsigned)> rec = [&](int depth, unsigned used) {
      if (depth == n) {
        ++brute;
        return;
      }
      for (int id : in_idx) {
        if (used & (1u << id)) continue;
        rec(depth + 1, used | (1u << id));
      }
    };
    rec(0, 0u);
    REQUIRE(brute == falling_factorial_count(in_count, n));
  }
}
