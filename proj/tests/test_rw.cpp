// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ksep/kernel.hpp"
#include "ksep/numeric.hpp"
#include "ksep/rw.hpp"

using namespace ksep;

namespace {

// Independent oracle for the simple walk: P(zeta_t = k) = e^{-t} I_k(t).
double bessel_point(double t, long long k) {
  return std::exp(-t) * std::cyl_bessel_i(static_cast<double>(std::llabs(k)), t);
}

// Characteristic-function oracle, stable at large t:
// P(zeta_t = k) = (1/pi) int_0^pi e^{t(cos u - 1)} cos(k u) du.
double charfn_point(double t, long long k) {
  auto f = [t, k](double u) { return std::exp(t * (std::cos(u) - 1.0)) * std::cos(k * u); };
  return ksep::adaptive_simpson(f, 0.0, M_PI, 1e-14, 256).value / M_PI;
}

}  // namespace

TEST_CASE("t=0 is a point mass at the origin") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable tab = transition_probs(k, 1.0, 0.0, 5);
  CHECK(tab.at(5) == Catch::Approx(1.0).margin(1e-14));
  CHECK(tab.tail_bound <= 1e-14);
  CHECK(survival(tab, -0.5) == Catch::Approx(1.0).margin(1e-14));
  CHECK(survival(tab, 0.0 + 5.0) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("simple walk at t=1 matches the Bessel closed form") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable tab = transition_probs(k, 1.0, 1.0, 0);
  // frozen from the closed form e^{-1} I_0(1)
  CHECK(tab.at(0) == Catch::Approx(0.46575960759364044).margin(1e-12));
  for (long long z = 0; z <= 6; ++z)
    CHECK(tab.at(z) == Catch::Approx(bessel_point(1.0, z)).margin(1e-12));
  CHECK(survival(tab, 0.0) == Catch::Approx(0.26712019620317978).margin(1e-12));
}

TEST_CASE("table invariants: mass, positivity, symmetry") {
  JumpKernel k = make_kernel({{1, 0.3}, {-1, 0.3}, {2, 0.2}, {-2, 0.2}});
  for (double t : {0.5, 3.0, 40.0, 700.0}) {
    TransitionTable tab = transition_probs(k, 1.0, t, 0);
    double m = tab.mass();
    CHECK(m <= 1.0 + 1e-12);
    CHECK(m + tab.tail_bound >= 1.0 - 1e-12);
    for (double v : tab.values) CHECK(v >= 0.0);
    for (long long d = 1; d <= 10; ++d)
      CHECK(tab.at(d) == Catch::Approx(tab.at(-d)).margin(1e-12));
  }
}

TEST_CASE("Chapman-Kolmogorov: table at t1+t2 equals the convolution") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable a = transition_probs(k, 1.0, 1.25, 0);
  TransitionTable b = transition_probs(k, 1.0, 2.0, 0);
  TransitionTable ab = convolve(a, b);
  TransitionTable direct = transition_probs(k, 1.0, 3.25, 0);
  for (long long z = -12; z <= 12; ++z)
    CHECK(ab.at(z) == Catch::Approx(direct.at(z)).margin(1e-11));
}

TEST_CASE("long-time tables stay certified") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable tab = transition_probs(k, 1.0, 4000.0, 0, 1e-12);
  CHECK(tab.tail_bound < 1e-12);
  CHECK(tab.mass() + tab.tail_bound >= 1.0 - 1e-12);
  // compare against the characteristic-function oracle at a few points
  for (long long z : {0LL, 30LL, 63LL, 120LL})
    CHECK(tab.at(z) == Catch::Approx(charfn_point(4000.0, z)).epsilon(1e-6));
}

TEST_CASE("survival uses the floor convention and is monotone") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable tab = transition_probs(k, 1.0, 2.0, 0);
  CHECK(survival(tab, 1.0) == Catch::Approx(survival(tab, 1.5)).margin(1e-15));
  CHECK(survival(tab, 0.999999) == Catch::Approx(survival(tab, 0.0)).margin(1e-15));
  double prev = 1.0;
  for (double y = -8.0; y <= 8.0; y += 0.25) {
    double s = survival(tab, y);
    CHECK(s <= prev + 1e-15);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    prev = s;
  }
}

TEST_CASE("positive part mean: frozen value and summation-by-parts") {
  JumpKernel k = nearest_neighbor_kernel();
  TransitionTable t0 = transition_probs(k, 1.0, 0.0, 0);
  CHECK(positive_part_mean(t0, -4) == Catch::Approx(4.0).margin(1e-14));
  CHECK(positive_part_mean(t0, 1) == Catch::Approx(0.0).margin(1e-14));

  TransitionTable t1 = transition_probs(k, 1.0, 1.0, 0);
  // frozen from the Bessel series sum_{z>=1} z e^{-1} I_z(1)
  CHECK(positive_part_mean(t1, 0) == Catch::Approx(0.33683501147167444).margin(1e-12));
  double series = 0.0;
  for (long long z = 1; z <= 40; ++z) series += static_cast<double>(z) * bessel_point(1.0, z);
  CHECK(positive_part_mean(t1, 0) == Catch::Approx(series).margin(1e-12));

  // ppm(m) - ppm(m+1) = survival(m)
  for (long long m : {-3LL, 0LL, 2LL}) {
    double lhs = positive_part_mean(t1, m) - positive_part_mean(t1, m + 1);
    CHECK(lhs == Catch::Approx(survival(t1, static_cast<double>(m))).margin(1e-12));
  }
}

TEST_CASE("endpoint sampling matches the table law") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(42);
  const int n = 1000000;
  int at0 = 0;
  double meansum = 0.0;
  for (int i = 0; i < n; ++i) {
    long long z = sample_increment_path(k, 1.0, 1.0, 0, rng);
    if (z == 0) ++at0;
    meansum += static_cast<double>(z);
  }
  double p0 = 0.46575960759364044;
  double se = std::sqrt(p0 * (1 - p0) / n);
  CHECK(std::fabs(at0 / double(n) - p0) < 3.0 * se);
  double mean_se = std::sqrt(1.0 / n);  // Var(zeta_1) = 1
  CHECK(std::fabs(meansum / n) < 3.0 * mean_se);
}

TEST_CASE("tolerance domain errors") {
  JumpKernel k = nearest_neighbor_kernel();
  CHECK_THROWS(transition_probs(k, 1.0, 1.0, 0, 0.5));   // tol too large
  CHECK_THROWS(transition_probs(k, 1.0, -1.0, 0));       // negative time
  CHECK_THROWS(transition_probs(k, 0.0, 1.0, 0));        // zero rate
}
