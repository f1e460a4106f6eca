// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "ksep/profiles.hpp"

using namespace ksep;

TEST_CASE("full step mean occupation and c_nu = K") {
  InitialProfile full = InitialProfile::deterministic_step(3, 3);
  CHECK(full.mean_occupation(-5) == 3.0);
  CHECK(full.mean_occupation(1) == 0.0);
  CHECK(full.c_nu() == 3.0);

  InitialProfile two = InitialProfile::deterministic_step(2, 2);
  CHECK(two.c_nu() == 2.0);
}

TEST_CASE("truncated step vanishes at and below -L") {
  InitialProfile p = InitialProfile::deterministic_step(3, 2, 10);
  CHECK(p.mean_occupation(-9) == 2.0);
  CHECK(p.mean_occupation(-10) == 0.0);
  CHECK(p.mean_occupation(-11) == 0.0);
}

TEST_CASE("binomial step: mean K alpha, c_nu K alpha") {
  InitialProfile p = InitialProfile::binomial_step(4, 0.25);
  CHECK(p.mean_occupation(0) == Catch::Approx(1.0));
  CHECK(p.c_nu() == Catch::Approx(1.0));
  // direct Cesaro average over 1e4 terms agrees (constant means)
  double acc = 0.0;
  for (long long x = 0; x < 10000; ++x) acc += p.mean_occupation(-x);
  CHECK(acc / 10000.0 == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("periodic profile: c_nu is the period average") {
  // period 2, means (2, 0): c_nu = 1
  std::vector<std::vector<double>> pmfs = {{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  InitialProfile p = InitialProfile::product_periodic(2, pmfs);
  CHECK(p.mean_occupation(0) == 2.0);   // residue 0
  CHECK(p.mean_occupation(-1) == 0.0);  // residue 1
  CHECK(p.c_nu() == Catch::Approx(1.0));

  // running Cesaro average converges with O(1/k) error
  double acc = 0.0;
  long long k = 100000;
  for (long long x = 0; x < k; ++x) acc += p.mean_occupation(-x);
  CHECK(std::fabs(acc / static_cast<double>(k) - 1.0) < 1e-3);
}

TEST_CASE("sampling: deterministic count, binomial mean, occupancy cap") {
  SplitMix64 rng(11);
  InitialProfile det = InitialProfile::deterministic_step(2, 2);
  auto occ = det.sample_occupancies(5, rng);
  long long total = 0;
  for (int v : occ) total += v;
  CHECK(total == 10);  // exactly 5K particles

  InitialProfile bin = InitialProfile::binomial_step(3, 0.4);
  const long long L = 50;
  const int reps = 10000;
  double mean_total = 0.0;
  for (int r = 0; r < reps; ++r) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(r));
    auto o = bin.sample_occupancies(L, sub);
    long long t = 0;
    for (int v : o) {
      REQUIRE(v >= 0);
      REQUIRE(v <= 3);
      t += v;
    }
    mean_total += static_cast<double>(t);
  }
  mean_total /= reps;
  double target = static_cast<double>(L) * 3 * 0.4;  // L K alpha
  double se = std::sqrt(L * 3 * 0.4 * 0.6 / static_cast<double>(reps));
  CHECK(std::fabs(mean_total - target) < 3.5 * se);
}

TEST_CASE("mean occupation is within [0, K] everywhere") {
  std::vector<InitialProfile> ps = {
      InitialProfile::deterministic_step(3, 1, 7),
      InitialProfile::binomial_step(2, 0.5),
      InitialProfile::product_periodic(2, {{0.25, 0.5, 0.25}, {0.5, 0.5, 0.0}})};
  for (const auto& p : ps)
    for (long long x = -30; x <= 5; ++x) {
      CHECK(p.mean_occupation(x) >= 0.0);
      CHECK(p.mean_occupation(x) <= static_cast<double>(p.K()));
    }
}

TEST_CASE("profile validation errors") {
  CHECK_THROWS_AS(InitialProfile::deterministic_step(2, 3), ProfileError);
  CHECK_THROWS_AS(InitialProfile::binomial_step(2, 0.0), ProfileError);
  CHECK_THROWS_AS(InitialProfile::binomial_step(2, 1.0), ProfileError);
  CHECK_THROWS_AS(InitialProfile::product_periodic(2, {{1.0, 0.0, 0.0}}), ProfileError);
  CHECK_THROWS_AS(InitialProfile::product_periodic(2, {{0.5, 0.0, 0.0}}), ProfileError);
}
