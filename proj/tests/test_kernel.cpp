// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "ksep/kernel.hpp"

using namespace ksep;

TEST_CASE("nearest-neighbor kernel validates with sigma=1, m4=1") {
  ValidationReport rep = validate_kernel({{1, 0.5}, {-1, 0.5}});
  REQUIRE(rep.ok);
  CHECK(rep.sigma == Catch::Approx(1.0).margin(1e-15));
  CHECK(rep.m4 == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("asymmetric kernel is rejected with the violated clause named") {
  ValidationReport rep = validate_kernel({{1, 0.6}, {-1, 0.4}});
  REQUIRE_FALSE(rep.ok);
  REQUIRE(rep.first_failure() != nullptr);
  CHECK(rep.first_failure()->code == "AsymmetricKernel");
  CHECK_THROWS_AS(make_kernel({{1, 0.6}, {-1, 0.4}}), KernelError);
}

TEST_CASE("support on +-2 only is reducible") {
  ValidationReport rep = validate_kernel({{2, 0.5}, {-2, 0.5}});
  REQUIRE_FALSE(rep.ok);
  CHECK(rep.first_failure()->code == "Reducible");
}

TEST_CASE("mass at zero and bad normalization are caught") {
  CHECK(validate_kernel({{0, 0.2}, {1, 0.4}, {-1, 0.4}}).first_failure()->code == "MassAtZero");
  CHECK(validate_kernel({{1, 0.3}, {-1, 0.3}}).first_failure()->code == "NotNormalized");
}

TEST_CASE("moments: even by direct sum, odd exactly zero") {
  JumpKernel k = make_kernel({{1, 0.3}, {-1, 0.3}, {2, 0.2}, {-2, 0.2}});
  CHECK(k.moment(2) == Catch::Approx(2.2).margin(1e-15));  // 2(0.3*1 + 0.2*4)
  CHECK(k.moment(3) == 0.0);
  CHECK(k.moment(5) == 0.0);
  CHECK(k.moment(7) == 0.0);
  CHECK(k.sigma * k.sigma == Catch::Approx(k.moment(2)).margin(1e-15));
  CHECK(k.m4 == Catch::Approx(k.moment(4)).margin(1e-12));
}

TEST_CASE("nearest-neighbor moments") {
  JumpKernel k = nearest_neighbor_kernel();
  CHECK(k.moment(2) == 1.0);
  CHECK(k.moment(3) == 0.0);
  CHECK(k.mgf_radius == 1.0);
}

TEST_CASE("rescaling then renormalizing leaves sigma unchanged") {
  JumpKernel a = make_kernel({{1, 0.3}, {-1, 0.3}, {2, 0.2}, {-2, 0.2}});
  // the same law written with unnormalized weights 3,3,2,2 scaled back to 1
  JumpKernel b = make_kernel({{1, 3.0 / 10}, {-1, 3.0 / 10}, {2, 2.0 / 10}, {-2, 2.0 / 10}});
  CHECK(a.sigma == Catch::Approx(b.sigma).margin(1e-15));
}

TEST_CASE("sampling hits only the support with the right frequencies") {
  JumpKernel k = make_kernel({{1, 0.3}, {-1, 0.3}, {3, 0.2}, {-3, 0.2}});
  SplitMix64 rng(7);
  int n1 = 0, n3 = 0, total = 200000;
  for (int i = 0; i < total; ++i) {
    long long d = k.sample(rng);
    REQUIRE((d == 1 || d == -1 || d == 3 || d == -3));
    if (d == 1) ++n1;
    if (d == 3) ++n3;
  }
  CHECK(std::fabs(n1 / double(total) - 0.3) < 0.005);
  CHECK(std::fabs(n3 / double(total) - 0.2) < 0.005);
}
