// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "ksep/scaling.hpp"

using namespace ksep;

TEST_CASE("time map at sigma=1, t=100 (frozen closed-form values)") {
  ScalingMap m = make_time_map(1.0, 100.0);
  CHECK(m.a == Catch::Approx(2.1590520269755175).margin(1e-12));
  CHECK(m.b == Catch::Approx(4.6599060178465608).margin(1e-12));
  CHECK(m.forward(10.0) == Catch::Approx(-0.013086000686170277).margin(1e-12));
  CHECK(m.inverse(0.0) == Catch::Approx(10.060979533347029).margin(1e-10));
}

TEST_CASE("block map frozen values and the b coincidence at L^2 = t") {
  ScalingMap m = make_block_map(1.0, 100.0, 10);
  CHECK(m.a == Catch::Approx(2.9226418398794681).margin(1e-12));
  CHECK(m.b == Catch::Approx(4.6599060178465608).margin(1e-12));
}

TEST_CASE("forward and inverse compose to the identity") {
  for (double sigma : {1.0, 1.4832396974191326}) {
    ScalingMap m = make_time_map(sigma, 1234.5);
    for (double x : {7.3, -19.0, 0.0, 1e5}) {
      CHECK(m.inverse(m.forward(x)) == Catch::Approx(x).epsilon(1e-12).margin(1e-12));
      CHECK(m.forward(m.inverse(x)) == Catch::Approx(x).epsilon(1e-12).margin(1e-12));
    }
  }
}

TEST_CASE("monotonicity and preimage of half-open intervals") {
  ScalingMap m = make_time_map(1.0, 50.0);
  CHECK(m.forward(3.0) < m.forward(4.0));
  HalfOpen h{0.0, 1.0};
  HalfOpen pre = m.preimage(h);
  CHECK(pre.a == Catch::Approx(m.inverse(0.0)));
  CHECK(pre.b == Catch::Approx(m.inverse(1.0)));

  // identity-like parameters map (0,1] to itself
  ScalingMap id;
  id.sigma = 1.0;
  id.a = 0.0;
  id.b = 1.0;
  HalfOpen same = id.preimage(HalfOpen{0.0, 1.0});
  CHECK(same.a == 0.0);
  CHECK(same.b == 1.0);
}

TEST_CASE("disjoint unions stay disjoint under preimage") {
  ScalingMap m = make_time_map(1.0, 300.0);
  IntervalUnion u({HalfOpen{-1.0, 0.5}, HalfOpen{1.0, 2.0}, HalfOpen{3.0, kInf}});
  IntervalUnion pre = m.preimage(u);
  REQUIRE(pre.parts().size() == 3);
  for (std::size_t i = 1; i < pre.parts().size(); ++i)
    CHECK(pre.parts()[i - 1].b < pre.parts()[i].a);
}

TEST_CASE("first-order growth of the inverse map along a t-grid") {
  // v_t^{-1}(x) / (sigma sqrt(t log t)) -> 1, decreasing relative error
  // the error decays like log(log t) / log t, so only the trend is asserted
  double x = 0.7, sigma = 2.0;
  double prev_err = 1e9;
  for (double t : {1e3, 1e5, 1e7, 1e9, 1e12}) {
    ScalingMap m = make_time_map(sigma, t);
    double ratio = m.inverse(x) / (sigma * std::sqrt(t * std::log(t)));
    double err = std::fabs(ratio - 1.0);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.2);

  // block variant: v_{t,L}^{-1}(x) / (sigma sqrt(2 t log L)) -> 1
  prev_err = 1e9;
  for (double t : {1e4, 1e6, 1e8, 1e10, 1e13}) {
    long long L = static_cast<long long>(std::pow(t, 0.25));
    ScalingMap m = make_block_map(sigma, t, L);
    double ratio = m.inverse(x) / (sigma * std::sqrt(2.0 * t * std::log(static_cast<double>(L))));
    double err = std::fabs(ratio - 1.0);
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(make_time_map(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(make_time_map(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(make_block_map(1.0, 10.0, 1), DomainError);
  CHECK_NOTHROW(make_block_map(1.0, 10.0, 2));
}
