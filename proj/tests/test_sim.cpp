// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "ksep/numeric.hpp"
#include "ksep/rw.hpp"
#include "ksep/sim.hpp"
#include "ksep/stats.hpp"

using namespace ksep;

namespace {

// One-sample chi-square of observed counts against table probabilities,
// pooling the two tails.
double chi2_pvalue_against_table(const std::map<long long, long long>& hist, long long n,
                                 const TransitionTable& tab, long long lo, long long hi) {
  double stat = 0.0;
  int cells = 0;
  double p_in = 0.0;
  long long obs_in = 0;
  for (long long z = lo; z <= hi; ++z) {
    double p = tab.at(z);
    if (p * static_cast<double>(n) < 5.0) continue;
    auto it = hist.find(z);
    double o = it == hist.end() ? 0.0 : static_cast<double>(it->second);
    double e = p * static_cast<double>(n);
    stat += (o - e) * (o - e) / e;
    ++cells;
    p_in += p;
    obs_in += it == hist.end() ? 0 : it->second;
  }
  double p_out = std::max(1e-12, 1.0 - p_in);
  double e_out = p_out * static_cast<double>(n);
  double o_out = static_cast<double>(n - obs_in);
  stat += (o_out - e_out) * (o_out - e_out) / e_out;
  return chi2_sf(stat, cells);  // cells+1 categories - 1
}

}  // namespace

TEST_CASE("t_end = 0 returns the initial multiset") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(1);
  Configuration c = Configuration::from_occupancies(-2, {2, 0, 1, 2}, 2);
  ParticleSnapshot s = simulate_direct(c, k, {.t_end = 0.0}, rng);
  REQUIRE(s.positions == std::vector<long long>({1, 1, 0, -2, -2}));
}

TEST_CASE("particle count is conserved and occupancies stay within K") {
  JumpKernel k = make_kernel({{1, 0.3}, {-1, 0.3}, {2, 0.2}, {-2, 0.2}});
  SplitMix64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(rep));
    Configuration c = Configuration::from_occupancies(-9, std::vector<int>(10, 2), 2);
    DirectSimOptions opt;
    opt.t_end = 3.0;
    opt.check_total_rate = true;  // total-rate bookkeeping asserted every event
    ParticleSnapshot s = simulate_direct(c, k, opt, sub);
    REQUIRE(s.positions.size() == 20);
    std::map<long long, int> occ;
    for (long long p : s.positions) ++occ[p];
    for (auto& [site, cnt] : occ) REQUIRE(cnt <= 2);
    for (std::size_t i = 1; i < s.positions.size(); ++i)
      REQUIRE(s.positions[i - 1] >= s.positions[i]);
  }
}

TEST_CASE("single-particle endpoint law equals the rate-K walk marginal") {
  JumpKernel k = nearest_neighbor_kernel();
  const int n = 100000;
  for (int K : {1, 3}) {
    SplitMix64 rng(40 + K);
    std::map<long long, long long> hist;
    for (int i = 0; i < n; ++i) {
      SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i));
      Configuration c = Configuration::from_occupancies(0, {1}, K);
      ParticleSnapshot s = simulate_direct(c, k, {.t_end = 1.0}, sub);
      ++hist[s.positions[0]];
    }
    TransitionTable tab = transition_probs(k, static_cast<double>(K), 1.0, 0);
    double pv = chi2_pvalue_against_table(hist, n, tab, -8, 8);
    INFO("K = " << K);
    CHECK(pv > 0.01);
  }
}

TEST_CASE("mean of the maximum grows in time for full-step starts") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(55);
  const int reps = 2000;
  double prev = -1e9;
  for (double t : {2.0, 8.0, 32.0}) {
    double mean = 0.0;
    for (int i = 0; i < reps; ++i) {
      SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i) + 1000 * static_cast<int>(t));
      Configuration c = Configuration::from_occupancies(-39, std::vector<int>(40, 2), 2);
      ParticleSnapshot s = simulate_direct(c, k, {.t_end = t}, sub);
      mean += static_cast<double>(s.positions[0]);
    }
    mean /= reps;
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("mean displacement is zero by symmetry") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(77);
  const int n = 40000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i));
    Configuration c = Configuration::from_occupancies(0, {1}, 1);
    ParticleSnapshot s = simulate_direct(c, k, {.t_end = 2.0}, sub);
    sum += static_cast<double>(s.positions[0]);
  }
  double se = std::sqrt(2.0 / n);  // Var(zeta_2) = 2
  CHECK(std::fabs(sum / n) < 3.5 * se);
}

TEST_CASE("order statistics repetition convention and sentinels") {
  ParticleSnapshot s;
  s.positions = {0, 0, -3};  // site 0 doubly occupied
  auto os = order_statistics(s, 4);
  REQUIRE(os.size() == 5);
  CHECK(os[0] == 0.0);
  CHECK(os[1] == 0.0);
  CHECK(os[2] == -3.0);
  CHECK(os[3] == -kInf);
  CHECK(os[4] == -kInf);

  ParticleSnapshot empty;
  auto all = order_statistics(empty, 2);
  for (double v : all) CHECK(v == -kInf);
}

TEST_CASE("rescaled counts: half-open boundaries, partitions, overlap error") {
  ScalingMap id;
  id.sigma = 1.0;
  id.a = 0.0;
  id.b = 1.0;
  ParticleSnapshot s;
  s.positions = {2, 1};
  CHECK(rescaled_counts(s, id, {HalfOpen{0.0, 2.0}})[0] == 2);
  // boundary particle: position exactly at the right endpoint is counted
  CHECK(rescaled_counts(s, id, {HalfOpen{1.0, 2.0}})[0] == 1);
  CHECK(rescaled_counts(s, id, {HalfOpen{0.0, 1.0}})[0] == 1);
  CHECK_THROWS_AS(rescaled_counts(s, id, {HalfOpen{0.0, 2.0}, HalfOpen{1.0, 3.0}}),
                  OverlappingIntervals);

  // partition of a covering range recovers the total
  std::vector<HalfOpen> partition = {HalfOpen{-kInf, 1.0}, HalfOpen{1.0, 1.5}, HalfOpen{1.5, kInf}};
  auto counts = rescaled_counts(s, id, partition);
  CHECK(counts[0] + counts[1] + counts[2] == 2);
}

TEST_CASE("stirring: t=0 identity and occupancy recovery") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(5);
  Configuration c = Configuration::from_occupancies(0, {0, 0, 2, 1, 0, 0}, 2);
  auto [snap, st] = simulate_stirring(c, k, 0.0, rng);
  CHECK(snap.positions == std::vector<long long>({3, 2, 2}));
  Configuration rec = st.occupation();
  for (long long x = c.lo; x <= c.hi; ++x) CHECK(rec.at(x) == c.at(x));
}

TEST_CASE("stirring single-label marginal equals the rate-K walk") {
  JumpKernel k = nearest_neighbor_kernel();
  const int K = 2, n = 30000;
  SplitMix64 rng(6);
  std::map<long long, long long> hist;
  int exits = 0;
  for (int i = 0; i < n; ++i) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i));
    std::vector<int> occ(21, 0);
    occ[10] = 1;  // one real particle mid-window
    Configuration c = Configuration::from_occupancies(-10, occ, K);
    try {
      auto [snap, st] = simulate_stirring(c, k, 1.0, sub);
      ++hist[st.label_position(0, 1)];
    } catch (const WindowExit&) {
      ++exits;  // discarded, counted
    }
  }
  CHECK(exits < n / 100);
  TransitionTable tab = transition_probs(k, static_cast<double>(K), 1.0, 0);
  double pv = chi2_pvalue_against_table(hist, n - exits, tab, -8, 8);
  CHECK(pv > 0.001);
}

TEST_CASE("stirring window exit raises") {
  JumpKernel k = nearest_neighbor_kernel();
  std::vector<int> occ(5, 1);  // particles everywhere incl. near boundary
  Configuration c = Configuration::from_occupancies(0, occ, 1);
  SplitMix64 rng(9);
  bool exited = false;
  for (int i = 0; i < 50 && !exited; ++i) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i));
    try {
      simulate_stirring(c, k, 5.0, sub);
    } catch (const WindowExit&) {
      exited = true;
    }
  }
  CHECK(exited);
}

TEST_CASE("direct and stirring occupation laws agree (small instance)") {
  JumpKernel k = nearest_neighbor_kernel();
  const int K = 2, reps = 20000;
  const double t = 0.6;
  // joint law of (eta_t(x1), eta_t(x2)) at the step edge
  auto cell = [](int a, int b) { return 3 * a + b; };
  std::vector<long long> direct_counts(9, 0), stir_counts(9, 0);
  SplitMix64 rng(12);
  std::vector<int> occ0(14, 0);
  for (int i = 4; i < 7; ++i) occ0[static_cast<std::size_t>(i)] = 2;
  for (int i = 0; i < reps; ++i) {
    SplitMix64 s1 = rng.split(2 * static_cast<std::uint64_t>(i));
    SplitMix64 s2 = rng.split(2 * static_cast<std::uint64_t>(i) + 1);
    Configuration c = Configuration::from_occupancies(0, occ0, K);
    ParticleSnapshot d = simulate_direct(c, k, {.t_end = t}, s1);
    std::map<long long, int> od;
    for (long long p : d.positions) ++od[p];
    ++direct_counts[static_cast<std::size_t>(cell(od[6], od[7]))];
    try {
      auto [snap, st] = simulate_stirring(c, k, t, s2);
      std::map<long long, int> os;
      for (long long p : snap.positions) ++os[p];
      ++stir_counts[static_cast<std::size_t>(cell(os[6], os[7]))];
    } catch (const WindowExit&) {
    }
  }
  TestResult r = chi_square_two_sample(direct_counts, stir_counts, 0.01);
  CHECK(r.pass);
}

TEST_CASE("resource guard fires rather than allocating without bound") {
  JumpKernel k = nearest_neighbor_kernel();
  SplitMix64 rng(10);
  Configuration c = Configuration::from_occupancies(0, {1}, 1);
  DirectSimOptions opt;
  opt.t_end = 1e9;
  opt.max_sites = 2048;
  CHECK_THROWS_AS(simulate_direct(c, k, opt, rng), ResourceExceeded);
}
