// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ksep/analytics.hpp"
#include "ksep/exactsg.hpp"
#include "ksep/experiment.hpp"
#include "ksep/kernel.hpp"

// The exact (machine-precision) verification battery: every check here is
// deterministic given the seed and must hold at the stated tolerance.
namespace ksep::verify {

struct CriterionResult {
  std::string id;
  std::string description;
  bool pass = false;
  ordered_json details;
};

namespace detail {

struct Instance {
  exact::SiteKernel kernel;
  int n = 2;
  int K = 1;
  std::vector<std::uint8_t> A;
  std::string label;
};

// Randomized small instances: path/torus graphs with <= 7 sites, n <= 3,
// K in {1,2,3}.
inline std::vector<Instance> random_instances(std::uint64_t seed, int count) {
  SplitMix64 rng(seed);
  std::vector<Instance> out;
  for (int i = 0; i < count; ++i) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(i));
    int m = 4 + static_cast<int>(sub.below(4));  // 4..7 sites
    int style = static_cast<int>(sub.below(3));
    exact::SiteKernel k = (style == 0)   ? exact::SiteKernel::path(m)
                          : (style == 1) ? exact::SiteKernel::torus(m)
                                         : exact::SiteKernel::random_symmetric(m, sub);
    Instance inst;
    inst.kernel = std::move(k);
    inst.n = 2 + static_cast<int>(sub.below(2));  // 2..3
    inst.K = 1 + static_cast<int>(sub.below(3));  // 1..3
    inst.A.assign(static_cast<std::size_t>(m), 0);
    int asz = 1 + static_cast<int>(sub.below(static_cast<std::uint64_t>(m - 1)));
    while (asz > 0) {
      std::size_t s = static_cast<std::size_t>(sub.below(static_cast<std::uint64_t>(m)));
      if (!inst.A[s]) {
        inst.A[s] = 1;
        --asz;
      }
    }
    inst.label = (style == 0 ? "path" : style == 1 ? "torus" : "random") + std::to_string(m) +
                 "/n" + std::to_string(inst.n) + "/K" + std::to_string(inst.K);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace detail

// Semigroup domination V <= U on randomized instances over a fixed t-grid.
inline CriterionResult vu_inequality(std::uint64_t seed, int instances = 24,
                                     double tol = 1e-10) {
  CriterionResult res;
  res.id = "C1";
  res.description = "V_n^K(t) 1_{A^n} <= U_n^K(t) 1_{A^n} pointwise";
  const std::vector<double> tgrid = {0.1, 0.5, 1.0, 5.0};
  double worst = std::numeric_limits<double>::infinity();
  int count = 0;
  for (const auto& inst : detail::random_instances(seed, instances)) {
    exact::TupleSpace s = exact::TupleSpace::build(inst.kernel, inst.n, inst.K);
    exact::CheckResult r = exact::check_vu(s, inst.A, tgrid, tol);
    worst = std::min(worst, r.slack);
    ++count;
    if (!r.pass) res.details["first_failure"] = inst.label;
  }
  res.details["instances"] = count;
  res.details["worst_slack"] = worst;
  res.details["tolerance"] = tol;
  res.pass = worst >= -tol;
  return res;
}

// Two-route agreement for the difference formula (matrix exponentials vs
// quadrature) on the same randomized instances.
inline CriterionResult difference_formula(std::uint64_t seed, int instances = 20,
                                          double tol = 1e-8) {
  CriterionResult res;
  res.id = "C2";
  res.description = "[U - V] 1_{A^n} equals the integral route";
  const std::vector<double> tchoices = {0.1, 0.5, 1.0, 5.0};
  double worst = 0.0;
  int count = 0;
  for (const auto& inst : detail::random_instances(seed, instances)) {
    exact::TupleSpace s = exact::TupleSpace::build(inst.kernel, inst.n, inst.K);
    double t = tchoices[static_cast<std::size_t>(count) % tchoices.size()];
    exact::CheckResult r = exact::check_difference_formula(s, inst.A, t, tol);
    worst = std::max(worst, r.slack);
    ++count;
    if (!r.pass) res.details["first_failure"] = inst.label;
  }
  res.details["instances"] = count;
  res.details["worst_error"] = worst;
  res.details["tolerance"] = tol;
  res.pass = worst <= tol;
  return res;
}

// Deterministic {0,K} profile joint factorial moments, all group shapes with
// M <= 4.
inline CriterionResult factorial_moment_bound(std::uint64_t seed, double tol = 1e-9) {
  CriterionResult res;
  res.id = "C3";
  res.description = "0 <= prod mu^{n_k} - E[prod N^{(n_k)}] <= K^2 C(M,2) mu^{M-2} (kappa+tau)";
  const std::vector<std::vector<int>> shapes = {{2}, {3}, {4},    {1, 1},    {2, 1},
                                                {2, 2}, {3, 1}, {1, 1, 1}, {1, 1, 1, 1}};
  SplitMix64 rng(seed);
  double worst_low = 0.0, worst_high = 0.0;
  int count = 0;
  for (int K : {1, 2}) {
    for (double t : {0.5, 2.0}) {
      for (const auto& shape : shapes) {
        SplitMix64 sub = rng.split(static_cast<std::uint64_t>(count) + 1000 * K);
        exact::SiteKernel kernel = exact::SiteKernel::path(6);
        std::vector<std::uint8_t> eta(6, 0);
        for (int v = 0; v < 6; ++v) eta[static_cast<std::size_t>(v)] = sub.below(2) ? 1 : 0;
        if (std::count(eta.begin(), eta.end(), 1) == 0) eta[0] = 1;
        // disjoint A_k out of the remaining sites
        std::vector<std::vector<std::uint8_t>> groups;
        std::vector<int> order = {0, 1, 2, 3, 4, 5};
        for (std::size_t g = 0; g < shape.size(); ++g) {
          std::vector<std::uint8_t> mask(6, 0);
          for (int pick = 0; pick < 2 && !order.empty(); ++pick) {
            std::size_t at = static_cast<std::size_t>(sub.below(order.size()));
            mask[static_cast<std::size_t>(order[at])] = 1;
            order.erase(order.begin() + static_cast<long>(at));
          }
          groups.push_back(mask);
        }
        exact::FactorialBoundResult r =
            exact::check_factorial_bound(kernel, K, eta, groups, shape, t);
        worst_low = std::min(worst_low, r.diff);
        worst_high = std::max(worst_high, r.diff - r.bound);
        ++count;
      }
    }
  }
  res.details["instances"] = count;
  res.details["worst_nonnegativity_slack"] = worst_low;
  res.details["worst_upper_slack"] = worst_high;
  res.details["tolerance"] = tol;
  res.pass = worst_low >= -tol && worst_high <= tol;
  return res;
}

// Product-measure factorial moment sandwich on binomial-marginal instances.
inline CriterionResult product_measure_sandwich(std::uint64_t seed, double tol = 1e-9) {
  CriterionResult res;
  res.id = "C4";
  res.description = "product-measure sandwich around (mu^nu)^n - E_nu[N^{(n)}]";
  SplitMix64 rng(seed);
  double worst_low = 0.0, worst_high = 0.0;
  int count = 0;
  for (int n : {2, 3}) {
    for (double alpha : {0.3, 0.5, 0.7}) {
      for (double t : {0.5, 1.5}) {
        SplitMix64 sub = rng.split(static_cast<std::uint64_t>(count));
        const int K = 2, m = 6;
        exact::SiteKernel kernel = exact::SiteKernel::path(m);
        std::vector<std::vector<double>> pmfs(m, std::vector<double>(K + 1, 0.0));
        for (int v = 0; v < m; ++v) {
          if (sub.below(4) == 0) {
            pmfs[static_cast<std::size_t>(v)][0] = 1.0;  // empty site outside the support
          } else {
            pmfs[static_cast<std::size_t>(v)][0] = (1 - alpha) * (1 - alpha);
            pmfs[static_cast<std::size_t>(v)][1] = 2 * alpha * (1 - alpha);
            pmfs[static_cast<std::size_t>(v)][2] = alpha * alpha;
          }
        }
        std::vector<std::uint8_t> A(m, 0);
        A[3] = A[4] = 1;
        exact::ProductBoundResult r =
            exact::check_product_measure_bound(kernel, n, K, pmfs, A, t);
        worst_low = std::min(worst_low, r.diff_nu - r.lower);
        worst_high = std::max(worst_high, r.diff_nu - r.diff_chi);
        ++count;
      }
    }
  }
  res.details["instances"] = count;
  res.details["worst_lower_slack"] = worst_low;
  res.details["worst_upper_slack"] = worst_high;
  res.details["tolerance"] = tol;
  res.pass = worst_low >= -tol && worst_high <= tol;
  return res;
}

// Counting identity mu^(n)(A^n) = (mu(A))_n against brute-force enumeration.
inline CriterionResult counting_identity(std::uint64_t seed, int trials = 1000) {
  CriterionResult res;
  res.id = "C5";
  res.description = "factorial measure of A^n equals the falling factorial";
  SplitMix64 rng(seed);
  int failures = 0;
  for (int trial = 0; trial < trials; ++trial) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(trial));
    int atoms = 1 + static_cast<int>(sub.below(12));
    std::vector<double> xs;
    for (int i = 0; i < atoms; ++i) xs.push_back(static_cast<double>(sub.below(6)) + 0.5);
    double a = static_cast<double>(sub.below(6));
    double b = a + 1.0 + static_cast<double>(sub.below(3));
    int n = 1 + static_cast<int>(sub.below(4));
    std::vector<int> inside;
    for (int i = 0; i < atoms; ++i)
      if (xs[static_cast<std::size_t>(i)] > a && xs[static_cast<std::size_t>(i)] <= b)
        inside.push_back(i);
    long long brute = 0;
    std::function<void(int, unsigned)> rec = [&](int depth, unsigned used) {
      if (depth == n) {
        ++brute;
        return;
      }
      for (int id : inside) {
        if (used & (1u << id)) continue;
        rec(depth + 1, used | (1u << id));
      }
    };
    rec(0, 0u);
    if (brute != falling_factorial_count(static_cast<long long>(inside.size()), n)) ++failures;
  }
  res.details["trials"] = trials;
  res.details["failures"] = failures;
  res.pass = failures == 0;
  return res;
}

// kappa / tau inequalities at fixed parameter points.
inline CriterionResult kappa_tau_inequalities(double tol = 1e-9) {
  CriterionResult res;
  res.id = "C6";
  res.description = "kappa fourth-moment bound and tau mean-measure bound";
  JumpKernel nn = nearest_neighbor_kernel();
  JumpKernel spread = make_kernel({{1, 0.25}, {-1, 0.25}, {2, 0.25}, {-2, 0.25}});

  double worst = -std::numeric_limits<double>::infinity();
  int count = 0;
  ordered_json rows = ordered_json::array();
  struct P {
    const JumpKernel* k;
    double t, b;
    long long L;
  };
  std::vector<P> kappa_pts = {{&nn, 1.0, 10.0, 10},        {&nn, 2.0, 10.0, kInfiniteL},
                              {&nn, 5.0, 20.0, 10},        {&nn, 5.0, 20.0, kInfiniteL},
                              {&nn, 5.0, 40.0, 5},         {&spread, 1.0, 10.0, 10},
                              {&spread, 2.0, 20.0, kInfiniteL}, {&spread, 5.0, 20.0, 10},
                              {&spread, 5.0, 40.0, kInfiniteL}, {&spread, 2.0, 16.0, 5}};
  for (const auto& p : kappa_pts) {
    InequalityCheck c = check_kappabound2(*p.k, p.t, p.b, p.L, 1e-11);
    worst = std::max(worst, c.lhs - c.rhs);
    rows.push_back({{"check", "kappa"}, {"t", p.t}, {"b", p.b}, {"lhs", c.lhs}, {"rhs", c.rhs}});
    ++count;
  }
  struct Q {
    const JumpKernel* k;
    double t, a;
    long long L;
  };
  std::vector<Q> tau_pts = {{&nn, 0.5, 2.0, 5},  {&nn, 1.0, 3.0, 5},  {&nn, 2.0, 3.0, 10},
                            {&nn, 5.0, 5.0, 10}, {&nn, 1.0, 2.0, 10}, {&spread, 0.5, 3.0, 5},
                            {&spread, 1.0, 3.0, 10}, {&spread, 2.0, 5.0, 5},
                            {&spread, 5.0, 5.0, 10}, {&spread, 2.0, 2.0, 10}};
  for (const auto& q : tau_pts) {
    InequalityCheck c = check_tauto0(*q.k, 1, q.t, q.a, q.L);
    worst = std::max(worst, c.lhs - c.rhs);
    rows.push_back({{"check", "tau"}, {"t", q.t}, {"a", q.a}, {"lhs", c.lhs}, {"rhs", c.rhs}});
    ++count;
  }
  res.details["points"] = count;
  res.details["worst_violation"] = worst;
  res.details["tolerance"] = tol;
  res.details["rows"] = rows;
  res.pass = worst <= tol;
  return res;
}

// Intensity route agreement: spatial sum vs positive-part-mean difference.
inline CriterionResult intensity_routes(double rel_tol = 1e-8) {
  CriterionResult res;
  res.id = "C7";
  res.description = "mean-measure routes agree on half-lines (full step)";
  JumpKernel nn = nearest_neighbor_kernel();
  double worst = 0.0;
  int count = 0;
  ordered_json rows = ordered_json::array();
  const std::vector<std::pair<double, double>> pts = {
      {0.5, -3.5}, {0.5, 0.0}, {1.0, 2.0},  {2.0, -1.0}, {2.0, 5.5},
      {5.0, 0.0},  {5.0, 8.0}, {10.0, 3.0}, {10.0, -6.0}, {20.0, 12.0}};
  for (int K : {1, 2}) {
    for (const auto& [t, y] : pts) {
      InitialProfile full = InitialProfile::deterministic_step(K, K);
      double r1 = intensity(full, K, t, IntervalUnion::single(y, kInf), nn, 1e-12);
      double r2 = intensity_step_halfline(nn, K, K, t, y);
      double rel = std::fabs(r1 - r2) / std::max(1.0, std::fabs(r2));
      worst = std::max(worst, rel);
      if (count < 10)
        rows.push_back({{"K", K}, {"t", t}, {"y", y}, {"sum_route", r1}, {"ppm_route", r2}});
      ++count;
    }
  }
  res.details["points"] = count;
  res.details["worst_relative_error"] = worst;
  res.details["tolerance"] = rel_tol;
  res.details["rows"] = rows;
  res.pass = worst < rel_tol;
  return res;
}

inline std::vector<CriterionResult> run_exact_suite(std::uint64_t seed) {
  return {vu_inequality(seed),        difference_formula(seed + 1),
          factorial_moment_bound(seed + 2), product_measure_sandwich(seed + 3),
          counting_identity(seed + 4), kappa_tau_inequalities(),
          intensity_routes()};
}

}  // namespace ksep::verify
