// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ksep/rng.hpp"

namespace ksep {

class KernelError : public std::runtime_error {
 public:
  KernelError(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct ValidationClause {
  std::string code;  // AsymmetricKernel, MassAtZero, NotNormalized, Reducible, ...
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  bool ok = false;
  double sigma = 0.0;  // populated on pass
  double m4 = 0.0;
  std::vector<ValidationClause> clauses;
  const ValidationClause* first_failure() const {
    for (const auto& c : clauses)
      if (!c.pass) return &c;
    return nullptr;
  }
};

// Symmetric, irreducible, finitely supported jump law p(0,.) with p(0,0)=0.
// Immutable after construction; safe to share across threads.
struct JumpKernel {
  std::vector<long long> offsets;  // ascending, both signs listed
  std::vector<double> probs;       // aligned with offsets, sums to 1
  double sigma = 0.0;
  double m4 = 0.0;
  double mgf_radius = 1.0;  // finite support: r = 1 by convention
  long long max_abs_offset = 0;
  std::vector<double> cumulative;  // sampling CDF

  // Sum over y of y^k p(0,y).  Odd moments vanish exactly by symmetry.
  double moment(int k) const {
    if (k < 0) throw std::invalid_argument("moment: k must be positive");
    if (k % 2 == 1) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i] <= 0) continue;
      s += 2.0 * probs[i] * std::pow(static_cast<double>(offsets[i]), k);
    }
    return s;
  }

  double prob_of(long long d) const {
    auto it = std::lower_bound(offsets.begin(), offsets.end(), d);
    if (it == offsets.end() || *it != d) return 0.0;
    return probs[static_cast<std::size_t>(it - offsets.begin())];
  }

  long long sample(SplitMix64& rng) const {
    double u = rng.uniform01();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t i = std::min(offsets.size() - 1,
                             static_cast<std::size_t>(it - cumulative.begin()));
    return offsets[i];
  }
};

inline ValidationReport validate_kernel(const std::vector<std::pair<long long, double>>& entries) {
  ValidationReport rep;
  auto add = [&rep](const std::string& code, bool pass, const std::string& detail) {
    rep.clauses.push_back({code, pass, detail});
  };

  if (entries.empty()) {
    add("EmptySupport", false, "kernel must list at least one (offset, prob) pair");
    return rep;
  }

  std::vector<std::pair<long long, double>> sorted = entries;
  std::sort(sorted.begin(), sorted.end());

  bool dup = false;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].first == sorted[i - 1].first) dup = true;
  add("DuplicateOffset", !dup, dup ? "offset listed twice" : "");
  if (dup) return rep;

  bool positive = std::all_of(sorted.begin(), sorted.end(),
                              [](const auto& e) { return e.second > 0.0; });
  add("InvalidProbability", positive, positive ? "" : "probabilities must be > 0");

  bool zero_mass = std::any_of(sorted.begin(), sorted.end(),
                               [](const auto& e) { return e.first == 0; });
  add("MassAtZero", !zero_mass, zero_mass ? "p(0,0) must be 0" : "");

  double total = 0.0;
  for (const auto& e : sorted) total += e.second;
  bool normalized = std::fabs(total - 1.0) <= 1e-12;
  add("NotNormalized", normalized, normalized ? "" : "probs sum to " + std::to_string(total));

  bool symmetric = true;
  for (const auto& e : sorted) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), std::make_pair(-e.first, -1.0));
    if (it == sorted.end() || it->first != -e.first ||
        std::fabs(it->second - e.second) > 1e-12) {
      symmetric = false;
      break;
    }
  }
  add("AsymmetricKernel", symmetric, symmetric ? "" : "p(0,y) must equal p(0,-y)");

  long long g = 0;
  for (const auto& e : sorted) g = std::gcd(g, std::llabs(e.first));
  bool irreducible = (g == 1);
  add("Reducible", irreducible,
      irreducible ? "" : "gcd of |offsets| is " + std::to_string(g));

  rep.ok = positive && !zero_mass && normalized && symmetric && irreducible;
  if (rep.ok) {
    double s2 = 0.0, m4 = 0.0;
    for (const auto& e : sorted) {
      double y = static_cast<double>(e.first);
      s2 += y * y * e.second;
      m4 += y * y * y * y * e.second;
    }
    rep.sigma = std::sqrt(s2);
    rep.m4 = m4;
  }
  return rep;
}

inline JumpKernel make_kernel(const std::vector<std::pair<long long, double>>& entries) {
  ValidationReport rep = validate_kernel(entries);
  if (!rep.ok) {
    const ValidationClause* f = rep.first_failure();
    throw KernelError(f ? f->code : "InvalidKernel", f ? f->detail : "validation failed");
  }
  JumpKernel k;
  std::vector<std::pair<long long, double>> sorted = entries;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& e : sorted) {
    k.offsets.push_back(e.first);
    k.probs.push_back(e.second);
    k.max_abs_offset = std::max(k.max_abs_offset, std::llabs(e.first));
  }
  k.sigma = rep.sigma;
  k.m4 = rep.m4;
  k.mgf_radius = 1.0;
  double c = 0.0;
  for (double p : k.probs) {
    c += p;
    k.cumulative.push_back(c);
  }
  k.cumulative.back() = 1.0;
  return k;
}

// p(0,+-1) = 1/2.
inline JumpKernel nearest_neighbor_kernel() {
  return make_kernel({{1, 0.5}, {-1, 0.5}});
}

}  // namespace ksep
