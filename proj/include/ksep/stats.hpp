// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksep/numeric.hpp"
#include "ksep/rng.hpp"

namespace ksep {

class TooFewSamples : public std::invalid_argument {
 public:
  explicit TooFewSamples(const std::string& what) : std::invalid_argument(what) {}
};

// Gumbel-type limit law exp(-c e^{-x}).
inline double gumbel_cdf(double c, double x) {
  if (!(c > 0.0)) throw std::invalid_argument("gumbel_cdf: c must be > 0");
  return std::exp(-c * std::exp(-x));
}

inline double exponential_cdf(double rate, double x) {
  return x <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * x);
}

struct TestResult {
  std::string name;
  double statistic = 0.0;
  std::size_t n_samples = 0;
  double threshold = 0.0;
  double pvalue = 0.0;
  bool pass = false;
  std::map<std::string, double> extras;
};

inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  double d = 0.0;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

inline TestResult ks_test(const std::vector<double>& samples,
                          const std::function<double(double)>& cdf, double level = 0.01,
                          const std::string& name = "ks") {
  if (samples.size() < 100) throw TooFewSamples("ks_test needs at least 100 samples");
  TestResult r;
  r.name = name;
  r.n_samples = samples.size();
  r.statistic = ks_distance(samples, cdf);
  r.threshold = ks_critical(samples.size(), level);
  r.pvalue = kolmogorov_sf(std::sqrt(static_cast<double>(samples.size())) * r.statistic);
  r.pass = r.statistic < r.threshold;
  return r;
}

// Variance/mean ratio per interval with a normal-approximation confidence
// band around 1, plus pairwise count correlations (independence facet).
inline std::vector<TestResult> poisson_dispersion(
    const std::vector<std::vector<long long>>& counts,  // [replica][interval]
    double level = 0.01) {
  if (counts.size() < 1000) throw TooFewSamples("poisson_dispersion needs >= 1000 replicas");
  const std::size_t R = counts.size();
  const std::size_t m = counts.front().size();
  const double z = normal_quantile(1.0 - level / 2.0);
  std::vector<TestResult> out;

  std::vector<double> mean(m, 0.0), var(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (const auto& row : counts) s += static_cast<double>(row[j]);
    mean[j] = s / static_cast<double>(R);
    double v = 0.0;
    for (const auto& row : counts) {
      double d = static_cast<double>(row[j]) - mean[j];
      v += d * d;
    }
    var[j] = v / static_cast<double>(R - 1);
  }

  for (std::size_t j = 0; j < m; ++j) {
    TestResult r;
    r.name = "dispersion[" + std::to_string(j) + "]";
    r.n_samples = R;
    r.statistic = var[j] / std::max(mean[j], 1e-300);
    r.threshold = z * std::sqrt(2.0 / static_cast<double>(R - 1));
    r.extras["mean"] = mean[j];
    r.extras["variance"] = var[j];
    r.pass = std::fabs(r.statistic - 1.0) <= r.threshold;
    out.push_back(std::move(r));
  }

  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j + 1; k < m; ++k) {
      double cov = 0.0;
      for (const auto& row : counts)
        cov += (static_cast<double>(row[j]) - mean[j]) * (static_cast<double>(row[k]) - mean[k]);
      cov /= static_cast<double>(R - 1);
      TestResult r;
      r.name = "correlation[" + std::to_string(j) + "," + std::to_string(k) + "]";
      r.n_samples = R;
      r.statistic = cov / std::sqrt(std::max(var[j] * var[k], 1e-300));
      r.threshold = z / std::sqrt(static_cast<double>(R));
      r.pass = std::fabs(r.statistic) <= r.threshold;
      out.push_back(std::move(r));
    }

  // the union count N(A_1) + ... + N(A_m) must itself be Poisson with the
  // summed mean; its dispersion ratio is the joint facet of the criterion
  {
    double sum_mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum_mean += mean[j];
    double sum_var = 0.0;
    for (const auto& row : counts) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += static_cast<double>(row[j]);
      sum_var += (s - sum_mean) * (s - sum_mean);
    }
    sum_var /= static_cast<double>(R - 1);
    TestResult r;
    r.name = "dispersion[union]";
    r.n_samples = R;
    r.statistic = sum_var / std::max(sum_mean, 1e-300);
    r.threshold = z * std::sqrt(2.0 / static_cast<double>(R - 1));
    r.extras["mean"] = sum_mean;
    r.extras["variance"] = sum_var;
    r.pass = std::fabs(r.statistic - 1.0) <= r.threshold;
    out.push_back(std::move(r));
  }
  return out;
}

// KS of rescaled spacing samples against Exponential(k).
inline TestResult spacing_test(const std::vector<double>& samples, int k, double level = 0.01) {
  if (k < 1) throw std::invalid_argument("spacing_test: k must be >= 1");
  if (samples.size() < 1000) throw TooFewSamples("spacing_test needs >= 1000 samples");
  TestResult r = ks_test(
      samples, [k](double x) { return exponential_cdf(static_cast<double>(k), x); }, level,
      "spacing-exp(" + std::to_string(k) + ")");
  double mean = 0.0;
  for (double s : samples) mean += s;
  r.extras["mean"] = mean / static_cast<double>(samples.size());
  return r;
}

// Order-statistic sampler of the limit measure with intensity c e^{-x} dx:
// draws T_m = chi_0 + ... + chi_m (iid Exp(1)) and returns -log(T_m / c) at
// the requested ranks (strictly decreasing in rank).
inline std::vector<double> sample_limit_order_stats(double c, const std::vector<int>& ranks,
                                                    SplitMix64& rng) {
  if (!(c > 0.0)) throw std::invalid_argument("sample_limit_order_stats: c must be > 0");
  int maxrank = 0;
  for (int r : ranks) maxrank = std::max(maxrank, r);
  std::vector<double> T(static_cast<std::size_t>(maxrank) + 1);
  double acc = 0.0;
  for (int i = 0; i <= maxrank; ++i) {
    acc += rng.exponential(1.0);
    T[static_cast<std::size_t>(i)] = acc;
  }
  std::vector<double> out;
  out.reserve(ranks.size());
  for (int r : ranks) out.push_back(-std::log(T[static_cast<std::size_t>(r)] / c));
  return out;
}

// P(-log(T_m / c) <= x) = P(Poisson(c e^{-x}) <= m); rank-0 case is the
// Gumbel law above.
inline double limit_order_stat_cdf(double c, int rank, double x) {
  return poisson_cdf(rank, c * std::exp(-x));
}

// Two-sample chi-square on pooled cells; cells with expected count below
// `min_expected` are merged into their neighbor.
inline TestResult chi_square_two_sample(const std::vector<long long>& a,
                                        const std::vector<long long>& b, double level = 0.01,
                                        double min_expected = 5.0) {
  if (a.size() != b.size()) throw std::invalid_argument("cell vectors must align");
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  // merge sparse cells left to right
  std::vector<double> ca, cb;
  double accA = 0.0, accB = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    accA += static_cast<double>(a[i]);
    accB += static_cast<double>(b[i]);
    double tot = accA + accB;
    double expA = tot * na / (na + nb);
    double expB = tot * nb / (na + nb);
    if (expA >= min_expected && expB >= min_expected) {
      ca.push_back(accA);
      cb.push_back(accB);
      accA = accB = 0.0;
    }
  }
  if (accA + accB > 0.0 && !ca.empty()) {
    ca.back() += accA;
    cb.back() += accB;
  }
  TestResult r;
  r.name = "chi2-two-sample";
  r.n_samples = static_cast<std::size_t>(na + nb);
  double stat = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    double tot = ca[i] + cb[i];
    double expA = tot * na / (na + nb);
    double expB = tot * nb / (na + nb);
    stat += (ca[i] - expA) * (ca[i] - expA) / expA + (cb[i] - expB) * (cb[i] - expB) / expB;
  }
  double df = static_cast<double>(ca.size()) - 1.0;
  r.statistic = stat;
  r.extras["df"] = df;
  r.pvalue = df > 0 ? chi2_sf(stat, df) : 1.0;
  r.threshold = level;
  r.pass = r.pvalue > level;
  return r;
}

}  // namespace ksep
