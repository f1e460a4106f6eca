// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ksep/analytics.hpp"
#include "ksep/kernel.hpp"
#include "ksep/profiles.hpp"
#include "ksep/rw.hpp"
#include "ksep/scaling.hpp"
#include "ksep/sim.hpp"
#include "ksep/stats.hpp"

namespace ksep {

using ordered_json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error("config field '" + path + "': " + what) {}
};

// Flat "key = value" configuration with [section] headers; values are kept
// verbatim for the manifest echo.
class Config {
 public:
  static Config parse_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
      std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[' && s.back() == ']') {
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "expected 'key = value'");
      std::string key = trim(s.substr(0, eq));
      std::string val = trim(s.substr(eq + 1));
      c.values_[section.empty() ? key : section + "." + key] = val;
    }
    return c;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    try {
      std::size_t pos = 0;
      double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (...) {
      throw ConfigError(key, "not a number: " + v);
    }
  }

  long long get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    try {
      std::size_t pos = 0;
      long long out = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (...) {
      throw ConfigError(key, "not an integer: " + v);
    }
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    std::istringstream ss(get(key));
    std::string tok;
    while (ss >> tok) {
      try {
        out.push_back(std::stod(tok));
      } catch (...) {
        throw ConfigError(key, "not a number: " + tok);
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

  void set(const std::string& key, const std::string& val) { values_[key] = val; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::map<std::string, std::string> values_;
};

// "offset:prob" tokens; the symmetric completion is NOT automatic, both signs
// must be listed explicitly.
inline std::vector<std::pair<long long, double>> parse_kernel_pairs(const std::string& text) {
  std::vector<std::pair<long long, double>> pairs;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) throw ConfigError("kernel.pairs", "expected offset:prob");
    pairs.push_back({std::stoll(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
  }
  return pairs;
}

inline JumpKernel kernel_from_config(const Config& c) {
  return make_kernel(parse_kernel_pairs(c.require("kernel.pairs")));
}

inline InitialProfile profile_from_config(const Config& c) {
  std::string variant = c.get("profile.variant", "step");
  int K = static_cast<int>(c.get_int("profile.K", 1));
  if (variant == "step") {
    int layers = static_cast<int>(c.get_int("profile.layers", K));
    return InitialProfile::deterministic_step(K, layers);
  }
  if (variant == "binomial") {
    return InitialProfile::binomial_step(K, c.get_double("profile.alpha", 0.5));
  }
  if (variant == "periodic") {
    int period = static_cast<int>(c.get_int("profile.period", 1));
    std::vector<std::vector<double>> pmfs;
    for (int r = 0; r < period; ++r) {
      std::string key = "profile.residue" + std::to_string(r);
      std::vector<double> pmf(static_cast<std::size_t>(K) + 1, 0.0);
      std::istringstream ss(c.require(key));
      std::string tok;
      while (ss >> tok) {
        auto colon = tok.find(':');
        if (colon == std::string::npos) throw ConfigError(key, "expected occupancy:prob");
        int occ = std::stoi(tok.substr(0, colon));
        if (occ < 0 || occ > K) throw ConfigError(key, "occupancy outside [0, K]");
        pmf[static_cast<std::size_t>(occ)] = std::stod(tok.substr(colon + 1));
      }
      pmfs.push_back(std::move(pmf));
    }
    return InitialProfile::product_periodic(K, pmfs);
  }
  throw ConfigError("profile.variant", "unknown variant " + variant);
}

// Truncation rules L(t): fixed:N, cbt:c (ceil of c*b_t), tpow:g (ceil of t^g).
struct LRule {
  std::string kind = "cbt";
  double param = 10.0;

  long long value(double t) const {
    if (kind == "fixed") return static_cast<long long>(param);
    if (kind == "cbt")
      return static_cast<long long>(std::ceil(param * std::sqrt(t / std::log(t))));
    if (kind == "tpow") return static_cast<long long>(std::ceil(std::pow(t, param)));
    throw ConfigError("run.L_rule", "unknown rule " + kind);
  }

  static LRule parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("run.L_rule", "expected kind:param");
    LRule r;
    r.kind = text.substr(0, colon);
    r.param = std::stod(text.substr(colon + 1));
    if (r.kind != "fixed" && r.kind != "cbt" && r.kind != "tpow")
      throw ConfigError("run.L_rule", "unknown rule " + r.kind);
    return r;
  }

  std::string to_string() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s:%g", kind.c_str(), param);
    return buf;
  }
};

// Runs fn(replica) for replica in [0, replicas) on a small worker pool;
// results must be written into per-replica slots so the thread count never
// changes the output.
template <typename F>
inline void parallel_replicas(long long replicas, int threads, F&& fn) {
  if (threads <= 1) {
    for (long long r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        long long r = next.fetch_add(1);
        if (r >= replicas || failed.load()) break;
        try {
          fn(r);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          error = e.what();
          failed.store(true);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) throw std::runtime_error("replica failed: " + error);
}

// One (K, t) sweep: per-replica top order statistics and rescaled interval
// counts from the direct simulator.
struct SnapshotSweep {
  double scale_t = 0.0;
  int K = 1;
  long long L = 0;
  ScalingMap map;
  std::vector<std::vector<double>> top;             // per replica, raw positions (3 ranks)
  std::vector<std::vector<long long>> counts;       // per replica per interval
  std::vector<double> v_of_max;                     // map.forward(X^(0))
  std::vector<double> gap01, gap12;                 // (X^(0)-X^(1))/(sigma b), next gap

  std::uint64_t total_events = 0;
};

inline SnapshotSweep run_extremes_sweep(const JumpKernel& kernel, const InitialProfile& profile,
                                        int K, double scale_t, const LRule& lrule,
                                        ScalingMap::Kind map_kind,
                                        const std::vector<HalfOpen>& intervals,
                                        long long replicas, std::uint64_t seed, int threads) {
  SnapshotSweep sweep;
  sweep.scale_t = scale_t;
  sweep.K = K;
  sweep.L = lrule.value(scale_t);
  sweep.map = (map_kind == ScalingMap::Kind::time)
                  ? make_time_map(kernel.sigma, scale_t)
                  : make_block_map(kernel.sigma, scale_t, sweep.L);
  sweep.top.assign(static_cast<std::size_t>(replicas), {});
  sweep.counts.assign(static_cast<std::size_t>(replicas), {});
  sweep.v_of_max.assign(static_cast<std::size_t>(replicas), 0.0);
  sweep.gap01.assign(static_cast<std::size_t>(replicas), 0.0);
  sweep.gap12.assign(static_cast<std::size_t>(replicas), 0.0);

  SplitMix64 master(seed);
  std::atomic<std::uint64_t> events{0};
  double sb = kernel.sigma * sweep.map.b;
  parallel_replicas(replicas, threads, [&](long long r) {
    SplitMix64 rng = master.split(static_cast<std::uint64_t>(r));
    Configuration init = Configuration::from_profile(profile, sweep.L, rng);
    DirectSimulator sim(init, kernel, rng, {.t_end = scale_t / K});
    ParticleSnapshot snap = sim.run();
    events.fetch_add(sim.events());
    auto os = order_statistics(snap, 2);
    sweep.top[static_cast<std::size_t>(r)] = os;
    sweep.v_of_max[static_cast<std::size_t>(r)] = sweep.map.forward(os[0]);
    sweep.gap01[static_cast<std::size_t>(r)] = (os[0] - os[1]) / sb;
    sweep.gap12[static_cast<std::size_t>(r)] = (os[1] - os[2]) / sb;
    if (!intervals.empty())
      sweep.counts[static_cast<std::size_t>(r)] = rescaled_counts(snap, sweep.map, intervals);
  });
  sweep.total_events = events.load();
  return sweep;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline ordered_json test_result_json(const TestResult& r) {
  ordered_json j;
  j["name"] = r.name;
  j["statistic"] = r.statistic;
  j["n_samples"] = r.n_samples;
  j["threshold"] = r.threshold;
  j["pvalue"] = r.pvalue;
  j["pass"] = r.pass;
  for (const auto& [k, v] : r.extras) j[k] = v;
  return j;
}

inline ordered_json manifest_json(const Config& cfg, const std::string& subcommand,
                                  std::uint64_t seed, bool with_timestamp = true) {
  ordered_json j;
  j["schema_version"] = 1;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  ordered_json echo;
  for (const auto& [k, v] : cfg.raw()) echo[k] = v;
  j["config"] = echo;
  if (with_timestamp) j["timestamp"] = static_cast<long long>(std::time(nullptr));
  return j;
}

}  // namespace ksep
