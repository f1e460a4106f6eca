// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "ksep/experiment.hpp"

using namespace ksep;

static const char* kSampleConfig = R"(
# sample experiment
[kernel]
pairs = 1:0.5 -1:0.5

[profile]
variant = step
K = 2
layers = 2

[run]
t_grid = 40 80
L_rule = cbt:10
replicas = 64
seed = 7
map = time
)";

TEST_CASE("config parsing: sections, types, echo") {
  Config c = Config::parse_string(kSampleConfig);
  CHECK(c.require("kernel.pairs") == "1:0.5 -1:0.5");
  CHECK(c.get_int("profile.K", 0) == 2);
  CHECK(c.get_doubles("run.t_grid") == std::vector<double>({40.0, 80.0}));
  CHECK(c.get("missing.key", "dflt") == "dflt");
  CHECK_THROWS_AS(c.require("missing.key"), ConfigError);
  CHECK_THROWS_AS(c.get_int("kernel.pairs", 0), ConfigError);
  CHECK(c.raw().count("run.seed") == 1);
}

TEST_CASE("kernel and profile construction from config") {
  Config c = Config::parse_string(kSampleConfig);
  JumpKernel k = kernel_from_config(c);
  CHECK(k.sigma == 1.0);
  InitialProfile p = profile_from_config(c);
  CHECK(p.K() == 2);
  CHECK(p.c_nu() == 2.0);

  Config bad = Config::parse_string("[kernel]\npairs = 1:0.6 -1:0.4\n");
  CHECK_THROWS_AS(kernel_from_config(bad), KernelError);
}

TEST_CASE("L rules") {
  CHECK(LRule::parse("fixed:100").value(4000.0) == 100);
  // ceil(10 * b_t) at t = 4000
  long long L = LRule::parse("cbt:10").value(4000.0);
  CHECK(L == static_cast<long long>(std::ceil(10.0 * std::sqrt(4000.0 / std::log(4000.0)))));
  CHECK(LRule::parse("tpow:0.25").value(4000.0) == 8);
  CHECK_THROWS_AS(LRule::parse("nope:1"), ConfigError);
}

TEST_CASE("parallel replicas fill disjoint slots deterministically") {
  std::vector<long long> a(257, -1), b(257, -1);
  parallel_replicas(257, 1, [&](long long r) { a[static_cast<std::size_t>(r)] = r * r; });
  parallel_replicas(257, 4, [&](long long r) { b[static_cast<std::size_t>(r)] = r * r; });
  CHECK(a == b);
}

TEST_CASE("sweep reproducibility: identical seed, thread count independent") {
  Config c = Config::parse_string(kSampleConfig);
  JumpKernel kernel = kernel_from_config(c);
  InitialProfile profile = profile_from_config(c);
  LRule lrule = LRule::parse("cbt:10");
  std::vector<HalfOpen> iv = {HalfOpen{0.0, 1.0}, HalfOpen{1.0, kInf}};

  SnapshotSweep s1 = run_extremes_sweep(kernel, profile, 2, 40.0, lrule,
                                        ScalingMap::Kind::time, iv, 64, 7, 1);
  SnapshotSweep s2 = run_extremes_sweep(kernel, profile, 2, 40.0, lrule,
                                        ScalingMap::Kind::time, iv, 64, 7, 4);
  CHECK(s1.v_of_max == s2.v_of_max);
  CHECK(s1.counts == s2.counts);
  CHECK(s1.gap01 == s2.gap01);

  SnapshotSweep s3 = run_extremes_sweep(kernel, profile, 2, 40.0, lrule,
                                        ScalingMap::Kind::time, iv, 64, 8, 2);
  CHECK(s1.v_of_max != s3.v_of_max);  // different seed, different draws
}

TEST_CASE("manifest echoes the config verbatim") {
  Config c = Config::parse_string(kSampleConfig);
  ordered_json m = manifest_json(c, "simulate", 7, false);
  CHECK(m["config"]["kernel.pairs"] == "1:0.5 -1:0.5");
  CHECK(m["config"]["run.L_rule"] == "cbt:10");
  CHECK(m["subcommand"] == "simulate");
  CHECK(m.contains("timestamp") == false);
}

TEST_CASE("exceptions inside replicas propagate") {
  CHECK_THROWS(parallel_replicas(16, 3, [&](long long r) {
    if (r == 7) throw std::runtime_error("boom");
  }));
}
