// SPDX-License-Identifier: Apache-2.0
//
// ksep: experiment driver for the K-exclusion extremal-particle toolkit.
// Subcommands: simulate, verify-exact, intensity, kappa-tau, fit, trend.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ksep/analytics.hpp"
#include "ksep/experiment.hpp"
#include "ksep/stats.hpp"
#include "ksep/verify.hpp"

namespace fs = std::filesystem;
using namespace ksep;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

int effective_threads(const Config& cfg, const CommonArgs& args) {
  if (args.threads > 0) return args.threads;
  if (const char* env = std::getenv("KSEP_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  long long from_cfg = cfg.get_int("run.threads", 0);
  if (from_cfg > 0) return static_cast<int>(from_cfg);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint64_t effective_seed(const Config& cfg, const CommonArgs& args) {
  if (args.seed_set) return args.seed;
  return static_cast<std::uint64_t>(cfg.get_int("run.seed", 1));
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

std::vector<HalfOpen> intervals_from_config(const Config& cfg, const std::string& key) {
  std::vector<HalfOpen> out;
  std::istringstream ss(cfg.get(key));
  std::string tok;
  while (ss >> tok) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) throw ConfigError(key, "expected lo:hi");
    std::string lo = tok.substr(0, colon), hi = tok.substr(colon + 1);
    double a = (lo == "-inf") ? -kInf : std::stod(lo);
    double b = (hi == "inf") ? kInf : std::stod(hi);
    out.push_back(HalfOpen{a, b});
  }
  return out;
}

ScalingMap::Kind map_kind_from_config(const Config& cfg) {
  std::string kind = cfg.get("run.map", "time");
  if (kind == "time") return ScalingMap::Kind::time;
  if (kind == "block") return ScalingMap::Kind::block;
  throw ConfigError("run.map", "expected time or block");
}

// simulate: per-t sweep dumping rescaled order statistics per replica.
int cmd_simulate(const Config& cfg, const CommonArgs& args) {
  JumpKernel kernel = kernel_from_config(cfg);
  InitialProfile profile = profile_from_config(cfg);
  int K = profile.K();
  std::vector<double> tgrid = cfg.get_doubles("run.t_grid");
  if (tgrid.empty()) throw ConfigError("run.t_grid", "missing");
  LRule lrule = LRule::parse(cfg.get("run.L_rule", "cbt:10"));
  long long replicas = cfg.get_int("run.replicas", 1000);
  int max_ranks = static_cast<int>(cfg.get_int("run.max_ranks", 8));
  std::uint64_t seed = effective_seed(cfg, args);
  int threads = effective_threads(cfg, args);
  ScalingMap::Kind kind = map_kind_from_config(cfg);

  fs::create_directories(args.out_dir);
  std::ofstream csv(fs::path(args.out_dir) / "results.csv");
  csv << "replica,time,rank,position,rescaled\n";

  ordered_json summary = ordered_json::array();
  for (double t : tgrid) {
    long long L = lrule.value(t);
    ScalingMap map = (kind == ScalingMap::Kind::time) ? make_time_map(kernel.sigma, t)
                                                      : make_block_map(kernel.sigma, t, L);
    SplitMix64 master(seed);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(replicas));
    parallel_replicas(replicas, threads, [&](long long r) {
      SplitMix64 rng = master.split(static_cast<std::uint64_t>(r) ^
                                    (static_cast<std::uint64_t>(t * 16)<< 32));
      Configuration init = Configuration::from_profile(profile, L, rng);
      ParticleSnapshot snap =
          simulate_direct(init, kernel, {.t_end = t / K}, rng);
      rows[static_cast<std::size_t>(r)] = order_statistics(
          snap, static_cast<std::size_t>(max_ranks) - 1);
    });
    for (long long r = 0; r < replicas; ++r) {
      const auto& os = rows[static_cast<std::size_t>(r)];
      for (std::size_t rank = 0; rank < os.size(); ++rank) {
        if (os[rank] == -kInf) break;
        csv << r << "," << format_double(t / K) << "," << rank << ","
            << static_cast<long long>(os[rank]) << ","
            << format_double(map.forward(os[rank])) << "\n";
      }
    }
    summary.push_back({{"t", t},
                       {"L", L},
                       {"replicas", replicas},
                       {"map",
                        {{"sigma", map.sigma},
                         {"a", map.a},
                         {"b", map.b},
                         {"kind", kind == ScalingMap::Kind::time ? "time" : "block"},
                         {"t", map.t},
                         {"L", map.L}}}});
  }

  ordered_json manifest = manifest_json(cfg, "simulate", seed);
  manifest["kernel_sigma"] = kernel.sigma;
  manifest["cells"] = summary;
  write_json(fs::path(args.out_dir) / "manifest.json", manifest);
  return 0;
}

int cmd_verify_exact(const Config& cfg, const CommonArgs& args) {
  std::uint64_t seed = effective_seed(cfg, args);
  fs::create_directories(fs::path(args.out_dir) / "reports");
  auto results = verify::run_exact_suite(seed);
  ordered_json arr = ordered_json::array();
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << "  " << r.description << "\n";
    ordered_json j;
    j["id"] = r.id;
    j["description"] = r.description;
    j["pass"] = r.pass;
    j["details"] = r.details;
    arr.push_back(j);
    all = all && r.pass;
  }
  write_json(fs::path(args.out_dir) / "reports" / "exact_checks.json", arr);
  write_json(fs::path(args.out_dir) / "manifest.json", manifest_json(cfg, "verify-exact", seed));
  return all ? 0 : 1;
}

int cmd_intensity(const Config& cfg, const CommonArgs& args) {
  JumpKernel kernel = kernel_from_config(cfg);
  InitialProfile profile = profile_from_config(cfg);
  int K = profile.K();
  std::vector<double> ts = cfg.get_doubles("intensity.t_points");
  std::vector<double> ys = cfg.get_doubles("intensity.y_points");
  if (ts.empty()) ts = {0.5, 1.0, 2.0, 5.0, 10.0};
  if (ys.empty()) ys = {-2.0, 0.0, 3.0};
  double rel_tol = cfg.get_double("intensity.rel_tol", 1e-8);

  fs::create_directories(fs::path(args.out_dir) / "reports");
  ordered_json rows = ordered_json::array();
  bool ok = true;
  for (double t : ts) {
    for (double y : ys) {
      double r1 = intensity(profile, K, t, IntervalUnion::single(y, kInf), kernel, 1e-12);
      ordered_json row = {{"t", t}, {"y", y}, {"sum_route", r1}};
      if (profile.variant() == InitialProfile::Variant::deterministic_step) {
        double r2 = intensity_step_halfline(kernel, K, profile.layers(), t, y,
                                            profile.truncation());
        row["ppm_route"] = r2;
        double rel = std::fabs(r1 - r2) / std::max(1.0, std::fabs(r2));
        row["relative_error"] = rel;
        ok = ok && rel < rel_tol;
      }
      rows.push_back(row);
    }
  }
  write_json(fs::path(args.out_dir) / "reports" / "intensity.json", rows);
  write_json(fs::path(args.out_dir) / "manifest.json",
             manifest_json(cfg, "intensity", effective_seed(cfg, args)));
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " intensity route agreement\n";
  return ok ? 0 : 1;
}

int cmd_kappa_tau(const Config& cfg, const CommonArgs& args) {
  JumpKernel kernel = kernel_from_config(cfg);
  std::vector<double> ts = cfg.get_doubles("kappa.t_points");
  if (ts.empty()) ts = {50.0, 200.0, 800.0};
  auto Aparts = intervals_from_config(cfg, "kappa.A");
  auto Bparts = intervals_from_config(cfg, "kappa.B");
  bool preimage = cfg.get("kappa.A_via_map", "true") == "true";
  double quad_tol = cfg.get_double("kappa.quad_tol", 1e-8);

  fs::create_directories(fs::path(args.out_dir) / "reports");
  ordered_json rows = ordered_json::array();
  for (double t : ts) {
    IntervalUnion A = Aparts.empty() ? IntervalUnion::single(0.0, 1.0) : IntervalUnion(Aparts);
    if (preimage) A = make_time_map(kernel.sigma, t).preimage(A);
    IntervalUnion B = Bparts.empty() ? IntervalUnion::single(-kInf, 0.0) : IntervalUnion(Bparts);
    KappaTauReport rep = kappa_tau(kernel, t, A, B, quad_tol);
    rows.push_back({{"t", t},
                    {"kappa", rep.kappa},
                    {"tau", rep.tau},
                    {"quad_error", rep.quad_error},
                    {"truncation_error", rep.truncation_error}});
    std::cout << "t=" << t << "  kappa=" << rep.kappa << "  tau=" << rep.tau << "\n";
  }
  write_json(fs::path(args.out_dir) / "reports" / "kappa_tau.json", rows);
  write_json(fs::path(args.out_dir) / "manifest.json",
             manifest_json(cfg, "kappa-tau", effective_seed(cfg, args)));
  return 0;
}

// fit: simulate over the t-grid and test the rescaled maximum against the
// configured limit law; also gap tests at the largest t.
int cmd_fit(const Config& cfg, const CommonArgs& args) {
  JumpKernel kernel = kernel_from_config(cfg);
  InitialProfile profile = profile_from_config(cfg);
  int K = profile.K();
  std::vector<double> tgrid = cfg.get_doubles("run.t_grid");
  if (tgrid.empty()) throw ConfigError("run.t_grid", "missing");
  LRule lrule = LRule::parse(cfg.get("run.L_rule", "cbt:10"));
  long long replicas = cfg.get_int("run.replicas", 2000);
  std::uint64_t seed = effective_seed(cfg, args);
  int threads = effective_threads(cfg, args);
  ScalingMap::Kind kind = map_kind_from_config(cfg);
  double level = cfg.get_double("run.level", 0.01);
  double band = cfg.get_double("fit.noise_band", 0.01);
  double cap = cfg.get_double("fit.final_cap", 0.08);

  // limit constant: psi regime for the time map, c_nu for the block map
  double c_limit;
  if (kind == ScalingMap::Kind::time) {
    double psi = (lrule.kind == "cbt") ? lrule.param : kInf;
    c_limit = profile.c_nu() * kernel.sigma *
              (std::isinf(psi) ? 1.0 : 1.0 - std::exp(-psi / kernel.sigma));
  } else {
    c_limit = profile.c_nu();
  }

  fs::create_directories(fs::path(args.out_dir) / "reports");
  std::ofstream trend_csv(fs::path(args.out_dir) / "trend.csv");
  trend_csv << "t,ks_distance\n";

  ordered_json report;
  report["limit_constant"] = c_limit;
  ordered_json cells = ordered_json::array();
  std::vector<double> ks_path;
  SnapshotSweep last;
  for (double t : tgrid) {
    SnapshotSweep sweep = run_extremes_sweep(kernel, profile, K, t, lrule, kind, {}, replicas,
                                             seed, threads);
    double ks = ks_distance(sweep.v_of_max,
                            [c_limit](double x) { return gumbel_cdf(c_limit, x); });
    ks_path.push_back(ks);
    trend_csv << format_double(t) << "," << format_double(ks) << "\n";
    cells.push_back({{"t", t}, {"L", sweep.L}, {"ks", ks}, {"events", sweep.total_events}});
    if (t == tgrid.back()) last = std::move(sweep);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ks_path.size(); ++i)
    monotone = monotone && ks_path[i] <= ks_path[i - 1] + band;
  bool capped = ks_path.back() < cap;

  report["cells"] = cells;
  report["ks_nonincreasing"] = monotone;
  report["ks_final_below_cap"] = capped;
  if (last.gap01.size() >= 1000) {
    report["gap1"] = test_result_json(spacing_test(last.gap01, 1, level));
    report["gap2"] = test_result_json(spacing_test(last.gap12, 2, level));
  } else {
    report["gap_tests"] = "skipped: fewer than 1000 replicas";
  }
  write_json(fs::path(args.out_dir) / "reports" / "fit.json", report);
  write_json(fs::path(args.out_dir) / "manifest.json", manifest_json(cfg, "fit", seed));
  bool ok = monotone && capped;
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " gumbel fit trend; final KS=" << ks_path.back()
            << "\n";
  return ok ? 0 : 1;
}

// trend: deterministic trends of the mean measure and of kappa/tau.
int cmd_trend(const Config& cfg, const CommonArgs& args) {
  JumpKernel kernel = kernel_from_config(cfg);
  InitialProfile profile = profile_from_config(cfg);
  int K = profile.K();
  std::vector<double> tgrid = cfg.get_doubles("run.t_grid");
  if (tgrid.empty()) tgrid = {50, 200, 800, 3200};
  LRule lrule = LRule::parse(cfg.get("run.L_rule", "cbt:10"));
  ScalingMap::Kind kind = map_kind_from_config(cfg);
  IntervalUnion A = IntervalUnion::single(cfg.get_double("trend.a", 0.0),
                                          cfg.get_double("trend.b", 1.0));

  fs::create_directories(fs::path(args.out_dir) / "reports");
  std::ofstream csv(fs::path(args.out_dir) / "trend.csv");
  csv << "t,L,mean_ratio,kappa,tau\n";
  ordered_json rows = ordered_json::array();
  double prev_kappa = kInf;
  bool kappa_decreasing = true;
  bool ratio_improving = true;
  double prev_ratio_err = kInf;
  for (double t : tgrid) {
    long long L = lrule.value(t);
    ScalingMap map = (kind == ScalingMap::Kind::time) ? make_time_map(kernel.sigma, t)
                                                      : make_block_map(kernel.sigma, t, L);
    IntervalUnion pre = map.preimage(A);
    // mean-convergence ratio: mu^{nu_L} / ((c_nu / K) mu^{eta_L}) -> 1
    InitialProfile nuL = profile.truncated(L);
    InitialProfile etaL = InitialProfile::deterministic_step(K, K, L);
    double mu_nu = intensity(nuL, K, t, pre, kernel, 1e-10);
    double mu_eta = intensity(etaL, K, t, pre, kernel, 1e-10);
    double ratio = mu_nu / ((profile.c_nu() / K) * mu_eta);
    if (std::fabs(ratio - 1.0) > prev_ratio_err + 1e-9) ratio_improving = false;
    prev_ratio_err = std::fabs(ratio - 1.0);

    IntervalUnion B = (L == kInfiniteL) ? IntervalUnion::single(-kInf, 0.0)
                                        : IntervalUnion::single(-static_cast<double>(L), 0.0);
    KappaTauReport rep = kappa_tau(kernel, t, pre, B, 1e-8);
    if (rep.kappa > prev_kappa + 1e-12) kappa_decreasing = false;
    prev_kappa = rep.kappa;
    csv << format_double(t) << "," << L << "," << format_double(ratio) << ","
        << format_double(rep.kappa) << "," << format_double(rep.tau) << "\n";
    rows.push_back({{"t", t},
                    {"L", L},
                    {"mean_ratio", ratio},
                    {"kappa", rep.kappa},
                    {"tau", rep.tau}});
    std::cout << "t=" << t << " ratio=" << ratio << " kappa=" << rep.kappa
              << " tau=" << rep.tau << "\n";
  }
  ordered_json report;
  report["rows"] = rows;
  report["mean_ratio_error_decreasing"] = ratio_improving;
  report["kappa_decreasing"] = kappa_decreasing;
  write_json(fs::path(args.out_dir) / "reports" / "trend.json", report);
  write_json(fs::path(args.out_dir) / "manifest.json",
             manifest_json(cfg, "trend", effective_seed(cfg, args)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"K-exclusion extremal statistics toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs args;
  app.add_option("--config", args.config_path, "configuration file (key = value with sections)");
  app.add_option("--out", args.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", args.seed, "master seed override");
  app.add_option("--threads", args.threads, "worker threads (0 = auto)");

  auto* sim = app.add_subcommand("simulate", "event-driven K-SEP sweep, CSV of order statistics");
  auto* vex = app.add_subcommand("verify-exact", "machine-precision semigroup/moment checks");
  auto* inten = app.add_subcommand("intensity", "mean-measure evaluation and route agreement");
  auto* ktau = app.add_subcommand("kappa-tau", "correlation functionals over a t-grid");
  auto* fit = app.add_subcommand("fit", "simulate and fit the limit laws (KS trend)");
  auto* trend = app.add_subcommand("trend", "deterministic mean/kappa/tau trends");

  CLI11_PARSE(app, argc, argv);
  args.seed_set = seed_opt->count() > 0;

  try {
    Config cfg = args.config_path.empty() ? Config() : Config::parse_file(args.config_path);
    if (sim->parsed()) return cmd_simulate(cfg, args);
    if (vex->parsed()) return cmd_verify_exact(cfg, args);
    if (inten->parsed()) return cmd_intensity(cfg, args);
    if (ktau->parsed()) return cmd_kappa_tau(cfg, args);
    if (fit->parsed()) return cmd_fit(cfg, args);
    if (trend->parsed()) return cmd_trend(cfg, args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
