// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ksep/intervals.hpp"
#include "ksep/kernel.hpp"
#include "ksep/profiles.hpp"
#include "ksep/rng.hpp"
#include "ksep/scaling.hpp"

namespace ksep {

class ResourceExceeded : public std::runtime_error {
 public:
  explicit ResourceExceeded(const std::string& what) : std::runtime_error(what) {}
};

class WindowExit : public std::runtime_error {
 public:
  WindowExit() : std::runtime_error("stirring label reached the window boundary") {}
};

// Occupancy state on a finite active window; occ(x) in {0..K}, zero outside.
struct Configuration {
  long long lo = 0, hi = -1;  // inclusive; empty when hi < lo
  int K = 1;
  std::vector<int> occ;
  long long total = 0;

  int at(long long x) const {
    if (x < lo || x > hi) return 0;
    return occ[static_cast<std::size_t>(x - lo)];
  }

  static Configuration from_occupancies(long long lo, std::vector<int> occ, int K) {
    Configuration c;
    c.lo = lo;
    c.hi = lo + static_cast<long long>(occ.size()) - 1;
    c.K = K;
    c.total = 0;
    for (int v : occ) {
      if (v < 0 || v > K) throw std::invalid_argument("occupancy outside [0, K]");
      c.total += v;
    }
    c.occ = std::move(occ);
    return c;
  }

  // Quenched draw from nu_L on sites (-L, 0].
  static Configuration from_profile(const InitialProfile& p, long long L, SplitMix64& rng) {
    return from_occupancies(-L + 1, p.sample_occupancies(L, rng), p.K());
  }
};

// Particle positions at a fixed time, sorted nonincreasing with multiplicity.
struct ParticleSnapshot {
  double time = 0.0;
  std::vector<long long> positions;
};

inline ParticleSnapshot snapshot_of(const Configuration& c, double time) {
  ParticleSnapshot s;
  s.time = time;
  s.positions.reserve(static_cast<std::size_t>(c.total));
  for (long long x = c.hi; x >= c.lo; --x) {
    int n = c.at(x);
    for (int i = 0; i < n; ++i) s.positions.push_back(x);
  }
  return s;
}

// X^(0), ..., X^(m_max), with -inf sentinels past the particle count.
inline std::vector<double> order_statistics(const ParticleSnapshot& s, std::size_t m_max) {
  std::vector<double> out(m_max + 1, -kInf);
  for (std::size_t m = 0; m <= m_max && m < s.positions.size(); ++m)
    out[m] = static_cast<double>(s.positions[m]);
  return out;
}

// Counts of v(position) per interval; input intervals must be pairwise
// disjoint; -inf sentinels are never counted.
inline std::vector<long long> rescaled_counts(const ParticleSnapshot& s, const ScalingMap& map,
                                              const std::vector<HalfOpen>& intervals) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (!intervals[i].valid()) throw std::invalid_argument("interval requires a < b");
    for (std::size_t j = i + 1; j < intervals.size(); ++j) {
      if (intervals[i].a < intervals[j].b && intervals[j].a < intervals[i].b)
        throw OverlappingIntervals();
    }
  }
  std::vector<long long> counts(intervals.size(), 0);
  for (long long pos : s.positions) {
    double v = map.forward(static_cast<double>(pos));
    for (std::size_t i = 0; i < intervals.size(); ++i)
      if (intervals[i].contains(v)) ++counts[i];
  }
  return counts;
}

namespace detail {

// Two-level index over nonnegative site rates: per-site values plus block
// sums.  Updates are O(1); sampling scans blocks then sites, which stays fast
// because the scan is sequential.
class RateTree {
 public:
  static constexpr std::size_t kBlock = 32;

  void init(std::size_t n) {
    n_ = n;
    val_.assign(n, 0.0);
    block_.assign((n + kBlock - 1) / kBlock, 0.0);
    total_ = 0.0;
  }

  void set(std::size_t i, double v) {
    double delta = v - val_[i];
    if (delta == 0.0) return;
    val_[i] = v;
    block_[i / kBlock] += delta;
    total_ += delta;
  }

  double get(std::size_t i) const { return val_[i]; }
  double total() const { return total_; }

  // Index whose prefix sum first exceeds r (0 <= r < total).
  std::size_t sample(double r) const {
    std::size_t b = 0;
    const std::size_t nb = block_.size();
    while (b + 1 < nb && block_[b] < r) r -= block_[b++];
    std::size_t i = b * kBlock;
    std::size_t end = std::min(n_, i + kBlock) - 1;
    while (i < end && val_[i] < r) r -= val_[i++];
    if (val_[i] <= 0.0) {  // float residue: fall back to any active site
      std::size_t j = i;
      while (j > 0 && val_[j] <= 0.0) --j;
      if (val_[j] <= 0.0) {
        j = i;
        while (j + 1 < n_ && val_[j] <= 0.0) ++j;
      }
      return j;
    }
    return i;
  }

  void rebuild() {
    std::fill(block_.begin(), block_.end(), 0.0);
    total_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      block_[i / kBlock] += val_[i];
      total_ += val_[i];
    }
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> val_;
  std::vector<double> block_;
  double total_ = 0.0;
};

}  // namespace detail

struct DirectSimOptions {
  double t_end = 0.0;
  // When set, the tree total is checked against a direct rate sum after every
  // event (small windows) or periodically (large windows).
  bool check_total_rate = false;
  double rate_check_tol = 1e-9;
  long long max_sites = 1LL << 25;
};

// Event-driven kinetic Monte Carlo for the K-SEP generator: directed pair
// (x,y) fires at rate p(x,y) occ(x) (K - occ(y)).  The window expands as
// particles move; there is no wall.
class DirectSimulator {
 public:
  DirectSimulator(const Configuration& init, const JumpKernel& kernel, SplitMix64& rng,
                  DirectSimOptions opt = {})
      : kernel_(kernel), K_(init.K), rng_(rng), opt_(opt) {
    if (init.total == 0 && init.occ.empty()) {
      lo_ = 0;
      occ_.assign(1 + 2 * margin(), 0);
    } else {
      long long pad = std::max<long long>(64, 4 * margin());
      lo_ = init.lo - pad;
      occ_.assign(static_cast<std::size_t>(init.hi - init.lo + 1 + 2 * pad), 0);
      for (long long x = init.lo; x <= init.hi; ++x)
        occ_[static_cast<std::size_t>(x - lo_)] = init.at(x);
    }
    total_particles_ = init.total;
    tree_.init(occ_.size());
    for (std::size_t i = 0; i < occ_.size(); ++i) tree_.set(i, site_rate(i));
    time_ = 0.0;
  }

  double time() const { return time_; }

  // Advances to t_end and returns the snapshot there.
  ParticleSnapshot run() {
    const double t_end = opt_.t_end;
    while (true) {
      double total = tree_.total();
      if (total <= 0.0) {
        time_ = t_end;
        break;
      }
      double dt = rng_.exponential(total);
      if (time_ + dt > t_end) {
        time_ = t_end;
        break;
      }
      time_ += dt;
      step(total);
      ++events_;
      if ((events_ & ((1 << 20) - 1)) == 0) tree_.rebuild();
      if (opt_.check_total_rate) maybe_check_rates();
    }
    return snapshot();
  }

  ParticleSnapshot snapshot() const {
    ParticleSnapshot s;
    s.time = time_;
    s.positions.reserve(static_cast<std::size_t>(total_particles_));
    for (std::size_t i = occ_.size(); i-- > 0;) {
      for (int c = 0; c < occ_[i]; ++c) s.positions.push_back(lo_ + static_cast<long long>(i));
    }
    return s;
  }

  std::uint64_t events() const { return events_; }

 private:
  long long margin() const { return kernel_.max_abs_offset; }

  double site_rate(std::size_t i) const {
    int o = occ_[i];
    if (o == 0) return 0.0;
    double r = 0.0;
    for (std::size_t j = 0; j < kernel_.offsets.size(); ++j) {
      long long d = kernel_.offsets[j];
      long long tgt = static_cast<long long>(i) + d;
      int ot = (tgt >= 0 && tgt < static_cast<long long>(occ_.size()))
                   ? occ_[static_cast<std::size_t>(tgt)]
                   : 0;
      r += kernel_.probs[j] * static_cast<double>(K_ - ot);
    }
    return r * static_cast<double>(o);
  }

  void refresh_span(long long lo, long long hi) {
    long long a = std::max<long long>(0, lo);
    long long b = std::min<long long>(static_cast<long long>(occ_.size()) - 1, hi);
    for (long long z = a; z <= b; ++z)
      tree_.set(static_cast<std::size_t>(z), site_rate(static_cast<std::size_t>(z)));
  }

  void refresh_around(long long x, long long y) {
    long long R = margin();
    long long lo1 = std::min(x, y) - R, hi1 = std::min(x, y) + R;
    long long lo2 = std::max(x, y) - R, hi2 = std::max(x, y) + R;
    if (lo2 <= hi1 + 1) {
      refresh_span(lo1, hi2);
    } else {
      refresh_span(lo1, hi1);
      refresh_span(lo2, hi2);
    }
  }

  void step(double total) {
    double r = rng_.uniform01() * total;
    std::size_t ix = tree_.sample(r);
    if (occ_[ix] == 0) {  // float residue; pick any active site
      ix = 0;
      while (ix < occ_.size() && occ_[ix] == 0) ++ix;
      if (ix == occ_.size()) return;
    }
    // choose the displacement with weight p_d (K - occ(x+d))
    double wsum = tree_.get(ix) / static_cast<double>(occ_[ix]);
    double u = rng_.uniform01() * wsum;
    std::size_t pick = 0;
    double acc = 0.0;
    for (std::size_t j = 0; j < kernel_.offsets.size(); ++j) {
      long long tgt = static_cast<long long>(ix) + kernel_.offsets[j];
      int ot = (tgt >= 0 && tgt < static_cast<long long>(occ_.size()))
                   ? occ_[static_cast<std::size_t>(tgt)]
                   : 0;
      acc += kernel_.probs[j] * static_cast<double>(K_ - ot);
      pick = j;
      if (u < acc) break;
    }
    long long iy = static_cast<long long>(ix) + kernel_.offsets[pick];
    if (iy < margin() || iy >= static_cast<long long>(occ_.size()) - margin()) {
      grow();
      long long shift = shift_last_;
      ix = static_cast<std::size_t>(static_cast<long long>(ix) + shift);
      iy += shift;
    }
    std::size_t y = static_cast<std::size_t>(iy);
    if (occ_[y] >= K_) return;  // zero-rate target cannot be drawn except by float residue
    --occ_[ix];
    ++occ_[y];
    refresh_around(static_cast<long long>(ix), iy);
  }

  void grow() {
    long long old_size = static_cast<long long>(occ_.size());
    long long pad = std::max<long long>(64, old_size / 2);
    if (old_size + 2 * pad > opt_.max_sites)
      throw ResourceExceeded("simulation window exceeded max_sites");
    std::vector<int> bigger(static_cast<std::size_t>(old_size + 2 * pad), 0);
    std::copy(occ_.begin(), occ_.end(), bigger.begin() + static_cast<std::size_t>(pad));
    occ_.swap(bigger);
    lo_ -= pad;
    shift_last_ = pad;
    tree_.init(occ_.size());
    for (std::size_t i = 0; i < occ_.size(); ++i) tree_.set(i, site_rate(i));
  }

  void maybe_check_rates() {
    bool small = occ_.size() <= 512;
    if (!small && (events_ & 4095) != 0) return;
    double direct = 0.0;
    for (std::size_t i = 0; i < occ_.size(); ++i) direct += site_rate(i);
    double scale = std::max(1.0, std::fabs(direct));
    if (std::fabs(direct - tree_.total()) > opt_.rate_check_tol * scale)
      throw std::logic_error("total-rate bookkeeping drifted");
  }

  const JumpKernel& kernel_;
  int K_;
  SplitMix64& rng_;
  DirectSimOptions opt_;
  long long lo_ = 0;
  std::vector<int> occ_;
  detail::RateTree tree_;
  double time_ = 0.0;
  long long total_particles_ = 0;
  std::uint64_t events_ = 0;
  long long shift_last_ = 0;
};

inline ParticleSnapshot simulate_direct(const Configuration& init, const JumpKernel& kernel,
                                        const DirectSimOptions& opt, SplitMix64& rng) {
  DirectSimulator sim(init, kernel, rng, opt);
  return sim.run();
}

// Stirring realization on a fixed window: every unordered pair {x,y} carries a
// Poisson clock of rate K^2 p(x,y); at each ring a uniformly chosen particle
// at x and one at y are interchanged.  All K |W| labels are evolved; the K-SEP
// configuration is read off from the labels that carry a real particle.
struct StirringState {
  long long lo = 0, hi = -1;
  int K = 1;
  std::vector<long long> position;  // label (x,j) at index (x-lo)*K + (j-1)
  std::vector<int> initial_occ;     // occupancy at t=0 per window site

  long long label_position(long long x, int j) const {
    return position[static_cast<std::size_t>((x - lo) * K + (j - 1))];
  }

  // Recovers the occupancy field from the labels of real particles.
  Configuration occupation() const {
    std::vector<int> occ(static_cast<std::size_t>(hi - lo + 1), 0);
    for (long long x = lo; x <= hi; ++x) {
      int n = initial_occ[static_cast<std::size_t>(x - lo)];
      for (int j = 1; j <= n; ++j)
        ++occ[static_cast<std::size_t>(label_position(x, j) - lo)];
    }
    return Configuration::from_occupancies(lo, occ, K);
  }
};

inline std::pair<ParticleSnapshot, StirringState> simulate_stirring(const Configuration& init,
                                                                    const JumpKernel& kernel,
                                                                    double t_end,
                                                                    SplitMix64& rng) {
  if (init.hi < init.lo) throw std::invalid_argument("stirring needs a nonempty window");
  const long long W = init.hi - init.lo + 1;
  const int K = init.K;

  StirringState st;
  st.lo = init.lo;
  st.hi = init.hi;
  st.K = K;
  st.initial_occ.resize(static_cast<std::size_t>(W));
  for (long long x = init.lo; x <= init.hi; ++x)
    st.initial_occ[static_cast<std::size_t>(x - init.lo)] = init.at(x);

  // grid[(x-lo)*K + s] = id of the stirring particle in slot s at site x
  std::vector<std::int32_t> grid(static_cast<std::size_t>(W) * K);
  std::vector<std::int32_t> site(static_cast<std::size_t>(W) * K);   // id -> site index
  std::vector<std::int32_t> slot(static_cast<std::size_t>(W) * K);   // id -> slot
  std::vector<std::uint8_t> real(static_cast<std::size_t>(W) * K, 0);
  for (long long i = 0; i < W; ++i) {
    for (int s = 0; s < K; ++s) {
      std::int32_t id = static_cast<std::int32_t>(i * K + s);
      grid[static_cast<std::size_t>(id)] = id;
      site[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(i);
      slot[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(s);
      if (s < st.initial_occ[static_cast<std::size_t>(i)]) real[static_cast<std::size_t>(id)] = 1;
    }
  }

  // pair clocks by displacement d > 0: rate K^2 p(0,d) per pair, W-d pairs
  std::vector<long long> ds;
  std::vector<double> dweight;
  double total_rate = 0.0;
  for (std::size_t j = 0; j < kernel.offsets.size(); ++j) {
    long long d = kernel.offsets[j];
    if (d <= 0 || d >= W) continue;
    double w = static_cast<double>(K) * K * kernel.probs[j] * static_cast<double>(W - d);
    ds.push_back(d);
    dweight.push_back(w);
    total_rate += w;
  }

  double time = 0.0;
  while (total_rate > 0.0) {
    time += rng.exponential(total_rate);
    if (time > t_end) break;
    double u = rng.uniform01() * total_rate;
    std::size_t pick = 0;
    double acc = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      acc += dweight[j];
      pick = j;
      if (u < acc) break;
    }
    long long d = ds[pick];
    long long xi = static_cast<long long>(rng.below(static_cast<std::uint64_t>(W - d)));
    long long yi = xi + d;
    int s1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    int s2 = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    std::int32_t a = grid[static_cast<std::size_t>(xi * K + s1)];
    std::int32_t b = grid[static_cast<std::size_t>(yi * K + s2)];
    grid[static_cast<std::size_t>(xi * K + s1)] = b;
    grid[static_cast<std::size_t>(yi * K + s2)] = a;
    site[static_cast<std::size_t>(a)] = static_cast<std::int32_t>(yi);
    slot[static_cast<std::size_t>(a)] = static_cast<std::int32_t>(s2);
    site[static_cast<std::size_t>(b)] = static_cast<std::int32_t>(xi);
    slot[static_cast<std::size_t>(b)] = static_cast<std::int32_t>(s1);
    if ((real[static_cast<std::size_t>(a)] && (yi == 0 || yi == W - 1)) ||
        (real[static_cast<std::size_t>(b)] && (xi == 0 || xi == W - 1)))
      throw WindowExit();
  }

  st.position.resize(static_cast<std::size_t>(W) * K);
  for (long long i = 0; i < W; ++i)
    for (int s = 0; s < K; ++s) {
      std::int32_t id = static_cast<std::int32_t>(i * K + s);
      st.position[static_cast<std::size_t>(id)] =
          init.lo + static_cast<long long>(site[static_cast<std::size_t>(id)]);
    }

  Configuration occ = st.occupation();
  return {snapshot_of(occ, t_end), std::move(st)};
}

}  // namespace ksep
