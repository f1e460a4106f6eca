// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksep/numeric.hpp"
#include "ksep/rng.hpp"

// Exact finite-state verification of the n-particle semigroup comparisons:
// interacting (V) versus independent (U) motion on a finite site set with a
// general symmetric kernel, plus the factorial-moment bounds they imply.
namespace ksep::exact {

class TooLarge : public std::runtime_error {
 public:
  explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};

class NotPositiveDefinite : public std::invalid_argument {
 public:
  NotPositiveDefinite() : std::invalid_argument("function is not positive definite") {}
};

// Symmetric sub-stochastic jump kernel on a finite site set; zero diagonal,
// not necessarily translation invariant.
struct SiteKernel {
  std::vector<long long> sites;            // site coordinates, for reporting
  std::vector<std::vector<double>> p;      // p[i][j] = p[j][i], p[i][i] = 0

  int size() const { return static_cast<int>(sites.size()); }

  static SiteKernel path(int m, double edge = 0.5) {
    SiteKernel k;
    k.sites.resize(static_cast<std::size_t>(m));
    std::iota(k.sites.begin(), k.sites.end(), 0);
    k.p.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i + 1 < m; ++i) {
      k.p[i][i + 1] = edge;
      k.p[i + 1][i] = edge;
    }
    return k;
  }

  static SiteKernel torus(int m, double edge = 0.5) {
    if (m < 3) throw std::invalid_argument("torus needs at least 3 sites");
    SiteKernel k = path(m, edge);
    k.p[static_cast<std::size_t>(m - 1)][0] = edge;
    k.p[0][static_cast<std::size_t>(m - 1)] = edge;
    return k;
  }

  // Random symmetric weights, scaled so every row sums to at most 1.
  static SiteKernel random_symmetric(int m, SplitMix64& rng, double density = 0.7) {
    SiteKernel k;
    k.sites.resize(static_cast<std::size_t>(m));
    std::iota(k.sites.begin(), k.sites.end(), 0);
    k.p.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        if (rng.uniform01() > density && j != i + 1) continue;  // keep a connected path
        double w = 0.1 + 0.9 * rng.uniform01();
        k.p[i][j] = w;
        k.p[j][i] = w;
      }
    double maxrow = 0.0;
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += k.p[i][j];
      maxrow = std::max(maxrow, s);
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) k.p[i][j] /= maxrow;
    return k;
  }
};

// Rate-1 single-particle semigroup exp(s (p - diag(row sums))) via the
// symmetric eigendecomposition; exact up to dense linear algebra.
class SingleWalk {
 public:
  explicit SingleWalk(const SiteKernel& k) {
    int m = k.size();
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) {
        g(i, j) = k.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        row += g(i, j);
      }
      g(i, i) = -row;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    vecs_ = es.eigenvectors();
    vals_ = es.eigenvalues();
  }

  // P(s)(x, y) = P_x(zeta_s = y).
  Eigen::MatrixXd probs(double s) const {
    Eigen::VectorXd e = (vals_.array() * s).exp().matrix();
    return vecs_ * e.asDiagonal() * vecs_.transpose();
  }

  // P_x(zeta_s in A) for a site mask.
  Eigen::VectorXd set_probs(double s, const std::vector<std::uint8_t>& mask) const {
    Eigen::MatrixXd P = probs(s);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(P.rows());
    for (int y = 0; y < P.cols(); ++y)
      if (mask[static_cast<std::size_t>(y)])
        out += P.col(y);
    return out;
  }

 private:
  Eigen::MatrixXd vecs_;
  Eigen::VectorXd vals_;
};

// Ordered n-tuples over the site set with occupation multiplicities <= K
// (Omega_n^K), embedded in the full tuple space S^n (mixed-radix indexing).
struct TupleSpace {
  const SiteKernel* kernel = nullptr;
  int n = 0, K = 0, m = 0;
  long long dim = 0;  // m^n
  std::vector<std::uint8_t> in_omega;
  std::vector<long long> omega_list;

  static TupleSpace build(const SiteKernel& k, int n, int K, long long cap = 2000000) {
    TupleSpace s;
    s.kernel = &k;
    s.n = n;
    s.K = K;
    s.m = k.size();
    double d = std::pow(static_cast<double>(s.m), n);
    if (d > static_cast<double>(cap)) throw TooLarge("tuple space exceeds the state cap");
    s.dim = 1;
    for (int i = 0; i < n; ++i) s.dim *= s.m;
    s.in_omega.assign(static_cast<std::size_t>(s.dim), 0);
    std::vector<int> tuple(static_cast<std::size_t>(n));
    std::vector<int> count(static_cast<std::size_t>(s.m));
    for (long long idx = 0; idx < s.dim; ++idx) {
      s.decode(idx, tuple.data());
      std::fill(count.begin(), count.end(), 0);
      bool ok = true;
      for (int i = 0; i < n; ++i)
        if (++count[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])] > K) ok = false;
      if (ok) {
        s.in_omega[static_cast<std::size_t>(idx)] = 1;
        s.omega_list.push_back(idx);
      }
    }
    return s;
  }

  void decode(long long idx, int* out) const {
    for (int i = n - 1; i >= 0; --i) {
      out[i] = static_cast<int>(idx % m);
      idx /= m;
    }
  }

  long long encode(const int* tuple) const {
    long long idx = 0;
    for (int i = 0; i < n; ++i) idx = idx * m + tuple[i];
    return idx;
  }
};

// Sparse conservative generator: off-diagonal rates per state, diagonal is
// minus the row sum.
struct Generator {
  std::vector<std::vector<std::pair<int, double>>> out;
  std::vector<double> exit;
  double max_exit = 0.0;
};

// U_n^K: n independent walkers with jump rate K.
inline Generator build_U(const TupleSpace& s) {
  Generator g;
  g.out.resize(static_cast<std::size_t>(s.dim));
  g.exit.assign(static_cast<std::size_t>(s.dim), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx = 0; idx < s.dim; ++idx) {
    s.decode(idx, tuple.data());
    for (int i = 0; i < s.n; ++i) {
      int xi = tuple[static_cast<std::size_t>(i)];
      for (int y = 0; y < s.m; ++y) {
        double rate = static_cast<double>(s.K) *
                      s.kernel->p[static_cast<std::size_t>(xi)][static_cast<std::size_t>(y)];
        if (rate <= 0.0) continue;
        int old = tuple[static_cast<std::size_t>(i)];
        tuple[static_cast<std::size_t>(i)] = y;
        g.out[static_cast<std::size_t>(idx)].push_back(
            {static_cast<int>(s.encode(tuple.data())), rate});
        tuple[static_cast<std::size_t>(i)] = old;
        g.exit[static_cast<std::size_t>(idx)] += rate;
      }
    }
    g.max_exit = std::max(g.max_exit, g.exit[static_cast<std::size_t>(idx)]);
  }
  return g;
}

// V_n^K: the K-SEP n-particle generator, rate p(x_i, y) (K - #{j : x_j = y}).
inline Generator build_V(const TupleSpace& s) {
  Generator g;
  g.out.resize(static_cast<std::size_t>(s.dim));
  g.exit.assign(static_cast<std::size_t>(s.dim), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  std::vector<int> count(static_cast<std::size_t>(s.m));
  for (long long j = 0; j < static_cast<long long>(s.omega_list.size()); ++j) {
    long long idx = s.omega_list[static_cast<std::size_t>(j)];
    s.decode(idx, tuple.data());
    std::fill(count.begin(), count.end(), 0);
    for (int i = 0; i < s.n; ++i) ++count[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
    for (int i = 0; i < s.n; ++i) {
      int xi = tuple[static_cast<std::size_t>(i)];
      for (int y = 0; y < s.m; ++y) {
        double py = s.kernel->p[static_cast<std::size_t>(xi)][static_cast<std::size_t>(y)];
        if (py <= 0.0) continue;
        double vac = static_cast<double>(s.K - count[static_cast<std::size_t>(y)]);
        if (vac <= 0.0) continue;
        int old = tuple[static_cast<std::size_t>(i)];
        tuple[static_cast<std::size_t>(i)] = y;
        g.out[static_cast<std::size_t>(idx)].push_back(
            {static_cast<int>(s.encode(tuple.data())), py * vac});
        tuple[static_cast<std::size_t>(i)] = old;
        g.exit[static_cast<std::size_t>(idx)] += py * vac;
      }
    }
    g.max_exit = std::max(g.max_exit, g.exit[static_cast<std::size_t>(idx)]);
  }
  return g;
}

// e^{tG} f by uniformization, certified truncation below tol.
inline std::vector<double> apply_semigroup(const Generator& g, double t, std::vector<double> f,
                                           double tol = 1e-12) {
  if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be >= 0");
  double lam = g.max_exit;
  if (lam <= 0.0 || t == 0.0) return f;
  double lt = lam * t;
  std::vector<double> result(f.size()), cur = f, next(f.size());
  double w = std::exp(-lt);
  for (std::size_t i = 0; i < f.size(); ++i) result[i] = w * cur[i];
  for (int n = 1; n < 1000000; ++n) {
    // P = I + G / lam
    for (std::size_t i = 0; i < cur.size(); ++i) {
      double acc = cur[i] * (1.0 - g.exit[i] / lam);
      for (const auto& [j, r] : g.out[i]) acc += (r / lam) * cur[static_cast<std::size_t>(j)];
      next[i] = acc;
    }
    cur.swap(next);
    w *= lt / n;
    for (std::size_t i = 0; i < cur.size(); ++i) result[i] += w * cur[i];
    if (static_cast<double>(n) >= lt && w * lt / (n + 1) / (1.0 - lt / (n + 2)) < tol) break;
  }
  return result;
}

// 1_{B_1 x ... x B_n} as a vector on the tuple space.
inline std::vector<double> indicator_product(const TupleSpace& s,
                                             const std::vector<std::vector<std::uint8_t>>& B) {
  if (B.size() != static_cast<std::size_t>(s.n))
    throw std::invalid_argument("need one factor mask per coordinate");
  std::vector<double> f(static_cast<std::size_t>(s.dim), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx = 0; idx < s.dim; ++idx) {
    s.decode(idx, tuple.data());
    bool in = true;
    for (int i = 0; i < s.n && in; ++i)
      in = B[static_cast<std::size_t>(i)][static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])] != 0;
    f[static_cast<std::size_t>(idx)] = in ? 1.0 : 0.0;
  }
  return f;
}

inline std::vector<double> indicator_power(const TupleSpace& s,
                                           const std::vector<std::uint8_t>& A) {
  return indicator_product(s, std::vector<std::vector<std::uint8_t>>(
                                  static_cast<std::size_t>(s.n), A));
}

// (1/n!) sum over coordinate permutations.
inline std::vector<double> symmetrize(const TupleSpace& s, const std::vector<double>& f) {
  std::vector<double> out(f.size(), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(s.n)), perm(static_cast<std::size_t>(s.n));
  std::vector<int> order(static_cast<std::size_t>(s.n));
  double fact = 1.0;
  for (int i = 2; i <= s.n; ++i) fact *= i;
  for (long long idx = 0; idx < s.dim; ++idx) {
    s.decode(idx, tuple.data());
    std::iota(order.begin(), order.end(), 0);
    double acc = 0.0;
    do {
      for (int i = 0; i < s.n; ++i)
        perm[static_cast<std::size_t>(i)] = tuple[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      acc += f[static_cast<std::size_t>(s.encode(perm.data()))];
    } while (std::next_permutation(order.begin(), order.end()));
    out[static_cast<std::size_t>(idx)] = acc / fact;
  }
  return out;
}

// h(x) = #{label vectors j in [K]^n making (x_i, j_i) pairwise distinct}
//      = prod over sites of (K)_{multiplicity}.
inline double h_count(const int* tuple, int n, int m, int K) {
  std::vector<int> count(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(tuple[i])];
  double h = 1.0;
  for (int v = 0; v < m; ++v)
    h *= static_cast<double>(falling_factorial(K, count[static_cast<std::size_t>(v)]));
  return h;
}

// prod over sites of E[(eta(v))_{multiplicity}] for a product law given by
// per-site falling moments fm[v][c].
inline double product_falling_weight(const int* tuple, int n, int m,
                                     const std::vector<std::vector<double>>& fm) {
  std::vector<int> count(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(tuple[i])];
  double w = 1.0;
  for (int v = 0; v < m; ++v) {
    int c = count[static_cast<std::size_t>(v)];
    if (c > 0) w *= fm[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
  }
  return w;
}

// Positive definiteness in each pair of variables: the quadratic form on the
// zero-sum subspace must be positive semidefinite for every freeze of the
// remaining coordinates.
inline bool is_positive_definite(const TupleSpace& s, const std::vector<double>& f,
                                 double tol = 1e-10) {
  int m = s.m, n = s.n;
  Eigen::MatrixXd basis(m, m - 1);  // columns e_k - e_{k+1} span the zero-sum subspace
  basis.setZero();
  for (int c = 0; c + 1 < m; ++c) {
    basis(c, c) = 1.0;
    basis(c + 1, c) = -1.0;
  }
  std::vector<int> tuple(static_cast<std::size_t>(n), 0);
  long long frozen = 1;
  for (int i = 0; i < n - 2; ++i) frozen *= m;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (long long rest = 0; rest < frozen; ++rest) {
        long long r = rest;
        for (int k = n - 1; k >= 0; --k) {
          if (k == i || k == j) continue;
          tuple[static_cast<std::size_t>(k)] = static_cast<int>(r % m);
          r /= m;
        }
        Eigen::MatrixXd M(m, m);
        for (int u = 0; u < m; ++u)
          for (int v = 0; v < m; ++v) {
            tuple[static_cast<std::size_t>(i)] = u;
            tuple[static_cast<std::size_t>(j)] = v;
            M(u, v) = f[static_cast<std::size_t>(s.encode(tuple.data()))];
          }
        Eigen::MatrixXd G = basis.transpose() * (0.5 * (M + M.transpose())) * basis;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        if (es.eigenvalues().minCoeff() < -tol) return false;
      }
    }
  }
  return true;
}

// kappa_t / tau_t restricted to the finite site set (single-particle CTMC in
// place of the lattice walk).
struct FiniteKappaTau {
  double kappa = 0.0;
  double tau = 0.0;
  double quad_error = 0.0;
};

inline FiniteKappaTau kappa_tau_finite(const SiteKernel& k, double t,
                                       const std::vector<std::uint8_t>& A,
                                       const std::vector<std::uint8_t>& B,
                                       double quad_tol = 1e-12) {
  SingleWalk walk(k);
  int m = k.size();
  FiniteKappaTau out;
  Eigen::VectorXd pb_t = walk.set_probs(t, B);
  for (int x = 0; x < m; ++x)
    if (A[static_cast<std::size_t>(x)]) out.tau += pb_t(x) * pb_t(x);
  if (t <= 0.0) return out;
  auto integrand = [&](double s) -> double {
    Eigen::VectorXd pb = walk.set_probs(s, B);
    Eigen::VectorXd pa = walk.set_probs(t - s, A);
    double g = 0.0;
    for (int x = 0; x < m; ++x)
      for (int y = 0; y < m; ++y) {
        double pxy = k.p[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
        if (pxy <= 0.0) continue;
        double d = pb(x) - pb(y);
        g += pxy * d * d * pa(x) * pa(y);
      }
    return g;
  };
  QuadratureResult q = adaptive_simpson(integrand, 0.0, t, quad_tol, 64);
  out.kappa = q.value;
  out.quad_error = q.error;
  return out;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  double slack = 0.0;  // most negative margin seen (>= -tol passes)
  std::map<std::string, double> data;
};

// Semigroup domination: V_n^K(t) f <= U_n^K(t) f pointwise on
// Omega_n^K for symmetric positive definite f; U is evaluated through the
// independent-product route as the oracle.
inline CheckResult check_vu(const TupleSpace& s, const std::vector<std::uint8_t>& A,
                            const std::vector<double>& tgrid, double tol = 1e-10) {
  CheckResult res;
  res.name = "V<=U";
  std::vector<double> f = indicator_power(s, A);
  if (!is_positive_definite(s, f)) throw NotPositiveDefinite();
  Generator V = build_V(s);
  SingleWalk walk(*s.kernel);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (double t : tgrid) {
    std::vector<double> vf = apply_semigroup(V, t, f, 1e-13);
    Eigen::VectorXd pa = walk.set_probs(static_cast<double>(s.K) * t, A);
    for (long long idx : s.omega_list) {
      s.decode(idx, tuple.data());
      double uf = 1.0;
      for (int i = 0; i < s.n; ++i) uf *= pa(tuple[static_cast<std::size_t>(i)]);
      worst = std::min(worst, uf - vf[static_cast<std::size_t>(idx)]);
    }
  }
  res.slack = worst;
  res.pass = worst >= -tol;
  return res;
}

// Negative association of stirring variables: for distinct labels,
// P(all of xi^{x_k j_k}_{t/K} in A) = V_n^K(t/K) 1_{A^n}(x) <= prod_k P_{x_k}(zeta_t in A).
inline CheckResult check_negative_association(const TupleSpace& s,
                                              const std::vector<std::uint8_t>& A, double t,
                                              double tol = 1e-10) {
  CheckResult res;
  res.name = "negassoc";
  std::vector<double> f = indicator_power(s, A);
  Generator V = build_V(s);
  std::vector<double> vf = apply_semigroup(V, t / s.K, f, 1e-13);
  SingleWalk walk(*s.kernel);
  Eigen::VectorXd pa = walk.set_probs(t, A);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx : s.omega_list) {
    s.decode(idx, tuple.data());
    double rhs = 1.0;
    for (int i = 0; i < s.n; ++i) rhs *= pa(tuple[static_cast<std::size_t>(i)]);
    worst = std::min(worst, rhs - vf[static_cast<std::size_t>(idx)]);
  }
  res.slack = worst;
  res.pass = worst >= -tol;
  return res;
}

// Fixed-node composite Simpson of the vector-valued map s -> V((t-s)/K) g_s,
// with Richardson comparison between N and N/2 panels.
inline std::vector<double> sgdiff_quadrature(const TupleSpace& s, const Generator& V,
                                             const std::vector<std::uint8_t>& A, double t,
                                             int panels, double* err_out) {
  SingleWalk walk(*s.kernel);
  std::size_t dim = static_cast<std::size_t>(s.dim);
  auto eval = [&](double sv) -> std::vector<double> {
    Eigen::VectorXd pa = walk.set_probs(sv, A);
    std::vector<double> g(dim, 0.0);
    std::vector<int> tuple(static_cast<std::size_t>(s.n));
    for (long long idx : s.omega_list) {
      s.decode(idx, tuple.data());
      double acc = 0.0;
      for (int i = 0; i < s.n; ++i)
        for (int j = i + 1; j < s.n; ++j) {
          int xi = tuple[static_cast<std::size_t>(i)], xj = tuple[static_cast<std::size_t>(j)];
          double pij = s.kernel->p[static_cast<std::size_t>(xi)][static_cast<std::size_t>(xj)];
          if (pij <= 0.0) continue;
          double d = pa(xi) - pa(xj);
          double prod = 1.0;
          for (int k = 0; k < s.n; ++k)
            if (k != i && k != j) prod *= pa(tuple[static_cast<std::size_t>(k)]);
          acc += pij * d * d * prod;
        }
      g[static_cast<std::size_t>(idx)] = acc;
    }
    return apply_semigroup(V, (t - sv) / s.K, g, 1e-13);
  };

  auto simpson = [&](int N, std::vector<std::vector<double>>& nodes) -> std::vector<double> {
    double h = t / N;
    std::vector<double> acc(dim, 0.0);
    for (int i = 0; i <= N; ++i) {
      double w = (i == 0 || i == N) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      for (std::size_t q = 0; q < dim; ++q) acc[q] += w * nodes[static_cast<std::size_t>(i)][q];
    }
    for (std::size_t q = 0; q < dim; ++q) acc[q] *= h / 3.0;
    return acc;
  };

  std::vector<std::vector<double>> nodes(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i) nodes[static_cast<std::size_t>(i)] = eval(t * i / panels);
  std::vector<std::vector<double>> coarse(static_cast<std::size_t>(panels / 2) + 1);
  for (int i = 0; i <= panels / 2; ++i) coarse[static_cast<std::size_t>(i)] = nodes[static_cast<std::size_t>(2 * i)];
  std::vector<double> fine = simpson(panels, nodes);
  std::vector<double> half = simpson(panels / 2, coarse);
  // (U^K - V^K) expands to sum_{i,j} p(x_i,x_j) Delta f with no K prefactor,
  // so the time substitution s -> s/K leaves an overall 1/K.
  double err = 0.0;
  for (std::size_t q = 0; q < dim; ++q) {
    fine[q] /= static_cast<double>(s.K);
    err = std::max(err, std::fabs(fine[q] - half[q] / static_cast<double>(s.K)) / 15.0);
  }
  if (err_out) *err_out = err;
  return fine;
}

// Integration-by-parts identity: [U(t/K) - V(t/K)] 1_{A^n} equals K^{-1}
// times the time integral of the V-semigroup applied to the
// pairwise-difference expression.
inline CheckResult check_difference_formula(const TupleSpace& s,
                                            const std::vector<std::uint8_t>& A, double t,
                                            double tol = 1e-8) {
  CheckResult res;
  res.name = "sg-difference";
  std::vector<double> f = indicator_power(s, A);
  Generator V = build_V(s);
  std::vector<double> vf = apply_semigroup(V, t / s.K, f, 1e-13);
  SingleWalk walk(*s.kernel);
  Eigen::VectorXd pa = walk.set_probs(t, A);

  double err = 0.0;
  int panels = 64;
  std::vector<double> rhs;
  for (;;) {
    rhs = sgdiff_quadrature(s, V, A, t, panels, &err);
    if (err < tol * 0.25 || panels >= 512) break;
    panels *= 2;
  }
  if (err >= tol) throw ToleranceUnreachable("sg-difference quadrature did not converge");

  double worst = 0.0;
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx : s.omega_list) {
    s.decode(idx, tuple.data());
    double uf = 1.0;
    for (int i = 0; i < s.n; ++i) uf *= pa(tuple[static_cast<std::size_t>(i)]);
    double lhs = uf - vf[static_cast<std::size_t>(idx)];
    worst = std::max(worst, std::fabs(lhs - rhs[static_cast<std::size_t>(idx)]));
  }
  res.slack = worst;
  res.data["quad_error"] = err;
  res.pass = worst <= tol;
  return res;
}

// Joint factorial moments for a deterministic {0,K} profile:
//   0 <= prod_k mu^n_k - E[prod_k N^{(n_k)}]
//     <= K^2 C(M,2) mu(A)^{M-2} (kappa_t(A,H) + tau_t(A,H)).
struct FactorialBoundResult {
  double diff = 0.0;
  double bound = 0.0;
  double mu_product = 0.0;
  double factorial_moment = 0.0;
  bool pass(double tol) const { return diff >= -tol && diff <= bound + tol; }
};

inline FactorialBoundResult check_factorial_bound(
    const SiteKernel& kernel, int K, const std::vector<std::uint8_t>& eta_positive,
    const std::vector<std::vector<std::uint8_t>>& groupsA, const std::vector<int>& nk, double t) {
  if (groupsA.size() != nk.size()) throw std::invalid_argument("one mask per group");
  int M = 0;
  for (int n : nk) M += n;
  TupleSpace s = TupleSpace::build(kernel, M, K);
  // per-coordinate factor masks
  std::vector<std::vector<std::uint8_t>> B;
  for (std::size_t k = 0; k < nk.size(); ++k)
    for (int r = 0; r < nk[k]; ++r) B.push_back(groupsA[k]);
  std::vector<double> F = indicator_product(s, B);
  std::vector<double> Fsym = symmetrize(s, F);
  Generator V = build_V(s);
  std::vector<double> vF = apply_semigroup(V, t / K, Fsym, 1e-13);

  FactorialBoundResult out;
  std::vector<int> tuple(static_cast<std::size_t>(M));
  double fact = 0.0;
  for (long long idx : s.omega_list) {
    s.decode(idx, tuple.data());
    bool inH = true;
    for (int i = 0; i < M && inH; ++i)
      inH = eta_positive[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])] != 0;
    if (!inH) continue;
    fact += h_count(tuple.data(), M, s.m, K) * vF[static_cast<std::size_t>(idx)];
  }
  out.factorial_moment = fact;

  SingleWalk walk(kernel);
  double muprod = 1.0;
  for (std::size_t k = 0; k < nk.size(); ++k) {
    Eigen::VectorXd pk = walk.set_probs(t, groupsA[k]);
    double mu = 0.0;
    for (int x = 0; x < s.m; ++x)
      if (eta_positive[static_cast<std::size_t>(x)]) mu += K * pk(x);
    for (int r = 0; r < nk[k]; ++r) muprod *= mu;
  }
  out.mu_product = muprod;
  out.diff = muprod - fact;

  // spanning site interval of the union of the A_k
  int alo = s.m, ahi = -1;
  for (const auto& g : groupsA)
    for (int x = 0; x < s.m; ++x)
      if (g[static_cast<std::size_t>(x)]) {
        alo = std::min(alo, x);
        ahi = std::max(ahi, x);
      }
  std::vector<std::uint8_t> Aspan(static_cast<std::size_t>(s.m), 0);
  for (int x = alo; x <= ahi; ++x) Aspan[static_cast<std::size_t>(x)] = 1;

  Eigen::VectorXd pspan = walk.set_probs(t, Aspan);
  double muA = 0.0;
  for (int x = 0; x < s.m; ++x)
    if (eta_positive[static_cast<std::size_t>(x)]) muA += K * pspan(x);
  FiniteKappaTau kt = kappa_tau_finite(kernel, t, Aspan, eta_positive);
  out.bound = static_cast<double>(K) * K * static_cast<double>(binomial_coeff(M, 2)) *
              std::pow(muA, M - 2) * (kt.kappa + kt.tau);
  return out;
}

// Product-measure sandwich: with chi = K 1_{supp nu},
//   -K^2 C(n,2) mu^chi(A)^{n-2} tau_t(supp nu, A)
//     <= (mu^nu(A))^n - E_nu[N^{(n)}(A^n)]
//     <= (mu^chi(A))^n - E_chi[N^{(n)}(A^n)].
struct ProductBoundResult {
  double diff_nu = 0.0;
  double diff_chi = 0.0;
  double lower = 0.0;
  bool pass(double tol) const { return diff_nu >= lower - tol && diff_nu <= diff_chi + tol; }
};

inline ProductBoundResult check_product_measure_bound(
    const SiteKernel& kernel, int n, int K,
    const std::vector<std::vector<double>>& site_pmfs,  // pmf over {0..K} per site
    const std::vector<std::uint8_t>& A, double t) {
  int m = kernel.size();
  if (site_pmfs.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("one pmf per site");
  TupleSpace s = TupleSpace::build(kernel, n, K);
  std::vector<double> f = indicator_power(s, A);
  Generator V = build_V(s);
  std::vector<double> vf = apply_semigroup(V, t / K, f, 1e-13);

  // falling moments E[(eta_v)_c] and means per site
  std::vector<std::vector<double>> fm(static_cast<std::size_t>(m),
                                      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  std::vector<std::vector<double>> fm_chi = fm;
  std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
  std::vector<std::uint8_t> support(static_cast<std::size_t>(m), 0);
  for (int v = 0; v < m; ++v) {
    const auto& pmf = site_pmfs[static_cast<std::size_t>(v)];
    for (int c = 0; c <= n; ++c) {
      double s1 = 0.0;
      for (int j = 0; j <= K; ++j)
        s1 += static_cast<double>(falling_factorial(j, c)) * pmf[static_cast<std::size_t>(j)];
      fm[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] = s1;
    }
    for (int j = 1; j <= K; ++j) {
      mean[static_cast<std::size_t>(v)] += j * pmf[static_cast<std::size_t>(j)];
      if (pmf[static_cast<std::size_t>(j)] > 0.0) support[static_cast<std::size_t>(v)] = 1;
    }
    for (int c = 0; c <= n; ++c)
      fm_chi[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] =
          support[static_cast<std::size_t>(v)] ? static_cast<double>(falling_factorial(K, c))
                                               : (c == 0 ? 1.0 : 0.0);
  }

  auto factorial_moment = [&](const std::vector<std::vector<double>>& weights) {
    double acc = 0.0;
    std::vector<int> tuple(static_cast<std::size_t>(n));
    for (long long idx : s.omega_list) {
      s.decode(idx, tuple.data());
      double w = product_falling_weight(tuple.data(), n, m, weights);
      if (w != 0.0) acc += w * vf[static_cast<std::size_t>(idx)];
    }
    return acc;
  };

  SingleWalk walk(kernel);
  Eigen::VectorXd pa = walk.set_probs(t, A);
  double mu_nu = 0.0, mu_chi = 0.0, tau = 0.0;
  Eigen::VectorXd pa_sq = pa;
  for (int v = 0; v < m; ++v) {
    mu_nu += mean[static_cast<std::size_t>(v)] * pa(v);
    if (support[static_cast<std::size_t>(v)]) {
      mu_chi += K * pa(v);
      tau += pa(v) * pa(v);
    }
  }

  ProductBoundResult out;
  out.diff_nu = std::pow(mu_nu, n) - factorial_moment(fm);
  out.diff_chi = std::pow(mu_chi, n) - factorial_moment(fm_chi);
  out.lower = -static_cast<double>(K) * K * static_cast<double>(binomial_coeff(n, 2)) *
              std::pow(mu_chi, n - 2) * tau;
  return out;
}

// Symmetric-pair summation identity: for alpha symmetric and vanishing on the
// diagonal (as p(x,x) = 0 in use) and any beta,
//   sum_{x in S^n} sum_{i<j} alpha(x_i,x_j) prod_{k != i,j} beta(x_k)
//     = C(n,2) (sum_{u != v} alpha(u,v)) (sum beta)^{n-2}.
struct Nto2Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass(double tol) const { return std::fabs(lhs - rhs) <= tol; }
};

inline Nto2Result check_nto2(const std::vector<std::vector<double>>& alpha,
                             const std::vector<double>& beta, int n) {
  int m = static_cast<int>(beta.size());
  if (alpha.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("alpha and beta must share the site set");
  for (int u = 0; u < m; ++u) {
    if (alpha[static_cast<std::size_t>(u)][static_cast<std::size_t>(u)] != 0.0)
      throw std::invalid_argument("alpha must vanish on the diagonal");
    for (int v = 0; v < m; ++v)
      if (alpha[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] !=
          alpha[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)])
        throw std::invalid_argument("alpha must be symmetric");
  }
  Nto2Result out;
  long long dim = 1;
  for (int i = 0; i < n; ++i) dim *= m;
  std::vector<int> tuple(static_cast<std::size_t>(n));
  for (long long idx = 0; idx < dim; ++idx) {
    long long r = idx;
    for (int i = n - 1; i >= 0; --i) {
      tuple[static_cast<std::size_t>(i)] = static_cast<int>(r % m);
      r /= m;
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double a = alpha[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])]
                        [static_cast<std::size_t>(tuple[static_cast<std::size_t>(j)])];
        if (a == 0.0) continue;
        double prod = 1.0;
        for (int k = 0; k < n; ++k)
          if (k != i && k != j) prod *= beta[static_cast<std::size_t>(tuple[static_cast<std::size_t>(k)])];
        out.lhs += a * prod;
      }
  }
  double asum = 0.0, bsum = 0.0;
  for (int u = 0; u < m; ++u) {
    bsum += beta[static_cast<std::size_t>(u)];
    for (int v = 0; v < m; ++v)
      if (u != v) asum += alpha[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
  }
  out.rhs = static_cast<double>(binomial_coeff(n, 2)) * asum * std::pow(bsum, n - 2);
  return out;
}

// Two-sided comparison behind the factorial bound: for f1 = 1_{A^n},
// f2 = K^{-n} h 1_{A^n} and g = 1_{B_1 x...x B_n},
//   0 <= <f1, U g> - <f2, V g>_Omega
//     <= sum_{Omega^1} g [U - V] f1 + sum_{(Omega^1)^c} g U f1.
struct SumSymmetryResult {
  double diff = 0.0;
  double bound = 0.0;
  bool pass(double tol) const { return diff >= -tol && diff <= bound + tol; }
};

inline SumSymmetryResult check_sumsymmetry(const TupleSpace& s,
                                           const std::vector<std::uint8_t>& A,
                                           const std::vector<std::vector<std::uint8_t>>& B,
                                           double semigroup_time) {
  std::vector<double> f1 = indicator_power(s, A);
  std::vector<double> g = indicator_product(s, B);
  Generator U = build_U(s), V = build_V(s);
  std::vector<double> ug = apply_semigroup(U, semigroup_time, g, 1e-13);
  std::vector<double> vg = apply_semigroup(V, semigroup_time, g, 1e-13);
  std::vector<double> uf = apply_semigroup(U, semigroup_time, f1, 1e-13);
  std::vector<double> vf = apply_semigroup(V, semigroup_time, f1, 1e-13);

  SumSymmetryResult out;
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  double kn = std::pow(static_cast<double>(s.K), s.n);
  for (long long idx = 0; idx < s.dim; ++idx) {
    s.decode(idx, tuple.data());
    out.diff += f1[static_cast<std::size_t>(idx)] * ug[static_cast<std::size_t>(idx)];
    if (s.in_omega[static_cast<std::size_t>(idx)]) {
      double f2 = f1[static_cast<std::size_t>(idx)] * h_count(tuple.data(), s.n, s.m, s.K) / kn;
      out.diff -= f2 * vg[static_cast<std::size_t>(idx)];
    }
    bool omega1 = true;
    for (int i = 0; i < s.n && omega1; ++i)
      for (int j = i + 1; j < s.n && omega1; ++j)
        omega1 = tuple[static_cast<std::size_t>(i)] != tuple[static_cast<std::size_t>(j)];
    double gv = g[static_cast<std::size_t>(idx)];
    if (gv != 0.0) {
      if (omega1)
        out.bound += gv * (uf[static_cast<std::size_t>(idx)] - vf[static_cast<std::size_t>(idx)]);
      else
        out.bound += gv * uf[static_cast<std::size_t>(idx)];
    }
  }
  return out;
}

// Partial-sum bounds through kappa/tau: with B containing every B_k,
//   sum_{Omega^1} 1_{B_1x..xB_n} [U(t/K)-V(t/K)] 1_{A^n} <= C(n,2) ip^{n-2} kappa_t(B,A)
//   sum_{(Omega^1)^c} 1_{B_1x..xB_n} U(t/K) 1_{A^n}      <= C(n,2) ip^{n-2} tau_t(B,A),
// where ip = <1_B, U_1^1(t) 1_A>.
struct KappaTauBoundsResult {
  double lhs_omega1 = 0.0, rhs_omega1 = 0.0;
  double lhs_compl = 0.0, rhs_compl = 0.0;
  bool pass(double tol) const {
    return lhs_omega1 <= rhs_omega1 + tol && lhs_compl <= rhs_compl + tol;
  }
};

inline KappaTauBoundsResult check_kappa_tau_bounds(const TupleSpace& s,
                                                   const std::vector<std::uint8_t>& A,
                                                   const std::vector<std::vector<std::uint8_t>>& Bk,
                                                   double t) {
  std::vector<std::uint8_t> B(static_cast<std::size_t>(s.m), 0);
  for (const auto& bk : Bk)
    for (int x = 0; x < s.m; ++x)
      if (bk[static_cast<std::size_t>(x)]) B[static_cast<std::size_t>(x)] = 1;

  std::vector<double> f = indicator_power(s, A);
  std::vector<double> g = indicator_product(s, Bk);
  Generator U = build_U(s), V = build_V(s);
  std::vector<double> uf = apply_semigroup(U, t / s.K, f, 1e-13);
  std::vector<double> vf = apply_semigroup(V, t / s.K, f, 1e-13);

  KappaTauBoundsResult out;
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx = 0; idx < s.dim; ++idx) {
    if (g[static_cast<std::size_t>(idx)] == 0.0) continue;
    s.decode(idx, tuple.data());
    bool omega1 = true;
    for (int i = 0; i < s.n && omega1; ++i)
      for (int j = i + 1; j < s.n && omega1; ++j)
        omega1 = tuple[static_cast<std::size_t>(i)] != tuple[static_cast<std::size_t>(j)];
    if (omega1)
      out.lhs_omega1 += uf[static_cast<std::size_t>(idx)] - vf[static_cast<std::size_t>(idx)];
    else
      out.lhs_compl += uf[static_cast<std::size_t>(idx)];
  }

  SingleWalk walk(*s.kernel);
  Eigen::VectorXd pa = walk.set_probs(t, A);
  double ip = 0.0;
  for (int x = 0; x < s.m; ++x)
    if (B[static_cast<std::size_t>(x)]) ip += pa(x);
  FiniteKappaTau kt = kappa_tau_finite(*s.kernel, t, B, A);
  double pre = static_cast<double>(binomial_coeff(s.n, 2)) * std::pow(ip, s.n - 2);
  out.rhs_omega1 = pre * kt.kappa;
  out.rhs_compl = pre * kt.tau;
  return out;
}

// Combined bound: for 0 <= h <= 1 with h == 1 on Omega^1,
//   0 <= sum_{A^n} U(t/K) g - sum_{Omega ∩ A^n} h V(t/K) g
//     <= C(n,2) ip^{n-2} (kappa_t(B,A) + tau_t(B,A)).
struct MainCorResult {
  double diff = 0.0;
  double bound = 0.0;
  bool pass(double tol) const { return diff >= -tol && diff <= bound + tol; }
};

inline MainCorResult check_maincor(const TupleSpace& s, const std::vector<std::uint8_t>& A,
                                   const std::vector<std::vector<std::uint8_t>>& Bk, double t) {
  std::vector<std::uint8_t> B(static_cast<std::size_t>(s.m), 0);
  for (const auto& bk : Bk)
    for (int x = 0; x < s.m; ++x)
      if (bk[static_cast<std::size_t>(x)]) B[static_cast<std::size_t>(x)] = 1;

  std::vector<double> g = indicator_product(s, Bk);
  Generator U = build_U(s), V = build_V(s);
  std::vector<double> ug = apply_semigroup(U, t / s.K, g, 1e-13);
  std::vector<double> vg = apply_semigroup(V, t / s.K, g, 1e-13);

  MainCorResult out;
  double kn = std::pow(static_cast<double>(s.K), s.n);
  std::vector<int> tuple(static_cast<std::size_t>(s.n));
  for (long long idx = 0; idx < s.dim; ++idx) {
    s.decode(idx, tuple.data());
    bool inAn = true;
    for (int i = 0; i < s.n && inAn; ++i)
      inAn = A[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])] != 0;
    if (!inAn) continue;
    out.diff += ug[static_cast<std::size_t>(idx)];
    if (s.in_omega[static_cast<std::size_t>(idx)]) {
      double h = h_count(tuple.data(), s.n, s.m, s.K) / kn;
      out.diff -= h * vg[static_cast<std::size_t>(idx)];
    }
  }

  SingleWalk walk(*s.kernel);
  Eigen::VectorXd pa = walk.set_probs(t, A);
  double ip = 0.0;
  for (int x = 0; x < s.m; ++x)
    if (B[static_cast<std::size_t>(x)]) ip += pa(x);
  FiniteKappaTau kt = kappa_tau_finite(*s.kernel, t, B, A);
  out.bound = static_cast<double>(binomial_coeff(s.n, 2)) * std::pow(ip, s.n - 2) *
              (kt.kappa + kt.tau);
  return out;
}

}  // namespace ksep::exact
