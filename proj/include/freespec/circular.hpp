#pragma once

// Free spectrahedra over the circular cone D = {a0 >= |(a1, a2)|}: P,Q
// decompositions, equality classification S_1(N) = D, the N3-shadow test for
// the largest system over D, and the regular-polygon LMIs whose level-1 set
// is D.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "freespec/cones.hpp"
#include "freespec/error.hpp"
#include "freespec/feasibility.hpp"
#include "freespec/linalg.hpp"
#include "freespec/opsys.hpp"

namespace freespec {

namespace circ {

inline HermitianMatrix m1() { return HermitianMatrix{{1.0, 0.0}, {0.0, -1.0}}; }
inline HermitianMatrix m2() { return HermitianMatrix{{0.0, 1.0}, {1.0, 0.0}}; }
inline HermitianMatrix m3() { return HermitianMatrix{{0.0, kI}, {-kI, 0.0}}; }
/// (I2, M1, M2): S of this tuple is the smallest system over D.
inline MatrixTuple disk_tuple() { return MatrixTuple{HermitianMatrix::identity(2), m1(), m2()}; }

}  // namespace circ

/// (I2, diag(0,1), [[0, 1/sqrt2], [1/sqrt2, 0]]): in the largest system over D
/// at level 2 but in no free spectrahedron whose level-1 set is D.
inline MatrixTuple witness_tuple() {
  const double h = 1.0 / std::sqrt(2.0);
  return MatrixTuple{HermitianMatrix::identity(2), HermitianMatrix{{0.0, 0.0}, {0.0, 1.0}},
                     HermitianMatrix{{0.0, h}, {h, 0.0}}};
}

namespace detail {

inline void require_circular_tuple(const MatrixTuple& n) {
  if (n.d() != 3) throw Error(ErrorCode::DimensionMismatch, "expected a 3-tuple (N0, N1, N2)");
}

/// Whether a solver verdict and the exact sweep may disagree: only when the
/// sweep minimum sits within the solver's resolution of the boundary.
inline bool sweep_is_decisive(const ThetaSweep& sweep) { return std::abs(sweep.min_value) > 1e-6 * sweep.scale; }

inline bool sweep_says_contained(const ThetaSweep& sweep, double tol) {
  return sweep.min_value >= -tol * sweep.scale;
}

}  // namespace detail

/// N0 = P*P + Q*Q, N1 = P*Q + Q*P, N2 = i(Q*P - P*Q), with P, Q in Mat_{r,n}.
struct PQDecomposition {
  CMatrix p;
  CMatrix q;
  Index r = 0;
  /// Largest relative Frobenius error of the three identities.
  double residual = 0.0;
};

inline double pq_residual(const MatrixTuple& n, const CMatrix& p, const CMatrix& q) {
  const CMatrix pp = p.adjoint() * p, qq = q.adjoint() * q, pq = p.adjoint() * q, qp = q.adjoint() * p;
  const CMatrix parts[3] = {pp + qq, pq + qp, kI * (qp - pq)};
  double worst = 0.0;
  for (Index i = 0; i < 3; ++i) {
    worst = std::max(worst, (parts[i] - n[i].mat()).norm() / std::max(1.0, n[i].frobenius()));
  }
  return worst;
}

/// Gram problem for G = [P|Q]*[P|Q]: blocks G11 + G22 = N0, G12 + G21 = N1, i(G21 - G12) = N2.
inline AffinePsdProblem pq_gram_problem(const MatrixTuple& n) {
  detail::require_circular_tuple(n);
  AffinePsdProblem p(2 * n.size());
  const HermitianMatrix i2 = HermitianMatrix::identity(2), x = circ::m2(), y = circ::m3();
  p.add_map_equality([&](const HermitianMatrix& b) { return kron(i2, b); }, n[0]);
  p.add_map_equality([&](const HermitianMatrix& b) { return kron(x, b); }, n[1]);
  p.add_map_equality([&](const HermitianMatrix& b) { return kron(y, b); }, n[2]);
  return p;
}

/// Existence of a P,Q decomposition is equivalent to D lying in S_1(N). The
/// solver verdict is cross-checked against the exact sweep; a disagreement
/// outside the boundary band throws SOLVER_INCONSISTENT. With a target rank,
/// a decomposition with r <= target_rank is sought; if none is found the
/// full-rank one is returned.
inline std::optional<PQDecomposition> pq_decompose(const MatrixTuple& n, std::optional<Index> target_rank = std::nullopt) {
  detail::require_circular_tuple(n);
  const AffinePsdProblem problem = pq_gram_problem(n);
  FeasibilityOutcome out = solve(problem);
  const ThetaSweep sweep = theta_sweep(n);
  if (detail::sweep_is_decisive(sweep) && out.feasible() != detail::sweep_says_contained(sweep, kDefaultPsdTol)) {
    throw Error(ErrorCode::SolverInconsistent, "P,Q feasibility disagrees with the circle sweep");
  }
  if (!out.feasible()) return std::nullopt;
  if (target_rank) {
    const FeasibilityOutcome low = solve_min_rank_heuristic(problem, std::clamp<Index>(*target_rank, 1, problem.n));
    if (low.feasible()) out = low;
  }
  const Index k = n.size();
  const EigenResult e = eigh(*out.certificate);
  const Index rank = std::max<Index>(1, numerical_rank(*out.certificate, 1e-9));
  CMatrix f(rank, 2 * k);
  for (Index j = 0; j < rank; ++j) {
    const Index col = 2 * k - 1 - j;
    f.row(j) = std::sqrt(std::max(0.0, e.values(col))) * e.vectors.col(col).adjoint();
  }
  PQDecomposition d;
  d.p = f.leftCols(k);
  d.q = f.rightCols(k);
  d.r = rank;
  d.residual = pq_residual(n, d.p, d.q);
  return d;
}

enum class EqualityClass { Equal, StrictlyLarger, NotContaining };

inline const char* to_string(EqualityClass c) {
  switch (c) {
    case EqualityClass::Equal: return "EQUAL";
    case EqualityClass::StrictlyLarger: return "STRICTLY_LARGER";
    case EqualityClass::NotContaining: return "NOT_CONTAINING";
  }
  return "?";
}

struct EqualityResult {
  EqualityClass cls = EqualityClass::NotContaining;
  /// NOT_CONTAINING: a direction whose ray of D leaves S_1(N). STRICTLY_LARGER:
  /// a boundary ray (1, cos, sin) of D interior to S_1(N).
  double theta = 0.0;
  /// Smallest eigenvalue of N0 + cos N1 + sin N2 at theta.
  double value = 0.0;
  double min_value = 0.0;
  bool continuum = false;
  int isolated_roots = 0;
};

/// S_1(N) versus D via the circle sweep. EQUAL when the sweep vanishes on the
/// whole circle (at least 95% of the grid within tolerance). At least n+1
/// isolated singular rays also force equality, which is then confirmed on a
/// finer re-sweep.
inline EqualityResult classify_equality(const MatrixTuple& n, double tol = kDefaultPsdTol) {
  detail::require_circular_tuple(n);
  auto analyse = [&](int grid) {
    EqualityResult res;
    const ThetaSweep sweep = theta_sweep(n, grid);
    const double band = tol * sweep.scale;
    res.min_value = sweep.min_value;
    if (sweep.min_value < -band) {
      res.cls = EqualityClass::NotContaining;
      res.theta = sweep.argmin;
      res.value = sweep.min_value;
      return res;
    }
    int near = 0;
    for (Index k = 0; k < sweep.grid_values.size(); ++k) near += sweep.grid_values(k) <= band;
    res.continuum = near >= 0.95 * static_cast<double>(sweep.grid_values.size());
    if (!res.continuum) {
      const double delta = 1e-4;
      for (const auto& [t, v] : sweep.minima) {
        if (std::abs(v) > band) continue;
        const double curvature = circle_pencil_min(n, t + delta) + circle_pencil_min(n, t - delta) - 2.0 * v;
        if (curvature > 0.0) ++res.isolated_roots;
      }
    }
    res.cls = res.continuum ? EqualityClass::Equal : EqualityClass::StrictlyLarger;
    Index best = 0;
    sweep.grid_values.maxCoeff(&best);
    res.theta = res.continuum ? sweep.argmin : 2.0 * std::numbers::pi * static_cast<double>(best) / grid;
    res.value = res.continuum ? sweep.min_value : sweep.grid_values(best);
    return res;
  };
  EqualityResult res = analyse(720);
  if (!res.continuum && res.cls != EqualityClass::NotContaining && res.isolated_roots >= n.size() + 1) {
    const EqualityResult fine = analyse(4 * 720);
    if (!fine.continuum) throw Error(ErrorCode::SolverInconsistent, "n+1 singular rays without equality");
    return fine;
  }
  return res;
}

/// Membership in the largest system over D: psd T of size 2n with
/// T = N0 (x) I + N1 (x) M1 + N2 (x) M2 + N3 (x) M3; N3 is returned as the
/// certificate. Cross-checked against the exact sweep.
inline Verdict shadow_member(const MatrixTuple& n) {
  detail::require_circular_tuple(n);
  const Index k = n.size();
  const HermitianMatrix sigma[3] = {HermitianMatrix::identity(2), circ::m1(), circ::m2()};
  AffinePsdProblem problem(2 * k);
  for (Index c = 0; c < 3; ++c) {
    // N_c = (1/2) tr_2(T (I (x) sigma_c)).
    problem.add_map_equality([&](const HermitianMatrix& b) { return kron(b, sigma[c]) * 0.5; }, n[c]);
  }
  const FeasibilityOutcome out = solve(problem);
  const ThetaSweep sweep = theta_sweep(n);
  if (detail::sweep_is_decisive(sweep) && out.feasible() != detail::sweep_says_contained(sweep, kDefaultPsdTol)) {
    throw Error(ErrorCode::SolverInconsistent, "shadow feasibility disagrees with the circle sweep");
  }
  Verdict v;
  v.certainty = Certainty::Numeric;
  v.tol = problem.tol;
  v.value = out.residual;
  v.angle = sweep.argmin;
  if (!out.feasible()) return v;
  const CMatrix& t = out.certificate->mat();
  CMatrix n3 = CMatrix::Zero(k, k);
  const CMatrix s3 = circ::m3().mat();
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      Complex acc = 0.0;
      for (Index p = 0; p < 2; ++p)
        for (Index q = 0; q < 2; ++q) acc += t(a * 2 + p, b * 2 + q) * s3(q, p);
      n3(a, b) = 0.5 * acc;
    }
  }
  const HermitianMatrix n3h(n3, assume_hermitian);
  // Independent validation of the certificate from the input data.
  const MatrixTuple full{n[0], n[1], n[2], n3h};
  const MatrixTuple paulis{sigma[0], sigma[1], sigma[2], circ::m3()};
  const Verdict check = detail::eigen_verdict(kron_pencil(full, paulis), problem.tol);
  v.holds = check.holds;
  v.certificate = n3h;
  return v;
}

/// x0 I_r + x1 L1 + x2 L2 from the facet forms of the regular polygon cone
/// with r rays on the boundary of D, and its compressions to size r-1.
struct PolygonLMI {
  int r = 0;
  /// Diagonals of L1 and L2: the x1- and x2-coefficients of the facet forms.
  RVector l1, l2;
  /// (I_{r-1} | 1) L_i (I_{r-1} | 1)*: diag(l_{i,1..r-1}) + l_{i,r} 1 1^T.
  HermitianMatrix n1_raw, n2_raw;
  /// V* L_i V for the isometry V = (I_{r-1}; 1^T) G^{-1/2}, G = I + 1 1^T.
  /// The x0-coefficient becomes I_{r-1}, and
  /// dh/dx0 = r det(x0 I + x1 N1 + x2 N2) for h the product of the facet forms.
  HermitianMatrix n1, n2;
  CMatrix isometry;

  MatrixTuple tuple() const { return MatrixTuple{HermitianMatrix::identity(r - 1), n1, n2}; }
  /// Diagonal LMI (I_r, L1, L2) whose S is the largest system over the polygon.
  MatrixTuple diagonal_tuple() const {
    return MatrixTuple{HermitianMatrix::identity(r), HermitianMatrix::diagonal(l1), HermitianMatrix::diagonal(l2)};
  }
};

inline PolygonLMI polygon_lmi(int r) {
  const ConeDescriptor cone = regular_polygon_cone(r);
  PolygonLMI out;
  out.r = r;
  out.l1.resize(r);
  out.l2.resize(r);
  for (int j = 0; j < r; ++j) {
    out.l1(j) = cone.facets()[static_cast<std::size_t>(j)](1);
    out.l2(j) = cone.facets()[static_cast<std::size_t>(j)](2);
  }
  const Index m = r - 1;
  CMatrix stack = CMatrix::Zero(r, m);
  stack.topRows(m) = CMatrix::Identity(m, m);
  stack.row(m).setOnes();
  auto compress = [&](const RVector& l, const CMatrix& v) {
    return HermitianMatrix(v.adjoint() * l.cast<Complex>().asDiagonal() * v, assume_hermitian);
  };
  out.n1_raw = compress(out.l1, stack);
  out.n2_raw = compress(out.l2, stack);
  const CMatrix g = stack.adjoint() * stack;
  const EigenResult eg = eigh(HermitianMatrix(g, assume_hermitian));
  const CMatrix g_inv_sqrt =
      eg.vectors * eg.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * eg.vectors.adjoint();
  out.isometry = stack * g_inv_sqrt;
  out.n1 = compress(out.l1, out.isometry);
  out.n2 = compress(out.l2, out.isometry);
  return out;
}

struct DerivativeCheck {
  /// max |dh/dx0 - r det(...)| over the grid, relative to r (|x| max_j |l_j|)^(r-1).
  double residual = 0.0;
  /// Distinct values lambda with dh/dx0 vanishing on lambda x0^2 = x1^2 + x2^2, ascending.
  std::vector<double> lambdas;
  /// Largest deviation of a lambda between sampled angles.
  double angle_spread = 0.0;
  /// Set for even r: the factorization into quadratic forms is not examined.
  bool factorization_skipped = false;
};

namespace detail {

/// dh/dx0 = sum_j prod_{k != j} l_k(x), each facet form having x0-coefficient 1.
inline double polygon_h_derivative(const PolygonLMI& p, double x0, double x1, double x2) {
  double total = 0.0;
  for (int j = 0; j < p.r; ++j) {
    double prod = 1.0;
    for (int k = 0; k < p.r; ++k) {
      if (k != j) prod *= x0 + p.l1(k) * x1 + p.l2(k) * x2;
    }
    total += prod;
  }
  return total;
}

/// Roots t of d/dt prod_j (t + a_j) for distinct a_j: one between each pair
/// of consecutive poles of sum_j 1 / (t + a_j), located by bisection.
inline std::vector<double> derivative_roots(std::vector<double> a) {
  std::vector<double> poles;
  for (double x : a) poles.push_back(-x);
  std::sort(poles.begin(), poles.end());
  std::vector<double> roots;
  auto g = [&](double t) {
    double s = 0.0;
    for (double p : poles) s += 1.0 / (t - p);
    return s;
  };
  for (std::size_t i = 0; i + 1 < poles.size(); ++i) {
    double lo = poles[i], hi = poles[i + 1];
    const double gap = hi - lo;
    lo += 1e-15 * std::max(1.0, std::abs(lo)) + 1e-14 * gap;
    hi -= 1e-15 * std::max(1.0, std::abs(hi)) + 1e-14 * gap;
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (g(mid) > 0 ? lo : hi) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

}  // namespace detail

/// Checks dh/dx0 = r det(x0 I + x1 N1 + x2 N2) on a grid^3 lattice in [-2, 2]^3.
/// For odd r also computes the values lambda with dh/dx0 vanishing at
/// x0^2 = 1/lambda on the unit circle x1^2 + x2^2 = 1, for several angles.
inline DerivativeCheck verify_derivative_identity(int r, int grid) {
  if (grid < 10) throw Error(ErrorCode::InvalidArgument, "grid must be at least 10");
  const PolygonLMI p = polygon_lmi(r);
  DerivativeCheck out;
  double lmax = 0.0;
  for (int j = 0; j < r; ++j) lmax = std::max(lmax, std::sqrt(1.0 + p.l1(j) * p.l1(j) + p.l2(j) * p.l2(j)));
  const CMatrix n1 = p.n1.mat(), n2 = p.n2.mat();
  const Index m = r - 1;
  for (int a = 0; a < grid; ++a) {
    const double x0 = -2.0 + 4.0 * a / (grid - 1);
    for (int b = 0; b < grid; ++b) {
      const double x1 = -2.0 + 4.0 * b / (grid - 1);
      for (int c = 0; c < grid; ++c) {
        const double x2 = -2.0 + 4.0 * c / (grid - 1);
        const double lhs = detail::polygon_h_derivative(p, x0, x1, x2);
        const CMatrix pencil = x0 * CMatrix::Identity(m, m) + x1 * n1 + x2 * n2;
        const double rhs = r * pencil.partialPivLu().determinant().real();
        const double norm = std::sqrt(x0 * x0 + x1 * x1 + x2 * x2);
        const double size = r * std::pow(std::max(norm * lmax, 1e-300), r - 1);
        out.residual = std::max(out.residual, std::abs(lhs - rhs) / std::max(size, 1e-300));
      }
    }
  }
  if (r % 2 == 0) {
    out.factorization_skipped = true;
    return out;
  }
  // Generic angles: no two facet forms agree on the ray direction.
  std::vector<std::vector<double>> per_angle;
  for (int k = 0; k < 7; ++k) {
    const double phi = 0.1234 + 0.7731 * k;
    std::vector<double> a;
    for (int j = 0; j < r; ++j) a.push_back(p.l1(j) * std::cos(phi) + p.l2(j) * std::sin(phi));
    std::vector<double> lam;
    for (double t : detail::derivative_roots(a)) lam.push_back(1.0 / (t * t));
    std::sort(lam.begin(), lam.end());
    per_angle.push_back(lam);
  }
  const std::vector<double>& first = per_angle.front();
  for (const auto& lam : per_angle) {
    for (std::size_t i = 0; i < lam.size(); ++i) out.angle_spread = std::max(out.angle_spread, std::abs(lam[i] - first[i]));
  }
  for (double v : first) {
    if (out.lambdas.empty() || std::abs(v - out.lambdas.back()) > 1e-6 * std::max(1.0, v)) out.lambdas.push_back(v);
  }
  return out;
}

}  // namespace freespec
