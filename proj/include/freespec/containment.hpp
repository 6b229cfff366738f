#pragma once

// Free-spectrahedron containment S(M) in S(N): decided through a CP map with
// Phi(M_i) = N_i, whose Kraus factors are the compressions V_j with
// sum_j V_j* M_i V_j = N_i. The same certificate shows W(N) in W(M).

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "freespec/error.hpp"
#include "freespec/feasibility.hpp"
#include "freespec/linalg.hpp"
#include "freespec/opsys.hpp"

namespace freespec {

/// A level-1 point u with sum_i u_i M_i > 0. `exact` when the sum is the identity.
struct UnitPoint {
  RVector u;
  bool exact = false;
  /// lambda_min(sum_i u_i M_i) for |u| = 1 (1 for an exact unit).
  double margin = 0.0;
};

namespace detail {

inline double tuple_scale(const MatrixTuple& m) {
  double s = 0.0;
  for (const auto& mi : m) s = std::max(s, spectral_norm(mi));
  return std::max(s, 1e-300);
}

inline RVector level_one_gradient(const MatrixTuple& m, const CVector& w) {
  RVector g(m.d());
  for (Index i = 0; i < m.d(); ++i) g(i) = w.dot(m[i].mat() * w).real();
  return g;
}

}  // namespace detail

/// Finds an exact unit (least squares on sum_i u_i M_i = I) or else a strictly
/// feasible level-1 point by supergradient ascent of u -> lambda_min(sum u_i M_i)
/// on the unit sphere. Returns none when S_1(M) shows no interior.
inline std::optional<UnitPoint> find_unit(const MatrixTuple& m) {
  const Index n = m.size();
  RMatrix a(2 * n * n, m.d());
  for (Index i = 0; i < m.d(); ++i) {
    for (Index p = 0; p < n; ++p) {
      for (Index q = 0; q < n; ++q) {
        a(p * n + q, i) = m[i](p, q).real();
        a(n * n + p * n + q, i) = m[i](p, q).imag();
      }
    }
  }
  RVector rhs = RVector::Zero(2 * n * n);
  for (Index k = 0; k < n; ++k) rhs(k * n + k) = 1.0;
  const RVector u = a.completeOrthogonalDecomposition().solve(rhs);
  if ((m.pencil(u).mat() - CMatrix::Identity(n, n)).norm() <= 1e-10) return UnitPoint{u, true, 1.0};

  const double scale = detail::tuple_scale(m);
  std::vector<RVector> starts;
  if (u.norm() > 0) starts.push_back(u.normalized());
  for (Index i = 0; i < m.d(); ++i) {
    starts.push_back(RVector::Unit(m.d(), i));
    starts.push_back(-RVector::Unit(m.d(), i));
  }
  std::mt19937_64 rng(0x0417ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 16; ++k) {
    RVector v(m.d());
    for (Index i = 0; i < m.d(); ++i) v(i) = normal(rng);
    starts.push_back(v.normalized());
  }
  UnitPoint best;
  best.margin = -std::numeric_limits<double>::infinity();
  for (RVector v : starts) {
    for (int it = 0; it < 400; ++it) {
      const EigenResult e = eigh(m.pencil(v));
      if (e.values(0) > best.margin) {
        best.margin = e.values(0);
        best.u = v;
      }
      RVector g = detail::level_one_gradient(m, e.vectors.col(0));
      g -= v * v.dot(g);
      if (g.norm() < 1e-14 * scale) break;
      v = (v + (0.5 / std::sqrt(1.0 + it)) * g / g.norm()).normalized();
    }
  }
  if (best.margin > 1e-9 * scale) return best;
  return std::nullopt;
}

/// Searches a in S_1(M) \ S_1(N): rays from an interior point of S_1(M) over a
/// direction grid, each cut where it leaves S_1(M) by bisection. Returns a
/// point verified on both sides, or none.
inline std::optional<RVector> level1_counterexample(const MatrixTuple& m, const MatrixTuple& n,
                                                    double tol = kDefaultPsdTol) {
  require_same_d(m, n, "level1_counterexample");
  const auto unit = find_unit(m);
  if (!unit) return std::nullopt;
  const Index d = m.d();
  auto lmin = [](const MatrixTuple& t, const RVector& a) { return min_eigenvalue(t.pencil(a)); };
  auto verified = [&](const RVector& a) {
    const double sa = std::max(1.0, a.norm());
    return lmin(m, a) >= -tol * sa * detail::tuple_scale(m) && lmin(n, a) < -1e3 * tol * sa * detail::tuple_scale(n);
  };
  const RVector u = unit->u;
  if (verified(u)) return u;

  std::vector<RVector> dirs;
  if (d == 1) {
    dirs = {RVector::Ones(1), -RVector::Ones(1)};
  } else if (d == 2) {
    for (int k = 0; k < 720; ++k) {
      const double t = 2.0 * std::numbers::pi * k / 720;
      dirs.push_back((RVector(2) << std::cos(t), std::sin(t)).finished());
    }
  } else if (d == 3) {
    // Fibonacci sphere.
    const int count = 4000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double rho = std::sqrt(1.0 - z * z);
      dirs.push_back((RVector(3) << rho * std::cos(golden * k), rho * std::sin(golden * k), z).finished());
    }
  } else {
    std::mt19937_64 rng(0xd12ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < 8000; ++k) {
      RVector v(d);
      for (Index i = 0; i < d; ++i) v(i) = normal(rng);
      dirs.push_back(v.normalized());
    }
  }

  const double big = 1e3;
  for (const RVector& w : dirs) {
    double lo = 0.0, hi = big;
    if (lmin(m, u + hi * w) >= 0.0) {
      if (verified(u + hi * w)) return RVector(u + hi * w);
      continue;
    }
    for (int it = 0; it < 80 && hi - lo > 1e-13 * big; ++it) {
      const double mid = 0.5 * (lo + hi);
      (lmin(m, u + mid * w) >= 0.0 ? lo : hi) = mid;
    }
    const RVector a = u + lo * w;
    if (verified(a)) return a;
  }
  return std::nullopt;
}

enum class ContainmentStatus { Feasible, Refuted, UndecidedNumeric };

inline const char* to_string(ContainmentStatus s) {
  switch (s) {
    case ContainmentStatus::Feasible: return "FEASIBLE";
    case ContainmentStatus::Refuted: return "REFUTED";
    case ContainmentStatus::UndecidedNumeric: return "UNDECIDED_NUMERIC";
  }
  return "?";
}

struct ContainmentResult {
  ContainmentStatus status = ContainmentStatus::UndecidedNumeric;
  /// N_i = sum_j V_j* M_i V_j, one V_j per nonzero eigenvalue of the Choi matrix.
  std::vector<CMatrix> compressions;
  /// max_i |sum_j V_j* M_i V_j - N_i|_F / max(1, |N_i|_F); solver residual otherwise.
  double residual = std::numeric_limits<double>::infinity();
  /// Level-1 point of S(M) that is not in S(N).
  std::optional<RVector> counterexample;
  /// Higher-level element of S(M) that is not in S(N).
  std::optional<MatrixTuple> separating_element;
  /// Interior point used to establish properness of S(M).
  UnitPoint normalization;

  bool feasible() const { return status == ContainmentStatus::Feasible; }
  /// S(M) is contained in S(N).
  bool spectrahedra_contained() const { return feasible(); }
  /// W(N) is contained in W(M): equivalent to the spectrahedron reading.
  bool numerical_ranges_reversed() const { return feasible(); }
};

namespace detail {

/// Boundary points of S_s(M) from random tuples shifted along the interior
/// point, tested against S_s(N).
inline std::optional<MatrixTuple> sampled_separation(const MatrixTuple& m, const MatrixTuple& n, const RVector& u,
                                                     double tol) {
  std::mt19937_64 rng(0x5e9aULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const HermitianMatrix lu = m.pencil(u);
  const EigenResult eu = eigh(lu);
  const CMatrix lu_inv_sqrt = eu.vectors * eu.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * eu.vectors.adjoint();
  for (Index s : {2, 3}) {
    const CMatrix k = kron(CMatrix::Identity(s, s), lu_inv_sqrt);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<HermitianMatrix> as;
      for (Index i = 0; i < m.d(); ++i) {
        CMatrix g(s, s);
        for (Index p = 0; p < s; ++p)
          for (Index q = 0; q < s; ++q) g(p, q) = Complex(normal(rng), normal(rng));
        as.emplace_back(0.5 * (g + g.adjoint()), assume_hermitian);
      }
      MatrixTuple a(std::move(as));
      // Smallest c with sum (A_i + c u_i I) (x) M_i >= 0.
      const HermitianMatrix la = kron_pencil(a, m);
      const double c = -min_eigenvalue(HermitianMatrix(k * la.mat() * k, assume_hermitian));
      std::vector<HermitianMatrix> shifted(a.begin(), a.end());
      for (Index i = 0; i < m.d(); ++i) shifted[static_cast<std::size_t>(i)] += HermitianMatrix::identity(s) * (c * u(i));
      const MatrixTuple b(std::move(shifted));
      const double scale = std::max(1.0, tuple_scale(b));
      if (min_eigenvalue(kron_pencil(b, m)) >= -tol * scale * tuple_scale(m) &&
          min_eigenvalue(kron_pencil(b, n)) < -1e3 * tol * scale * tuple_scale(n)) {
        return b;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Decides S(M) in S(N) by the Choi feasibility problem Phi(M_i) = N_i.
/// A numeric failure is followed by a refutation search; without one the
/// status is UNDECIDED_NUMERIC.
inline ContainmentResult contains(const MatrixTuple& m, const MatrixTuple& n, double tol = kDefaultPsdTol) {
  require_same_d(m, n, "contains");
  const auto unit = find_unit(m);
  if (!unit) throw Error(ErrorCode::UnitMissing, "S_1 of the left-hand tuple has no interior point");
  ContainmentResult out;
  out.normalization = *unit;
  const Verdict v = sums_of_compressions(m, n);
  out.residual = v.value;
  if (v.holds) {
    out.status = ContainmentStatus::Feasible;
    out.compressions = v.compressions;
    return out;
  }
  out.counterexample = level1_counterexample(m, n, tol);
  if (!out.counterexample) out.separating_element = detail::sampled_separation(m, n, unit->u, tol);
  out.status = (out.counterexample || out.separating_element) ? ContainmentStatus::Refuted
                                                              : ContainmentStatus::UndecidedNumeric;
  return out;
}

/// Certificate for S(M) in S(K) from S(M) in S(N) (V_j) and S(N) in S(K) (W_k): {V_j W_k}.
inline std::vector<CMatrix> compose(const std::vector<CMatrix>& first, const std::vector<CMatrix>& second) {
  std::vector<CMatrix> out;
  for (const auto& v : first) {
    for (const auto& w : second) {
      if (v.cols() != w.rows()) throw Error(ErrorCode::DimensionMismatch, "compose: inner sizes differ");
      out.push_back(v * w);
    }
  }
  return out;
}

}  // namespace freespec
