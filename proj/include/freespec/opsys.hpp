#pragma once

// Membership tests for the levels of operator systems on C^d: free
// spectrahedra S(M), free numerical ranges W(M), and the smallest and largest
// systems over a cone, plus the free-duality pairing.
//
// A level-s element is a MatrixTuple A = (A_1, ..., A_d) of s x s matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "freespec/cones.hpp"
#include "freespec/error.hpp"
#include "freespec/feasibility.hpp"
#include "freespec/linalg.hpp"

namespace freespec {

enum class Certainty {
  Exact,           // decided by an eigenvalue test
  Numeric,         // decided by the feasibility solver (re-validated certificate when true)
  CertifiedFalse,  // one-sided search found a refuting witness
  UnrefutedTrue,   // one-sided search found nothing
};

inline const char* to_string(Certainty c) {
  switch (c) {
    case Certainty::Exact: return "EXACT";
    case Certainty::Numeric: return "NUMERIC";
    case Certainty::CertifiedFalse: return "CERTIFIED_FALSE";
    case Certainty::UnrefutedTrue: return "UNREFUTED_TRUE";
  }
  return "?";
}

struct Verdict {
  bool holds = false;
  Certainty certainty = Certainty::Exact;
  /// Minimum eigenvalue for eigenvalue tests; certificate residual for solver tests.
  double value = 0.0;
  double tol = kDefaultPsdTol;
  /// Minimizing eigenvector or refuting vector, when the test produces one.
  CVector witness;
  /// Angle of the extremal direction for circular-cone sweeps.
  std::optional<double> angle;
  /// Sums-of-compressions certificate V_j (sum_j V_j* M_i V_j = target_i).
  std::vector<CMatrix> compressions;
  /// Solver certificate (Choi matrix or block-diagonal weights), when one exists.
  std::optional<HermitianMatrix> certificate;
};

class FreeSpectrahedron {
 public:
  explicit FreeSpectrahedron(MatrixTuple defining, std::optional<RVector> unit = std::nullopt)
      : defining_(std::move(defining)), unit_(std::move(unit)) {
    if (unit_) {
      if (unit_->size() != defining_.d()) throw Error(ErrorCode::DimensionMismatch, "unit vector length");
      const double err = (defining_.pencil(*unit_).mat() - CMatrix::Identity(defining_.size(), defining_.size())).norm();
      if (err > 1e-10) throw Error(ErrorCode::UnitViolation, "sum_i u_i M_i differs from the identity");
    }
  }

  const MatrixTuple& defining() const { return defining_; }
  const std::optional<RVector>& unit() const { return unit_; }
  Index d() const { return defining_.d(); }
  Index size() const { return defining_.size(); }

 private:
  MatrixTuple defining_;
  std::optional<RVector> unit_;
};

namespace detail {

inline Verdict eigen_verdict(const HermitianMatrix& m, double tol) {
  const EigenResult e = eigh(m);
  Verdict v;
  v.tol = tol;
  v.value = e.values(0);
  v.witness = e.vectors.col(0);
  v.holds = v.value >= -tol * std::max(1.0, spectral_norm(e));
  v.certainty = Certainty::Exact;
  return v;
}

inline double max_tuple_residual(const std::vector<CMatrix>& vs, const MatrixTuple& from, const MatrixTuple& to) {
  double worst = 0.0;
  for (Index i = 0; i < from.d(); ++i) {
    const double err = (apply_compressions(vs, from[i]).mat() - to[i].mat()).norm();
    worst = std::max(worst, err / std::max(1.0, to[i].frobenius()));
  }
  return worst;
}

}  // namespace detail

/// Is sum_i A_i (x) M_i psd? The certificate is the minimal eigenpair.
inline Verdict spectrahedron_member(const FreeSpectrahedron& s, const MatrixTuple& a, double tol = kDefaultPsdTol) {
  require_same_d(a, s.defining(), "spectrahedron_member");
  return detail::eigen_verdict(kron_pencil(a, s.defining()), tol);
}

/// Is sum_i B_i (x) M_i psd?
inline Verdict pairing_psd(const MatrixTuple& b, const MatrixTuple& m, double tol = kDefaultPsdTol) {
  require_same_d(b, m, "pairing_psd");
  return detail::eigen_verdict(kron_pencil(b, m), tol);
}

/// Free dual of S(M) is contained in S(M) iff sum_i M_i (x) M_i is psd.
inline Verdict self_dual_contained(const FreeSpectrahedron& s, double tol = kDefaultPsdTol) {
  return pairing_psd(s.defining(), s.defining(), tol);
}

/// Choi problem for a CP map Phi: Mat_{from.size} -> Mat_{to.size} with Phi(from_i) = to_i.
inline AffinePsdProblem compression_problem(const MatrixTuple& from, const MatrixTuple& to, double solver_tol = 1e-7) {
  require_same_d(from, to, "compression_problem");
  AffinePsdProblem p(from.size() * to.size());
  p.tol = solver_tol;
  for (Index i = 0; i < from.d(); ++i) p.add_choi_equality(from.size(), to.size(), from[i], to[i]);
  return p;
}

/// Searches for V_j with sum_j V_j* from_i V_j = to_i. On success the Kraus
/// factors of the Choi certificate are returned, validated by reconstruction.
inline Verdict sums_of_compressions(const MatrixTuple& from, const MatrixTuple& to, double residual_tol = 1e-6) {
  const AffinePsdProblem p = compression_problem(from, to);
  const FeasibilityOutcome out = solve(p);
  Verdict v;
  v.certainty = Certainty::Numeric;
  v.tol = residual_tol;
  v.value = out.residual;
  if (!out.feasible()) return v;
  v.certificate = out.certificate;
  const ChoiMap phi(*out.certificate, from.size(), to.size());
  auto factors = [&](double cut) {
    auto vs = phi.kraus(cut);
    // Zero map: only valid if every target vanishes.
    if (vs.empty()) vs.push_back(CMatrix::Zero(from.size(), to.size()));
    return vs;
  };
  // Fewest factors whose reconstruction is as good as keeping all of them.
  v.compressions = factors(1e-14);
  v.value = detail::max_tuple_residual(v.compressions, from, to);
  for (double cut : {1e-8, 1e-10, 1e-12}) {
    auto vs = factors(cut);
    const double res = detail::max_tuple_residual(vs, from, to);
    if (res <= std::max(2.0 * v.value, 1e-12)) {
      v.compressions = std::move(vs);
      v.value = res;
      break;
    }
  }
  v.holds = v.value <= residual_tol;
  return v;
}

/// B in W(generator): B = sum_j V_j* M V_j for some V_j.
inline Verdict numrange_member(const MatrixTuple& generator, const MatrixTuple& b) {
  require_same_d(generator, b, "numrange_member");
  return sums_of_compressions(generator, b);
}

struct ThetaSweep {
  double min_value = 0.0;
  double argmin = 0.0;
  /// max |eigenvalue| over the grid, used to scale tolerances.
  double scale = 1.0;
  RVector grid_values;
  /// Refined local minima (theta, value), ascending by value.
  std::vector<std::pair<double, double>> minima;
};

/// lambda_min(N0 + cos(theta) N1 + sin(theta) N2).
inline double circle_pencil_min(const MatrixTuple& n, double theta) {
  const CMatrix m = n[0].mat() + std::cos(theta) * n[1].mat() + std::sin(theta) * n[2].mat();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

/// Minimizes the smallest eigenvalue of N0 + cos(t) N1 + sin(t) N2 over the
/// circle: grid of `grid` points, then golden-section refinement of the three
/// lowest grid minima and of every grid minimum within 1e-6 of the lowest.
inline ThetaSweep theta_sweep(const MatrixTuple& n, int grid = 720) {
  if (n.d() != 3) throw Error(ErrorCode::DimensionMismatch, "circular sweep needs a 3-tuple");
  if (grid < 8) throw Error(ErrorCode::InvalidArgument, "sweep grid too small");
  const double two_pi = 2.0 * std::numbers::pi;
  const double h = two_pi / grid;
  ThetaSweep out;
  out.grid_values.resize(grid);
  for (int k = 0; k < grid; ++k) {
    const double t = k * h;
    const CMatrix m = n[0].mat() + std::cos(t) * n[1].mat() + std::sin(t) * n[2].mat();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
    const RVector& ev = solver.eigenvalues();
    out.grid_values(k) = ev(0);
    out.scale = std::max({out.scale, std::abs(ev(0)), std::abs(ev(ev.size() - 1))});
  }
  std::vector<int> local;
  for (int k = 0; k < grid; ++k) {
    const double v = out.grid_values(k);
    if (v <= out.grid_values((k + grid - 1) % grid) && v <= out.grid_values((k + 1) % grid)) local.push_back(k);
  }
  std::sort(local.begin(), local.end(), [&](int a, int b) { return out.grid_values(a) < out.grid_values(b); });
  const double lowest = out.grid_values(local.front());
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (std::size_t idx = 0; idx < local.size(); ++idx) {
    const int k = local[idx];
    if (idx >= 3 && out.grid_values(k) > lowest + 1e-6) break;
    double a = (k - 1) * h, b = (k + 1) * h;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = circle_pencil_min(n, c), fd = circle_pencil_min(n, d);
    while (b - a > 1e-11) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = circle_pencil_min(n, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = circle_pencil_min(n, d);
      }
    }
    double t = 0.5 * (a + b);
    double ft = circle_pencil_min(n, t);
    if (out.grid_values(k) < ft) {
      t = k * h;
      ft = out.grid_values(k);
    }
    t = std::fmod(t + two_pi, two_pi);
    out.minima.emplace_back(t, ft);
  }
  std::sort(out.minima.begin(), out.minima.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
  out.min_value = out.minima.front().second;
  out.argmin = out.minima.front().first;
  return out;
}

namespace detail {

/// sum_i A_i (x) basis_i for a tuple in the real coordinates of Her_m.
inline HermitianMatrix psd_coordinates_to_bipartite(const MatrixTuple& a, Index m) {
  if (a.d() != m * m) throw Error(ErrorCode::DimensionMismatch, "tuple length must be m^2 for a psd cone");
  const auto basis = hermitian_basis(m);
  CMatrix acc = CMatrix::Zero(a.size() * m, a.size() * m);
  for (Index i = 0; i < a.d(); ++i) acc += kron(a[i].mat(), basis[static_cast<std::size_t>(i)].mat());
  return HermitianMatrix(acc, assume_hermitian);
}

/// Inverse of psd_coordinates_to_bipartite: A_i[p, q] = tr(B^{(pq)} basis_i).
inline MatrixTuple bipartite_to_psd_coordinates(const HermitianMatrix& b, Index m) {
  if (m < 1 || b.dim() % m != 0) throw Error(ErrorCode::DimensionMismatch, "bipartite size is not a multiple of m");
  const Index s = b.dim() / m;
  std::vector<HermitianMatrix> out;
  for (const auto& e : hermitian_basis(m)) {
    CMatrix a(s, s);
    for (Index p = 0; p < s; ++p) {
      for (Index q = 0; q < s; ++q) a(p, q) = (b.mat().block(p * m, q * m, m, m) * e.mat()).trace();
    }
    out.emplace_back(a, assume_hermitian);
  }
  return MatrixTuple(std::move(out));
}

/// (v (x) I_m)* B (v (x) I_m).
inline HermitianMatrix block_form(const HermitianMatrix& b, const CVector& v, Index m) {
  const Index s = v.size();
  CMatrix out = CMatrix::Zero(m, m);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) out += std::conj(v(i)) * v(j) * b.mat().block(i * m, j * m, m, m);
  }
  return HermitianMatrix(out, assume_hermitian);
}

struct BlockPositivitySearch {
  double min_value = std::numeric_limits<double>::infinity();
  CVector argmin;
};

/// Multistart Riemannian gradient descent of v -> lambda_min(block_form(B, v)) on the unit sphere.
inline BlockPositivitySearch search_block_positivity(const HermitianMatrix& b, Index s, Index m, int random_starts = 24) {
  BlockPositivitySearch best;
  std::mt19937_64 rng(0xb10cULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CVector> starts;
  for (Index i = 0; i < s; ++i) starts.push_back(CVector::Unit(s, i));
  for (int k = 0; k < random_starts; ++k) {
    CVector v(s);
    for (Index i = 0; i < s; ++i) v(i) = Complex(normal(rng), normal(rng));
    starts.push_back(v.normalized());
  }
  auto objective = [&](const CVector& v, CVector* grad) {
    const EigenResult e = eigh(block_form(b, v, m));
    if (grad) {
      const CVector w = e.vectors.col(0);
      CVector g = CVector::Zero(s);
      for (Index i = 0; i < s; ++i) {
        for (Index j = 0; j < s; ++j) g(i) += w.dot(b.mat().block(i * m, j * m, m, m) * w) * v(j);
      }
      *grad = g - v * v.dot(g).real();
    }
    return e.values(0);
  };
  for (CVector v : starts) {
    CVector g;
    double f = objective(v, &g);
    double step = 0.5;
    for (int it = 0; it < 300 && g.norm() > 1e-12; ++it) {
      bool moved = false;
      while (step > 1e-14) {
        const CVector trial = (v - step * g).normalized();
        const double ft = objective(trial, nullptr);
        if (ft < f - 1e-4 * step * g.squaredNorm()) {
          v = trial;
          f = objective(v, &g);
          step *= 2.0;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f < best.min_value) {
      best.min_value = f;
      best.argmin = v;
    }
  }
  return best;
}

}  // namespace detail

/// A in C(cone)^lrg: every compression (v* A_1 v, ..., v* A_d v) lies in the cone.
///
/// POLYHEDRAL and CIRCULAR are decided exactly (facet LMIs; the circle sweep
/// via self-duality of D). PSD is block-positivity, which is only refuted:
/// a negative value found by the search yields CERTIFIED_FALSE with the
/// refuting vector, otherwise the verdict is UNREFUTED_TRUE.
inline Verdict largest_member(const ConeDescriptor& cone, const MatrixTuple& a, double tol = kDefaultPsdTol) {
  if (cone.d() != a.d()) throw Error(ErrorCode::DimensionMismatch, "largest_member: cone and tuple dimensions differ");
  Verdict v;
  v.tol = tol;
  switch (cone.kind()) {
    case ConeKind::Polyhedral: {
      v.holds = true;
      v.value = std::numeric_limits<double>::infinity();
      for (const auto& f : cone.facets()) {
        const Verdict facet = detail::eigen_verdict(a.pencil(f / f.norm()), tol);
        if (facet.value < v.value) {
          v.value = facet.value;
          v.witness = facet.witness;
        }
        v.holds = v.holds && facet.holds;
      }
      v.certainty = Certainty::Exact;
      return v;
    }
    case ConeKind::Circular: {
      const ThetaSweep sweep = theta_sweep(a);
      v.value = sweep.min_value;
      v.angle = sweep.argmin;
      v.holds = sweep.min_value >= -tol * sweep.scale;
      v.certainty = Certainty::Exact;
      return v;
    }
    case ConeKind::Psd: {
      const Index m = cone.psd_side();
      const HermitianMatrix b = detail::psd_coordinates_to_bipartite(a, m);
      const auto search = detail::search_block_positivity(b, a.size(), m);
      v.value = search.min_value;
      v.witness = search.argmin;
      v.holds = search.min_value >= -tol * std::max(1.0, spectral_norm(b));
      v.certainty = v.holds ? Certainty::UnrefutedTrue : Certainty::CertifiedFalse;
      return v;
    }
  }
  return v;
}

/// A in C(cone)^sml. CIRCULAR: the LMI A0 (x) I2 + A1 (x) M1 + A2 (x) M2 >= 0.
/// POLYHEDRAL: psd P_k with A_i = sum_k (g_k)_i P_k over the generators g_k,
/// found by the feasibility solver; the certificate is blockdiag(P_1, ..., P_m).
inline Verdict smallest_member(const ConeDescriptor& cone, const MatrixTuple& a, double tol = kDefaultPsdTol) {
  if (cone.d() != a.d()) throw Error(ErrorCode::DimensionMismatch, "smallest_member: cone and tuple dimensions differ");
  switch (cone.kind()) {
    case ConeKind::Circular: {
      const MatrixTuple disk{HermitianMatrix::identity(2), HermitianMatrix{{1.0, 0.0}, {0.0, -1.0}},
                             HermitianMatrix{{0.0, 1.0}, {1.0, 0.0}}};
      Verdict v = detail::eigen_verdict(kron_pencil(a, disk), tol);
      return v;
    }
    case ConeKind::Polyhedral: {
      const auto& gens = cone.generators();
      const Index m = static_cast<Index>(gens.size());
      const Index s = a.size();
      AffinePsdProblem p(m * s);
      for (Index i = 0; i < a.d(); ++i) {
        p.add_map_equality(
            [&](const HermitianMatrix& b) {
              CMatrix c = CMatrix::Zero(m * s, m * s);
              for (Index k = 0; k < m; ++k) c.block(k * s, k * s, s, s) = gens[static_cast<std::size_t>(k)](i) * b.mat();
              return HermitianMatrix(c, assume_hermitian);
            },
            a[i]);
      }
      const FeasibilityOutcome out = solve(p);
      Verdict v;
      v.tol = tol;
      v.certainty = Certainty::Numeric;
      v.value = out.residual;
      v.holds = out.feasible();
      if (out.feasible()) {
        // Off-diagonal blocks play no role; keep only the weights P_k.
        CMatrix blocks = CMatrix::Zero(m * s, m * s);
        for (Index k = 0; k < m; ++k) blocks.block(k * s, k * s, s, s) = out.certificate->mat().block(k * s, k * s, s, s);
        v.certificate = HermitianMatrix(blocks, assume_hermitian);
      }
      return v;
    }
    case ConeKind::Psd:
      throw Error(ErrorCode::SeparabilityUndecidableHere, "membership in the smallest system over a psd cone is separability");
  }
  return {};
}

}  // namespace freespec
