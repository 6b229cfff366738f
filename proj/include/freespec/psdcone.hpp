#pragma once

// The psd cone: *-linear maps Mat_d -> Mat_r defining P_d, the operator
// systems Psd_d and Psd_d^Gamma, classification of unital *-isometries as
// easy (identity or transpose corner) or not, and the level-2 affine section
// A(x, y) used to compare the three systems.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "freespec/error.hpp"
#include "freespec/feasibility.hpp"
#include "freespec/linalg.hpp"

namespace freespec {

/// A *-linear map Mat_d -> Mat_r through its Choi matrix sum_ij E_ij (x) phi(E_ij).
class StarLinearMap {
 public:
  explicit StarLinearMap(ChoiMap map) : map_(std::move(map)) {
    const CMatrix one = map_(CMatrix::Identity(d(), d()));
    unital_ = (one - CMatrix::Identity(r(), r())).norm() <= 1e-9;
  }

  static StarLinearMap from_function(Index d, Index r, const std::function<CMatrix(const CMatrix&)>& phi) {
    return StarLinearMap(ChoiMap::from_map(d, r, phi));
  }

  Index d() const { return map_.in_dim(); }
  Index r() const { return map_.out_dim(); }
  bool unital() const { return unital_; }
  const ChoiMap& choi() const { return map_; }

  CMatrix operator()(const CMatrix& a) const { return map_(a); }
  HermitianMatrix operator()(const HermitianMatrix& a) const { return map_.apply(a); }

  /// (id_s (x) phi)(X) for X in Mat_s (x) Mat_d, the level index coarse.
  HermitianMatrix ampliation(const HermitianMatrix& x, Index s) const {
    if (x.dim() != s * d()) throw Error(ErrorCode::DimensionMismatch, "ampliation: expected size s * d");
    CMatrix out(s * r(), s * r());
    for (Index p = 0; p < s; ++p) {
      for (Index q = 0; q < s; ++q) out.block(p * r(), q * r(), r(), r()) = map_(x.mat().block(p * d(), q * d(), d(), d()));
    }
    return HermitianMatrix(out, assume_hermitian);
  }

 private:
  ChoiMap map_;
  bool unital_ = false;
};

/// X in Mat_s (x) Mat_d lies in Psd_{d,s} (X >= 0) or, with gamma, in
/// Psd^Gamma_{d,s} (partial transpose >= 0).
inline bool psd_member(const HermitianMatrix& x, Index s, Index d, bool gamma, double tol = kDefaultPsdTol) {
  if (x.dim() != s * d) throw Error(ErrorCode::DimensionMismatch, "psd_member: expected size s * d");
  return is_psd(gamma ? partial_transpose(x, s, d) : x, tol);
}

/// [[a, b^t], [c, B]] -> [[a, b^t/sqrt2, c^t/sqrt2], [c/sqrt2, B, 0], [b/sqrt2, 0, B^t]]:
/// a unital *-isometry Mat_d -> Mat_{2d-1} that is not easy.
inline StarLinearMap example_phi(Index d) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "example_phi needs d >= 2");
  const Index m = d - 1;
  const double h = 1.0 / std::sqrt(2.0);
  return StarLinearMap::from_function(d, 2 * d - 1, [=](const CMatrix& a) {
    CMatrix out = CMatrix::Zero(2 * d - 1, 2 * d - 1);
    const CMatrix b = a.block(0, 1, 1, m).transpose();
    const CMatrix c = a.block(1, 0, m, 1);
    const CMatrix bb = a.bottomRightCorner(m, m);
    out(0, 0) = a(0, 0);
    out.block(0, 1, 1, m) = h * b.transpose();
    out.block(0, d, 1, m) = h * c.transpose();
    out.block(1, 0, m, 1) = h * c;
    out.block(1, 1, m, m) = bb;
    out.block(d, 0, m, 1) = h * b;
    out.block(d, d, m, m) = bb.transpose();
    return out;
  });
}

enum class IsometryClass { EasyIdentity, EasyTranspose, NotEasy, Undecided };

inline const char* to_string(IsometryClass c) {
  switch (c) {
    case IsometryClass::EasyIdentity: return "EASY_IDENTITY";
    case IsometryClass::EasyTranspose: return "EASY_TRANSPOSE";
    case IsometryClass::NotEasy: return "NOT_EASY";
    case IsometryClass::Undecided: return "UNDECIDED";
  }
  return "?";
}

struct IsometryResult {
  IsometryClass cls = IsometryClass::Undecided;
  /// EASY_*: U* phi(A) U = A (+) psi(A), or A^T (+) psi(A).
  CMatrix u;
  std::optional<StarLinearMap> psi;
  /// Largest deviation from the block form over the matrix units.
  double block_residual = 0.0;
  /// Stage-1 residual of the CP left inverse (identity, transpose).
  double left_inverse_residual[2] = {0.0, 0.0};
  /// NOT_EASY: a level-2 element of the free spectrahedron of phi outside
  /// Psd_{d,2} and Psd^Gamma_{d,2}.
  std::optional<HermitianMatrix> refutation;
};

namespace detail {

inline CMatrix matrix_unit(Index n, Index i, Index j) {
  CMatrix e = CMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

/// Spot check of A >= 0 <=> phi(A) >= 0 on random rank-one psd matrices and on
/// matrices with a single negative eigenvalue.
inline bool positivity_equivalence_holds(const StarLinearMap& phi, int samples = 60, std::uint64_t seed = 0x150ULL) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = phi.d();
  for (int k = 0; k < samples; ++k) {
    CMatrix g(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) g(i, j) = Complex(normal(rng), normal(rng));
    Eigen::HouseholderQR<CMatrix> qr(g);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
    RVector lam(d);
    for (Index i = 0; i < d; ++i) lam(i) = std::abs(normal(rng)) + 0.1;
    // Positive semidefinite, rank deficient: boundary of P_d.
    lam(0) = 0.0;
    const HermitianMatrix pos(CMatrix(q * lam.cast<Complex>().asDiagonal() * q.adjoint()), assume_hermitian);
    if (!is_psd(phi(pos), 1e-9)) return false;
    lam(0) = -0.05;
    const HermitianMatrix neg(CMatrix(q * lam.cast<Complex>().asDiagonal() * q.adjoint()), assume_hermitian);
    if (is_psd(phi(neg), 1e-9)) return false;
  }
  return true;
}

/// Stage 1: a CP map Psi: Mat_r -> Mat_d with Psi(phi(H)) = H (or H^T) on a
/// basis of Her_d.
inline FeasibilityOutcome cp_left_inverse(const StarLinearMap& phi, bool transpose) {
  AffinePsdProblem p(phi.r() * phi.d());
  for (const auto& h : hermitian_basis(phi.d())) {
    p.add_choi_equality(phi.r(), phi.d(), phi(h), transpose ? h.transpose() : h);
  }
  return solve(p);
}

/// Stage 2: unit vectors h_1..h_d with phi(E_ij) h_s = delta_js h_i (identity)
/// or delta_is h_j (transpose). With h_i = phi(E_i1) h_1 (resp. phi(E_1i) h_1)
/// every relation is linear in h_1, so h_1 ranges over the null space of the
/// stacked relations intersected with the fixed space of phi(E_11).
inline std::optional<CMatrix> easy_vectors(const StarLinearMap& phi, bool transpose) {
  const Index d = phi.d(), r = phi.r();
  std::vector<CMatrix> e(static_cast<std::size_t>(d * d));
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) e[static_cast<std::size_t>(i * d + j)] = phi(matrix_unit(d, i, j));
  auto img = [&](Index i, Index j) -> const CMatrix& { return e[static_cast<std::size_t>(i * d + j)]; };
  // h_i = lift(i) h_1.
  auto lift = [&](Index i) -> const CMatrix& { return transpose ? img(0, i) : img(i, 0); };
  const Index blocks = d * d * d + 1;
  CMatrix k = CMatrix::Zero(blocks * r, r);
  Index row = 0;
  k.block(row, 0, r, r) = img(0, 0) - CMatrix::Identity(r, r);
  row += r;
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      for (Index s = 0; s < d; ++s) {
        CMatrix rel = img(i, j) * lift(s);
        if (!transpose && j == s) rel -= lift(i);
        if (transpose && i == s) rel -= lift(j);
        k.block(row, 0, r, r) = rel;
        row += r;
      }
    }
  }
  Eigen::JacobiSVD<CMatrix> svd(k, Eigen::ComputeFullV);
  const RVector sv = svd.singularValues();
  if (sv(sv.size() - 1) > 1e-8 * std::max(1.0, sv(0))) return std::nullopt;
  const CVector h1 = svd.matrixV().col(r - 1);
  CMatrix h(r, d);
  for (Index i = 0; i < d; ++i) h.col(i) = lift(i) * h1;
  return h;
}

/// A(x, y) in Mat_2 (x) Mat_d: the d x d block matrix of 2 x 2 blocks with
/// corner blocks diag(3, 2) and I_2 and off-diagonal block [[0, x], [y, 0]].
inline HermitianMatrix section_element(Index d, Complex x, Complex y) {
  if (d < 2) throw Error(ErrorCode::TemplateMismatch, "the section template needs d >= 2");
  CMatrix blocks[2][2];
  blocks[0][0] = CMatrix::Zero(2, 2);
  blocks[0][0](0, 0) = 3.0;
  blocks[0][0](1, 1) = 2.0;
  blocks[0][1] = CMatrix::Zero(2, 2);
  blocks[0][1](0, 1) = x;
  blocks[0][1](1, 0) = y;
  blocks[1][0] = blocks[0][1].adjoint();
  blocks[1][1] = CMatrix::Identity(2, 2);
  // Reorder to the level-coarse convention X[p d + i, q d + j] = A_ij[p, q].
  CMatrix out = CMatrix::Zero(2 * d, 2 * d);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      for (Index p = 0; p < 2; ++p)
        for (Index q = 0; q < 2; ++q) out(p * d + i, q * d + j) = blocks[i][j](p, q);
  return HermitianMatrix(out, assume_hermitian);
}

inline bool separates(const StarLinearMap& phi, const HermitianMatrix& x, Index s) {
  return is_psd(phi.ampliation(x, s)) && !psd_member(x, s, phi.d(), false, 1e-6) &&
         !psd_member(x, s, phi.d(), true, 1e-6);
}

/// Level-2 element in the free spectrahedron of phi but in neither Psd_{d,2}
/// nor Psd^Gamma_{d,2}: the section point (1.9, 0.2) first, then boundary
/// points of random directions.
inline std::optional<HermitianMatrix> psd_refutation(const StarLinearMap& phi) {
  const Index d = phi.d(), s = 2;
  const HermitianMatrix section = section_element(d, 1.9, 0.2);
  if (separates(phi, section, s)) return section;
  std::mt19937_64 rng(0x7e57ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 400; ++trial) {
    CMatrix g(s * d, s * d);
    for (Index i = 0; i < s * d; ++i)
      for (Index j = 0; j < s * d; ++j) g(i, j) = Complex(normal(rng), normal(rng));
    const HermitianMatrix a(CMatrix(0.5 * (g + g.adjoint())), assume_hermitian);
    // The ampliation is unital, so shifting by c I moves onto the boundary.
    const double c = -min_eigenvalue(phi.ampliation(a, s));
    const HermitianMatrix x = a + HermitianMatrix::identity(s * d) * c;
    if (separates(phi, x, s)) return x;
  }
  return std::nullopt;
}

}  // namespace detail

/// Decides whether a unital *-isometry is easy. Stage 1 solves for a CP left
/// inverse (identity or transpose); stage 2 recovers the unit vectors and the
/// block form U* phi(A) U = A (+) psi(A) (or A^T (+) psi(A)), which certifies
/// EASY_*. NOT_EASY needs both left inverses infeasible and a level-2
/// separating element; otherwise UNDECIDED.
inline IsometryResult classify_isometry(const StarLinearMap& phi) {
  if (!phi.unital()) throw Error(ErrorCode::NotAnIsometry, "phi(I_d) differs from I_r");
  if (!detail::positivity_equivalence_holds(phi)) {
    throw Error(ErrorCode::NotAnIsometry, "A >= 0 <=> phi(A) >= 0 fails on a sample");
  }
  const Index d = phi.d(), r = phi.r();
  IsometryResult out;
  bool left_inverse_found = false;
  for (int mode = 0; mode < 2; ++mode) {
    const bool transpose = mode == 1;
    const FeasibilityOutcome s1 = detail::cp_left_inverse(phi, transpose);
    out.left_inverse_residual[mode] = s1.residual;
    left_inverse_found = left_inverse_found || s1.feasible();
    const auto h = detail::easy_vectors(phi, transpose);
    if (!h) continue;
    const CMatrix u = complete_to_unitary(*h);
    double residual = (u.leftCols(d).adjoint() * u.leftCols(d) - CMatrix::Identity(d, d)).norm();
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        const CMatrix b = u.adjoint() * phi(detail::matrix_unit(d, i, j)) * u;
        const CMatrix corner = detail::matrix_unit(d, transpose ? j : i, transpose ? i : j);
        residual = std::max(residual, (b.topLeftCorner(d, d) - corner).norm());
        if (r > d) {
          residual = std::max(residual, b.topRightCorner(d, r - d).norm());
          residual = std::max(residual, b.bottomLeftCorner(r - d, d).norm());
        }
      }
    }
    if (residual > 1e-7) continue;
    if (!s1.feasible()) throw Error(ErrorCode::SolverInconsistent, "block form found but no CP left inverse");
    out.cls = transpose ? IsometryClass::EasyTranspose : IsometryClass::EasyIdentity;
    out.u = u;
    out.block_residual = residual;
    if (r > d) {
      const CMatrix tail = u.rightCols(r - d);
      out.psi = StarLinearMap::from_function(d, r - d, [&](const CMatrix& a) {
        return CMatrix(tail.adjoint() * phi(a) * tail);
      });
    }
    return out;
  }
  if (left_inverse_found) throw Error(ErrorCode::SolverInconsistent, "CP left inverse found but no block form");
  out.refutation = detail::psd_refutation(phi);
  out.cls = out.refutation ? IsometryClass::NotEasy : IsometryClass::Undecided;
  return out;
}

struct SectionScan {
  Index d = 2;
  int grid = 0;
  double range = 0.0;
  /// Row-major over y (outer) and x (inner): point k has x = coord(k % grid), y = coord(k / grid).
  std::vector<char> in_phi, in_psd, in_gamma;
  /// Region points with a grid neighbour outside the region.
  std::vector<std::pair<double, double>> boundary_phi, boundary_psd, boundary_gamma;

  double coord(int i) const { return grid == 1 ? 0.0 : -range + 2.0 * range * i / (grid - 1); }
};

/// Membership of A(x, y) on a grid over [-range, range]^2 in (a) the free
/// spectrahedron of phi at level 2, (b) Psd_{d,2}, (c) Psd^Gamma_{d,2}.
inline SectionScan section_scan(const StarLinearMap& phi, int grid, double range) {
  if (grid < 1) throw Error(ErrorCode::InvalidArgument, "grid must be positive");
  if (!(range > 0.0)) throw Error(ErrorCode::InvalidArgument, "range must be positive");
  SectionScan out;
  out.d = phi.d();
  out.grid = grid;
  out.range = range;
  const std::size_t total = static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid);
  out.in_phi.resize(total);
  out.in_psd.resize(total);
  out.in_gamma.resize(total);
  for (int iy = 0; iy < grid; ++iy) {
    for (int ix = 0; ix < grid; ++ix) {
      const HermitianMatrix a = detail::section_element(phi.d(), out.coord(ix), out.coord(iy));
      const std::size_t k = static_cast<std::size_t>(iy) * grid + ix;
      out.in_phi[k] = is_psd(phi.ampliation(a, 2));
      out.in_psd[k] = psd_member(a, 2, phi.d(), false);
      out.in_gamma[k] = psd_member(a, 2, phi.d(), true);
    }
  }
  auto boundary = [&](const std::vector<char>& in, std::vector<std::pair<double, double>>& pts) {
    for (int iy = 0; iy < grid; ++iy) {
      for (int ix = 0; ix < grid; ++ix) {
        if (!in[static_cast<std::size_t>(iy) * grid + ix]) continue;
        bool edge = false;
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int nx = ix + dx, ny = iy + dy;
          if (nx < 0 || ny < 0 || nx >= grid || ny >= grid) continue;
          edge = edge || !in[static_cast<std::size_t>(ny) * grid + nx];
        }
        if (edge) pts.emplace_back(out.coord(ix), out.coord(iy));
      }
    }
  };
  boundary(out.in_phi, out.boundary_phi);
  boundary(out.in_psd, out.boundary_psd);
  boundary(out.in_gamma, out.boundary_gamma);
  return out;
}

}  // namespace freespec
