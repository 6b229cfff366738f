#pragma once

// Free spectrahedra over polyhedral cones: containment of the orthant,
// classification of unital tuples against the simplex cone R^d_+, the
// diagonal facet LMI of the largest system, and facet deflation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "freespec/cones.hpp"
#include "freespec/error.hpp"
#include "freespec/linalg.hpp"
#include "freespec/opsys.hpp"

namespace freespec {

namespace detail {

inline void require_unit_sum(const MatrixTuple& n) {
  CMatrix sum = CMatrix::Zero(n.size(), n.size());
  for (const auto& ni : n) sum += ni.mat();
  if ((sum - CMatrix::Identity(n.size(), n.size())).norm() > 1e-9) {
    throw Error(ErrorCode::UnitViolation, "sum_i N_i differs from the identity");
  }
}

}  // namespace detail

/// R^d_+ lies in S_1(N) iff every N_i is psd.
inline bool orthant_contained(const MatrixTuple& n, bool check_unit = true, double tol = kDefaultPsdTol) {
  if (check_unit) detail::require_unit_sum(n);
  return std::all_of(n.begin(), n.end(), [&](const HermitianMatrix& ni) { return is_psd(ni, tol); });
}

enum class SimplexClass { Equal, ContainsStrictly, NotContaining };

inline const char* to_string(SimplexClass c) {
  switch (c) {
    case SimplexClass::Equal: return "EQUAL";
    case SimplexClass::ContainsStrictly: return "CONTAINS_STRICTLY";
    case SimplexClass::NotContaining: return "NOT_CONTAINING";
  }
  return "?";
}

struct SimplexResult {
  SimplexClass cls = SimplexClass::NotContaining;
  /// EQUAL: U* N_i U = E_ii (+) tail_i. No tails when size = d.
  CMatrix u;
  std::vector<HermitianMatrix> tails;
  double residual = 0.0;
  /// NOT_CONTAINING: index of a non-psd N_i. CONTAINS_STRICTLY: the step whose
  /// sum_{i != j} N_i had no kernel.
  Index failed_index = -1;
};

namespace detail {

inline constexpr Index kMaxKernelSearch = 3;

/// Orthonormal basis of the numerical kernel of a psd matrix.
inline CMatrix psd_kernel(const HermitianMatrix& s, double rel_cut = 1e-9) {
  const EigenResult e = eigh(s);
  const double cut = rel_cut * std::max(1.0, std::abs(e.values(e.values.size() - 1)));
  Index k = 0;
  while (k < e.values.size() && e.values(k) <= cut) ++k;
  return e.vectors.leftCols(k);
}

/// Orthonormal basis of the complement of a unit vector.
inline CMatrix complement(const CVector& v) {
  const Index n = v.size();
  // The QR of [v | I] keeps span(v) as column 0.
  CMatrix aug(n, n + 1);
  aug.col(0) = v;
  aug.rightCols(n) = CMatrix::Identity(n, n);
  Eigen::HouseholderQR<CMatrix> qr(aug);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  return q.rightCols(n - 1);
}

/// Steps j..d-1 of the splitting loop on the current tails. On success the
/// chosen vectors (in original coordinates) are appended to `h`.
inline bool split_from(const std::vector<HermitianMatrix>& blocks, const CMatrix& basis, Index j,
                       std::vector<CVector>& h, Index& failed) {
  const Index d = static_cast<Index>(blocks.size());
  if (j == d) return true;
  const Index m = blocks[0].dim();
  if (m == 0) {
    failed = j;
    return false;
  }
  HermitianMatrix s = HermitianMatrix::zero(m);
  for (Index i = 0; i < d; ++i) {
    if (i != j) s += blocks[static_cast<std::size_t>(i)];
  }
  const CMatrix ker = psd_kernel(s);
  if (ker.cols() == 0) {
    failed = j;
    return false;
  }
  if (ker.cols() > kMaxKernelSearch) {
    throw Error(ErrorCode::AmbiguousKernel, "kernel dimension exceeds the exhaustive search bound");
  }
  if (j + 1 == d) {
    h.push_back(basis * ker.col(0));
    return true;
  }
  for (Index c = 0; c < ker.cols(); ++c) {
    const CVector v = ker.col(c);
    const CMatrix rest = complement(v);
    std::vector<HermitianMatrix> next;
    for (const auto& b : blocks) next.push_back(b.compress(rest));
    const std::size_t mark = h.size();
    h.push_back(basis * v);
    if (split_from(next, basis * rest, j + 1, h, failed)) return true;
    h.resize(mark);
  }
  return false;
}

}  // namespace detail

/// Classifies S_1(N) against R^d_+ for a unital tuple (sum_i N_i = I) by
/// splitting off one kernel vector of sum_{i != j} N_i per coordinate j.
inline SimplexResult simplex_classify(const MatrixTuple& n) {
  detail::require_unit_sum(n);
  SimplexResult out;
  for (Index i = 0; i < n.d(); ++i) {
    if (!is_psd(n[i])) {
      out.cls = SimplexClass::NotContaining;
      out.failed_index = i;
      return out;
    }
  }
  if (n.size() < n.d()) {
    out.cls = SimplexClass::ContainsStrictly;
    out.failed_index = n.size();
    return out;
  }
  std::vector<CVector> h;
  std::vector<HermitianMatrix> blocks(n.begin(), n.end());
  Index failed = -1;
  const Index size = n.size();
  if (!detail::split_from(blocks, CMatrix::Identity(size, size), 0, h, failed)) {
    out.cls = SimplexClass::ContainsStrictly;
    out.failed_index = failed;
    return out;
  }
  const Index d = n.d();
  CMatrix hs(size, d);
  for (Index j = 0; j < d; ++j) hs.col(j) = h[static_cast<std::size_t>(j)];
  CMatrix u(size, size);
  u.leftCols(d) = hs;
  if (size > d) {
    // Orthonormal completion: the kernel of hs*.
    Eigen::JacobiSVD<CMatrix> svd(hs.adjoint(), Eigen::ComputeFullV);
    u.rightCols(size - d) = svd.matrixV().rightCols(size - d);
  }
  out.cls = SimplexClass::Equal;
  out.u = u;
  for (Index i = 0; i < d; ++i) {
    const CMatrix c = u.adjoint() * n[i].mat() * u;
    CMatrix want = CMatrix::Zero(size, size);
    want(i, i) = 1.0;
    want.bottomRightCorner(size - d, size - d) = c.bottomRightCorner(size - d, size - d);
    out.residual = std::max(out.residual, (c - want).norm());
    if (size == d) continue;
    const CMatrix t = c.bottomRightCorner(size - d, size - d);
    out.tails.emplace_back(CMatrix(0.5 * (t + t.adjoint())), assume_hermitian);
  }
  if (out.residual > 1e-7) throw Error(ErrorCode::SolverInconsistent, "simplex splitting does not reconstruct the tuple");
  return out;
}

/// S(D_1..D_d) with D_i = diag over facets f of f_i: the largest system over
/// the cone. Carries a unit when some u has f.u = 1 on every facet.
inline FreeSpectrahedron polyhedral_largest_lmi(const ConeDescriptor& cone) {
  if (cone.kind() != ConeKind::Polyhedral || cone.facets().empty()) {
    throw Error(ErrorCode::FacetsMissing, "polyhedral_largest_lmi needs facet inequalities");
  }
  const Index d = cone.d();
  const Index r = static_cast<Index>(cone.facets().size());
  RMatrix f(r, d);
  for (Index j = 0; j < r; ++j) f.row(j) = cone.facets()[static_cast<std::size_t>(j)].transpose();
  std::vector<HermitianMatrix> ds;
  for (Index i = 0; i < d; ++i) ds.push_back(HermitianMatrix::diagonal(f.col(i)));
  MatrixTuple tuple(std::move(ds));
  const RVector u = f.completeOrthogonalDecomposition().solve(RVector::Ones(r));
  if ((f * u - RVector::Ones(r)).norm() <= 1e-12) return FreeSpectrahedron(std::move(tuple), u);
  return FreeSpectrahedron(std::move(tuple));
}

struct FacetSplit {
  /// Supporting form of the face: m . facet_point = 0.
  RVector m;
  /// A* M_i A = m_i (+) tail_i.
  MatrixTuple tail;
  CMatrix congruence;
};

/// Deflation at a facet point p of S_1(M): for a unit kernel vector v of
/// sum_i p_i M_i, every M_i v must lie on one line w. Then A = [v | w-perp]
/// gives A* M_i A = (v* M_i v) (+) tail. Returns none when the images are not
/// collinear or w is orthogonal to v.
inline std::optional<FacetSplit> facet_split(const MatrixTuple& m, const RVector& facet_point) {
  if (facet_point.size() != m.d()) throw Error(ErrorCode::DimensionMismatch, "facet_split: point length");
  if (m.size() < 2) throw Error(ErrorCode::InvalidArgument, "facet_split: nothing to deflate at size 1");
  const HermitianMatrix l = m.pencil(facet_point);
  const EigenResult e = eigh(l);
  double scale = 0.0;
  for (const auto& mi : m) scale = std::max(scale, spectral_norm(mi));
  scale = std::max(scale, 1e-300) * std::max(1.0, facet_point.norm());
  Index k = 0;
  while (k < e.values.size() && std::abs(e.values(k)) <= 1e-9 * scale) ++k;
  if (k == 0) throw Error(ErrorCode::KernelEmpty, "facet point is not on the boundary of S_1");
  const Index n = m.size();
  for (Index c = 0; c < k; ++c) {
    const CVector v = e.vectors.col(c);
    // Dominant direction of the images M_i v.
    CMatrix images(n, m.d());
    for (Index i = 0; i < m.d(); ++i) images.col(i) = m[i].mat() * v;
    Eigen::JacobiSVD<CMatrix> svd(images, Eigen::ComputeThinU);
    const RVector sv = svd.singularValues();
    if (sv.size() > 1 && sv(1) > 1e-9 * std::max(sv(0), 1e-300)) continue;
    const CVector w = sv(0) > 0 ? CVector(svd.matrixU().col(0)) : v;
    if (std::abs(w.dot(v)) < 1e-6) continue;
    const CMatrix rest = detail::complement(w);
    CMatrix a(n, n);
    a.col(0) = v;
    a.rightCols(n - 1) = rest;
    FacetSplit out;
    out.m.resize(m.d());
    std::vector<HermitianMatrix> tails;
    double off = 0.0;
    for (Index i = 0; i < m.d(); ++i) {
      const CMatrix b = a.adjoint() * m[i].mat() * a;
      off = std::max(off, b.col(0).tail(n - 1).norm() / std::max(1.0, m[i].frobenius()));
      out.m(i) = b(0, 0).real();
      const CMatrix t = b.bottomRightCorner(n - 1, n - 1);
      tails.emplace_back(CMatrix(0.5 * (t + t.adjoint())), assume_hermitian);
    }
    if (off > 1e-7) continue;
    out.tail = MatrixTuple(std::move(tails));
    out.congruence = a;
    return out;
  }
  return std::nullopt;
}

}  // namespace freespec
