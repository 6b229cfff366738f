#pragma once

// Dense complex Hermitian linear algebra shared by every check in the library.
//
// Kronecker convention: kron(A, B)[i*n + k, j*n + l] = A[i,j] * B[k,l], i.e. the
// first factor indexes the coarse blocks. Level-s tuples are always stored as
// the first factor, so sum_i A_i (x) M_i has s x s blocks of size dim(M_i).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "freespec/error.hpp"

namespace freespec {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kDefaultPsdTol = 1e-9;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr Complex kI{0.0, 1.0};

struct assume_hermitian_t {
  explicit assume_hermitian_t() = default;
};
/// Tag for results that are Hermitian in exact arithmetic (V*AV, sums of
/// Hermitians); they are symmetrized without the rounding check.
inline constexpr assume_hermitian_t assume_hermitian{};

class HermitianMatrix {
 public:
  HermitianMatrix() : m_(CMatrix::Zero(1, 1)) {}

  explicit HermitianMatrix(const CMatrix& m) {
    if (m.rows() != m.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "Hermitian matrix must be square");
    }
    if (m.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "Hermitian matrix must have dim >= 1");
    const double scale = std::max(1.0, m.norm());
    if ((m - m.adjoint()).norm() > kHermitianTol * scale) {
      throw Error(ErrorCode::NotHermitian, "matrix differs from its adjoint");
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  HermitianMatrix(const CMatrix& m, assume_hermitian_t) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw Error(ErrorCode::DimensionMismatch, "Hermitian matrix must be square with dim >= 1");
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  explicit HermitianMatrix(const RMatrix& m) : HermitianMatrix(CMatrix(m.cast<Complex>())) {}

  /// Row-major initializer for small literal matrices.
  HermitianMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
    const auto n = static_cast<Index>(rows.size());
    CMatrix m(n, n);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "ragged initializer");
      }
      Index j = 0;
      for (const auto& v : row) m(i, j++) = v;
      ++i;
    }
    *this = HermitianMatrix(m);
  }

  static HermitianMatrix identity(Index n) { return HermitianMatrix(CMatrix::Identity(n, n), assume_hermitian); }
  static HermitianMatrix zero(Index n) { return HermitianMatrix(CMatrix::Zero(n, n), assume_hermitian); }
  static HermitianMatrix diagonal(const RVector& d) {
    return HermitianMatrix(CMatrix(d.cast<Complex>().asDiagonal()), assume_hermitian);
  }
  /// Diagonal matrix unit E_ii.
  static HermitianMatrix unit(Index n, Index i) {
    CMatrix m = CMatrix::Zero(n, n);
    m(i, i) = 1.0;
    return HermitianMatrix(m, assume_hermitian);
  }

  Index dim() const { return m_.rows(); }
  const CMatrix& mat() const { return m_; }
  Complex operator()(Index i, Index j) const { return m_(i, j); }

  double frobenius() const { return m_.norm(); }
  double trace() const { return m_.trace().real(); }

  /// V* A V for V of shape dim() x t.
  HermitianMatrix compress(const CMatrix& v) const {
    if (v.rows() != dim()) throw Error(ErrorCode::DimensionMismatch, "compression shape");
    return HermitianMatrix(v.adjoint() * m_ * v, assume_hermitian);
  }

  HermitianMatrix transpose() const { return HermitianMatrix(m_.transpose(), assume_hermitian); }

  HermitianMatrix& operator+=(const HermitianMatrix& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  HermitianMatrix& operator-=(const HermitianMatrix& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  HermitianMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }
  friend HermitianMatrix operator-(HermitianMatrix a) { return a *= -1.0; }

 private:
  void check_same(const HermitianMatrix& o) const {
    if (o.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "Hermitian dims differ");
  }

  CMatrix m_;
};

/// Frobenius pairing <A, B> = tr(A B), real for Hermitian arguments.
inline double inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "inner product dims differ");
  return (a.mat().cwiseProduct(b.mat().conjugate())).sum().real();
}

/// Ordered tuple (M_1, ..., M_d) of equally sized Hermitian matrices.
class MatrixTuple {
 public:
  MatrixTuple() = default;

  explicit MatrixTuple(std::vector<HermitianMatrix> ms) : ms_(std::move(ms)) {
    if (ms_.empty()) throw Error(ErrorCode::DimensionMismatch, "tuple needs d >= 1");
    for (const auto& m : ms_) {
      if (m.dim() != ms_.front().dim()) {
        throw Error(ErrorCode::DimensionMismatch, "tuple members must share one size");
      }
    }
  }
  MatrixTuple(std::initializer_list<HermitianMatrix> ms) : MatrixTuple(std::vector<HermitianMatrix>(ms)) {}

  Index d() const { return static_cast<Index>(ms_.size()); }
  Index size() const { return ms_.empty() ? 0 : ms_.front().dim(); }
  bool empty() const { return ms_.empty(); }

  const HermitianMatrix& operator[](Index i) const { return ms_[static_cast<std::size_t>(i)]; }
  const std::vector<HermitianMatrix>& matrices() const { return ms_; }
  auto begin() const { return ms_.begin(); }
  auto end() const { return ms_.end(); }

  /// sum_i a_i M_i.
  HermitianMatrix pencil(const RVector& a) const {
    if (a.size() != d()) throw Error(ErrorCode::DimensionMismatch, "pencil coefficient count");
    CMatrix acc = CMatrix::Zero(size(), size());
    for (Index i = 0; i < d(); ++i) acc += a(i) * ms_[static_cast<std::size_t>(i)].mat();
    return HermitianMatrix(acc, assume_hermitian);
  }

  MatrixTuple compress(const CMatrix& v) const {
    std::vector<HermitianMatrix> out;
    out.reserve(ms_.size());
    for (const auto& m : ms_) out.push_back(m.compress(v));
    return MatrixTuple(std::move(out));
  }

  MatrixTuple scaled(double s) const {
    std::vector<HermitianMatrix> out;
    for (const auto& m : ms_) out.push_back(s * m);
    return MatrixTuple(std::move(out));
  }

 private:
  std::vector<HermitianMatrix> ms_;
};

inline void require_same_d(const MatrixTuple& a, const MatrixTuple& b, const char* what) {
  if (a.d() != b.d()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": tuples have different d");
  }
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

inline HermitianMatrix kron(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(kron(a.mat(), b.mat()), assume_hermitian);
}

/// sum_i A_i (x) M_i with the level tuple A as the coarse factor.
inline HermitianMatrix kron_pencil(const MatrixTuple& a, const MatrixTuple& m) {
  require_same_d(a, m, "kron_pencil");
  CMatrix acc = CMatrix::Zero(a.size() * m.size(), a.size() * m.size());
  for (Index i = 0; i < a.d(); ++i) acc += kron(a[i].mat(), m[i].mat());
  return HermitianMatrix(acc, assume_hermitian);
}

/// Block-diagonal direct sum A (+) B, applied entrywise on tuples.
inline HermitianMatrix direct_sum(const HermitianMatrix& a, const HermitianMatrix& b) {
  CMatrix m = CMatrix::Zero(a.dim() + b.dim(), a.dim() + b.dim());
  m.topLeftCorner(a.dim(), a.dim()) = a.mat();
  m.bottomRightCorner(b.dim(), b.dim()) = b.mat();
  return HermitianMatrix(m, assume_hermitian);
}

inline MatrixTuple direct_sum(const MatrixTuple& a, const MatrixTuple& b) {
  require_same_d(a, b, "direct_sum");
  std::vector<HermitianMatrix> out;
  for (Index i = 0; i < a.d(); ++i) out.push_back(direct_sum(a[i], b[i]));
  return MatrixTuple(std::move(out));
}

struct EigenResult {
  RVector values;   // ascending
  CMatrix vectors;  // unitary, columns match values
};

inline EigenResult eigh(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat());
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double spectral_norm(const EigenResult& e) {
  return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

inline double spectral_norm(const HermitianMatrix& a) { return spectral_norm(eigh(a)); }

inline double min_eigenvalue(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

/// min eigenvalue >= -tol * max(1, ||A||_2).
inline bool is_psd(const HermitianMatrix& a, double tol = kDefaultPsdTol) {
  if (tol < 0) throw Error(ErrorCode::InvalidArgument, "psd tolerance must be >= 0");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat(), Eigen::EigenvaluesOnly);
  const RVector& ev = solver.eigenvalues();
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol * std::max(1.0, norm);
}

/// Transposes every d x d block of a matrix in Mat_s (x) Mat_d.
inline CMatrix partial_transpose(const CMatrix& a, Index s, Index d) {
  if (s < 1 || d < 1 || a.rows() != s * d || a.cols() != s * d) {
    throw Error(ErrorCode::DimensionMismatch, "partial transpose expects an (s*d) x (s*d) matrix");
  }
  CMatrix out(a.rows(), a.cols());
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) out.block(i * d, j * d, d, d) = a.block(i * d, j * d, d, d).transpose();
  }
  return out;
}

inline HermitianMatrix partial_transpose(const HermitianMatrix& a, Index s, Index d) {
  return HermitianMatrix(partial_transpose(a.mat(), s, d), assume_hermitian);
}

// Real coordinates of Her_n: diagonal entries, then sqrt(2)*Re and sqrt(2)*Im
// of each strict upper entry in row-major order. The Frobenius pairing becomes
// the Euclidean dot product.

inline Index real_dim(Index n) { return n * n; }

inline RVector to_real_coords(const CMatrix& a) {
  const Index n = a.rows();
  RVector x(n * n);
  const double r2 = std::sqrt(2.0);
  for (Index i = 0; i < n; ++i) x(i) = a(i, i).real();
  Index k = n;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      x(k++) = r2 * a(i, j).real();
      x(k++) = r2 * a(i, j).imag();
    }
  }
  return x;
}

inline RVector to_real_coords(const HermitianMatrix& a) { return to_real_coords(a.mat()); }

inline CMatrix from_real_coords_raw(const RVector& x, Index n) {
  if (x.size() != n * n) throw Error(ErrorCode::DimensionMismatch, "real coordinate vector length");
  CMatrix a(n, n);
  const double r2 = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < n; ++i) a(i, i) = x(i);
  Index k = n;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Complex v(r2 * x(k), r2 * x(k + 1));
      k += 2;
      a(i, j) = v;
      a(j, i) = std::conj(v);
    }
  }
  return a;
}

inline HermitianMatrix from_real_coords(const RVector& x, Index n) {
  return HermitianMatrix(from_real_coords_raw(x, n), assume_hermitian);
}

/// Orthonormal basis of Her_n dual to the real coordinates.
inline std::vector<HermitianMatrix> hermitian_basis(Index n) {
  std::vector<HermitianMatrix> basis;
  basis.reserve(static_cast<std::size_t>(n * n));
  for (Index k = 0; k < n * n; ++k) {
    RVector e = RVector::Zero(n * n);
    e(k) = 1.0;
    basis.push_back(from_real_coords(e, n));
  }
  return basis;
}

/// Linear map Mat_in -> Mat_out encoded by its Choi matrix J of size in*out:
///   Phi_J(X)[k,l] = sum_{i,j} X[i,j] * J[i*out + k, j*out + l].
/// J is psd exactly when Phi_J is completely positive.
class ChoiMap {
 public:
  ChoiMap(HermitianMatrix choi, Index in_dim, Index out_dim)
      : choi_(std::move(choi)), in_(in_dim), out_(out_dim) {
    if (in_ < 1 || out_ < 1 || choi_.dim() != in_ * out_) {
      throw Error(ErrorCode::DimensionMismatch, "Choi matrix size must be in_dim * out_dim");
    }
  }

  /// Inverse of the reshaping: J = sum_ij E_ij (x) Phi(E_ij). Phi must be *-linear.
  static ChoiMap from_map(Index in_dim, Index out_dim, const std::function<CMatrix(const CMatrix&)>& phi) {
    CMatrix j = CMatrix::Zero(in_dim * out_dim, in_dim * out_dim);
    for (Index a = 0; a < in_dim; ++a) {
      for (Index b = 0; b < in_dim; ++b) {
        CMatrix e = CMatrix::Zero(in_dim, in_dim);
        e(a, b) = 1.0;
        const CMatrix img = phi(e);
        if (img.rows() != out_dim || img.cols() != out_dim) {
          throw Error(ErrorCode::DimensionMismatch, "map output has the wrong size");
        }
        j.block(a * out_dim, b * out_dim, out_dim, out_dim) = img;
      }
    }
    return ChoiMap(HermitianMatrix(j), in_dim, out_dim);
  }

  Index in_dim() const { return in_; }
  Index out_dim() const { return out_; }
  const HermitianMatrix& choi() const { return choi_; }

  CMatrix operator()(const CMatrix& x) const {
    if (x.rows() != in_ || x.cols() != in_) throw Error(ErrorCode::DimensionMismatch, "Choi map input size");
    CMatrix y = CMatrix::Zero(out_, out_);
    for (Index i = 0; i < in_; ++i) {
      for (Index j = 0; j < in_; ++j) {
        if (x(i, j) != Complex(0.0)) y += x(i, j) * choi_.mat().block(i * out_, j * out_, out_, out_);
      }
    }
    return y;
  }

  HermitianMatrix apply(const HermitianMatrix& x) const { return HermitianMatrix((*this)(x.mat()), assume_hermitian); }

  MatrixTuple apply(const MatrixTuple& xs) const {
    std::vector<HermitianMatrix> out;
    for (const auto& x : xs) out.push_back(apply(x));
    return MatrixTuple(std::move(out));
  }

  /// Gram factorization of a psd Choi matrix: V_j in Mat_{in,out} with
  /// Phi(X) = sum_j V_j* X V_j. Eigenvalues at or below rel_cut * lambda_max are dropped.
  std::vector<CMatrix> kraus(double rel_cut = 1e-14) const {
    const EigenResult e = eigh(choi_);
    const double top = std::max(0.0, e.values(e.values.size() - 1));
    std::vector<CMatrix> vs;
    for (Index k = e.values.size() - 1; k >= 0; --k) {
      const double lam = e.values(k);
      if (lam <= rel_cut * top || lam <= 0.0) break;
      CMatrix v(in_, out_);
      const double s = std::sqrt(lam);
      for (Index i = 0; i < in_; ++i) {
        for (Index l = 0; l < out_; ++l) v(i, l) = std::conj(s * e.vectors(i * out_ + l, k));
      }
      vs.push_back(std::move(v));
    }
    return vs;
  }

 private:
  HermitianMatrix choi_;
  Index in_;
  Index out_;
};

/// sum_j V_j* X V_j.
inline HermitianMatrix apply_compressions(const std::vector<CMatrix>& vs, const HermitianMatrix& x) {
  if (vs.empty()) throw Error(ErrorCode::InvalidArgument, "empty compression list");
  CMatrix acc = CMatrix::Zero(vs.front().cols(), vs.front().cols());
  for (const auto& v : vs) acc += v.adjoint() * x.mat() * v;
  return HermitianMatrix(acc, assume_hermitian);
}

/// Orthonormal completion: returns a unitary whose leading columns span the columns of `cols`.
inline CMatrix complete_to_unitary(const CMatrix& cols) {
  const Index n = cols.rows();
  Eigen::HouseholderQR<CMatrix> qr(cols);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  // Align the leading columns with the input (QR may flip phases).
  for (Index j = 0; j < cols.cols(); ++j) {
    const Complex ip = q.col(j).dot(cols.col(j));
    if (std::abs(ip) > 0) q.col(j) *= ip / std::abs(ip);
  }
  return q;
}

}  // namespace freespec
