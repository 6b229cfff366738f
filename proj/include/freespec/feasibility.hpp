#pragma once

// Affine-constrained psd feasibility: find X >= 0 with <C_k, X> = b_k.
//
// The search alternates projections between the affine subspace (closed-form
// least-squares projection from one SVD of the constraint matrix) and the psd
// cone (eigenvalue clipping), with Dykstra's correction on the cone step.
// Alternating projections crawl when the only solutions sit on the boundary of
// the cone (rank-deficient certificates, e.g. the identity channel), so
// intermediate iterates are periodically polished by Levenberg-Marquardt on a
// low-rank factor X = W W*, which keeps X psd by construction and converges
// quadratically to a nearby solution of that rank.
//
// Every FEASIBLE verdict is re-validated from the Hermitian data (constraint
// residual and eigenvalue check) before it is returned.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "freespec/error.hpp"
#include "freespec/linalg.hpp"

namespace freespec {

struct LinearConstraint {
  HermitianMatrix coefficient;
  double rhs = 0.0;
};

struct AffinePsdProblem {
  Index n = 1;
  std::vector<LinearConstraint> constraints;
  double tol = 1e-7;
  int max_iters = 50000;
  std::uint64_t seed = 0x5eedf00dULL;

  AffinePsdProblem() = default;
  explicit AffinePsdProblem(Index dim) : n(dim) {}

  void add(HermitianMatrix c, double b) { constraints.push_back({std::move(c), b}); }

  /// Adds the matrix equation L(X) = target, where L: Her_n -> Her_m is given
  /// through its adjoint. One scalar constraint per basis element of Her_m.
  void add_map_equality(const std::function<HermitianMatrix(const HermitianMatrix&)>& adjoint,
                        const HermitianMatrix& target) {
    for (const auto& b : hermitian_basis(target.dim())) add(adjoint(b), inner(b, target));
  }

  /// Phi_X(input) = output for the Choi matrix X of a map Mat_in -> Mat_out.
  void add_choi_equality(Index in_dim, Index out_dim, const HermitianMatrix& input, const HermitianMatrix& output) {
    if (input.dim() != in_dim || output.dim() != out_dim || n != in_dim * out_dim) {
      throw Error(ErrorCode::DimensionMismatch, "Choi equality shapes");
    }
    const HermitianMatrix xt = input.transpose();
    add_map_equality([&](const HermitianMatrix& b) { return kron(xt, b); }, output);
  }
};

enum class Feasibility { Feasible, InfeasibleNumeric };

inline const char* to_string(Feasibility f) {
  return f == Feasibility::Feasible ? "FEASIBLE" : "INFEASIBLE_NUMERIC";
}

struct FeasibilityOutcome {
  Feasibility verdict = Feasibility::InfeasibleNumeric;
  std::optional<HermitianMatrix> certificate;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;

  bool feasible() const { return verdict == Feasibility::Feasible; }
};

/// max_k |<C_k, X> - b_k|, computed from the Hermitian data.
inline double constraint_residual(const AffinePsdProblem& p, const HermitianMatrix& x) {
  double worst = 0.0;
  for (const auto& c : p.constraints) worst = std::max(worst, std::abs(inner(c.coefficient, x) - c.rhs));
  return worst;
}

inline double psd_violation(const HermitianMatrix& x) { return std::max(0.0, -min_eigenvalue(x)); }

/// Residual as reported in FeasibilityOutcome: constraint violation plus psd violation.
inline double feasibility_residual(const AffinePsdProblem& p, const HermitianMatrix& x) {
  return constraint_residual(p, x) + psd_violation(x);
}

/// Number of eigenvalues above rel_cut * lambda_max (psd input).
inline Index numerical_rank(const HermitianMatrix& x, double rel_cut = 1e-7) {
  const RVector ev = eigh(x).values;
  const double top = ev(ev.size() - 1);
  if (top <= 0) return 0;
  Index r = 0;
  for (Index i = 0; i < ev.size(); ++i) r += ev(i) > rel_cut * top ? 1 : 0;
  return r;
}

namespace detail {

class FeasibilityEngine {
 public:
  explicit FeasibilityEngine(const AffinePsdProblem& p) : p_(p), n_(p.n) {
    validate();
    const Index m = static_cast<Index>(p.constraints.size());
    const Index dim = real_dim(n_);
    a_.resize(m, dim);
    b_.resize(m);
    coeffs_.reserve(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) {
      const auto& c = p.constraints[static_cast<std::size_t>(k)];
      a_.row(k) = to_real_coords(c.coefficient).transpose();
      b_(k) = c.rhs;
      coeffs_.push_back(c.coefficient.mat());
    }
    scale_ = std::max(1.0, b_.size() ? b_.cwiseAbs().maxCoeff() : 0.0);
    if (m > 0) {
      // Constraint matrices of block problems have heavily clustered singular
      // values, which the divide-and-conquer SVD of Eigen 3.4.0 mishandles.
      // SVD of A^T: its left singular vectors span the row space of A.
      const RMatrix at = a_.transpose();
      Eigen::JacobiSVD<RMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(at, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const RVector& sv = svd.singularValues();
      const double cut = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
      Index rank = 0;
      while (rank < sv.size() && sv(rank) > cut) ++rank;
      range_ = svd.matrixU().leftCols(rank);
      RVector vb = svd.matrixV().leftCols(rank).transpose() * b_;
      for (Index i = 0; i < rank; ++i) vb(i) /= sv(i);
      particular_ = range_ * vb;
    } else {
      range_ = RMatrix::Zero(dim, 0);
      particular_ = RVector::Zero(dim);
    }
  }

  Index n() const { return n_; }

  /// Inconsistency of the linear part alone; positive means no Hermitian X fits.
  double linear_inconsistency() const {
    if (b_.size() == 0) return 0.0;
    return (a_ * particular_ - b_).cwiseAbs().maxCoeff();
  }

  RVector project_affine(const RVector& x) const { return x - range_ * (range_.transpose() * x) + particular_; }

  RVector project_psd(const RVector& x) const {
    const EigenResult e = eigh(from_real_coords(x, n_));
    const RVector clipped = e.values.cwiseMax(0.0);
    return to_real_coords(CMatrix(e.vectors * clipped.cast<Complex>().asDiagonal() * e.vectors.adjoint()));
  }

  /// Nearest matrix of rank <= k in the psd cone.
  RVector project_rank(const RVector& x, Index k) const {
    const CMatrix w = truncated_factor(x, k);
    return to_real_coords(CMatrix(w * w.adjoint()));
  }

  CMatrix truncated_factor(const RVector& x, Index k) const {
    const EigenResult e = eigh(from_real_coords(x, n_));
    CMatrix w = CMatrix::Zero(n_, k);
    for (Index j = 0; j < k; ++j) {
      const Index col = n_ - 1 - j;
      const double lam = std::max(0.0, e.values(col));
      w.col(j) = std::sqrt(lam) * e.vectors.col(col);
    }
    return w;
  }

  double linear_residual(const RVector& x) const {
    if (b_.size() == 0) return 0.0;
    return (a_ * x - b_).cwiseAbs().maxCoeff();
  }

  /// Levenberg-Marquardt on X = W W*. Returns the refined factor.
  CMatrix polish(CMatrix w, int max_steps = 1000) const {
    const Index m = b_.size();
    if (m == 0) return w;
    const Index k = w.cols();
    const Index np = 2 * n_ * k;
    auto residual_of = [&](const CMatrix& f) -> RVector {
      return a_ * to_real_coords(CMatrix(f * f.adjoint())) - b_;
    };
    RVector r = residual_of(w);
    double cost = r.squaredNorm();
    double mu = -1.0;
    double nu = 2.0;
    RMatrix jac(m, np);
    for (int step = 0; step < max_steps; ++step) {
      if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale_) break;
      for (Index c = 0; c < m; ++c) {
        const CMatrix g = coeffs_[static_cast<std::size_t>(c)] * w;
        for (Index col = 0; col < k; ++col) {
          for (Index row = 0; row < n_; ++row) {
            const Index idx = col * n_ + row;
            jac(c, idx) = 2.0 * g(row, col).real();
            jac(c, n_ * k + idx) = 2.0 * g(row, col).imag();
          }
        }
      }
      const RMatrix jjt = jac * jac.transpose();
      const double floor = 1e-15 * std::max(1.0, jjt.diagonal().maxCoeff());
      if (mu < 0) mu = 1e-3 * std::max(1.0, jjt.diagonal().maxCoeff());
      bool improved = false;
      for (int tries = 0; tries < 40; ++tries) {
        RMatrix sys = jjt;
        sys.diagonal().array() += mu;
        const RVector y = sys.ldlt().solve(r);
        const RVector delta = -(jac.transpose() * y);
        CMatrix trial = w;
        for (Index col = 0; col < k; ++col) {
          for (Index row = 0; row < n_; ++row) {
            const Index idx = col * n_ + row;
            trial(row, col) += Complex(delta(idx), delta(n_ * k + idx));
          }
        }
        const RVector rt = residual_of(trial);
        const double ct = rt.squaredNorm();
        const double predicted = cost - (r + jac * delta).squaredNorm();
        if (ct < cost) {
          // Gain-ratio damping update (Nielsen).
          const double rho = predicted > 0 ? (cost - ct) / predicted : 0.0;
          const double ratio = ct / cost;
          w = std::move(trial);
          r = rt;
          cost = ct;
          mu = std::max(floor, mu * std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3)));
          nu = 2.0;
          improved = true;
          if (ratio > 0.999 && step > 20) step = max_steps;  // stalled
          break;
        }
        mu *= nu;
        nu *= 2.0;
      }
      if (!improved) break;
    }
    return w;
  }

  /// Re-validates a candidate from scratch and packages the outcome.
  FeasibilityOutcome finish(const HermitianMatrix& x, int iters, double tol) const {
    FeasibilityOutcome out;
    out.iterations = iters;
    out.residual = feasibility_residual(p_, x);
    const bool ok = out.residual <= tol && is_psd(x, tol);
    out.verdict = ok ? Feasibility::Feasible : Feasibility::InfeasibleNumeric;
    out.certificate = x;
    return out;
  }

  const AffinePsdProblem& problem() const { return p_; }

 private:
  void validate() const {
    if (p_.n < 1) throw Error(ErrorCode::IllPosed, "matrix dimension must be >= 1");
    if (!(p_.tol > 0)) throw Error(ErrorCode::IllPosed, "tolerance must be positive");
    if (p_.max_iters < 1) throw Error(ErrorCode::IllPosed, "max_iters must be >= 1");
    for (const auto& c : p_.constraints) {
      if (c.coefficient.dim() != p_.n) throw Error(ErrorCode::IllPosed, "constraint matrix has the wrong size");
      if (!std::isfinite(c.rhs)) throw Error(ErrorCode::IllPosed, "non-finite right-hand side");
    }
  }

  const AffinePsdProblem& p_;
  Index n_;
  RMatrix a_;
  RVector b_;
  std::vector<CMatrix> coeffs_;
  RMatrix range_;
  RVector particular_;
  double scale_ = 1.0;
};

inline HermitianMatrix gram(const CMatrix& w) { return HermitianMatrix(w * w.adjoint(), assume_hermitian); }

/// Polishes low-rank factors of x: first at its numerical rank, then at each
/// smaller rank, then at full rank. Returns the first candidate that fits.
inline std::optional<HermitianMatrix> try_polish(const FeasibilityEngine& eng, const RVector& x, double tol) {
  const HermitianMatrix xm = from_real_coords(x, eng.n());
  const Index r0 = std::max<Index>(1, numerical_rank(xm));
  std::vector<Index> ranks{r0};
  for (Index k = r0 - 1; k >= 1; --k) ranks.push_back(k);
  if (r0 < eng.n()) ranks.push_back(eng.n());
  std::optional<HermitianMatrix> best;
  double best_res = std::numeric_limits<double>::infinity();
  for (Index k : ranks) {
    CMatrix w = eng.truncated_factor(x, k);
    if (k > r0) {
      // Zero columns are a stationary point of the factored residual; nudge them.
      const double nudge = 1e-6 * std::max(1.0, w.norm());
      for (Index j = r0; j < k; ++j) w.col(j) = nudge * CVector::Unit(eng.n(), eng.n() - 1 - j);
    }
    const HermitianMatrix cand = gram(eng.polish(std::move(w)));
    const double res = feasibility_residual(eng.problem(), cand);
    if (res < best_res) {
      best_res = res;
      best = cand;
    }
    if (best_res <= 1e-3 * tol) break;
  }
  if (best_res <= tol) return best;
  return std::nullopt;
}

}  // namespace detail

inline FeasibilityOutcome solve(const AffinePsdProblem& problem) {
  detail::FeasibilityEngine eng(problem);
  const double tol = problem.tol;
  const Index dim = real_dim(problem.n);

  FeasibilityOutcome fail;
  fail.verdict = Feasibility::InfeasibleNumeric;
  if (eng.linear_inconsistency() > tol) {
    fail.residual = eng.linear_inconsistency();
    return fail;
  }

  RVector x = RVector::Zero(dim);
  RVector q = RVector::Zero(dim);
  RVector best_x = x;
  double best = std::numeric_limits<double>::infinity();
  double plateau_ref = best;
  int next_polish = 50;
  int it = 0;
  for (it = 1; it <= problem.max_iters; ++it) {
    const RVector y = eng.project_affine(x);
    const RVector z = eng.project_psd(y + q);
    q = y + q - z;
    x = z;
    const double res = eng.linear_residual(z);
    if (res < best) {
      best = res;
      best_x = z;
    }
    if (res <= tol || it == next_polish) {
      if (auto cert = detail::try_polish(eng, z, tol)) return eng.finish(*cert, it, tol);
      if (res <= tol) return eng.finish(from_real_coords(z, problem.n), it, tol);
      next_polish *= 2;
    }
    if (it % 500 == 0) {
      if (plateau_ref - best < 1e-12 * plateau_ref) break;
      plateau_ref = best;
    }
  }
  if (auto cert = detail::try_polish(eng, best_x, tol)) return eng.finish(*cert, it, tol);
  FeasibilityOutcome out = eng.finish(from_real_coords(best_x, problem.n), std::min(it, problem.max_iters), tol);
  out.verdict = Feasibility::InfeasibleNumeric;
  return out;
}

/// Best-effort search for a certificate of rank <= target_rank. A numeric
/// failure is not a proof that no such certificate exists.
inline FeasibilityOutcome solve_min_rank_heuristic(const AffinePsdProblem& problem, Index target_rank) {
  if (target_rank < 1 || target_rank > problem.n) {
    throw Error(ErrorCode::IllPosed, "target_rank must lie in [1, n]");
  }
  FeasibilityOutcome base = solve(problem);
  if (!base.feasible()) return base;
  const double tol = problem.tol;
  if (numerical_rank(*base.certificate, tol) <= target_rank) return base;

  detail::FeasibilityEngine eng(problem);
  std::mt19937_64 rng(problem.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  FeasibilityOutcome best;
  best.verdict = Feasibility::InfeasibleNumeric;
  best.iterations = base.iterations;
  auto consider = [&](const CMatrix& w) -> bool {
    const HermitianMatrix cand = detail::gram(eng.polish(w, 400));
    const double res = feasibility_residual(problem, cand);
    if (res < best.residual) {
      best.residual = res;
      best.certificate = cand;
    }
    return res <= tol && numerical_rank(cand, tol) <= target_rank;
  };

  // Alternate between the affine set and the rank-k truncation, then polish.
  RVector x = to_real_coords(*base.certificate);
  for (int restart = 0; restart < 6; ++restart) {
    if (restart > 0) {
      CMatrix w = eng.truncated_factor(to_real_coords(*base.certificate), target_rank);
      const double s = 0.3 * std::max(1e-3, w.norm() / std::sqrt(double(w.size())));
      for (Index i = 0; i < w.rows(); ++i) {
        for (Index j = 0; j < w.cols(); ++j) w(i, j) += s * Complex(normal(rng), normal(rng));
      }
      x = to_real_coords(CMatrix(w * w.adjoint()));
    }
    for (int it = 0; it < 300; ++it) x = eng.project_rank(eng.project_affine(x), target_rank);
    if (consider(eng.truncated_factor(x, target_rank))) {
      return eng.finish(*best.certificate, base.iterations, tol);
    }
  }
  return best;
}

}  // namespace freespec
