#pragma once

// Proper convex cones in R^d: polyhedral (facets and/or generators), the
// circular cone D = {a0 >= 0, a1^2 + a2^2 <= a0^2}, and the psd cone P_m in
// the real coordinates of Her_m.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "freespec/error.hpp"
#include "freespec/linalg.hpp"

namespace freespec {

enum class ConeKind { Polyhedral, Circular, Psd };

inline const char* to_string(ConeKind k) {
  switch (k) {
    case ConeKind::Polyhedral: return "POLYHEDRAL";
    case ConeKind::Circular: return "CIRCULAR";
    case ConeKind::Psd: return "PSD";
  }
  return "?";
}

namespace detail {

/// Extreme rays of {x : f.x >= 0 for f in facets} for d <= 3.
inline std::vector<RVector> rays_from_inequalities(const std::vector<RVector>& facets, Index d) {
  std::vector<RVector> out;
  auto accept = [&](RVector v) {
    if (v.norm() < 1e-12) return;
    v.normalize();
    for (int sign : {1, -1}) {
      const RVector w = double(sign) * v;
      bool ok = true;
      for (const auto& f : facets) ok = ok && f.dot(w) >= -1e-10 * f.norm();
      if (!ok) continue;
      for (const auto& e : out) {
        if ((e - w).norm() < 1e-9) return;
      }
      out.push_back(w);
      return;
    }
  };
  if (d == 1) {
    accept(RVector::Ones(1));
  } else if (d == 2) {
    for (const auto& f : facets) accept((RVector(2) << -f(1), f(0)).finished());
  } else if (d == 3) {
    for (std::size_t i = 0; i < facets.size(); ++i) {
      for (std::size_t j = i + 1; j < facets.size(); ++j) {
        const Eigen::Vector3d a = facets[i], b = facets[j];
        accept(RVector(a.cross(b)));
      }
    }
  } else {
    throw Error(ErrorCode::FacetsMissing, "polyhedral duals are only computed for d <= 3");
  }
  return out;
}

}  // namespace detail

class ConeDescriptor {
 public:
  static ConeDescriptor circular() {
    ConeDescriptor c;
    c.kind_ = ConeKind::Circular;
    c.d_ = 3;
    return c;
  }

  static ConeDescriptor psd(Index m) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "psd cone side must be >= 1");
    ConeDescriptor c;
    c.kind_ = ConeKind::Psd;
    c.m_ = m;
    c.d_ = m * m;
    return c;
  }

  /// Either list may be empty when d <= 3; the missing one is computed.
  static ConeDescriptor polyhedral(std::vector<RVector> facets, std::vector<RVector> generators) {
    ConeDescriptor c;
    c.kind_ = ConeKind::Polyhedral;
    if (facets.empty() && generators.empty()) {
      throw Error(ErrorCode::InvalidArgument, "polyhedral cone needs facets or generators");
    }
    c.d_ = facets.empty() ? generators.front().size() : facets.front().size();
    for (const auto& v : facets)
      if (v.size() != c.d_) throw Error(ErrorCode::DimensionMismatch, "facet length");
    for (const auto& v : generators)
      if (v.size() != c.d_) throw Error(ErrorCode::DimensionMismatch, "generator length");
    if (facets.empty()) facets = detail::rays_from_inequalities(generators, c.d_);
    if (generators.empty()) generators = detail::rays_from_inequalities(facets, c.d_);
    c.facets_ = std::move(facets);
    c.generators_ = std::move(generators);
    c.validate_polyhedral();
    return c;
  }

  /// Nonnegative orthant in R^d.
  static ConeDescriptor orthant(Index d) {
    std::vector<RVector> units;
    for (Index i = 0; i < d; ++i) {
      RVector e = RVector::Zero(d);
      e(i) = 1.0;
      units.push_back(e);
    }
    return polyhedral(units, units);
  }

  ConeKind kind() const { return kind_; }
  Index d() const { return d_; }
  Index psd_side() const { return m_; }
  const std::vector<RVector>& facets() const { return facets_; }
  const std::vector<RVector>& generators() const { return generators_; }

 private:
  void validate_polyhedral() const {
    for (const auto& g : generators_) {
      for (const auto& f : facets_) {
        if (f.dot(g) < -1e-10 * std::max(1.0, f.norm() * g.norm())) {
          throw Error(ErrorCode::InvalidArgument, "generator violates a facet inequality");
        }
      }
    }
    RMatrix gens(d_, static_cast<Index>(generators_.size()));
    for (std::size_t j = 0; j < generators_.size(); ++j) gens.col(static_cast<Index>(j)) = generators_[j];
    if (generators_.empty() || Eigen::FullPivLU<RMatrix>(gens).rank() < d_) {
      throw Error(ErrorCode::InvalidArgument, "generators do not span R^d (cone not full-dimensional)");
    }
    const RVector center = gens.rowwise().sum();
    for (const auto& f : facets_) {
      if (f.dot(center) <= 1e-12 * f.norm() * center.norm()) {
        throw Error(ErrorCode::InvalidArgument, "facet inequalities admit no strictly positive point");
      }
    }
  }

  ConeKind kind_ = ConeKind::Polyhedral;
  Index d_ = 0;
  Index m_ = 0;
  std::vector<RVector> facets_;
  std::vector<RVector> generators_;
};

/// Hermitian m x m matrix with the given real coordinates.
inline HermitianMatrix psd_point(const RVector& a, Index m) { return from_real_coords(a, m); }

inline bool member(const ConeDescriptor& cone, const RVector& a, double tol = kDefaultPsdTol) {
  if (a.size() != cone.d()) throw Error(ErrorCode::DimensionMismatch, "point length differs from cone dimension");
  const double scale = std::max(1.0, a.norm());
  switch (cone.kind()) {
    case ConeKind::Circular:
      return a(0) >= -tol * scale && std::hypot(a(1), a(2)) <= a(0) + tol * scale;
    case ConeKind::Psd:
      return is_psd(psd_point(a, cone.psd_side()), tol);
    case ConeKind::Polyhedral:
      for (const auto& f : cone.facets()) {
        if (f.dot(a) < -tol * scale * std::max(1.0, f.norm())) return false;
      }
      return true;
  }
  return false;
}

inline ConeDescriptor dual(const ConeDescriptor& cone) {
  switch (cone.kind()) {
    case ConeKind::Circular:
    case ConeKind::Psd:
      return cone;
    case ConeKind::Polyhedral:
      return ConeDescriptor::polyhedral(cone.generators(), cone.facets());
  }
  return cone;
}

/// Regular polygon cone with r extreme rays on the boundary of D. Facet forms
/// have x0-coefficient exactly 1: l_j = (1, -sec(pi/r) cos psi_j, -sec(pi/r) sin psi_j),
/// psi_j = (2j+1) pi / r.
inline ConeDescriptor regular_polygon_cone(int r) {
  if (r < 3) throw Error(ErrorCode::InvalidArgument, "a polygon cone needs r >= 3");
  const double pi = std::numbers::pi;
  const double sec = 1.0 / std::cos(pi / r);
  std::vector<RVector> gens, facets;
  for (int k = 0; k < r; ++k) {
    const double phi = 2.0 * pi * k / r;
    gens.push_back((RVector(3) << 1.0, std::cos(phi), std::sin(phi)).finished());
    const double psi = (2.0 * k + 1.0) * pi / r;
    facets.push_back((RVector(3) << 1.0, -sec * std::cos(psi), -sec * std::sin(psi)).finished());
  }
  return ConeDescriptor::polyhedral(std::move(facets), std::move(gens));
}

}  // namespace freespec
