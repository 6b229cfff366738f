#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>

#include "freespec/circular.hpp"
#include "freespec/containment.hpp"
#include "test_support.hpp"

using namespace freespec;
using namespace freespec::testing;

namespace {

constexpr double kPi = std::numbers::pi;

/// Closed-form 2x2 minimum of N0 + cos N1 + sin N2 over a dense grid.
double dense_min_2x2(const MatrixTuple& n, int points = 20000) {
  double best = 1e300;
  for (int k = 0; k < points; ++k) {
    const double t = 2 * kPi * k / points;
    best = std::min(best, min_eig_2x2(n[0].mat() + std::cos(t) * n[1].mat() + std::sin(t) * n[2].mat()));
  }
  return best;
}

/// Roots of d/dt prod_j (t + a_j) from the companion matrix of the expanded polynomial.
std::vector<double> companion_derivative_roots(const std::vector<double>& a) {
  std::vector<double> c{1.0};  // ascending coefficients
  for (double x : a) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += x * c[i];
      next[i + 1] += c[i];
    }
    c = next;
  }
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
  const Index deg = static_cast<Index>(d.size()) - 1;
  RMatrix comp = RMatrix::Zero(deg, deg);
  for (Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Index i = 0; i < deg; ++i) comp(i, deg - 1) = -d[static_cast<std::size_t>(i)] / d.back();
  Eigen::EigenSolver<RMatrix> es(comp);
  std::vector<double> roots;
  for (Index i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i).real());
  return roots;
}

/// Near-boundary point of S_s(disk): random A shifted along (I, 0, 0).
MatrixTuple boundary_point_of_disk(Rng& rng, Index s) {
  MatrixTuple a = rng.tuple(3, s);
  const double c = -min_eig_jacobi(kron_pencil(a, disk_tuple()).mat()) + 1e-9;
  std::vector<HermitianMatrix> shifted(a.begin(), a.end());
  shifted[0] += HermitianMatrix::identity(s) * c;
  return MatrixTuple(std::move(shifted));
}

}  // namespace

TEST(PQDecompose, DiskTupleHasRankOneDecomposition) {
  const auto d = pq_decompose(disk_tuple(), 1);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->r, 1);
  EXPECT_LE(d->residual, 1e-7);
  // Hand solution P = (1, -i)/sqrt2, Q = (1, i)/sqrt2 satisfies the same identities.
  CMatrix p(1, 2), q(1, 2);
  p << 1.0, -kI;
  q << 1.0, kI;
  p /= std::sqrt(2.0);
  q /= std::sqrt(2.0);
  EXPECT_LE(pq_residual(disk_tuple(), p, q), 1e-15);
  // Rank one: the returned rows agree with the hand solution up to a phase.
  const Complex phase = d->p(0, 0) / p(0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-6);
  EXPECT_LT((d->p - phase * p).norm(), 1e-6);
  EXPECT_LT((d->q - phase * q).norm(), 1e-6);
}

TEST(PQDecompose, ScalarIdentityTuple) {
  const HermitianMatrix z = HermitianMatrix::zero(2);
  const auto d = pq_decompose(MatrixTuple{I2(), z, z});
  ASSERT_TRUE(d.has_value());
  EXPECT_LE(d->residual, 1e-7);
  // P = Q = I/sqrt2 would give N1 = I; disjoint rows P = (I; 0)/sqrt2, Q = (0; I)/sqrt2 work.
  const CMatrix h = CMatrix::Identity(2, 2) / std::sqrt(2.0);
  EXPECT_GT(pq_residual(MatrixTuple{I2(), z, z}, h, h), 0.5);
  CMatrix p = CMatrix::Zero(4, 2), q = CMatrix::Zero(4, 2);
  p.topRows(2) = h;
  q.bottomRows(2) = h;
  EXPECT_LE(pq_residual(MatrixTuple{I2(), z, z}, p, q), 1e-15);
}

TEST(PQDecompose, RefutedByPoint) {
  const MatrixTuple n{I2(), M1() * 2.0, HermitianMatrix::zero(2)};
  // (1, -1, 0) lies in D and I - 2 M1 = diag(-1, 3).
  EXPECT_LT(min_eig_2x2(n.pencil((RVector(3) << 1, -1, 0).finished()).mat()), 0.0);
  EXPECT_FALSE(pq_decompose(n).has_value());
}

TEST(PQDecompose, WrongArityIsAnError) {
  EXPECT_THROW(pq_decompose(MatrixTuple{I2(), M1()}), Error);
  EXPECT_THROW(classify_equality(MatrixTuple{I2(), M1()}), Error);
  EXPECT_THROW(shadow_member(MatrixTuple{I2(), M1()}), Error);
}

TEST(PQDecompose, UnitCircleFactorization) {
  Rng rng(51);
  for (int trial = 0; trial < 12; ++trial) {
    const Index n = 2 + trial % 3;
    // Compressions of the disk tuple contain D at level 1.
    std::vector<CMatrix> vs{rng.complex_matrix(2, n), rng.complex_matrix(2, n)};
    std::vector<HermitianMatrix> ns;
    for (const auto& m : disk_tuple()) ns.push_back(apply_compressions(vs, m));
    const MatrixTuple tup(std::move(ns));
    const auto d = pq_decompose(tup);
    ASSERT_TRUE(d.has_value()) << trial;
    EXPECT_LE(d->residual, 1e-7) << trial;
    for (int k = 0; k < 16; ++k) {
      const double t = 2 * kPi * rng.uniform(0, 1);
      const Complex z(std::cos(t), std::sin(t));
      const CMatrix zpq = z * d->p + d->q;
      const CMatrix lhs = tup.pencil((RVector(3) << 1, std::cos(t), std::sin(t)).finished()).mat();
      EXPECT_LE((lhs - zpq.adjoint() * zpq).norm() / std::max(1.0, lhs.norm()), 1e-7) << trial;
    }
  }
}

TEST(PQDecompose, AgreesWithSweepOnRandomTuples) {
  Rng rng(52);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const HermitianMatrix n0 = HermitianMatrix::identity(2) * rng.uniform(0.5, 2.5);
    const MatrixTuple tup{n0, rng.hermitian(2), rng.hermitian(2)};
    const double oracle = dense_min_2x2(tup);
    if (std::abs(oracle) < 1e-3) continue;
    const auto d = pq_decompose(tup);
    EXPECT_EQ(d.has_value(), oracle > 0) << trial;
    (d ? feasible : infeasible)++;
  }
  EXPECT_GT(feasible, 0);
  EXPECT_GT(infeasible, 0);
}

TEST(ClassifyEquality, Examples) {
  const EqualityResult disk = classify_equality(disk_tuple());
  EXPECT_EQ(disk.cls, EqualityClass::Equal);
  EXPECT_TRUE(disk.continuum);

  const EqualityResult larger = classify_equality(MatrixTuple{I2() * 2.0, M1(), M2()});
  EXPECT_EQ(larger.cls, EqualityClass::StrictlyLarger);
  EXPECT_NEAR(larger.value, 1.0, 1e-12);

  const MatrixTuple bad{I2(), M1() * 2.0, HermitianMatrix::zero(2)};
  const EqualityResult notc = classify_equality(bad);
  EXPECT_EQ(notc.cls, EqualityClass::NotContaining);
  EXPECT_LT(min_eig_2x2(bad.pencil((RVector(3) << 1, std::cos(notc.theta), std::sin(notc.theta)).finished()).mat()),
            0.0);
  EXPECT_NEAR(notc.min_value, dense_min_2x2(bad), 1e-6);
}

TEST(ClassifyEquality, IsolatedBoundaryRays) {
  // diag(1 + cos, 1 + sin) vanishes only at theta = pi and 3pi/2.
  const MatrixTuple n{I2(), E(2, 0), E(2, 1)};
  const EqualityResult res = classify_equality(n);
  EXPECT_EQ(res.cls, EqualityClass::StrictlyLarger);
  EXPECT_FALSE(res.continuum);
  EXPECT_EQ(res.isolated_roots, 2);
  EXPECT_GT(res.value, 0.0);
}

TEST(ClassifyEquality, PolygonTuplesAreEqual) {
  for (int r : {3, 4, 5, 7, 9}) {
    const EqualityResult res = classify_equality(polygon_lmi(r).tuple());
    EXPECT_EQ(res.cls, EqualityClass::Equal) << r;
  }
}

TEST(ClassifyEquality, EqualImpliesLowRankDecomposition) {
  for (int r : {3, 4, 5, 6, 7}) {
    const MatrixTuple n = polygon_lmi(r).tuple();
    ASSERT_EQ(classify_equality(n).cls, EqualityClass::Equal);
    const Index size = n.size();
    const auto d = pq_decompose(n, size - 1);
    ASSERT_TRUE(d.has_value()) << r;
    EXPECT_LE(d->r, size - 1) << r;
    EXPECT_LE(d->residual, 1e-7) << r;
  }
  const auto disk = pq_decompose(disk_tuple(), 1);
  ASSERT_TRUE(disk.has_value());
  EXPECT_EQ(disk->r, 1);
}

TEST(Shadow, DiskTuple) {
  const Verdict v = shadow_member(disk_tuple());
  ASSERT_TRUE(v.holds);
  ASSERT_TRUE(v.certificate.has_value());
  // Hand certificate N3 = -M3 gives [[2,0,0,2],[0,0,0,0],[0,0,0,0],[2,0,0,2]].
  const MatrixTuple hand{I2(), M1(), M2(), M3() * -1.0};
  const MatrixTuple paulis{I2(), M1(), M2(), M3()};
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 0) = expected(0, 3) = expected(3, 0) = expected(3, 3) = 2.0;
  EXPECT_LT((kron_pencil(hand, paulis).mat() - expected).norm(), 1e-14);
  const MatrixTuple found{I2(), M1(), M2(), *v.certificate};
  EXPECT_GE(min_eig_jacobi(kron_pencil(found, paulis).mat()), -1e-7);
}

TEST(Shadow, WitnessIsInLargestSystem) {
  const Verdict v = shadow_member(witness_tuple());
  ASSERT_TRUE(v.holds);
  const MatrixTuple found{witness_tuple()[0], witness_tuple()[1], witness_tuple()[2], *v.certificate};
  EXPECT_GE(min_eig_jacobi(kron_pencil(found, MatrixTuple{I2(), M1(), M2(), M3()}).mat()), -1e-7);
}

TEST(Shadow, RefutedTuple) {
  const MatrixTuple bad{I2(), M1() * 2.0, HermitianMatrix::zero(2)};
  const Verdict v = shadow_member(bad);
  EXPECT_FALSE(v.holds);
  EXPECT_FALSE(v.certificate.has_value());
}

TEST(Shadow, AgreesWithLargestMember) {
  Rng rng(53);
  const ConeDescriptor d = ConeDescriptor::circular();
  for (int trial = 0; trial < 30; ++trial) {
    const MatrixTuple tup{HermitianMatrix::identity(2) * rng.uniform(0.5, 2.5), rng.hermitian(2), rng.hermitian(2)};
    if (std::abs(dense_min_2x2(tup)) < 1e-3) continue;
    EXPECT_EQ(shadow_member(tup).holds, largest_member(d, tup).holds) << trial;
  }
}

TEST(PolygonLmi, StructureAndSymmetry) {
  for (int r : {3, 4, 5, 8}) {
    const PolygonLMI p = polygon_lmi(r);
    ASSERT_EQ(p.n1_raw.dim(), r - 1);
    for (Index a = 0; a < r - 1; ++a) {
      for (Index b = 0; b < r - 1; ++b) {
        const double want1 = (a == b ? p.l1(a) : 0.0) + p.l1(r - 1);
        const double want2 = (a == b ? p.l2(a) : 0.0) + p.l2(r - 1);
        EXPECT_NEAR(p.n1_raw(a, b).real(), want1, 1e-14);
        EXPECT_NEAR(p.n2_raw(a, b).real(), want2, 1e-14);
        EXPECT_EQ(p.n1(a, b).imag(), 0.0);
      }
    }
    EXPECT_LT((p.isometry.adjoint() * p.isometry - CMatrix::Identity(r - 1, r - 1)).norm(), 1e-13);
  }
  EXPECT_THROW(polygon_lmi(2), Error);
}

TEST(PolygonLmi, TriangleDeterminantIsLorentzForm) {
  const PolygonLMI p = polygon_lmi(3);
  Rng rng(54);
  for (int k = 0; k < 200; ++k) {
    const double x0 = rng.uniform(-2, 2), x1 = rng.uniform(-2, 2), x2 = rng.uniform(-2, 2);
    const CMatrix m = x0 * CMatrix::Identity(2, 2) + x1 * p.n1.mat() + x2 * p.n2.mat();
    const double det = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).real();
    EXPECT_NEAR(det, x0 * x0 - x1 * x1 - x2 * x2, 1e-9);
  }
}

TEST(DerivativeIdentity, Examples) {
  const DerivativeCheck r3 = verify_derivative_identity(3, 20);
  EXPECT_LE(r3.residual, 1e-9);
  ASSERT_EQ(r3.lambdas.size(), 1u);
  EXPECT_NEAR(r3.lambdas[0], 1.0, 1e-8);

  const DerivativeCheck r5 = verify_derivative_identity(5, 20);
  EXPECT_LE(r5.residual, 1e-9);
  ASSERT_EQ(r5.lambdas.size(), 2u);
  EXPECT_NEAR(r5.lambdas[0], 1.0, 1e-8);
  EXPECT_GT(r5.lambdas[1], 1.0);
  EXPECT_LE(r5.angle_spread, 1e-8);

  const DerivativeCheck r7 = verify_derivative_identity(7, 20);
  EXPECT_LE(r7.residual, 1e-8);
  ASSERT_EQ(r7.lambdas.size(), 3u);
  EXPECT_NEAR(r7.lambdas[0], 1.0, 1e-8);
  EXPECT_LE(r7.angle_spread, 1e-8);
}

TEST(DerivativeIdentity, EvenOrderSkipsFactorization) {
  const DerivativeCheck r4 = verify_derivative_identity(4, 12);
  EXPECT_TRUE(r4.factorization_skipped);
  EXPECT_TRUE(r4.lambdas.empty());
  EXPECT_LE(r4.residual, 1e-9);
  EXPECT_THROW(verify_derivative_identity(5, 9), Error);
}

TEST(DerivativeIdentity, LambdasMatchCompanionRoots) {
  for (int r : {5, 7, 9}) {
    const PolygonLMI p = polygon_lmi(r);
    const DerivativeCheck check = verify_derivative_identity(r, 10);
    for (double phi : {0.3, 1.7, 4.0}) {
      std::vector<double> a;
      for (int j = 0; j < r; ++j) a.push_back(p.l1(j) * std::cos(phi) + p.l2(j) * std::sin(phi));
      for (double t : companion_derivative_roots(a)) {
        const double lam = 1.0 / (t * t);
        double nearest = 1e300;
        for (double l : check.lambdas) nearest = std::min(nearest, std::abs(l - lam));
        EXPECT_LE(nearest, 1e-6) << r << " " << phi;
      }
    }
  }
}

TEST(Witness, Memberships) {
  const MatrixTuple w = witness_tuple();
  EXPECT_TRUE(largest_member(ConeDescriptor::circular(), w).holds);
  EXPECT_FALSE(spectrahedron_member(FreeSpectrahedron(disk_tuple()), w).holds);
  // Principal 2x2 minor oracle: rows/cols {0, 3} of sum A_i (x) M_i have determinant -1/2.
  const CMatrix big = kron_pencil(w, disk_tuple()).mat();
  EXPECT_NEAR((big(0, 0) * big(3, 3) - big(0, 3) * big(3, 0)).real(), -0.5, 1e-14);
  for (int r : {3, 5, 7, 9}) {
    const MatrixTuple n = polygon_lmi(r).tuple();
    EXPECT_FALSE(spectrahedron_member(FreeSpectrahedron(n), w).holds) << r;
    EXPECT_LT(min_eig_jacobi(kron_pencil(w, n).mat()), -1e-6) << r;
  }
}

TEST(PolygonChain, DiskIsContainedInPolygonSpectrahedron) {
  for (int r : {3, 5, 7}) {
    const MatrixTuple n = polygon_lmi(r).tuple();
    const ContainmentResult res = contains(disk_tuple(), n);
    ASSERT_TRUE(res.feasible()) << r;
    EXPECT_LE(detail::max_tuple_residual(res.compressions, disk_tuple(), n), 1e-6) << r;
  }
}

TEST(PolygonChain, SmallestMembersLieInPolygonSpectrahedron) {
  Rng rng(55);
  const ConeDescriptor d = ConeDescriptor::circular();
  for (int r : {3, 5, 7}) {
    const FreeSpectrahedron s(polygon_lmi(r).tuple());
    for (int k = 0; k < 50; ++k) {
      const MatrixTuple x = boundary_point_of_disk(rng, 2 + k % 2);
      ASSERT_TRUE(smallest_member(d, x).holds);
      EXPECT_TRUE(spectrahedron_member(s, x, 1e-8).holds) << r << " " << k;
    }
  }
}
