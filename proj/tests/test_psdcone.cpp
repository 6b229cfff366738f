#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "freespec/psdcone.hpp"
#include "test_support.hpp"

using namespace freespec;
using namespace freespec::testing;

namespace {

CMatrix unit(Index n, Index i, Index j) {
  CMatrix e = CMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

RVector sorted_eigenvalues(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  return es.eigenvalues();
}

/// The displayed 6 x 6 matrix whose positivity decides A(x, y) in C_2 for d = 2.
CMatrix displayed_section_matrix(double x, double y) {
  const double h = 1.0 / std::sqrt(2.0);
  CMatrix m = CMatrix::Zero(6, 6);
  m(0, 0) = 3;
  m(1, 1) = 2;
  m(2, 2) = m(3, 3) = m(4, 4) = m(5, 5) = 1;
  m(0, 3) = x * h;
  m(0, 5) = y * h;
  m(1, 2) = y * h;
  m(1, 4) = x * h;
  m(2, 1) = y * h;
  m(3, 0) = x * h;
  m(4, 1) = x * h;
  m(5, 0) = y * h;
  return m;
}

/// A (+) psi(A) conjugated by a unitary, psi built from trace, transpose and compressions.
StarLinearMap constructed_easy_map(Rng& rng, Index d, Index extra, bool transpose) {
  const CMatrix w = rng.unitary(d + extra);
  const CMatrix compress = rng.unitary(d).leftCols(std::min<Index>(d, extra));
  return StarLinearMap::from_function(d, d + extra, [=](const CMatrix& a) {
    CMatrix block = CMatrix::Zero(d + extra, d + extra);
    block.topLeftCorner(d, d) = transpose ? CMatrix(a.transpose()) : a;
    if (extra > 0) {
      // psi: a unital positive map into Mat_extra.
      CMatrix psi = CMatrix::Identity(extra, extra) * (a.trace() / static_cast<double>(d));
      const Index k = std::min<Index>(d, extra);
      const CMatrix c = compress.adjoint() * a.transpose() * compress;
      psi.topLeftCorner(k, k) = 0.5 * psi.topLeftCorner(k, k) + 0.5 * c;
      block.bottomRightCorner(extra, extra) = psi;
    }
    return CMatrix(w.adjoint() * block * w);
  });
}

}  // namespace

TEST(PsdMember, Examples) {
  EXPECT_TRUE(psd_member(HermitianMatrix::identity(4), 2, 2, false));
  EXPECT_TRUE(psd_member(HermitianMatrix::identity(4), 2, 2, true));
  // Maximally entangled J/2: psd, partial transpose = swap/2 with eigenvalue -1/2.
  CMatrix j = CMatrix::Zero(4, 4);
  j(0, 0) = j(0, 3) = j(3, 0) = j(3, 3) = 0.5;
  const HermitianMatrix jh(j, assume_hermitian);
  EXPECT_TRUE(psd_member(jh, 2, 2, false));
  EXPECT_FALSE(psd_member(jh, 2, 2, true));
  EXPECT_NEAR(min_eig_jacobi(partial_transpose(j, 2, 2)), -0.5, 1e-12);
  EXPECT_THROW(psd_member(jh, 2, 3, false), Error);
}

TEST(PsdMember, LocalUnitaryInvariance) {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Index s = 2, d = 2 + trial % 2;
    const HermitianMatrix x = rng.hermitian(s * d) + HermitianMatrix::identity(s * d) * rng.uniform(0, 4);
    const CMatrix u = kron(rng.unitary(s), rng.unitary(d));
    const HermitianMatrix y(CMatrix(u.adjoint() * x.mat() * u), assume_hermitian);
    EXPECT_EQ(psd_member(x, s, d, false, 1e-9), psd_member(y, s, d, false, 1e-9));
  }
}

TEST(ExamplePhi, UnitalAndCorners) {
  for (Index d : {2, 3, 4}) {
    const StarLinearMap phi = example_phi(d);
    EXPECT_TRUE(phi.unital());
    EXPECT_EQ(phi.r(), 2 * d - 1);
    EXPECT_LT((phi(unit(d, 0, 0)) - unit(2 * d - 1, 0, 0)).norm(), 1e-15);
  }
  EXPECT_THROW(example_phi(1), Error);
  // d = 2 by hand: [[a, b], [c, e]] -> [[a, b/sqrt2, c/sqrt2], [c/sqrt2, e, 0], [b/sqrt2, 0, e]].
  CMatrix a(2, 2);
  a << 1.0, Complex(2.0, 1.0), Complex(3.0, -1.0), 4.0;
  const double h = 1.0 / std::sqrt(2.0);
  CMatrix want(3, 3);
  want << 1.0, h * a(0, 1), h * a(1, 0), h * a(1, 0), 4.0, 0.0, h * a(0, 1), 0.0, 4.0;
  EXPECT_LT((example_phi(2)(a) - want).norm(), 1e-15);
}

TEST(ExamplePhi, PositivityEquivalence) {
  Rng rng(72);
  for (Index d : {2, 3}) {
    const StarLinearMap phi = example_phi(d);
    int pos = 0, neg = 0;
    for (int k = 0; k < 1000; ++k) {
      const HermitianMatrix a = rng.hermitian(d) + HermitianMatrix::identity(d) * rng.uniform(0, 3);
      const double la = min_eig_jacobi(a.mat());
      if (std::abs(la) < 1e-6) continue;
      const double lp = min_eig_jacobi(phi(a).mat());
      EXPECT_EQ(la > 0, lp > -1e-10) << d << " " << k;
      (la > 0 ? pos : neg)++;
    }
    EXPECT_GT(pos, 100);
    EXPECT_GT(neg, 100);
  }
}

TEST(ClassifyIsometry, IdentityEmbedding) {
  const Index d = 3;
  const StarLinearMap phi = StarLinearMap::from_function(d, d + 1, [=](const CMatrix& a) {
    CMatrix out = CMatrix::Zero(d + 1, d + 1);
    out.topLeftCorner(d, d) = a;
    out(d, d) = a.trace() / static_cast<double>(d);
    return out;
  });
  const IsometryResult res = classify_isometry(phi);
  ASSERT_EQ(res.cls, IsometryClass::EasyIdentity);
  EXPECT_LE(res.block_residual, 1e-6);
  ASSERT_TRUE(res.psi.has_value());
  Rng rng(73);
  for (int k = 0; k < 5; ++k) {
    const CMatrix a = rng.complex_matrix(d, d);
    EXPECT_NEAR(std::abs((*res.psi)(a)(0, 0) - a.trace() / 3.0), 0.0, 1e-8);
  }
}

TEST(ClassifyIsometry, Transpose) {
  const StarLinearMap phi = StarLinearMap::from_function(3, 3, [](const CMatrix& a) { return CMatrix(a.transpose()); });
  const IsometryResult res = classify_isometry(phi);
  ASSERT_EQ(res.cls, IsometryClass::EasyTranspose);
  EXPECT_LE(res.block_residual, 1e-6);
  EXPECT_FALSE(res.psi.has_value());
  // U is diagonal up to phases.
  EXPECT_LT((res.u.cwiseAbs() - RMatrix::Identity(3, 3)).norm(), 1e-8);
}

TEST(ClassifyIsometry, ExamplePhiIsNotEasy) {
  const StarLinearMap phi = example_phi(2);
  const IsometryResult res = classify_isometry(phi);
  ASSERT_EQ(res.cls, IsometryClass::NotEasy);
  ASSERT_TRUE(res.refutation.has_value());
  const HermitianMatrix& x = *res.refutation;
  EXPECT_GE(min_eig_jacobi(phi.ampliation(x, 2).mat()), -1e-9);
  EXPECT_LT(min_eig_jacobi(x.mat()), -1e-6);
  EXPECT_LT(min_eig_jacobi(partial_transpose(x.mat(), 2, 2)), -1e-6);
}

TEST(ClassifyIsometry, Errors) {
  const StarLinearMap half = StarLinearMap::from_function(2, 2, [](const CMatrix& a) { return CMatrix(0.5 * a); });
  EXPECT_THROW(classify_isometry(half), Error);
  // Unital but not an isometry: A -> tr(A)/2 I.
  const StarLinearMap avg = StarLinearMap::from_function(2, 2, [](const CMatrix& a) {
    return CMatrix(a.trace() / 2.0 * CMatrix::Identity(2, 2));
  });
  try {
    classify_isometry(avg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAnIsometry);
  }
}

TEST(ClassifyIsometry, ConstructedEasyMapsUpToSizeTwoDMinusTwo) {
  Rng rng(74);
  for (Index d : {2, 3}) {
    for (Index extra = 0; extra <= d - 2; ++extra) {
      for (bool transpose : {false, true}) {
        const StarLinearMap phi = constructed_easy_map(rng, d, extra, transpose);
        const IsometryResult res = classify_isometry(phi);
        EXPECT_EQ(res.cls, transpose ? IsometryClass::EasyTranspose : IsometryClass::EasyIdentity)
            << d << " " << extra << " " << transpose;
        EXPECT_LE(res.block_residual, 1e-6);
        // Reconstruction on a basis of Mat_d.
        for (Index i = 0; i < d; ++i) {
          for (Index j = 0; j < d; ++j) {
            const CMatrix e = unit(d, i, j);
            CMatrix block = CMatrix::Zero(d + extra, d + extra);
            block.topLeftCorner(d, d) = transpose ? CMatrix(e.transpose()) : e;
            if (extra > 0) block.bottomRightCorner(extra, extra) = (*res.psi)(e);
            EXPECT_LE((res.u * block * res.u.adjoint() - phi(e)).norm(), 1e-6);
          }
        }
      }
    }
  }
}

TEST(Section, AmpliationMatchesDisplayedMatrix) {
  Rng rng(75);
  const StarLinearMap phi = example_phi(2);
  for (int k = 0; k < 50; ++k) {
    const double x = rng.uniform(-3, 3), y = rng.uniform(-3, 3);
    const HermitianMatrix a = detail::section_element(2, x, y);
    EXPECT_LT((sorted_eigenvalues(phi.ampliation(a, 2).mat()) - sorted_eigenvalues(displayed_section_matrix(x, y))).norm(),
              1e-12);
  }
}

TEST(Section, ExamplePoints) {
  const StarLinearMap phi = example_phi(2);
  auto in = [&](double x, double y) {
    const HermitianMatrix a = detail::section_element(2, x, y);
    return std::array<bool, 3>{is_psd(phi.ampliation(a, 2)), psd_member(a, 2, 2, false), psd_member(a, 2, 2, true)};
  };
  EXPECT_EQ(in(0, 0), (std::array<bool, 3>{true, true, true}));
  EXPECT_EQ(in(1.9, 0), (std::array<bool, 3>{true, false, false}));
  EXPECT_EQ(in(1.5, 1.5), (std::array<bool, 3>{false, false, false}));
  EXPECT_EQ(in(1.2, 1.2), (std::array<bool, 3>{true, true, true}));
  EXPECT_EQ(in(1.5, 1.3), (std::array<bool, 3>{true, true, false}));
  EXPECT_EQ(in(1.3, 1.5), (std::array<bool, 3>{true, false, true}));
  EXPECT_THROW(detail::section_element(1, 0.0, 0.0), Error);
}

TEST(Section, ScanMatchesClosedFormRegions) {
  for (Index d : {2, 3}) {
    const SectionScan scan = section_scan(example_phi(d), 61, 2.5);
    const double cell = 5.0 / 60;
    for (int iy = 0; iy < scan.grid; ++iy) {
      for (int ix = 0; ix < scan.grid; ++ix) {
        const double x = scan.coord(ix), y = scan.coord(iy);
        const std::size_t k = static_cast<std::size_t>(iy) * scan.grid + ix;
        const double fa = 4 - x * x - y * y;
        const double fb = std::min(3 - x * x, 2 - y * y);
        const double fc = std::min(2 - x * x, 3 - y * y);
        if (std::abs(fa) > 1e-6) EXPECT_EQ(static_cast<bool>(scan.in_phi[k]), fa > 0) << x << " " << y;
        if (std::abs(fb) > 1e-6) EXPECT_EQ(static_cast<bool>(scan.in_psd[k]), fb > 0) << x << " " << y;
        if (std::abs(fc) > 1e-6) EXPECT_EQ(static_cast<bool>(scan.in_gamma[k]), fc > 0) << x << " " << y;
      }
    }
    // Boundary points lie within one cell of the curves.
    for (auto [x, y] : scan.boundary_phi) EXPECT_LE(std::abs(std::hypot(x, y) - 2.0), 2 * cell);
    for (auto [x, y] : scan.boundary_psd) {
      EXPECT_LE(std::min(std::abs(std::abs(x) - std::sqrt(3.0)), std::abs(std::abs(y) - std::sqrt(2.0))), 2 * cell);
    }
    for (auto [x, y] : scan.boundary_gamma) {
      EXPECT_LE(std::min(std::abs(std::abs(x) - std::sqrt(2.0)), std::abs(std::abs(y) - std::sqrt(3.0))), 2 * cell);
    }
    EXPECT_FALSE(scan.boundary_phi.empty());
  }
}
