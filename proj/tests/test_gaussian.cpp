// Copyright 2026 The funcproc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "funcproc/gaussian.hpp"

#include <cmath>
#include <functional>

#include "gtest/gtest.h"

namespace funcproc {
namespace {

// Trapezoid rule on [-L, L]^d for a rapidly decaying integrand.
cplx quad2(const std::function<cplx(double, double)>& f, double L, int n) {
  const double h = 2 * L / n;
  cplx s = 0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
      const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
      s += wi * wj * f(-L + i * h, -L + j * h);
    }
  }
  return s * h * h;
}

cplx quad1(const std::function<cplx(double)>& f, double L, int n) {
  const double h = 2 * L / n;
  cplx s = 0;
  for (int i = 0; i <= n; ++i) {
    s += ((i == 0 || i == n) ? 0.5 : 1.0) * f(-L + i * h);
  }
  return s * h;
}

GaussianFunctional single(const VarLabel& v, cplx k, cplx b, cplx c = 0) {
  MatrixXcd K(1, 1);
  K << k;
  VectorXcd bb(1);
  bb << b;
  return GaussianFunctional(Layout({v}), K, bb, c);
}

GaussianFunctional three_var() {
  MatrixXcd K(3, 3);
  K << cplx(2.0, 0.3), cplx(0.4, -0.2), cplx(-0.3, 0.1),
      cplx(0.4, -0.2), cplx(1.5, -0.5), cplx(0.2, 0.4),
      cplx(-0.3, 0.1), cplx(0.2, 0.4), cplx(1.8, 0.7);
  VectorXcd b(3);
  b << cplx(0.3, -0.1), cplx(-0.2, 0.5), cplx(0.6, 0.2);
  return GaussianFunctional(Layout({ket(0), ket(1), ket(2)}), K, b,
                            cplx(0.1, 0.2));
}

TEST(Multiply, ConstantIsIdentity) {
  const auto G = three_var();
  const auto H = multiply(GaussianFunctional::constant(), G);
  EXPECT_EQ(compare(H, G).max(), 0.0);
}

TEST(Multiply, KernelsAddOnSharedLabel) {
  const auto F = single(ket(0), 1.0, 0.0);
  const auto H = multiply(F, F);
  EXPECT_EQ(H.K()(0, 0), cplx(2.0));
}

TEST(Multiply, DisjointSupportsAreBlockDiagonal) {
  const auto H = multiply(single(ket(0), 1.0, 0.5), single(ket(1), 3.0, -1.0));
  ASSERT_EQ(H.size(), 2u);
  EXPECT_EQ(H.K()(0, 1), cplx(0.0));
  EXPECT_EQ(H.K()(1, 1), cplx(3.0));
  EXPECT_EQ(H.b()(0), cplx(0.5));
}

TEST(Multiply, CommutativeAndAssociative) {
  const auto A = three_var();
  const auto B = single(ket(1), cplx(0.1, 0.2), 0.3, 0.4);
  const auto C = single(bra(1), cplx(0.7, 0.0), cplx(0, 1), -0.2);
  EXPECT_LE(compare(multiply(A, B), multiply(B, A)).max(), 1e-12);
  EXPECT_LE(compare(multiply(multiply(A, B), C), multiply(A, multiply(B, C))).max(),
            1e-12);
}

TEST(Multiply, GridMismatchRejected) {
  auto A = single(ket(0), 1.0, 0.0);
  auto B = single(ket(0), 1.0, 0.0);
  A.set_grid(make_grid(0, 1, 2));
  B.set_grid(make_grid(0, 1, 3));
  EXPECT_THROW(multiply(A, B), CompositionError);
}

TEST(Marginalize, OneDimensionalIdentity) {
  const auto F = marginalize(single(ket(0), 2.0, 1.0), {ket(0)});
  EXPECT_EQ(F.size(), 0u);
  EXPECT_NEAR(F.c().real(), 0.25 + 0.5 * std::log(kPi), 1e-14);
  EXPECT_NEAR(F.c().imag(), 0.0, 1e-14);
}

TEST(Marginalize, BlockDiagonalIndependence) {
  const auto A = single(ket(0), 2.0, 1.0);
  const auto B = single(ket(1), cplx(1.0, 3.0), cplx(0.2, 0.1), 0.3);
  const auto F = marginalize(multiply(A, B), {ket(0)});
  EXPECT_EQ(F.K()(0, 0), B.K()(0, 0));
  EXPECT_EQ(F.b()(0), B.b()(0));
}

TEST(Marginalize, MatchesQuadratureOracle) {
  const auto F = three_var();
  const auto M = marginalize(F, {ket(1), ket(2)});
  for (double x0 : {-0.7, 0.0, 0.4}) {
    const cplx want = quad2(
        [&](double x1, double x2) {
          VectorXd x(3);
          x << x0, x1, x2;
          return std::exp(F.log_value(x));
        },
        9.0, 360);
    VectorXd y(1);
    y << x0;
    const cplx got = std::exp(M.log_value(y));
    EXPECT_NEAR(std::abs(got - want) / std::abs(want), 0.0, 1e-8);
  }
}

TEST(Marginalize, FresnelIntegralUsesPrincipalBranch) {
  // int exp(i a x^2 / 2) dx = sqrt(2 pi / (-i a)).
  const double a = 3.0;
  const auto F = marginalize(single(ket(0), cplx(0, -a), 0.0), {ket(0)});
  const cplx want = std::sqrt(2 * kPi / cplx(0, -a));
  EXPECT_NEAR(std::abs(std::exp(F.c()) - want), 0.0, 1e-13);
}

TEST(Marginalize, SequentialEqualsJoint) {
  const auto F = three_var();
  const auto a = marginalize(marginalize(F, {ket(2)}), {ket(0)});
  const auto b = marginalize(F, {ket(0), ket(2)});
  EXPECT_LE(compare(a, b).max(), 1e-9);
}

TEST(Marginalize, SingularBlockReportsCondition) {
  MatrixXcd K = MatrixXcd::Ones(2, 2);
  const GaussianFunctional F(Layout({ket(0), ket(1)}), K, VectorXcd::Zero(2), 0);
  try {
    marginalize(F, {ket(0), ket(1)});
    FAIL();
  } catch (const SingularMarginalError& e) {
    EXPECT_GT(e.condition(), 1e12);
  }
}

TEST(Marginalize, DivergentBlockRejected) {
  EXPECT_THROW(marginalize(single(ket(0), -1.0, 0.0), {ket(0)}),
               SingularMarginalError);
}

TEST(Marginalize, PreservesHermitianSymmetry) {
  // Hermitian-symmetric functional over two node pairs.
  auto F = GaussianFunctional::zeros(trajectory_layout(0, 1));
  F.add_K(ket(0), ket(0), cplx(1.0, 0.5));
  F.add_K(bra(0), bra(0), cplx(1.0, -0.5));
  F.add_K(ket(1), ket(1), cplx(0.8, -2.0));
  F.add_K(bra(1), bra(1), cplx(0.8, 2.0));
  F.add_K(ket(0), bra(0), 0.3);
  F.add_K(ket(0), ket(1), cplx(0.1, 1.0));
  F.add_K(bra(0), bra(1), cplx(0.1, -1.0));
  F.add_K(ket(1), bra(1), 0.2);
  F.add_b(ket(0), cplx(0.2, 0.3));
  F.add_b(bra(0), cplx(0.2, -0.3));
  ASSERT_LE(hermitian_symmetry_residual(F).max(), 1e-15);
  const auto M = marginalize(F, {ket(1), bra(1)});
  EXPECT_LE(hermitian_symmetry_residual(M).max(), 1e-12);
}

TEST(PinValue, Substitution) {
  MatrixXcd K(2, 2);
  K << 1, -1, -1, 0;
  const GaussianFunctional F(Layout({ket(0), ket(1)}), K, VectorXcd::Zero(2), 0);
  const auto G = pin_value(F, ket(0), 0.0);
  ASSERT_EQ(G.size(), 1u);
  EXPECT_EQ(G.layout()[0], ket(1));
  EXPECT_EQ(G.K()(0, 0), cplx(0.0));
}

TEST(PinValue, NarrowGaussianLimit) {
  const auto F = three_var();
  const double s = 0.37, eps = 1e-4;
  const auto pinned = marginalize_all(pin_value(F, ket(1), s));
  const auto narrow = single(ket(1), 1.0 / (eps * eps), s / (eps * eps),
                             -0.5 * s * s / (eps * eps) -
                                 std::log(std::sqrt(2 * kPi) * eps));
  const auto smeared = marginalize_all(multiply(F, narrow));
  EXPECT_NEAR(std::abs(std::exp(pinned.c()) - std::exp(smeared.c())) /
                  std::abs(std::exp(pinned.c())),
              0.0, 1e-6);
}

TEST(PinValue, TwiceIsLookupError) {
  const auto G = pin_value(three_var(), ket(0), 1.0);
  EXPECT_THROW(pin_value(G, ket(0), 1.0), LookupError);
}

TEST(PinEqual, NarrowGaussianDeltaOracle) {
  const auto F = three_var();
  const double eps = 1e-4;
  const auto ident = marginalize_all(pin_equal(F, ket(0), ket(2)));
  // delta(x0 - x2) as a normalized narrow Gaussian in the difference.
  auto D = GaussianFunctional::zeros(Layout({ket(0), ket(2)}));
  const double k = 1.0 / (eps * eps);
  D.add_K(ket(0), ket(0), k);
  D.add_K(ket(2), ket(2), k);
  D.add_K(ket(0), ket(2), -k);
  D.add_c(-std::log(std::sqrt(2 * kPi) * eps));
  const auto smeared = marginalize_all(multiply(F, D));
  EXPECT_NEAR(std::abs(std::exp(ident.c()) - std::exp(smeared.c())) /
                  std::abs(std::exp(ident.c())),
              0.0, 1e-6);
}

TEST(PinEqual, SameLabelIsNoOp) {
  const auto F = three_var();
  EXPECT_EQ(compare(pin_equal(F, ket(1), ket(1)), F).max(), 0.0);
}

TEST(PinEqual, CombinedRowOnProductForm) {
  // U[x] U*[x-bar] with x1 as final node.
  auto U = GaussianFunctional::zeros(Layout({ket(0), ket(1)}));
  U.add_K(ket(0), ket(0), cplx(0, -2));
  U.add_K(ket(1), ket(1), cplx(0, -2));
  U.add_K(ket(0), ket(1), cplx(0, 2));
  auto W = multiply(U, conjugate_swap(U));
  W = pin_equal(W, ket(1), bra(1));
  EXPECT_FALSE(W.has(bra(1)));
  const int f = W.index(ket(1));
  EXPECT_NEAR(std::abs(W.K()(f, f)), 0.0, 1e-15);
}

TEST(PinEqual, UnknownLabel) {
  EXPECT_THROW(pin_equal(three_var(), ket(0), ket(9)), LookupError);
}

TEST(IntegrateDelta, MatchesRegularizedIntegral) {
  // exp(i v a (x1 - x2) + i v beta) times a decaying Gaussian in x1, x2.
  const double a = 2.5, beta = 0.4;
  auto F = GaussianFunctional::zeros(Layout({ket(0), ket(1), ket(2)}));
  F.add_K(ket(0), ket(1), cplx(0, a));
  F.add_K(ket(0), ket(2), cplx(0, -a));
  F.add_b(ket(0), cplx(0, beta));
  F.add_K(ket(1), ket(1), cplx(1.3, 0.2));
  F.add_K(ket(2), ket(2), cplx(0.9, -0.4));
  F.add_K(ket(1), ket(2), 0.2);
  F.add_b(ket(1), 0.3);
  const auto d = integrate_delta(F, ket(0));
  EXPECT_EQ(d.quadratic_residual, 0.0);
  EXPECT_EQ(d.real_part_residual, 0.0);
  const cplx exact = std::exp(marginalize_all(d.result).c());
  auto reg = F;
  reg.add_K(ket(0), ket(0), 1e-7);
  const cplx approx = std::exp(marginalize_all(reg).c());
  EXPECT_NEAR(std::abs(exact - approx) / std::abs(exact), 0.0, 1e-5);
}

TEST(IntegrateDelta, NoConstraintIsSingular) {
  EXPECT_THROW(integrate_delta(single(ket(0), 0.0, 0.0), ket(0)),
               SingularMarginalError);
}

TEST(Positivity, ProductWithConjugatePasses) {
  auto U = GaussianFunctional::zeros(Layout({ket(0), ket(1), ket(2)}));
  U.add_K(ket(0), ket(0), cplx(1.0, -3.0));
  U.add_K(ket(1), ket(1), cplx(0.2, 2.0));
  U.add_K(ket(0), ket(1), cplx(0.1, 1.5));
  U.add_K(ket(1), ket(2), cplx(0.0, -0.5));
  U.add_b(ket(2), cplx(0.3, 0.7));
  U.add_c(cplx(0.1, 0.4));
  const auto F = multiply(U, conjugate_swap(U));
  EXPECT_LE(hermitian_symmetry_residual(F).max(), 1e-15);
  const auto rep = positivity_sample_check(F, 64, 7);
  EXPECT_TRUE(rep.pass) << rep.min_eig << " " << rep.max_eig;
}

TEST(Positivity, NegatedConstantFails) {
  auto F = GaussianFunctional::zeros(trajectory_layout(0, 1));
  F.add_c(cplx(0, kPi));
  const auto rep = positivity_sample_check(F, 16, 3);
  EXPECT_FALSE(rep.pass);
}

TEST(Positivity, DeterministicUnderSeed) {
  auto F = GaussianFunctional::zeros(trajectory_layout(0, 1));
  F.add_K(ket(0), ket(0), 1.0);
  F.add_K(bra(0), bra(0), 1.0);
  const auto a = positivity_sample_check(F, 8, 11);
  const auto b = positivity_sample_check(F, 8, 11);
  EXPECT_EQ(a.min_eig, b.min_eig);
  EXPECT_EQ(a.max_eig, b.max_eig);
}

TEST(Positivity, TooFewSamples) {
  auto F = GaussianFunctional::zeros(trajectory_layout(0, 0));
  EXPECT_THROW(positivity_sample_check(F, 1, 0), PreconditionError);
}

TEST(Quadrature, OneDimensionalSanity) {
  const cplx v = quad1([](double x) { return std::exp(-0.5 * x * x); }, 10, 200);
  EXPECT_NEAR(v.real(), std::sqrt(2 * kPi), 1e-12);
}

}  // namespace
}  // namespace funcproc
