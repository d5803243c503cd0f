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

#include "funcproc/process.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace funcproc {
namespace {

CLModel model(const TimeGrid& g, double m, double w, double eta = 0.0,
              double gamma = 1.0) {
  CLModel M{m, w, MemoryKernel::zero(g)};
  if (eta != 0.0) M.kernel = MemoryKernel::exponential(g, eta, gamma, noise_structure());
  return M;
}

// Exponent without the constant, for ket path x and bra path y.
cplx exponent(const GaussianFunctional& F, const std::vector<double>& x,
              const std::vector<double>& y) {
  VectorXd v(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    const VarLabel& l = F.layout()[i];
    v(i) = l.branch == Branch::ket ? x[l.node] : y[l.node];
  }
  return F.log_value(v) - F.c();
}

TEST(FreeAction, SingleStepKinetic) {
  const TimeGrid g = make_grid(0, 0.5, 1);
  const auto F = build_free_action(model(g, 1.0, 0.0), g);
  const double k = 1.0 / g.dt;
  EXPECT_EQ(F.K()(F.index(ket(0)), F.index(ket(0))), cplx(0, -k));
  EXPECT_EQ(F.K()(F.index(ket(0)), F.index(ket(1))), cplx(0, k));
  EXPECT_EQ(F.K()(F.index(bra(1)), F.index(bra(1))), cplx(0, k));
  EXPECT_EQ(F.K()(F.index(bra(0)), F.index(bra(1))), cplx(0, -k));
  EXPECT_EQ(F.K()(F.index(ket(0)), F.index(bra(0))), cplx(0.0));
  EXPECT_EQ(F.b().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(F.K().real().cwiseAbs().maxCoeff(), 0.0);
}

TEST(FreeAction, PotentialUsesTrapezoidWeights) {
  const TimeGrid g = make_grid(0, 1, 4);
  const double m = 2.0, w = 1.5;
  const auto F0 = build_free_action(model(g, m, 0.0), g);
  const auto F1 = build_free_action(model(g, m, w), g);
  const double wt[] = {0.5, 1, 1, 1, 0.5};
  for (int k = 0; k <= 4; ++k) {
    const int a = F1.index(ket(k)), b = F1.index(bra(k));
    EXPECT_NEAR(std::abs(F1.K()(a, a) - F0.K()(a, a) - kI * m * w * w * g.dt * wt[k]), 0, 1e-14);
    EXPECT_NEAR(std::abs(F1.K()(b, b) - F0.K()(b, b) + kI * m * w * w * g.dt * wt[k]), 0, 1e-14);
  }
}

TEST(FreeAction, SmoothPathActionOracle) {
  const TimeGrid g = make_grid(0, 1, 32);
  const double m = 1.0, w = 0.7;
  const auto F = build_free_action(model(g, m, w), g);
  std::vector<double> x(33), zero(33, 0.0);
  for (int k = 0; k <= 32; ++k) x[k] = std::sin(kPi * g.node(k));
  // S0 = m/2 (pi^2/2) - m w^2/2 (1/2).
  const double S0 = 0.25 * m * kPi * kPi - 0.25 * m * w * w;
  const cplx e = exponent(F, x, zero);
  EXPECT_NEAR(e.real(), 0.0, 1e-12);
  EXPECT_LE(std::abs(e.imag() - S0) / S0, 0.01);
}

TEST(FreeAction, RefinementConvergesAtFirstOrderOrBetter) {
  const double m = 1.3, w = 0.9;
  auto path = [](double t) { return std::cos(2 * t) + 0.3 * t; };
  auto path2 = [](double t) { return std::sin(t) - 0.2; };
  std::vector<double> err;
  cplx ref;
  for (int n : {512, 16, 32, 64}) {
    const TimeGrid g = make_grid(0, 1.5, n);
    const auto F = build_free_action(model(g, m, w), g);
    std::vector<double> x, y;
    for (double t : g.nodes) {
      x.push_back(path(t));
      y.push_back(path2(t));
    }
    const cplx e = exponent(F, x, y);
    if (n == 512) ref = e; else err.push_back(std::abs(e - ref));
  }
  EXPECT_GT(err[0] / err[1], 1.8);
  EXPECT_GT(err[1] / err[2], 1.8);
}

TEST(MemoryAction, ZeroKernelIsConstantOne) {
  const TimeGrid g = make_grid(0, 1, 3);
  const auto F = build_memory_action(MemoryKernel::zero(g), g);
  EXPECT_EQ(F.size(), 0u);
  EXPECT_EQ(F.c(), cplx(0.0));
}

TEST(MemoryAction, DirectSummationOracle) {
  const TimeGrid g = make_grid(0, 1, 2);
  const double eta = 0.3, gamma = 1.2;
  const auto kern = MemoryKernel::exponential(g, eta, gamma, ones_structure());
  const auto F = build_memory_action(kern, g);
  const double w[] = {0.5, 1.0, 0.5};
  // Distinct coupling values on the (k, l) node pairs, k <= l.
  EXPECT_NEAR(std::abs(F.K()(F.index(ket(0)), F.index(bra(2))) -
                       kI * w[0] * w[2] * g.dt * g.dt * eta * std::exp(-gamma)),
              0, 1e-15);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(3), y(3);
    for (int k = 0; k < 3; ++k) {
      x[k] = nd(rng);
      y[k] = nd(rng);
    }
    cplx S = 0;
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) {
        Eigen::Vector2cd a(x[k], y[k]), b(x[l], y[l]);
        S += -0.5 * w[k] * w[l] * g.dt * g.dt * bilinear(a, kern.at(k, l) * b);
      }
    }
    EXPECT_NEAR(std::abs(exponent(F, x, y) - kI * S), 0, 1e-14);
  }
}

TEST(MemoryAction, AsymmetricKernelRejected) {
  const TimeGrid g = make_grid(0, 1, 2);
  auto kern = MemoryKernel::zero(g);
  kern.at(0, 1)(0, 1) = 1.0;
  EXPECT_THROW(build_memory_action(kern, g), InvariantError);
}

TEST(MemoryAction, GridMismatchRejected) {
  EXPECT_THROW(build_memory_action(MemoryKernel::zero(make_grid(0, 1, 2)),
                                   make_grid(0, 1, 3)),
               CompositionError);
}

TEST(GaussianState, NormalizedDiagonal) {
  const TimeGrid g = make_grid(0, 1, 1);
  const auto s = GaussianState::coherent(1.3, 0.8, 0.5, -0.4);
  const auto F = state_functional(s, g);
  const auto tr = marginalize_all(pin_equal(F, ket(0), bra(0)));
  EXPECT_NEAR(std::abs(tr.c()), 0.0, 1e-14);
}

TEST(GaussianState, NonHermitianRejected) {
  GaussianState s;
  s.c << cplx(0, 1), cplx(0, 1);
  EXPECT_THROW(s.validate(), InvariantError);
}

TEST(ClProcess, UnitaryOpenBoundaryIsHermitianSymmetric) {
  const TimeGrid g = make_grid(0, 1, 6);
  const auto W = build_cl_process(model(g, 1, 1), g, GaussianState{},
                                  Boundary::open_boundary);
  EXPECT_EQ(W.boundary(), Boundary::open_boundary);
  EXPECT_LE(hermitian_symmetry_residual(W).max(), 1e-15);
  EXPECT_EQ(W.K().real().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ClProcess, ClosedWithStateIsHermitianSymmetric) {
  const TimeGrid g = make_grid(0, 1, 8);
  const auto W = build_cl_process(model(g, 1, 1, 0.1, 1.0), g, GaussianState{},
                                  Boundary::closed);
  EXPECT_EQ(W.boundary(), Boundary::closed);
  EXPECT_LE(hermitian_symmetry_residual(W).max(), 1e-14);
}

TEST(ClProcess, PositivitySampleCheckPasses) {
  const TimeGrid g = make_grid(0, 1, 8);
  const auto W = build_cl_process(model(g, 1, 1, 0.1, 1.0), g, GaussianState{},
                                  Boundary::closed);
  const auto rep = positivity_sample_check(W, 64, 2026);
  EXPECT_TRUE(rep.pass) << rep.min_eig << " " << rep.max_eig;
}

TEST(Markovian, SingleSegmentEqualsUnitaryProcess) {
  const TimeGrid g = make_grid(0, 1, 5);
  const auto M = model(g, 1.2, 0.7);
  const auto W = build_markovian_process(g, {{M, 0.0, 1.0}});
  const auto V = build_cl_process(M, g, GaussianState{}, Boundary::open_boundary);
  EXPECT_EQ(compare(W, V).max(), 0.0);
}

TEST(Markovian, NoCouplingsAcrossSegments) {
  const TimeGrid g = make_grid(0, 1, 8);
  const auto W = build_markovian_process(
      g, {{model(g, 1, 1), 0.0, 0.5}, {model(g, 2, 0.3), 0.5, 1.0}});
  for (const auto& a : W.layout()) {
    for (const auto& b : W.layout()) {
      if (a.node < 4 && b.node > 4) {
        EXPECT_EQ(W.K()(W.index(a), W.index(b)), cplx(0.0));
      }
    }
  }
}

TEST(Markovian, RejectsBadPartitions) {
  const TimeGrid g = make_grid(0, 1, 8);
  const TimeGrid h = make_grid(0, 1, 4);
  EXPECT_THROW(build_markovian_process(g, {{model(h, 1, 1), 0.0, 1.0}}),
               CompositionError);
  EXPECT_THROW(build_markovian_process(g, {{model(g, 1, 1), 0.0, 0.5}}),
               DomainError);
  EXPECT_THROW(build_markovian_process(
                   g, {{model(g, 1, 1), 0.0, 0.5}, {model(g, 1, 1), 0.625, 1.0}}),
               DomainError);
}

}  // namespace
}  // namespace funcproc
