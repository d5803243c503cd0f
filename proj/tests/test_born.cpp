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

#include "funcproc/born.hpp"

#include <cmath>
#include <functional>

#include "gtest/gtest.h"

namespace funcproc {
namespace {

CLModel cl(const TimeGrid& g, double w, double eta) {
  CLModel M{1.0, w, MemoryKernel::zero(g)};
  if (eta != 0.0) M.kernel = MemoryKernel::exponential(g, eta, 1.0, noise_structure());
  return M;
}

ReadoutLaw direct(const CLModel& M, const GaussianState& s, const TimeGrid& g,
                  const PositionMeasurementSpec& spec) {
  return compute_readout_law_direct(build_cl_process(M, g, s, Boundary::closed),
                                    build_position_measurement_symbolic(spec));
}

// Independent dense evaluation of the Born integrand for a free particle:
// variables (x_0..x_N, xbar_0..xbar_{N-1}, r_0..r_N) with xbar_N = x_N.
struct Scratch {
  MatrixXcd Q;
  VectorXcd beta;
  int n;
  explicit Scratch(int dim) : Q(MatrixXcd::Zero(dim, dim)), beta(VectorXcd::Zero(dim)), n(dim) {}
  // exponent += alpha (u . z)^2
  void square(const std::vector<std::pair<int, double>>& u, cplx alpha) {
    for (auto [i, a] : u) {
      for (auto [j, b] : u) Q(i, j) += -2.0 * alpha * a * b;
    }
  }
};

TEST(DirectLaw, MatchesScratchOracle) {
  const int N = 4;
  const double tau = 1.0, m = 1.0;
  const TimeGrid g = make_grid(0, 1, N);
  const GaussianState s = GaussianState::coherent(m, 1.0, 0.4, -0.3);
  const auto law = direct(cl(g, 0.0, 0.0), s, g, {tau, g, std::nullopt});

  const int nx = N + 1, nb = N, nr = N + 1, dim = nx + nb + nr;
  auto X = [](int k) { return k; };
  auto Xb = [&](int k) { return k == N ? N : nx + k; };
  auto Rr = [&](int k) { return nx + nb + k; };
  Scratch sc(dim);
  const double dt = g.dt;
  for (int k = 0; k < N; ++k) {
    sc.square({{X(k + 1), 1.0}, {X(k), -1.0}}, kI * m / (2 * dt));
    sc.square({{Xb(k + 1), 1.0}, {Xb(k), -1.0}}, -kI * m / (2 * dt));
  }
  sc.Q(X(0), X(0)) += s.xi(0, 0);
  sc.Q(Xb(0), Xb(0)) += s.xi(1, 1);
  sc.Q(X(0), Xb(0)) += s.xi(0, 1);
  sc.Q(Xb(0), X(0)) += s.xi(1, 0);
  sc.beta(X(0)) += s.c(0);
  sc.beta(Xb(0)) += s.c(1);
  for (int k = 0; k <= N; ++k) {
    const double w = (k == 0 || k == N) ? 0.5 : 1.0;
    sc.square({{Rr(k), 1.0}, {X(k), -1.0}}, -w * dt / (4 * tau));
    sc.square({{Rr(k), 1.0}, {Xb(k), -1.0}}, -w * dt / (4 * tau));
  }
  const int nt = nx + nb;
  const MatrixXcd Qxx = sc.Q.topLeftCorner(nt, nt);
  const MatrixXcd Qrx = sc.Q.bottomLeftCorner(nr, nt);
  const MatrixXcd Qrr = sc.Q.bottomRightCorner(nr, nr);
  const MatrixXcd Rc = Qrr - Qrx * Qxx.fullPivLu().solve(Qrx.transpose());
  const VectorXcd bc = sc.beta.tail(nr) - Qrx * Qxx.fullPivLu().solve(sc.beta.head(nt));
  EXPECT_LE((law.R - Rc.real()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((law.b - bc.real()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(Rc.imag().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(law.valid());
}

TEST(DirectLaw, WeakMeasurementIsWhite) {
  const TimeGrid g = make_grid(0, 1, 8);
  const double tau = 1e5;
  const auto law = direct(cl(g, 1.0, 0.1), GaussianState{}, g, {tau, g, std::nullopt});
  const auto w = trapezoid_weights(g);
  for (int k = 0; k <= 8; ++k) {
    EXPECT_NEAR(law.R(k, k) / (w[k] * g.dt / tau), 1.0, 1e-4);
  }
  const auto mom = readout_covariance(law);
  EXPECT_NEAR(mom.covariance(3, 3) * g.dt / tau, 1.0, 1e-3);
}

TEST(DirectLaw, SymbolicAgreesWithNumericRecord) {
  const TimeGrid g = make_grid(0, 1, 6);
  const PositionMeasurementSpec spec{0.5, g, std::nullopt};
  const auto M = cl(g, 1.0, 0.1);
  const GaussianState s = GaussianState::coherent(1, 1, 0.2, 0.1);
  const auto law = direct(M, s, g, spec);
  for (int trial = 0; trial < 2; ++trial) {
    ReadoutRecord r{g, std::vector<double>(7, 0.0)};
    if (trial) r.values = {0.3, -0.1, 0.5, 0.2, -0.4, 0.0, 0.7};
    auto W = build_cl_process(M, g, s, Boundary::closed);
    auto F = multiply(W, build_position_measurement(spec, r));
    F = marginalize_all(pin_equal(F, ket(6), bra(6)));
    const double want = std::exp(F.c()).real();
    const double got = std::exp(law.log_density(r));
    EXPECT_NEAR(got / want, 1.0, 1e-9);
  }
}

TEST(DirectLaw, RequiresClosedBoundary) {
  const TimeGrid g = make_grid(0, 1, 2);
  const auto W = build_cl_process(cl(g, 1, 0), g, GaussianState{}, Boundary::open_future);
  EXPECT_THROW(compute_readout_law_direct(
                   W, build_position_measurement_symbolic({1.0, g, std::nullopt})),
               PreconditionError);
}

TEST(DirectLaw, NonNormalizableIsValidityError) {
  const TimeGrid g = make_grid(0, 1, 2);
  auto W = build_cl_process(cl(g, 1, 0), g, GaussianState{}, Boundary::closed);
  auto M = build_position_measurement_symbolic({1.0, g, std::nullopt});
  // Flip the sign of one readout's quadratic term.
  M.add_K(readout(1), readout(1), -2.0 * M.K()(M.index(readout(1)), M.index(readout(1))));
  try {
    compute_readout_law_direct(W, M);
    FAIL();
  } catch (const ValidityError& e) {
    EXPECT_LT(e.min_eigenvalue(), 0.0);
  } catch (const SingularMarginalError&) {
  }
}

TEST(Law, IntegratesToOneByQuadrature) {
  const TimeGrid g = make_grid(0, 0.5, 1);
  const auto law = direct(cl(g, 1.0, 0.2), GaussianState::coherent(1, 1, 0.5, 0.3), g,
                          {0.05, g, std::nullopt});
  ASSERT_EQ(law.nodes.size(), 2u);
  const auto mom = readout_covariance(law);
  const double L = 12 * std::sqrt(mom.covariance.diagonal().maxCoeff());
  const int n = 600;
  const double h = 2 * L / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      VectorXd r(2);
      r << mom.mean(0) - L + i * h, mom.mean(1) - L + j * h;
      s += ((i == 0 || i == n) ? 0.5 : 1) * ((j == 0 || j == n) ? 0.5 : 1) *
           std::exp(law.log_density(r));
    }
  }
  EXPECT_NEAR(s * h * h, 1.0, 1e-8);
  EXPECT_NEAR(law.log_mass_residual, 0.0, 1e-10);
}

TEST(Law, CausalMarginalConsistencyWithStepEndWeights) {
  const TimeGrid g = make_grid(0, 1, 8);
  const auto M = cl(g, 1.0, 0.1);
  const GaussianState s = GaussianState::coherent(1, 1, 0.3, 0.0);
  const auto law = direct(M, s, g, {0.3, g, step_end_weights(g)});
  for (int p : {2, 5, 7}) {
    const TimeGrid h = truncate_grid(g, p);
    CLModel Mh{1.0, 1.0, MemoryKernel::exponential(h, 0.1, 1.0, noise_structure())};
    const auto lh = direct(Mh, s, h, {0.3, h, step_end_weights(h)});
    // Marginalize the full law over readout nodes beyond p.
    const auto nr = static_cast<Eigen::Index>(law.nodes.size());
    GaussianFunctional F(Layout([&] {
                           std::vector<VarLabel> v;
                           for (int k : law.nodes) v.push_back(readout(k));
                           return v;
                         }()),
                         law.R.cast<cplx>(), law.b.cast<cplx>(), -law.logZ);
    std::vector<VarLabel> fut;
    for (int k : law.nodes) {
      if (k > p) fut.push_back(readout(k));
    }
    const auto Fm = marginalize(F, fut);
    ASSERT_EQ(static_cast<Eigen::Index>(Fm.size()), lh.R.rows());
    EXPECT_LE((Fm.K().real() - lh.R).norm() / lh.R.norm(), 1e-6);
    EXPECT_LE((Fm.b().real() - lh.b).norm() / (1 + lh.b.norm()), 1e-6);
    EXPECT_NEAR(Fm.c().real(), -lh.logZ, 1e-6);
    (void)nr;
  }
}

TEST(Covariance, WhiteLaw) {
  ReadoutLaw law;
  law.grid = make_grid(0, 1, 4);
  law.nodes = {0, 1, 2, 3, 4};
  const double dt = 0.25, tau = 2.0;
  law.R = (dt / tau) * MatrixXd::Identity(5, 5);
  law.b = VectorXd::Zero(5);
  const auto m = readout_covariance(law);
  EXPECT_LE((m.covariance - (tau / dt) * MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(m.mean.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sampler, EmptyAndDeterministic) {
  const TimeGrid g = make_grid(0, 1, 4);
  const auto law = direct(cl(g, 1.0, 0.1), GaussianState{}, g, {1.0, g, std::nullopt});
  EXPECT_TRUE(sample_records(law, 0, 1).empty());
  const auto a = sample_records(law, 5, 42);
  const auto b = sample_records(law, 5, 42);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(Sampler, MeanWithinStandardError) {
  const TimeGrid g = make_grid(0, 1, 4);
  const auto law = direct(cl(g, 1.0, 0.1), GaussianState::coherent(1, 1, 1.0, 0.5), g,
                          {0.2, g, std::nullopt});
  const auto mom = readout_covariance(law);
  const int n = 100000;
  const auto recs = sample_records(law, n, 7);
  for (std::size_t i = 0; i < law.nodes.size(); ++i) {
    double s = 0;
    for (const auto& r : recs) s += r.values[law.nodes[i]];
    const double se = std::sqrt(mom.covariance(i, i) / n);
    EXPECT_LE(std::abs(s / n - mom.mean(i)), 3 * se);
  }
}

TEST(Sampler, CovarianceFromMillionDraws) {
  const TimeGrid g = make_grid(0, 1, 4);
  const auto law = direct(cl(g, 1.0, 0.1), GaussianState::coherent(1, 1, 0.2, 0.1), g,
                          {0.5, g, std::nullopt});
  const auto mom = readout_covariance(law);
  const int n = 1000000;
  const auto recs = sample_records(law, n, 11);
  const auto d = static_cast<Eigen::Index>(law.nodes.size());
  VectorXd mean = VectorXd::Zero(d);
  MatrixXd second = MatrixXd::Zero(d, d);
  for (const auto& r : recs) {
    VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = r.values[law.nodes[i]];
    mean += v;
    second += v * v.transpose();
  }
  mean /= n;
  const MatrixXd cov = second / n - mean * mean.transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = std::sqrt(mom.covariance(i, i) * mom.covariance(j, j));
      EXPECT_LE(std::abs(cov(i, j) - mom.covariance(i, j)), 0.02 * s) << i << "," << j;
    }
  }
}

TEST(Conditional, UnitaryEvolutionKeepsTraceOne) {
  const TimeGrid g = make_grid(0, 1, 6);
  const auto W = build_cl_process(cl(g, 1.0, 0.0), g, GaussianState::coherent(1, 1, 0.5, 0.2),
                                  Boundary::open_future);
  const auto cs = conditional_state(W, GaussianFunctional::constant());
  EXPECT_NEAR(cs.trace, 1.0, 1e-12);
  const GaussianState& st = cs.state;
  EXPECT_NEAR(std::abs(st.xi(0, 0) - std::conj(st.xi(1, 1))), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(st.c(0) - std::conj(st.c(1))), 0.0, 1e-10);
  // Harmonic rotation of a coherent state by t = 1.
  const auto mom = state_moments(st);
  EXPECT_NEAR(mom.x, 0.5 * std::cos(1.0) + 0.2 * std::sin(1.0), 2e-2);
}

TEST(Conditional, StrongMeasurementLocalizes) {
  const TimeGrid g = make_grid(0, 1, 4);
  const GaussianState s0 = GaussianState::coherent(1, 1, 0.0, 0.0);
  const auto W = build_cl_process(cl(g, 1.0, 0.0), g, s0, Boundary::open_future);
  const ReadoutRecord r{g, std::vector<double>(5, 0.5)};
  const auto cs = conditional_state(W, build_position_measurement({1e-3, g, std::nullopt}, r));
  const auto m = state_moments(cs.state);
  EXPECT_LT(m.x2 - m.x * m.x, 0.5);
  EXPECT_NEAR(m.x, 0.5, 0.05);
}

TEST(Conditional, TraceEqualsBornValue) {
  const TimeGrid g = make_grid(0, 1, 8);
  const auto M = cl(g, 1.0, 0.1);
  const GaussianState s = GaussianState::coherent(1, 1, 0.3, 0.0);
  const PositionMeasurementSpec spec{0.5, g, std::nullopt};
  const auto law = direct(M, s, g, spec);
  const auto Wo = build_cl_process(M, g, s, Boundary::open_future);
  for (const auto& r : sample_records(law, 5, 3)) {
    const auto cs = conditional_state(Wo, build_position_measurement(spec, r));
    EXPECT_NEAR(cs.trace / std::exp(law.log_density(r)), 1.0, 1e-9);
  }
}

TEST(Projective, ZeroKernelHasNoPhase) {
  const TimeGrid g = make_grid(0, 1, 4);
  const auto lim = projective_limit_law(cl(g, 1.0, 0.0), GaussianState{}, g);
  EXPECT_EQ(lim.phase_kernel.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(lim.weight_quadratic, 2.0);
}

TEST(Projective, PhaseHasUnitModulus) {
  const TimeGrid g = make_grid(0, 1, 4);
  CLModel M{1.0, 1.0, MemoryKernel::exponential(g, 0.4, 1.0, ones_structure())};
  const auto lim = projective_limit_law(M, GaussianState{}, g);
  EXPECT_GT(lim.phase_kernel.cwiseAbs().maxCoeff(), 0.0);
  VectorXd r = VectorXd::LinSpaced(5, -1.0, 2.0);
  r(0) = 0.0;
  const cplx v = lim.log_value(r) - lim.weight_log_norm;
  EXPECT_NEAR(v.real(), 0.0, 1e-14);
}

}  // namespace
}  // namespace funcproc
