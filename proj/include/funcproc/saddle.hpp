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

#ifndef FUNCPROC_SADDLE_HPP_
#define FUNCPROC_SADDLE_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "funcproc/born.hpp"
#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"
#include "funcproc/measurement.hpp"
#include "funcproc/process.hpp"

namespace funcproc {

// How boundary velocities of the classical solution are taken.
enum class BoundaryDerivative {
  // m sigma_z x'(t_f) := (A x + B r)_N, the exact discrete boundary flux.
  discrete_flux,
  // Second-order one-sided finite differences.
  one_sided,
};

struct SaddleOptions {
  BoundaryDerivative derivative = BoundaryDerivative::discrete_flux;
};

struct SaddleData {
  std::vector<Vector2cd> D_i, Dbar_i, D_f, Dbar_f;
  MatrixXcd G;  // 2(N+1) square, node-major blocks G(t_k, t_s)
  Matrix2cd Lambda_f, Lambda_i, Lambda_if;
  std::vector<Matrix2cd> F_f, F_i;
  Eigen::Matrix3cd Omega;
  Eigen::Matrix3cd Omega_check;
  MatrixXcd source;  // 3 x n_readout: linear coefficients of (x_i, x-bar_i, x_f)

  Matrix2cd G_block(int k, int s) const { return G.block<2, 2>(2 * k, 2 * s); }
};

namespace detail {

inline Matrix2cd sigma_z() {
  Matrix2cd s = Matrix2cd::Identity();
  s(1, 1) = -1.0;
  return s;
}

// Quadratic form S = 1/2 x^T A x + x^T B r of the measured effective action,
// node-major over (x_k, x-bar_k); B is block diagonal with entries B_k I.
struct DiscreteAction {
  MatrixXcd A;
  std::vector<cplx> B;
};

inline DiscreteAction discrete_action(const CLModel& model, const TimeGrid& g,
                                      double tau, const std::vector<double>& wm) {
  const int n = g.n_nodes();
  const double dt = g.dt;
  const double m = model.m;
  const Matrix2cd sz = sigma_z();
  DiscreteAction a;
  a.A = MatrixXcd::Zero(2 * n, 2 * n);
  a.B.assign(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k + 1 < n; ++k) {
    const Matrix2cd s = (m / dt) * sz;
    a.A.block<2, 2>(2 * k, 2 * k) += s;
    a.A.block<2, 2>(2 * k + 2, 2 * k + 2) += s;
    a.A.block<2, 2>(2 * k, 2 * k + 2) -= s;
    a.A.block<2, 2>(2 * k + 2, 2 * k) -= s;
  }
  const auto w = trapezoid_weights(g);
  for (int k = 0; k < n; ++k) {
    a.A.block<2, 2>(2 * k, 2 * k) -= m * model.omega0 * model.omega0 * w[k] * dt * sz;
    if (std::isfinite(tau)) {
      a.A.block<2, 2>(2 * k, 2 * k) += (kI * wm[k] * dt / (2.0 * tau)) * Matrix2cd::Identity();
      a.B[k] = -kI * wm[k] * dt / (2.0 * tau);
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      a.A.block<2, 2>(2 * k, 2 * l) -= w[k] * w[l] * dt * dt * model.kernel.at(k, l);
    }
  }
  return a;
}

}  // namespace detail

// Fundamental solutions, Green's function and boundary assembly of the
// stationary-action evaluation. tau may be +infinity (no measurement).
inline SaddleData solve_saddle(const CLModel& model, const GaussianState& state,
                               const TimeGrid& g, double tau,
                               const std::vector<double>& wm,
                               const SaddleOptions& opt = {}) {
  model.validate(g);
  state.validate();
  const int N = g.n_steps;
  const int n = N + 1;
  const double dt = g.dt;
  const double m = model.m;
  const Matrix2cd sz = detail::sigma_z();
  const auto act = detail::discrete_action(model, g, tau, wm);
  const MatrixXcd& A = act.A;
  const int ni = 2 * (N - 1);

  // Interior solves.
  MatrixXcd Ayy = A.block(2, 2, ni, ni);
  Eigen::PartialPivLU<MatrixXcd> lu;
  if (ni > 0) {
    lu.compute(Ayy);
    const double rc = lu.rcond();
    if (!(rc > 1e-12)) {
      throw BvpSingularError("saddle: interior operator singular (condition " +
                             std::to_string(rc > 0 ? 1.0 / rc : INFINITY) + ")");
    }
  }
  // P(:, j): full solution for boundary vector e_j over (x_0, xbar_0, x_N, xbar_N).
  MatrixXcd P = MatrixXcd::Zero(2 * n, 4);
  Eigen::Matrix<cplx, 4, 4> bvals = Eigen::Matrix<cplx, 4, 4>::Zero();
  bvals(0, 0) = -1.0;  // D_i(t_i) = (-1, 0)
  bvals(1, 1) = -1.0;  // Dbar_i(t_i) = (0, -1)
  bvals(2, 2) = 1.0;   // D_f(t_f) = (1, 0)
  bvals(3, 3) = 1.0;   // Dbar_f(t_f) = (0, 1)
  for (int j = 0; j < 4; ++j) {
    P(0, j) = bvals(0, j);
    P(1, j) = bvals(1, j);
    P(2 * N, j) = bvals(2, j);
    P(2 * N + 1, j) = bvals(3, j);
    if (ni > 0) {
      VectorXcd rhs = -(A.block(2, 0, ni, 2) * P.block(0, j, 2, 1) +
                        A.block(2, 2 * N, ni, 2) * P.block(2 * N, j, 2, 1));
      P.block(2, j, ni, 1) = lu.solve(rhs);
    }
  }
  SaddleData sd;
  for (int k = 0; k < n; ++k) {
    sd.D_i.emplace_back(P.block(2 * k, 0, 2, 1));
    sd.Dbar_i.emplace_back(P.block(2 * k, 1, 2, 1));
    sd.D_f.emplace_back(P.block(2 * k, 2, 2, 1));
    sd.Dbar_f.emplace_back(P.block(2 * k, 3, 2, 1));
  }
  sd.G = MatrixXcd::Zero(2 * n, 2 * n);
  if (ni > 0 && std::isfinite(tau)) {
    sd.G.block(2, 2, ni, ni) = (kI / (2.0 * tau)) * lu.solve(MatrixXcd::Identity(ni, ni));
  }

  // Boundary velocities of a node-major field X (2n x cols) with source term.
  auto vel_f = [&](const MatrixXcd& X, const MatrixXcd& src_N) -> MatrixXcd {
    if (opt.derivative == BoundaryDerivative::discrete_flux) {
      return (sz / m) * (A.middleRows(2 * N, 2) * X + src_N);
    }
    return (3.0 * X.middleRows(2 * N, 2) - 4.0 * X.middleRows(2 * N - 2, 2) +
            X.middleRows(std::max(2 * N - 4, 0), 2)) / (2.0 * dt);
  };
  auto vel_i = [&](const MatrixXcd& X, const MatrixXcd& src_0) -> MatrixXcd {
    if (opt.derivative == BoundaryDerivative::discrete_flux) {
      return -(sz / m) * (A.middleRows(0, 2) * X + src_0);
    }
    return (-3.0 * X.middleRows(0, 2) + 4.0 * X.middleRows(2, 2) -
            X.middleRows(std::min(4, 2 * N), 2)) / (2.0 * dt);
  };

  const MatrixXcd Pi = P.leftCols(2);
  const MatrixXcd Pf = P.rightCols(2);
  const MatrixXcd z2 = MatrixXcd::Zero(2, 2);
  const Matrix2cd Pf_dot_f = vel_f(Pf, z2), Pf_dot_i = vel_i(Pf, z2);
  const Matrix2cd Pi_dot_f = vel_f(Pi, z2), Pi_dot_i = vel_i(Pi, z2);
  sd.Lambda_f = 0.5 * m * sz * Pf_dot_f;
  sd.Lambda_i = 0.5 * m * sz * Pi_dot_i;
  sd.Lambda_if = 0.5 * m * (sz * Pf_dot_i + Pi_dot_f.transpose() * sz);

  // Gdot(t_f, s) and Gdot(t_i, s) for every source node s.
  MatrixXcd srcN = MatrixXcd::Zero(2, 2 * n), src0 = MatrixXcd::Zero(2, 2 * n);
  if (std::isfinite(tau)) {
    srcN.block<2, 2>(0, 2 * N) = (-kI / (2.0 * tau)) * Matrix2cd::Identity();
    src0.block<2, 2>(0, 0) = (-kI / (2.0 * tau)) * Matrix2cd::Identity();
  }
  const MatrixXcd Gdot_f = vel_f(sd.G, srcN);
  const MatrixXcd Gdot_i = vel_i(sd.G, src0);
  const double inv4tau = std::isfinite(tau) ? 1.0 / (4.0 * tau) : 0.0;
  for (int s = 0; s < n; ++s) {
    Matrix2cd Pfs, Pis;
    Pfs << sd.D_f[s], sd.Dbar_f[s];
    Pis << sd.D_i[s], sd.Dbar_i[s];
    sd.F_f.push_back(0.5 * m * sz * Gdot_f.block<2, 2>(0, 2 * s) -
                     kI * inv4tau * Pfs.transpose());
    sd.F_i.push_back(0.5 * m * sz * Gdot_i.block<2, 2>(0, 2 * s) -
                     kI * inv4tau * Pis.transpose());
  }

  const Matrix2cd Li = sd.Lambda_i + sd.Lambda_i.transpose();
  const Eigen::Vector2cd lif = sd.Lambda_if.rowwise().sum();
  sd.Omega << -Li(0, 0), -Li(0, 1), lif(0),
              -Li(1, 0), -Li(1, 1), lif(1),
              lif(0), lif(1), -2.0 * sd.Lambda_f.sum();
  sd.Omega_check = kI * sd.Omega;
  sd.Omega_check.topLeftCorner<2, 2>() += state.xi;

  std::vector<int> nodes;
  for (int s = 0; s < n; ++s) {
    if (wm[s] > 0) nodes.push_back(s);
  }
  sd.source = MatrixXcd::Zero(3, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const int s = nodes[j];
    const double q = wm[s] * dt;
    sd.source(0, j) = -q * sd.F_i[s].row(0).sum();
    sd.source(1, j) = -q * sd.F_i[s].row(1).sum();
    sd.source(2, j) = q * sd.F_f[s].sum();
  }
  return sd;
}

// Readout law assembled from the stationary-action data.
inline std::pair<ReadoutLaw, SaddleData> compute_readout_law_saddle(
    const CLModel& model, const GaussianState& state,
    const PositionMeasurementSpec& spec, const TimeGrid& grid,
    const SaddleOptions& opt = {}) {
  spec.validate();
  if (!(spec.grid == grid)) throw CompositionError("saddle law: grid mismatch");
  const auto wm = spec.weight_vector();
  SaddleData sd = solve_saddle(model, state, grid, spec.tau_m, wm, opt);
  const double tau = spec.tau_m;
  const double dt = grid.dt;
  const std::vector<int> nodes = spec.readout_nodes();
  const auto nr = static_cast<Eigen::Index>(nodes.size());

  const double osym = (sd.Omega_check - sd.Omega_check.transpose()).cwiseAbs().maxCoeff();
  if (osym > 1e-9 * (1.0 + sd.Omega_check.cwiseAbs().maxCoeff())) {
    throw AssemblyError("saddle law: Omega-check not symmetric");
  }
  Eigen::FullPivLU<Eigen::Matrix3cd> olu(sd.Omega_check);
  if (!olu.isInvertible() || olu.rcond() < 1e-13) {
    throw AssemblyError("saddle law: Omega-check singular");
  }
  const MatrixXcd OinvM = olu.solve(sd.source);

  MatrixXcd Gam(nr, nr);
  for (Eigen::Index a = 0; a < nr; ++a) {
    for (Eigen::Index b = 0; b < nr; ++b) {
      const int s = nodes[a], t = nodes[b];
      Gam(a, b) = wm[s] * wm[t] * dt * dt * sd.G_block(s, t).sum();
    }
  }
  MatrixXcd Rc = -(0.25 / tau) * (Gam + Gam.transpose());
  for (Eigen::Index a = 0; a < nr; ++a) Rc(a, a) += wm[nodes[a]] * dt / tau;
  Rc += sd.source.transpose() * OinvM;

  Eigen::Vector3cd ct;
  ct << state.c(0), state.c(1), 0.0;
  const VectorXcd bc = kI * (sd.source.transpose() * olu.solve(ct));

  ReadoutLaw law = detail::make_law(grid, nodes, Rc, bc, std::nullopt);
  law.gh_data = GhData{sd.source.transpose(), OinvM};
  return {std::move(law), std::move(sd)};
}

}  // namespace funcproc

#endif  // FUNCPROC_SADDLE_HPP_
