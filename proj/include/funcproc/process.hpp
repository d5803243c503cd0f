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

#ifndef FUNCPROC_PROCESS_HPP_
#define FUNCPROC_PROCESS_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"

namespace funcproc {

using Eigen::Matrix2cd;
using Eigen::Vector2cd;

// 2x2-block double-time kernel A~(t_k, t_l) over (x, x-bar).
struct MemoryKernel {
  TimeGrid grid;
  std::vector<Matrix2cd> blocks;  // row-major over (k, l)

  static MemoryKernel zero(const TimeGrid& g) {
    const auto n = static_cast<std::size_t>(g.n_nodes());
    return {g, std::vector<Matrix2cd>(n * n, Matrix2cd::Zero())};
  }

  // eta * exp(-gamma |t - s|) * B.
  static MemoryKernel exponential(const TimeGrid& g, double eta, double gamma,
                                  const Matrix2cd& B) {
    MemoryKernel K = zero(g);
    for (int k = 0; k <= g.n_steps; ++k) {
      for (int l = 0; l <= g.n_steps; ++l) {
        K.at(k, l) = eta * std::exp(-gamma * std::abs(g.node(k) - g.node(l))) * B;
      }
    }
    return K;
  }

  Matrix2cd& at(int k, int l) {
    return blocks[static_cast<std::size_t>(k) * grid.n_nodes() + l];
  }
  const Matrix2cd& at(int k, int l) const {
    return blocks[static_cast<std::size_t>(k) * grid.n_nodes() + l];
  }

  bool is_zero() const {
    for (const auto& b : blocks) {
      if (b.cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
  }

  double symmetry_residual() const {
    double r = 0.0;
    for (int k = 0; k <= grid.n_steps; ++k) {
      for (int l = 0; l <= grid.n_steps; ++l) {
        r = std::max(r, (at(l, k) - at(k, l).transpose()).cwiseAbs().maxCoeff());
      }
    }
    return r;
  }
};

// -i [[1,-1],[-1,1]]: a real, decaying exponent in the branch difference.
inline Matrix2cd noise_structure() {
  Matrix2cd B;
  B << 1.0, -1.0, -1.0, 1.0;
  return -kI * B;
}

inline Matrix2cd ones_structure() { return Matrix2cd::Ones(); }

struct CLModel {
  double m = 1.0;
  double omega0 = 0.0;
  MemoryKernel kernel;

  void validate(const TimeGrid& g) const {
    if (!(m > 0) || !std::isfinite(m)) throw InvariantError("CLModel: m must be > 0");
    if (!(omega0 >= 0) || !std::isfinite(omega0)) {
      throw InvariantError("CLModel: omega0 must be >= 0");
    }
    if (!(kernel.grid == g)) throw CompositionError("CLModel: kernel grid mismatch");
  }
};

// rho(x, x-bar) proportional to exp(-1/2 x^T Xi x + c^T x).
struct GaussianState {
  Matrix2cd xi = Matrix2cd::Identity();
  Vector2cd c = Vector2cd::Zero();

  // Coherent state of an oscillator (m, omega) centred at (x0, p0).
  static GaussianState coherent(double m, double omega, double x0 = 0.0,
                                double p0 = 0.0) {
    GaussianState s;
    s.xi = m * omega * Matrix2cd::Identity();
    s.c << cplx(m * omega * x0, p0), cplx(m * omega * x0, -p0);
    return s;
  }

  void validate() const {
    const double h = std::max({std::abs(xi(0, 0) - std::conj(xi(1, 1))),
                               std::abs(xi(0, 1) - std::conj(xi(1, 0))),
                               std::abs(c(0) - std::conj(c(1))),
                               std::abs(xi(0, 1) - xi(1, 0))});
    if (h > 1e-10) throw InvariantError("GaussianState: not Hermitian");
    if (!(xi.sum().real() > 0)) throw InvariantError("GaussianState: not normalizable");
  }

  // Quadratic and linear coefficients of the diagonal rho(x, x).
  double diag_quadratic() const { return xi.sum().real(); }
  double diag_linear() const { return c.sum().real(); }

  // -log of int rho(x, x) dx for the unscaled exponent.
  double log_normalizer() const {
    const double a = diag_quadratic();
    const double l = diag_linear();
    return 0.5 * l * l / a + 0.5 * std::log(2.0 * kPi / a);
  }
};

// Doubled free action exp(i S0) over steps inside [first, last].
inline GaussianFunctional build_free_action(const CLModel& model,
                                            const TimeGrid& grid, int first,
                                            int last) {
  if (first < 0 || last > grid.n_steps || first > last) {
    throw DomainError("build_free_action: bad node range");
  }
  if (!(model.m > 0)) throw InvariantError("CLModel: m must be > 0");
  auto F = GaussianFunctional::zeros(trajectory_layout(first, last), grid);
  const double dt = grid.dt;
  const double m = model.m;
  const cplx kin = -kI * m / dt;
  const cplx step_c = 0.5 * std::log(m / (2.0 * kPi * dt));
  for (int k = first; k < last; ++k) {
    for (Branch br : {Branch::ket, Branch::bra}) {
      const cplx s = br == Branch::ket ? kin : std::conj(kin);
      const VarLabel a{br, k, VarKind::trajectory};
      const VarLabel b{br, k + 1, VarKind::trajectory};
      F.add_K(a, a, s);
      F.add_K(b, b, s);
      F.add_K(a, b, -s);
      F.add_c(br == Branch::ket ? step_c - kI * (kPi / 4) : step_c + kI * (kPi / 4));
    }
  }
  if (model.omega0 != 0.0) {
    const auto w = trapezoid_weights(grid.n_nodes(), first, last);
    const double mw2 = m * model.omega0 * model.omega0;
    for (int k = first; k <= last; ++k) {
      F.add_K(ket(k), ket(k), kI * mw2 * w[k] * dt);
      F.add_K(bra(k), bra(k), -kI * mw2 * w[k] * dt);
    }
  }
  return F;
}

inline GaussianFunctional build_free_action(const CLModel& model,
                                            const TimeGrid& grid) {
  return build_free_action(model, grid, 0, grid.n_steps);
}

// exp(i S^FV) with double-time quadrature weights w (default trapezoid).
inline GaussianFunctional build_memory_action(
    const MemoryKernel& kernel, const TimeGrid& grid,
    std::optional<std::vector<double>> weights = std::nullopt) {
  if (!(kernel.grid == grid)) {
    throw CompositionError("build_memory_action: kernel grid mismatch");
  }
  if (kernel.symmetry_residual() > 1e-10) {
    throw InvariantError("build_memory_action: kernel violates A(s,t)=A(t,s)^T");
  }
  const auto w = weights ? *weights : trapezoid_weights(grid);
  if (static_cast<int>(w.size()) != grid.n_nodes()) {
    throw DomainError("build_memory_action: weight length mismatch");
  }
  auto F = GaussianFunctional::zeros(trajectory_layout(grid), grid);
  if (kernel.is_zero()) return GaussianFunctional::constant();
  const double dt2 = grid.dt * grid.dt;
  MatrixXcd K = MatrixXcd::Zero(F.size(), F.size());
  for (int k = 0; k <= grid.n_steps; ++k) {
    const int ik[2] = {F.index(ket(k)), F.index(bra(k))};
    for (int l = 0; l <= grid.n_steps; ++l) {
      const int il[2] = {F.index(ket(l)), F.index(bra(l))};
      const Matrix2cd blk = kI * w[k] * w[l] * dt2 * kernel.at(k, l);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) K(ik[a], il[b]) += blk(a, b);
      }
    }
  }
  // Drop nodes the weights exclude so the functional stays local.
  std::vector<VarLabel> keep;
  std::vector<int> idx;
  for (int k = 0; k <= grid.n_steps; ++k) {
    if (w[k] == 0.0) continue;
    keep.push_back(ket(k));
    keep.push_back(bra(k));
  }
  Layout layout(keep);
  for (const auto& v : layout) idx.push_back(F.index(v));
  const auto n = static_cast<Eigen::Index>(idx.size());
  MatrixXcd Kr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) Kr(i, j) = K(idx[i], idx[j]);
  }
  return GaussianFunctional(std::move(layout), std::move(Kr),
                            VectorXcd::Zero(n), 0.0, grid);
}

// Normalized rho on (ket, node), (bra, node).
inline GaussianFunctional state_functional(const GaussianState& state,
                                           const TimeGrid& grid, int node = 0) {
  state.validate();
  auto F = GaussianFunctional::zeros(trajectory_layout(node, node), grid);
  const VarLabel a = ket(node), b = bra(node);
  F.add_K(a, a, state.xi(0, 0));
  F.add_K(b, b, state.xi(1, 1));
  F.add_K(a, b, state.xi(0, 1));
  F.add_b(a, state.c(0));
  F.add_b(b, state.c(1));
  F.add_c(-state.log_normalizer());
  return F;
}

inline GaussianFunctional build_cl_process(const CLModel& model,
                                           const TimeGrid& grid,
                                           const GaussianState& state,
                                           Boundary boundary) {
  model.validate(grid);
  auto W = multiply(build_free_action(model, grid),
                    build_memory_action(model.kernel, grid));
  if (boundary != Boundary::open_boundary) {
    W = multiply(W, state_functional(state, grid, 0));
  }
  W.set_grid(grid);
  W.set_boundary(boundary);
  return W;
}

struct MarkovSegment {
  CLModel model;  // kernel must vanish
  double t_begin = 0.0;
  double t_end = 0.0;
};

// Product of open-boundary free segments tiling the grid.
inline GaussianFunctional build_markovian_process(
    const TimeGrid& grid, const std::vector<MarkovSegment>& segments) {
  if (segments.empty()) throw DomainError("markovian: no segments");
  auto W = GaussianFunctional::constant();
  int expect = 0;
  for (const auto& s : segments) {
    if (!(s.model.kernel.grid == grid)) {
      throw CompositionError("markovian: segment grid mismatch");
    }
    if (!s.model.kernel.is_zero()) {
      throw PreconditionError("markovian: segment kernel must vanish");
    }
    const int a = node_of_time(grid, s.t_begin);
    const int b = node_of_time(grid, s.t_end);
    if (a != expect || b <= a) throw DomainError("markovian: segments do not tile the grid");
    W = multiply(W, build_free_action(s.model, grid, a, b));
    expect = b;
  }
  if (expect != grid.n_steps) throw DomainError("markovian: segments do not tile the grid");
  W.set_grid(grid);
  W.set_boundary(Boundary::open_boundary);
  return W;
}

}  // namespace funcproc

#endif  // FUNCPROC_PROCESS_HPP_
