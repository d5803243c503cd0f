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

#ifndef FUNCPROC_FOCK_HPP_
#define FUNCPROC_FOCK_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "funcproc/born.hpp"
#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"
#include "funcproc/process.hpp"

namespace funcproc {

inline constexpr int kFockDenseLimit = 4096;

// System oscillator (m, omega0) coupled by lambda x x_E to one bath mode and
// by g x p_M to a pointer; the pointer position is read out in bins.
struct FockParams {
  double m = 1.0;
  double omega0 = 1.0;
  double omega_E = 1.0;
  double lambda = 0.0;
  std::vector<double> lambda_schedule;  // per step; overrides lambda when set
  double g = 0.0;
  double omega_M = 1.0;  // pointer ground-state variance 1/(2 omega_M)
  double x0 = 0.0, p0 = 0.0;  // coherent initial system state
  int d_S = 16, d_E = 16, d_M = 8;
  std::vector<double> bin_edges;  // interior pointer-position edges, increasing
};

struct FockModel {
  int d_S = 0, d_E = 0, d_M = 0;
  std::vector<MatrixXcd> H_SE;  // one per step, or a single constant entry
  MatrixXcd H_SM;
  MatrixXcd rho_SE;
  MatrixXcd sigma_M;
  std::vector<MatrixXcd> povm;
  MatrixXcd x_S, p_S;

  const MatrixXcd& H_SE_at(int step) const {
    return H_SE.size() == 1 ? H_SE.front() : H_SE.at(static_cast<std::size_t>(step));
  }

  void validate() const {
    auto herm = [](const MatrixXcd& H, const char* what) {
      if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw InvariantError(std::string("FockModel: ") + what + " not Hermitian");
      }
    };
    auto density = [&](const MatrixXcd& r, const char* what) {
      herm(r, what);
      if (std::abs(r.trace() - 1.0) > 1e-10) {
        throw InvariantError(std::string("FockModel: ") + what + " trace is not 1");
      }
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r);
      if (es.eigenvalues().minCoeff() < -1e-10) {
        throw InvariantError(std::string("FockModel: ") + what + " not PSD");
      }
    };
    if (H_SE.empty()) throw InvariantError("FockModel: H_SE schedule empty");
    for (const auto& H : H_SE) herm(H, "H_SE");
    herm(H_SM, "H_SM");
    density(rho_SE, "rho_SE");
    density(sigma_M, "sigma_M");
    MatrixXcd sum = MatrixXcd::Zero(d_M, d_M);
    for (const auto& E : povm) {
      herm(E, "effect");
      sum += E;
    }
    if ((sum - MatrixXcd::Identity(d_M, d_M)).cwiseAbs().maxCoeff() > 1e-10) {
      throw InvariantError("FockModel: POVM incomplete");
    }
  }
};

namespace detail {

inline MatrixXcd annihilation(int d) {
  MatrixXcd a = MatrixXcd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline MatrixXcd position_op(int d, double m, double w) {
  const MatrixXcd a = annihilation(d);
  return (a + a.adjoint()) / std::sqrt(2.0 * m * w);
}

inline MatrixXcd momentum_op(int d, double m, double w) {
  const MatrixXcd a = annihilation(d);
  return kI * std::sqrt(m * w / 2.0) * (a.adjoint() - a);
}

inline MatrixXcd kron(const MatrixXcd& A, const MatrixXcd& B) {
  return Eigen::kroneckerProduct(A, B).eval();
}

// exp(-i H t) for Hermitian H.
inline MatrixXcd unitary_exp(const MatrixXcd& H, double t) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
  const VectorXcd ph = (-kI * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Gauss-Legendre rule on [a, b] via the Jacobi matrix eigenproblem.
inline std::pair<VectorXd, VectorXd> gauss_legendre(int n, double a, double b) {
  MatrixXd J = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
  VectorXd x = es.eigenvalues();
  VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  x = 0.5 * (b - a) * x.array() + 0.5 * (b + a);
  w *= 0.5 * (b - a);
  return {x, w};
}

// Oscillator eigenfunctions psi_0..psi_{d-1} at position q.
inline VectorXd hermite_functions(int d, double m, double w, double q) {
  VectorXd psi(d);
  const double xi = std::sqrt(m * w) * q;
  psi(0) = std::pow(m * w / kPi, 0.25) * std::exp(-0.5 * xi * xi);
  if (d > 1) psi(1) = std::sqrt(2.0) * xi * psi(0);
  for (int n = 2; n < d; ++n) {
    psi(n) = std::sqrt(2.0 / n) * xi * psi(n - 1) - std::sqrt((n - 1.0) / n) * psi(n - 2);
  }
  return psi;
}

// Truncated matrix of the projector onto positions in [a, b].
inline MatrixXcd position_bin(int d, double m, double w, double a, double b) {
  const int panels = 16, order = 32;
  MatrixXd E = MatrixXd::Zero(d, d);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const auto [x, wt] = gauss_legendre(order, a + p * h, a + (p + 1) * h);
    for (int i = 0; i < order; ++i) {
      const VectorXd psi = hermite_functions(d, m, w, x(i));
      E += wt(i) * psi * psi.transpose();
    }
  }
  return E.cast<cplx>();
}

inline MatrixXcd coherent_density(int d, double m, double w, double x0, double p0) {
  const cplx alpha = (std::sqrt(m * w) * x0 + kI * p0 / std::sqrt(m * w)) / std::sqrt(2.0);
  VectorXcd v(d);
  cplx term = 1.0;
  for (int n = 0; n < d; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    v(n) = term;
  }
  v.normalize();
  return v * v.adjoint();
}

}  // namespace detail

inline FockModel build_fock_model(const FockParams& P) {
  if (P.d_S < 2 || P.d_E < 2 || P.d_M < 2) {
    throw PreconditionError("build_fock_model: cutoffs must be >= 2");
  }
  if (!(P.m > 0) || !(P.omega0 > 0) || !(P.omega_E > 0) || !(P.omega_M > 0)) {
    throw DomainError("build_fock_model: masses and frequencies must be positive");
  }
  for (std::size_t i = 1; i < P.bin_edges.size(); ++i) {
    if (!(P.bin_edges[i] > P.bin_edges[i - 1])) {
      throw DomainError("build_fock_model: bin edges must increase");
    }
  }
  FockModel M;
  M.d_S = P.d_S;
  M.d_E = P.d_E;
  M.d_M = P.d_M;
  M.x_S = detail::position_op(P.d_S, P.m, P.omega0);
  M.p_S = detail::momentum_op(P.d_S, P.m, P.omega0);
  const MatrixXcd IS = MatrixXcd::Identity(P.d_S, P.d_S);
  const MatrixXcd IE = MatrixXcd::Identity(P.d_E, P.d_E);
  const MatrixXcd aS = detail::annihilation(P.d_S);
  const MatrixXcd aE = detail::annihilation(P.d_E);
  // Number-operator forms keep the truncated spectra exact.
  const MatrixXcd HS = P.omega0 * aS.adjoint() * aS;
  const MatrixXcd HE = P.omega_E * aE.adjoint() * aE;
  const MatrixXcd xE = detail::position_op(P.d_E, 1.0, P.omega_E);
  const MatrixXcd H0 = detail::kron(HS, IE) + detail::kron(IS, HE);
  const MatrixXcd XX = detail::kron(M.x_S, xE);
  if (P.lambda_schedule.empty()) {
    M.H_SE.push_back(H0 + P.lambda * XX);
  } else {
    for (double l : P.lambda_schedule) M.H_SE.push_back(H0 + l * XX);
  }
  M.H_SM = P.g * detail::kron(M.x_S, detail::momentum_op(P.d_M, 1.0, P.omega_M));
  M.rho_SE = detail::kron(detail::coherent_density(P.d_S, P.m, P.omega0, P.x0, P.p0),
                          detail::coherent_density(P.d_E, 1.0, P.omega_E, 0.0, 0.0));
  M.sigma_M = MatrixXcd::Zero(P.d_M, P.d_M);
  M.sigma_M(0, 0) = 1.0;
  // Outer bins reach far beyond the support of every retained level.
  const double far = (std::sqrt(2.0 * P.d_M + 1.0) + 12.0) / std::sqrt(P.omega_M);
  std::vector<double> edges{-far};
  for (double e : P.bin_edges) edges.push_back(std::clamp(e, -far, far));
  edges.push_back(far);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    M.povm.push_back(detail::position_bin(P.d_M, 1.0, P.omega_M, edges[i], edges[i + 1]));
  }
  M.validate();
  return M;
}

// Alternating exp(-i H_SM dt) exp(-i H_SE dt) over the grid, one meter.
inline MatrixXcd trotter_unitary(const FockModel& M, const TimeGrid& g) {
  const long dim = static_cast<long>(M.d_S) * M.d_E * M.d_M;
  if (dim > kFockDenseLimit) {
    throw SizeLimitError("trotter_unitary: dimension " + std::to_string(dim) + " exceeds " +
                         std::to_string(kFockDenseLimit));
  }
  const MatrixXcd IE = MatrixXcd::Identity(M.d_E, M.d_E);
  const MatrixXcd IM = MatrixXcd::Identity(M.d_M, M.d_M);
  // S (x) E (x) M ordering; H_SM acts on S (x) M.
  const MatrixXcd USM_SM = detail::unitary_exp(M.H_SM, g.dt);
  MatrixXcd USM = MatrixXcd::Zero(dim, dim);
  for (int s = 0; s < M.d_S; ++s) {
    for (int s2 = 0; s2 < M.d_S; ++s2) {
      const MatrixXcd blk = USM_SM.block(s * M.d_M, s2 * M.d_M, M.d_M, M.d_M);
      for (int e = 0; e < M.d_E; ++e) {
        USM.block((s * M.d_E + e) * M.d_M, (s2 * M.d_E + e) * M.d_M, M.d_M, M.d_M) = blk;
      }
    }
  }
  MatrixXcd U = MatrixXcd::Identity(dim, dim);
  for (int k = 0; k < g.n_steps; ++k) {
    const MatrixXcd USE = detail::kron(detail::unitary_exp(M.H_SE_at(k), g.dt), IM);
    U = USM * USE * U;
  }
  return U;
}

namespace detail {

// Pointer blocks V_m = <m| exp(-i H_SM dt) |sigma_M> acting on S, for a pure
// pointer state.
inline std::vector<MatrixXcd> pointer_blocks(const FockModel& M, double dt) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(M.sigma_M);
  const int top = static_cast<int>(M.d_M) - 1;
  if (std::abs(es.eigenvalues()(top) - 1.0) > 1e-10) {
    throw PreconditionError("oracle: pointer state must be pure");
  }
  const VectorXcd phi = es.eigenvectors().col(top);
  const MatrixXcd U = unitary_exp(M.H_SM, dt);
  std::vector<MatrixXcd> V(static_cast<std::size_t>(M.d_M), MatrixXcd::Zero(M.d_S, M.d_S));
  for (int s = 0; s < M.d_S; ++s) {
    for (int s2 = 0; s2 < M.d_S; ++s2) {
      const VectorXcd col = U.block(s * M.d_M, s2 * M.d_M, M.d_M, M.d_M) * phi;
      for (int m = 0; m < M.d_M; ++m) V[m](s, s2) = col(m);
    }
  }
  return V;
}

// Reorders an S (x) E operator to E-major indexing (e * d_S + s).
inline MatrixXcd to_e_major(const MatrixXcd& A, int dS, int dE) {
  std::vector<int> idx(static_cast<std::size_t>(dS * dE));
  for (int si = 0; si < dS; ++si) {
    for (int e = 0; e < dE; ++e) idx[si * dE + e] = e * dS + si;
  }
  MatrixXcd out(A.rows(), A.cols());
  for (int i = 0; i < dS * dE; ++i) {
    for (int j = 0; j < dS * dE; ++j) out(idx[i], idx[j]) = A(i, j);
  }
  return out;
}

// (K (x) 1) rho (K (x) 1)^dagger for rho in E-major order.
inline MatrixXcd apply_S(const MatrixXcd& K, const MatrixXcd& rho, int dS, int dE) {
  MatrixXcd tmp(rho.rows(), rho.cols());
  for (int e = 0; e < dE; ++e) tmp.middleRows(e * dS, dS).noalias() = K * rho.middleRows(e * dS, dS);
  const MatrixXcd Kd = K.adjoint();
  MatrixXcd out(rho.rows(), rho.cols());
  for (int e = 0; e < dE; ++e) out.middleCols(e * dS, dS).noalias() = tmp.middleCols(e * dS, dS) * Kd;
  return out;
}

inline MatrixXcd trace_env(const MatrixXcd& rho, int dS, int dE) {
  MatrixXcd out = MatrixXcd::Zero(dS, dS);
  for (int e = 0; e < dE; ++e) out += rho.block(e * dS, e * dS, dS, dS);
  return out;
}

// Kraus operators on S for one POVM effect with a fresh pointer.
inline std::vector<MatrixXcd> effect_kraus(const std::vector<MatrixXcd>& V, const MatrixXcd& E) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(E);
  std::vector<MatrixXcd> out;
  for (Eigen::Index mu = 0; mu < E.rows(); ++mu) {
    const double lam = es.eigenvalues()(mu);
    if (lam <= 1e-14) continue;
    MatrixXcd K = MatrixXcd::Zero(V[0].rows(), V[0].cols());
    for (std::size_t m = 0; m < V.size(); ++m) {
      K += std::conj(es.eigenvectors()(static_cast<Eigen::Index>(m), mu)) * V[m];
    }
    out.push_back(std::sqrt(lam) * K);
  }
  return out;
}

inline void check_oracle_size(const FockModel& M) {
  const long dim = static_cast<long>(M.d_S) * M.d_E * M.d_M;
  if (dim > kFockDenseLimit) {
    throw SizeLimitError("oracle: dimension " + std::to_string(dim) + " exceeds " +
                         std::to_string(kFockDenseLimit));
  }
}

}  // namespace detail

// Joint probabilities of binned pointer outcomes, one fresh pointer per step.
inline std::map<std::vector<int>, double> oracle_record_distribution(const FockModel& M,
                                                                     const TimeGrid& g) {
  detail::check_oracle_size(M);
  if (g.n_steps > 3) throw SizeLimitError("oracle_record_distribution: at most 3 steps");
  const int dS = M.d_S, dE = M.d_E;
  const auto V = detail::pointer_blocks(M, g.dt);
  std::vector<std::vector<MatrixXcd>> kraus;
  std::vector<MatrixXcd> effect_S;  // sum K^dagger K, used at the last step
  for (const auto& E : M.povm) {
    kraus.push_back(detail::effect_kraus(V, E));
    MatrixXcd F = MatrixXcd::Zero(dS, dS);
    for (const auto& K : kraus.back()) F += K.adjoint() * K;
    effect_S.push_back(F);
  }
  std::vector<MatrixXcd> U;
  for (int k = 0; k < g.n_steps; ++k) {
    U.push_back(detail::to_e_major(detail::unitary_exp(M.H_SE_at(k), g.dt), dS, dE));
  }
  std::map<std::vector<int>, double> out;
  std::vector<int> bins;
  std::function<void(const MatrixXcd&, int)> rec = [&](const MatrixXcd& rho, int step) {
    const MatrixXcd ev = U[step] * rho * U[step].adjoint();
    if (step + 1 == g.n_steps) {
      const MatrixXcd rs = detail::trace_env(ev, dS, dE);
      for (std::size_t j = 0; j < kraus.size(); ++j) {
        bins.push_back(static_cast<int>(j));
        out[bins] = (effect_S[j] * rs).trace().real();
        bins.pop_back();
      }
      return;
    }
    for (std::size_t j = 0; j < kraus.size(); ++j) {
      MatrixXcd next = MatrixXcd::Zero(rho.rows(), rho.cols());
      for (const auto& K : kraus[j]) next += detail::apply_S(K, ev, dS, dE);
      bins.push_back(static_cast<int>(j));
      rec(next, step + 1);
      bins.pop_back();
    }
  };
  if (g.n_steps > 0) rec(detail::to_e_major(M.rho_SE, dS, dE), 0);
  return out;
}

// Final system state with every pointer traced out.
inline MatrixXcd oracle_reduced_state(const FockModel& M, const TimeGrid& g) {
  detail::check_oracle_size(M);
  const int dS = M.d_S, dE = M.d_E;
  const auto V = detail::pointer_blocks(M, g.dt);
  MatrixXcd rho = detail::to_e_major(M.rho_SE, dS, dE);
  for (int k = 0; k < g.n_steps; ++k) {
    const MatrixXcd U = detail::to_e_major(detail::unitary_exp(M.H_SE_at(k), g.dt), dS, dE);
    const MatrixXcd ev = U * rho * U.adjoint();
    rho.setZero();
    for (const auto& K : V) rho += detail::apply_S(K, ev, dS, dE);
  }
  return detail::trace_env(rho, dS, dE);
}

inline StateMoments oracle_moments(const FockModel& M, const MatrixXcd& rho_S) {
  return {(rho_S * M.x_S).trace().real(), (rho_S * M.x_S * M.x_S).trace().real(),
          (rho_S * M.p_S).trace().real(), (rho_S * M.p_S * M.p_S).trace().real()};
}

// Probability of every bin tuple under a readout law; edges are interior
// readout-space edges shared by all nodes, outer bins are semi-infinite.
inline std::map<std::vector<int>, double> law_bin_distribution(const ReadoutLaw& law,
                                                               const std::vector<double>& edges,
                                                               int order = 24) {
  const auto mom = readout_covariance(law);
  const auto d = static_cast<int>(law.nodes.size());
  if (d > 3) throw SizeLimitError("law_bin_distribution: at most 3 readout nodes");
  const int nb = static_cast<int>(edges.size()) + 1;
  // Per-node quadrature over each bin.
  std::vector<std::vector<std::pair<VectorXd, VectorXd>>> rules(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double sd = std::sqrt(mom.covariance(i, i));
    std::vector<double> e{mom.mean(i) - 14.0 * sd};
    for (double x : edges) e.push_back(x);
    e.push_back(mom.mean(i) + 14.0 * sd);
    for (int j = 0; j < nb; ++j) {
      const double lo = std::min(e[j], e[j + 1]), hi = std::max(e[j], e[j + 1]);
      rules[i].push_back(detail::gauss_legendre(order, lo, std::max(hi, lo)));
    }
  }
  std::map<std::vector<int>, double> out;
  std::vector<int> bins(static_cast<std::size_t>(d), 0);
  VectorXd r(d);
  std::function<double(int, double)> integrate = [&](int i, double wacc) -> double {
    if (i == d) return wacc * std::exp(law.log_density(r));
    double s = 0.0;
    const auto& [x, w] = rules[i][bins[i]];
    for (Eigen::Index q = 0; q < x.size(); ++q) {
      r(i) = x(q);
      s += integrate(i + 1, wacc * w(q));
    }
    return s;
  };
  std::function<void(int)> loop = [&](int i) {
    if (i == d) {
      out[bins] = integrate(0, 1.0);
      return;
    }
    for (int j = 0; j < nb; ++j) {
      bins[i] = j;
      loop(i + 1);
    }
  };
  loop(0);
  return out;
}

inline double total_variation(const std::map<std::vector<int>, double>& a,
                              const std::map<std::vector<int>, double>& b) {
  double s = 0.0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    s += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b) {
    if (a.find(k) == a.end()) s += std::abs(v);
  }
  return 0.5 * s;
}

// Memory kernel of one bath mode (unit mass, ground state) coupled by
// lambda x x_E, as 2x2 blocks over (x, x-bar).
inline MemoryKernel bath_memory_kernel(const TimeGrid& g, double lambda, double omega_E) {
  MemoryKernel K = MemoryKernel::zero(g);
  const double a0 = lambda * lambda / (2.0 * omega_E);
  for (int k = 0; k <= g.n_steps; ++k) {
    for (int l = 0; l <= k; ++l) {
      const cplx a = a0 * std::exp(-kI * omega_E * (g.node(k) - g.node(l)));
      Matrix2cd C;
      C << a, -std::conj(a), -a, std::conj(a);
      if (k == l) C = 0.5 * (C + C.transpose()).eval();
      K.at(k, l) = -kI * C;
      K.at(l, k) = (-kI * C).transpose();
    }
  }
  return K;
}

// Gaussian-engine description of a Fock configuration: a grid refined
// `refine` times per oracle step, pointer readouts at step ends carrying
// weight refine, and tau_m = sigma_M^2 / (g^2 dt_step).
struct EngineCounterpart {
  TimeGrid grid;
  CLModel model;
  GaussianState state;
  PositionMeasurementSpec spec;
  double readout_scale = 1.0;  // pointer position = readout_scale * r
};

inline EngineCounterpart engine_counterpart(const FockParams& P, const TimeGrid& steps,
                                            int refine) {
  if (!P.lambda_schedule.empty()) {
    throw PreconditionError("engine_counterpart: time-dependent coupling not supported");
  }
  if (!(P.g > 0)) throw PreconditionError("engine_counterpart: pointer coupling must be > 0");
  if (refine < 1) throw DomainError("engine_counterpart: refine must be >= 1");
  EngineCounterpart ec;
  ec.grid = make_grid(steps.t_i, steps.t_f, steps.n_steps * refine);
  ec.model = CLModel{P.m, P.omega0, bath_memory_kernel(ec.grid, P.lambda, P.omega_E)};
  ec.state = GaussianState::coherent(P.m, P.omega0, P.x0, P.p0);
  std::vector<double> w(static_cast<std::size_t>(ec.grid.n_nodes()), 0.0);
  for (int k = 1; k <= steps.n_steps; ++k) w[static_cast<std::size_t>(k * refine)] = refine;
  const double sigma2 = 1.0 / (2.0 * P.omega_M);
  ec.spec = PositionMeasurementSpec{sigma2 / (P.g * P.g * steps.dt), ec.grid, w};
  ec.readout_scale = P.g * steps.dt;
  return ec;
}

// Final state with all readouts integrated out.
inline StateMoments engine_unconditional_moments(const EngineCounterpart& ec) {
  GaussianFunctional M = build_position_measurement_symbolic(ec.spec);
  std::vector<VarLabel> r;
  for (const auto& v : M.layout()) {
    if (v.kind == VarKind::readout) r.push_back(v);
  }
  M = marginalize(M, r);
  const auto W = build_cl_process(ec.model, ec.grid, ec.state, Boundary::open_future);
  return state_moments(conditional_state(W, M).state);
}

inline ReadoutLaw engine_record_law(const EngineCounterpart& ec) {
  return compute_readout_law_direct(
      build_cl_process(ec.model, ec.grid, ec.state, Boundary::closed),
      build_position_measurement_symbolic(ec.spec));
}

// Binned engine distribution over the pointer-position edges of P.
inline std::map<std::vector<int>, double> engine_bin_distribution(const EngineCounterpart& ec,
                                                                  const FockParams& P) {
  std::vector<double> edges;
  for (double e : P.bin_edges) edges.push_back(e / ec.readout_scale);
  return law_bin_distribution(engine_record_law(ec), edges);
}

}  // namespace funcproc

#endif  // FUNCPROC_FOCK_HPP_
