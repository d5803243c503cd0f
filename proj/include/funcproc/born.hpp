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

#ifndef FUNCPROC_BORN_HPP_
#define FUNCPROC_BORN_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"
#include "funcproc/measurement.hpp"
#include "funcproc/process.hpp"

namespace funcproc {

// Low-rank factors of the boundary correction to R: R_corr = g * h.
struct GhData {
  MatrixXcd g;  // n x 3
  MatrixXcd h;  // 3 x n
};

// Pr(r) = exp(-1/2 r^T R r + b^T r - logZ) over the readout nodes.
struct ReadoutLaw {
  TimeGrid grid;
  std::vector<int> nodes;
  MatrixXd R;
  VectorXd b;
  double logZ = 0.0;
  double imag_residual = 0.0;     // max |Im| of the raw exponent / max |R|
  double log_mass_residual = 0.0; // raw log-prefactor + logZ (0 if normalized)
  std::optional<GhData> gh_data;

  bool valid() const {
    return imag_residual <= 1e-8 * std::max(1.0, R.cwiseAbs().maxCoeff());
  }

  double log_density(const VectorXd& r) const {
    return -0.5 * r.dot(R * r) + b.dot(r) - logZ;
  }

  // Density at the readout-node values of a full-grid record.
  double log_density(const ReadoutRecord& rec) const {
    VectorXd r(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) r(i) = rec.values.at(nodes[i]);
    return log_density(r);
  }
};

namespace detail {

inline double gaussian_log_mass(const MatrixXd& R, const VectorXd& b) {
  Eigen::LLT<MatrixXd> llt(R);
  const VectorXd y = llt.solve(b);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < R.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * b.dot(y) + 0.5 * R.rows() * std::log(2.0 * kPi) - 0.5 * logdet;
}

// Splits a complex Gaussian exponent over readouts into a real law.
inline ReadoutLaw make_law(const TimeGrid& grid, std::vector<int> nodes,
                           const MatrixXcd& Kc, const VectorXcd& bc,
                           std::optional<cplx> c_raw) {
  ReadoutLaw law;
  law.grid = grid;
  law.nodes = std::move(nodes);
  MatrixXd R = Kc.real();
  law.R = 0.5 * (R + R.transpose());
  law.b = bc.real();
  const double scale = std::max(law.R.cwiseAbs().maxCoeff(), 1e-300);
  double im = std::max(Kc.imag().cwiseAbs().maxCoeff(), bc.imag().cwiseAbs().maxCoeff());
  if (c_raw) im = std::max(im, std::abs(wrap_log(cplx(0, c_raw->imag())).imag()));
  law.imag_residual = im / scale;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(law.R, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0)) {
    throw ValidityError("readout law not normalizable (min eigenvalue " +
                            std::to_string(lmin) + ")",
                        lmin);
  }
  law.logZ = gaussian_log_mass(law.R, law.b);
  if (c_raw) law.log_mass_residual = c_raw->real() + law.logZ;
  return law;
}

}  // namespace detail

// Born rule by exact marginalization of M * W with the final identification.
inline ReadoutLaw compute_readout_law_direct(const GaussianFunctional& W,
                                             const GaussianFunctional& M) {
  if (W.boundary() != Boundary::closed) {
    throw PreconditionError("direct law: W must carry the closed-future flag");
  }
  if (!W.grid()) throw PreconditionError("direct law: W has no grid");
  const TimeGrid& g = *W.grid();
  GaussianFunctional F = multiply(W, M);
  F = pin_equal(F, ket(g.n_steps), bra(g.n_steps));
  std::vector<VarLabel> traj;
  std::vector<int> nodes;
  for (const auto& v : F.layout()) {
    if (v.kind == VarKind::readout) nodes.push_back(v.node);
    else traj.push_back(v);
  }
  F = marginalize(F, traj);
  return detail::make_law(g, nodes, F.K(), F.b(), F.c());
}

struct RecordMoments {
  MatrixXd covariance;
  VectorXd mean;
};

// Discrete covariance R^{-1} and mean R^{-1} b of the law.
inline RecordMoments readout_covariance(const ReadoutLaw& law) {
  Eigen::LLT<MatrixXd> llt(law.R);
  if (llt.info() != Eigen::Success) {
    throw ValidityError("readout_covariance: R not positive definite", 0.0);
  }
  RecordMoments m;
  m.covariance = llt.solve(MatrixXd::Identity(law.R.rows(), law.R.cols()));
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  m.mean = llt.solve(law.b);
  return m;
}

inline std::vector<ReadoutRecord> sample_records(const ReadoutLaw& law, int n,
                                                 std::uint64_t seed) {
  std::vector<ReadoutRecord> out;
  if (n <= 0) return out;
  const RecordMoments mom = readout_covariance(law);
  const auto d = mom.covariance.rows();
  MatrixXd L;
  Eigen::LLT<MatrixXd> llt(mom.covariance);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(mom.covariance);
    const double lmax = es.eigenvalues().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * lmax) {
      throw ValidityError("sample_records: covariance has negative eigenvalue",
                          es.eigenvalues().minCoeff());
    }
    L = es.eigenvectors() *
        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd z(d);
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    const VectorXd r = mom.mean + L * z;
    ReadoutRecord rec{law.grid, std::vector<double>(law.grid.n_nodes(), 0.0)};
    for (std::size_t i = 0; i < law.nodes.size(); ++i) rec.values[law.nodes[i]] = r(i);
    out.push_back(std::move(rec));
  }
  return out;
}

struct ConditionalState {
  GaussianState state;  // exponent data on (x_f, x-bar_f)
  cplx log_scale = 0.0; // constant of the unnormalized kernel
  double trace = 0.0;
};

// Unnormalized post-measurement state on the final node pair.
inline ConditionalState conditional_state(const GaussianFunctional& W,
                                          const GaussianFunctional& M) {
  if (W.boundary() != Boundary::open_future) {
    throw PreconditionError("conditional_state: W must be open-future");
  }
  for (const auto& v : M.layout()) {
    if (v.kind == VarKind::readout) {
      throw PreconditionError("conditional_state: M must carry a numeric record");
    }
  }
  const int N = W.grid()->n_steps;
  GaussianFunctional F = multiply(W, M);
  std::vector<VarLabel> rest;
  for (const auto& v : F.layout()) {
    if (!(v == ket(N) || v == bra(N))) rest.push_back(v);
  }
  F = marginalize(F, rest);
  ConditionalState out;
  out.state.xi = F.K();
  out.state.c = F.b();
  out.log_scale = F.c();
  const auto tr = marginalize_all(pin_equal(F, ket(N), bra(N)));
  out.trace = std::exp(tr.c()).real();
  return out;
}

struct StateMoments {
  double x = 0, x2 = 0, p = 0, p2 = 0;
};

// Position and momentum moments of a (possibly unnormalized) Gaussian kernel.
inline StateMoments state_moments(const GaussianState& s) {
  const double a = s.diag_quadratic();
  const double l = s.diag_linear();
  StateMoments m;
  m.x = l / a;
  const double var = 1.0 / a;
  m.x2 = var + m.x * m.x;
  // d/dx of the exponent at x-bar = x is c1 - (Xi11 + Xi12) x.
  const cplx q = s.xi(0, 0) + s.xi(0, 1);
  m.p = (-kI * (s.c(0) - q * m.x)).real();
  const cplx u = s.c(0) - q * m.x;
  m.p2 = (s.xi(0, 0) - u * u - q * q * var).real();
  return m;
}

// Limit tau_m -> 0: weight rho(r_0, r_0) times a pure phase.
struct ProjectiveLaw {
  TimeGrid grid;
  double weight_quadratic = 0.0;  // rho(r0, r0) = exp(-a/2 r0^2 + l r0 + n0)
  double weight_linear = 0.0;
  double weight_log_norm = 0.0;
  MatrixXcd phase_kernel;  // Pr ~ exp(-(i/2) r^T P r)

  cplx log_value(const VectorXd& r) const {
    const VectorXcd rc = r.cast<cplx>();
    return -0.5 * weight_quadratic * r(0) * r(0) + weight_linear * r(0) +
           weight_log_norm - 0.5 * kI * bilinear(rc, phase_kernel * rc);
  }

  // Real exponent kernel implied by |Pr|: Re of i P plus the r_0 weight.
  MatrixXd modulus_kernel() const {
    MatrixXd K = (kI * phase_kernel).real();
    K(0, 0) += weight_quadratic;
    return K;
  }
  VectorXd modulus_drift() const {
    VectorXd b = VectorXd::Zero(phase_kernel.rows());
    b(0) = weight_linear;
    return b;
  }
};

inline ProjectiveLaw projective_limit_law(const CLModel& model,
                                          const GaussianState& state,
                                          const TimeGrid& grid) {
  model.validate(grid);
  state.validate();
  ProjectiveLaw law;
  law.grid = grid;
  law.weight_quadratic = state.diag_quadratic();
  law.weight_linear = state.diag_linear();
  law.weight_log_norm = -state.log_normalizer();
  const auto w = trapezoid_weights(grid);
  const int n = grid.n_nodes();
  law.phase_kernel = MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      law.phase_kernel(k, l) = w[k] * w[l] * grid.dt * grid.dt * model.kernel.at(k, l).sum();
    }
  }
  return law;
}

// Relative distance of a finite-tau law from the projective modulus kernel.
inline double projective_relative_error(const ReadoutLaw& law, const ProjectiveLaw& lim) {
  const MatrixXd K = lim.modulus_kernel();
  const VectorXd b = lim.modulus_drift();
  if (law.R.rows() != K.rows()) {
    throw CompositionError("projective_relative_error: law must read out every node");
  }
  const double eK = (law.R - K).norm() / K.norm();
  const double db = (law.b - b).norm();
  return std::max(eK, b.norm() > 0 ? db / b.norm() : db);
}

}  // namespace funcproc

#endif  // FUNCPROC_BORN_HPP_
