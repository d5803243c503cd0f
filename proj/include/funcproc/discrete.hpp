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

#ifndef FUNCPROC_DISCRETE_HPP_
#define FUNCPROC_DISCRETE_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"
#include "funcproc/measurement.hpp"
#include "funcproc/process.hpp"
#include "funcproc/props.hpp"
#include "json.hpp"

namespace funcproc {

enum class IntervalRole { operation, process };

// Consecutive intervals [cuts[j], cuts[j+1]] with alternating roles.
struct IntervalPartition {
  TimeGrid grid;
  std::vector<int> cuts;
  IntervalRole first_role = IntervalRole::operation;

  int n_intervals() const { return static_cast<int>(cuts.size()) - 1; }

  IntervalRole role(int j) const {
    if (j % 2 == 0) return first_role;
    return first_role == IntervalRole::operation ? IntervalRole::process
                                                 : IntervalRole::operation;
  }

  void validate() const {
    if (cuts.size() < 2) throw DomainError("IntervalPartition: need at least one interval");
    if (cuts.front() != 0 || cuts.back() != grid.n_steps) {
      throw DomainError("IntervalPartition: cuts must tile the grid");
    }
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      if (cuts[j] <= cuts[j - 1]) throw DomainError("IntervalPartition: cuts must increase");
    }
  }

  // Truncation at cut index j (keeps intervals 0..j-1).
  IntervalPartition truncated(int j) const {
    if (j < 1 || j > n_intervals()) throw DomainError("IntervalPartition: bad truncation");
    return {truncate_grid(grid, cuts[j]),
            std::vector<int>(cuts.begin(), cuts.begin() + j + 1), first_role};
  }

  friend bool operator==(const IntervalPartition& a, const IntervalPartition& b) {
    return a.grid == b.grid && a.cuts == b.cuts && a.first_role == b.first_role;
  }
};

enum class KernelRole { process, tester_element };

struct DiscreteGaussianKernel {
  KernelRole role = KernelRole::process;
  IntervalPartition partition;
  GaussianFunctional F;         // over slot variables; last slot single if identified
  bool final_identified = false;  // an id(x-bar, x) factor at the last cut
  double constancy_residual = 0.0;

  std::vector<VarLabel> slot_labels() const {
    std::vector<VarLabel> out;
    for (int s : partition.cuts) {
      out.push_back(ket(s));
      out.push_back(bra(s));
    }
    return out;
  }
};

// Sum of per-interval trapezoid weights over intervals of one role.
inline std::vector<double> role_weights(const IntervalPartition& P, IntervalRole r) {
  std::vector<double> w(static_cast<std::size_t>(P.grid.n_nodes()), 0.0);
  for (int j = 0; j < P.n_intervals(); ++j) {
    if (P.role(j) != r) continue;
    const auto wj = trapezoid_weights(P.grid.n_nodes(), P.cuts[j], P.cuts[j + 1]);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += wj[k];
  }
  return w;
}

// Process functional with dynamics (free motion and memory) only on the
// process intervals; the initial state sits at the first node.
inline GaussianFunctional build_interleaved_process(const CLModel& model,
                                                    const GaussianState& state,
                                                    const IntervalPartition& P,
                                                    Boundary boundary = Boundary::closed) {
  P.validate();
  model.validate(P.grid);
  auto W = GaussianFunctional::constant();
  if (boundary != Boundary::open_boundary) W = state_functional(state, P.grid, 0);
  for (int j = 0; j < P.n_intervals(); ++j) {
    if (P.role(j) == IntervalRole::process) {
      W = multiply(W, build_free_action(model, P.grid, P.cuts[j], P.cuts[j + 1]));
    }
  }
  W = multiply(W, build_memory_action(model.kernel, P.grid,
                                      role_weights(P, IntervalRole::process)));
  W.set_grid(P.grid);
  W.set_boundary(boundary);
  return W;
}

// Free motion plus weak position measurement on the operation intervals.
// Without a record the readouts stay symbolic.
inline GaussianFunctional build_interleaved_operation(
    const CLModel& model, const IntervalPartition& P, double tau_m,
    const std::optional<ReadoutRecord>& record = std::nullopt) {
  P.validate();
  auto M = GaussianFunctional::constant();
  for (int j = 0; j < P.n_intervals(); ++j) {
    if (P.role(j) == IntervalRole::operation) {
      M = multiply(M, build_free_action(model, P.grid, P.cuts[j], P.cuts[j + 1]));
    }
  }
  const PositionMeasurementSpec spec{tau_m, P.grid, role_weights(P, IntervalRole::operation)};
  M = multiply(M, record ? build_position_measurement(spec, *record)
                         : build_position_measurement_symbolic(spec));
  M.set_grid(P.grid);
  return M;
}

namespace detail {

inline bool interior_of(const IntervalPartition& P, IntervalRole r, int node, int* which) {
  for (int j = 0; j < P.n_intervals(); ++j) {
    if (P.role(j) == r && node > P.cuts[j] && node < P.cuts[j + 1]) {
      *which = j;
      return true;
    }
  }
  return false;
}

inline double row_size(const GaussianFunctional& F, int i) {
  return std::max(F.K().row(i).cwiseAbs().maxCoeff(), std::abs(F.b()(i)));
}

// Integrates every variable, latest node first; variables that only enter
// through a phase linear in the others are integrated as delta functions.
inline cplx integrate_all(GaussianFunctional G) {
  while (G.size() > 0) {
    int idx = static_cast<int>(G.size()) - 1;
    for (int i = 0; i < static_cast<int>(G.size()); ++i) {
      const VarLabel& u = G.layout()[i];
      if (u.node > G.layout()[idx].node) idx = i;
    }
    const VarLabel pick = G.layout()[idx];
    const double scale = std::max(G.max_abs_K(), 1e-300);
    if (std::abs(G.K()(idx, idx)) <= 1e-12 * scale) {
      G = integrate_delta(G, pick).result;
    } else {
      G = marginalize(G, {pick});
    }
  }
  return G.c();
}

}  // namespace detail

// Keeps the partition cut variables, integrating the functional's own
// interval interiors. The complementary interiors must not be involved.
inline DiscreteGaussianKernel reconstruct_discrete(const GaussianFunctional& W,
                                                   const IntervalPartition& P,
                                                   KernelRole role,
                                                   double constancy_tol = 1e-10) {
  P.validate();
  if (W.grid() && !(*W.grid() == P.grid)) {
    throw CompositionError("reconstruct_discrete: grid differs from partition");
  }
  const IntervalRole own =
      role == KernelRole::process ? IntervalRole::process : IntervalRole::operation;
  const IntervalRole other =
      own == IntervalRole::process ? IntervalRole::operation : IntervalRole::process;
  GaussianFunctional F = W;
  const double scale = 1.0 + F.max_abs_K();
  double constancy = 0.0;
  std::vector<VarLabel> drop, integrate;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const VarLabel& v = F.layout()[i];
    if (v.kind == VarKind::readout) {
      throw PreconditionError("reconstruct_discrete: readout variables must be resolved first");
    }
    int j = -1;
    if (detail::interior_of(P, other, v.node, &j)) {
      const double r = detail::row_size(F, static_cast<int>(i)) / scale;
      constancy = std::max(constancy, r);
      if (r > constancy_tol) {
        throw PreconditionError("reconstruct_discrete: functional varies on interval [" +
                                std::to_string(P.cuts[j]) + ", " +
                                std::to_string(P.cuts[j + 1]) + "]");
      }
      drop.push_back(v);
    } else if (detail::interior_of(P, own, v.node, &j)) {
      integrate.push_back(v);
    }
  }
  for (const auto& v : drop) F = detail::drop_variable(F, F.index(v));
  if (!integrate.empty()) F = marginalize(F, integrate);

  DiscreteGaussianKernel out;
  out.role = role;
  out.partition = P;
  out.constancy_residual = constancy;
  const int last = P.cuts.back();
  const bool open = W.boundary() == Boundary::open_future ||
                    W.boundary() == Boundary::open_boundary;
  if (role == KernelRole::process && !open) {
    if (F.has(ket(last)) && F.has(bra(last))) F = pin_equal(F, ket(last), bra(last));
    out.final_identified = true;
  }
  out.F = std::move(F);
  return out;
}

// Gaussian pairing of a process kernel with a tester element.
inline double discrete_born(const DiscreteGaussianKernel& W, const DiscreteGaussianKernel& M) {
  if (W.role != KernelRole::process || M.role != KernelRole::tester_element) {
    throw PreconditionError("discrete_born: expects (process, tester element)");
  }
  if (!(W.partition == M.partition)) throw CompositionError("discrete_born: slot mismatch");
  GaussianFunctional G = multiply(W.F, M.F);
  const int last = W.partition.cuts.back();
  if (W.final_identified) {
    if (!G.has(ket(last)) && !G.has(bra(last))) {
      throw SingularMarginalError("discrete_born: final slot is unconstrained", INFINITY);
    }
    if (G.has(ket(last)) && G.has(bra(last))) {
      G = pin_equal(G, ket(last), bra(last));
    } else if (G.has(bra(last))) {
      G = relabel(G, bra(last), ket(last));
    }
  }
  const cplx v = std::exp(detail::integrate_all(G));
  if (std::abs(v.imag()) > 1e-8 * (1.0 + std::abs(v))) {
    throw InvariantError("discrete_born: pairing is not real");
  }
  return v.real();
}

// Cross couplings between slots of different process intervals (the
// initial slot forms its own group), relative to max |K|.
inline double factorization_residual(const DiscreteGaussianKernel& W) {
  const auto& P = W.partition;
  auto group = [&](int node) {
    for (int j = 0; j < P.n_intervals(); ++j) {
      if (P.role(j) == IntervalRole::process && node >= P.cuts[j] && node <= P.cuts[j + 1]) {
        return j;
      }
    }
    return -1;
  };
  double cross = 0.0;
  const auto& L = W.F.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t j = 0; j < L.size(); ++j) {
      if (group(L[i].node) != group(L[j].node)) {
        cross = std::max(cross, std::abs(W.F.K()(i, j)));
      }
    }
  }
  const double s = W.F.max_abs_K();
  return s > 0 ? cross / s : 0.0;
}

// Traces out the slots from the last one down, checking at every level that
// the remainder is the identity on the slot just reached times the kernel of
// the truncated configuration.
inline CheckReport discrete_causality_check(
    const DiscreteGaussianKernel& W,
    const std::function<DiscreteGaussianKernel(const IntervalPartition&)>& rebuild = {},
    double threshold = 1e-7) {
  if (W.role != KernelRole::process) {
    throw PreconditionError("discrete_causality_check: expects a process kernel");
  }
  std::map<std::string, double> d;
  if (!W.final_identified) {
    d["final_identity"] = 0.0;
    return CheckReport::make("discrete_causality", INFINITY, threshold, std::move(d));
  }
  d["final_identity"] = 1.0;
  const auto& P = W.partition;
  GaussianFunctional F = W.F;
  double worst = 0.0;
  for (int j = P.n_intervals(); j >= 1; --j) {
    const int s = P.cuts[j], sp = P.cuts[j - 1];
    double level = 0.0;
    if (F.has(bra(s))) throw InvariantError("discrete_causality_check: slot pair not identified");
    if (P.role(j - 1) == IntervalRole::process) {
      if (!F.has(ket(s))) {
        throw InvariantError("discrete_causality_check: process ignores its output slot");
      }
      const DeltaIntegration di = integrate_delta(F, ket(s));
      double a_piv = 0.0, a_partner = 0.0, stray = 0.0;
      for (const auto& [lab, a] : di.coefficients) {
        if (lab == di.pivot) {
          a_piv = a;
        } else if (lab == partner(di.pivot)) {
          a_partner = a;
        } else {
          stray = std::max(stray, std::abs(a));
        }
      }
      if (!(di.pivot == ket(sp) || di.pivot == bra(sp))) {
        throw InvariantError("discrete_causality_check: trace does not identify the input slot");
      }
      level = std::max({di.quadratic_residual, di.real_part_residual,
                        stray / std::abs(a_piv), std::abs(a_piv + a_partner) / std::abs(a_piv),
                        std::abs(di.constant) / std::abs(a_piv)});
      F = di.result;
      if (di.pivot == ket(sp)) F = relabel(F, bra(sp), ket(sp));
    } else {
      if (F.has(ket(s))) {
        level = detail::row_size(F, F.index(ket(s))) / (1.0 + F.max_abs_K());
        F = detail::drop_variable(F, F.index(ket(s)));
      }
      if (F.has(ket(sp)) && F.has(bra(sp))) F = pin_equal(F, ket(sp), bra(sp));
    }
    if (rebuild && j - 1 >= 1) {
      const DiscreteGaussianKernel ref = rebuild(P.truncated(j - 1));
      GaussianFunctional cur = F;
      if (!ref.F.has(ket(sp)) && cur.has(ket(sp))) {
        level = std::max(level, detail::row_size(cur, cur.index(ket(sp))) /
                                    (1.0 + cur.max_abs_K()));
        cur = detail::drop_variable(cur, cur.index(ket(sp)));
      }
      if (!(cur.layout() == ref.F.layout())) {
        throw InvariantError("discrete_causality_check: reference layout differs");
      }
      const auto diff = compare(cur, ref.F);
      level = std::max({level, diff.K, diff.b, diff.c});
    }
    d["level_" + std::to_string(j)] = level;
    worst = std::max(worst, level);
  }
  // Remaining: the initial slot with its pair identified; total mass must be 1.
  const double norm = std::abs(std::exp(detail::integrate_all(F)) - 1.0);
  d["normalization"] = norm;
  worst = std::max(worst, norm);
  return CheckReport::make("discrete_causality", worst, threshold, std::move(d));
}

inline nlohmann::json to_json(const DiscreteGaussianKernel& W) {
  nlohmann::json j;
  j["role"] = W.role == KernelRole::process ? "process" : "tester_element";
  j["final_identified"] = W.final_identified;
  j["constancy_residual"] = W.constancy_residual;
  j["cuts"] = W.partition.cuts;
  std::vector<std::string> labels;
  for (const auto& v : W.F.layout()) labels.push_back(to_string(v));
  j["labels"] = labels;
  const auto n = static_cast<Eigen::Index>(W.F.size());
  std::vector<std::vector<double>> kre(n, std::vector<double>(n)), kim = kre;
  std::vector<double> bre(n), bim(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    bre[a] = W.F.b()(a).real();
    bim[a] = W.F.b()(a).imag();
    for (Eigen::Index b = 0; b < n; ++b) {
      kre[a][b] = W.F.K()(a, b).real();
      kim[a][b] = W.F.K()(a, b).imag();
    }
  }
  j["K_re"] = kre;
  j["K_im"] = kim;
  j["b_re"] = bre;
  j["b_im"] = bim;
  j["c_re"] = W.F.c().real();
  j["c_im"] = W.F.c().imag();
  return j;
}

}  // namespace funcproc

#endif  // FUNCPROC_DISCRETE_HPP_
