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

#ifndef FUNCPROC_PROPS_HPP_
#define FUNCPROC_PROPS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"
#include "json.hpp"

namespace funcproc {

struct CheckReport {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::map<std::string, double> details;

  static CheckReport make(std::string name, double residual, double threshold,
                          std::map<std::string, double> details = {}) {
    CheckReport r{std::move(name), residual, threshold, false, std::move(details)};
    r.pass = std::isfinite(residual) && residual <= threshold;
    return r;
  }
};

inline void to_json(nlohmann::json& j, const CheckReport& r) {
  j = nlohmann::json{{"name", r.name},
                     {"residual", r.residual},
                     {"threshold", r.threshold},
                     {"pass", r.pass},
                     {"details", r.details}};
}

inline constexpr double kExactThreshold = 1e-8;
inline constexpr double kMemoryThreshold = 1e-3;

namespace detail {

struct Peel {
  GaussianFunctional F;
  double residual = 0.0;
};

// F carries the identified pair at node `from` under ket(from) only.
// Integrates the nodes from..to+1, each of which must enter as a pure
// phase that identifies the pair one step earlier.
inline Peel peel_nodes(GaussianFunctional F, int from, int to) {
  double res = 0.0;
  for (int k = from; k > to; --k) {
    const DeltaIntegration di = integrate_delta(F, ket(k));
    res = std::max({res, di.quadratic_residual, di.real_part_residual});
    const VarLabel lo_ket = ket(k - 1), lo_bra = bra(k - 1);
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
    if (!(di.pivot == lo_ket || di.pivot == lo_bra)) {
      throw InvariantError("peel: node " + std::to_string(k) +
                           " does not identify the preceding pair");
    }
    res = std::max({res, stray / std::abs(a_piv),
                    std::abs(a_piv + a_partner) / std::abs(a_piv),
                    std::abs(di.constant) / std::abs(a_piv)});
    F = di.result;
    if (di.pivot == lo_ket) F = relabel(F, lo_bra, lo_ket);
  }
  return {std::move(F), res};
}

inline void require_pair(const GaussianFunctional& F, int node, const char* who) {
  if (!F.has(ket(node)) || !F.has(bra(node))) {
    throw PreconditionError(std::string(who) + ": missing pair at node " +
                            std::to_string(node));
  }
}

inline GaussianFunctional drop_readouts(const GaussianFunctional& F) {
  std::vector<VarLabel> r;
  for (const auto& v : F.layout()) {
    if (v.kind == VarKind::readout) r.push_back(v);
  }
  return r.empty() ? F : marginalize(F, r);
}

}  // namespace detail

// Integrating every trajectory variable after node p (with the final pair
// identified) must leave the functional built on [t_i, t_p] with its pair at
// t_p identified. Without a rebuild callback only the delta structure of the
// future integrals is tested.
inline CheckReport check_causality(
    const GaussianFunctional& W, int p,
    const std::function<GaussianFunctional(const TimeGrid&)>& rebuild = {},
    double threshold = kExactThreshold) {
  if (!W.grid()) throw PreconditionError("check_causality: functional has no grid");
  const TimeGrid& g = *W.grid();
  const int N = g.n_steps;
  if (p <= 0 || p >= N) throw PreconditionError("check_causality: node must be interior");
  detail::require_pair(W, N, "check_causality");
  auto peel = detail::peel_nodes(pin_equal(W, ket(N), bra(N)), N, p);
  std::map<std::string, double> d{{"delta_structure", peel.residual}};
  double res = peel.residual;
  if (rebuild) {
    GaussianFunctional ref = rebuild(truncate_grid(g, p));
    detail::require_pair(ref, p, "check_causality reference");
    ref = pin_equal(ref, ket(p), bra(p));
    if (!(ref.layout() == peel.F.layout())) {
      throw InvariantError("check_causality: reference layout differs");
    }
    const CoefficientDiff diff = compare(peel.F, ref);
    d["K"] = diff.K;
    d["b"] = diff.b;
    d["constant"] = diff.c;
    res = std::max({res, diff.K, diff.b});
  }
  return CheckReport::make("causality@" + std::to_string(p), res, threshold, std::move(d));
}

// With the final pair identified and all later variables integrated, an open
// functional must reduce to delta(x_i - x-bar_i) exactly.
inline CheckReport check_trace_preserving(const GaussianFunctional& W_open,
                                          double threshold = 1e-9) {
  if (!W_open.grid()) throw PreconditionError("check_trace_preserving: no grid");
  const int N = W_open.grid()->n_steps;
  detail::require_pair(W_open, 0, "check_trace_preserving");
  detail::require_pair(W_open, N, "check_trace_preserving");
  auto peel = detail::peel_nodes(
      pin_equal(detail::drop_readouts(W_open), ket(N), bra(N)), N, 0);
  const GaussianFunctional& F = peel.F;
  if (F.size() != 1) throw InvariantError("check_trace_preserving: stray variables remain");
  const double k = std::abs(F.K()(0, 0));
  const double b = std::abs(F.b()(0));
  const double c = std::abs(wrap_log(F.c()));
  const double res = std::max({peel.residual, k, b, c});
  return CheckReport::make("trace_preserving", res, threshold,
                           {{"delta_structure", peel.residual},
                            {"K_sum", k},
                            {"b_sum", b},
                            {"constant", c}});
}

// Total mass of a closed functional (readouts, if any, are integrated too).
inline CheckReport check_normalization(const GaussianFunctional& W,
                                       double threshold = kExactThreshold) {
  if (!W.grid()) throw PreconditionError("check_normalization: no grid");
  const int N = W.grid()->n_steps;
  detail::require_pair(W, N, "check_normalization");
  auto peel =
      detail::peel_nodes(pin_equal(detail::drop_readouts(W), ket(N), bra(N)), N, 0);
  const GaussianFunctional total = marginalize_all(peel.F);
  const cplx v = std::exp(total.c());
  const double res = std::max(std::abs(v - 1.0), peel.residual);
  return CheckReport::make("normalization", res, threshold,
                           {{"value_re", v.real()},
                            {"value_im", v.imag()},
                            {"delta_structure", peel.residual}});
}

// Cross-block couplings between nodes before and after p, relative to
// max |K|. When they vanish the factors are checked for trace preservation.
inline CheckReport check_divisibility(const GaussianFunctional& W_open, int p,
                                      double threshold = kMemoryThreshold) {
  if (!W_open.grid()) throw PreconditionError("check_divisibility: no grid");
  const int N = W_open.grid()->n_steps;
  if (p <= 0 || p >= N) throw PreconditionError("check_divisibility: node must be interior");
  const auto& L = W_open.layout();
  double cross = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (L[i].kind == VarKind::readout || L[i].node >= p) continue;
    for (std::size_t j = 0; j < L.size(); ++j) {
      if (L[j].kind == VarKind::readout || L[j].node <= p) continue;
      cross = std::max(cross, std::abs(W_open.K()(i, j)));
    }
  }
  const double scale = W_open.max_abs_K();
  const double res = scale > 0 ? cross / scale : 0.0;
  std::map<std::string, double> d{{"cross_block", res}};
  double total = res;
  if (res <= threshold) {
    // Factor failures are rescaled into this check's threshold units.
    const auto tp = check_trace_preserving(W_open);
    d["factor_trace_residual"] = tp.residual;
    if (!tp.pass) total = std::max(res, threshold * tp.residual / tp.threshold);
  }
  return CheckReport::make("divisibility@" + std::to_string(p), total, threshold,
                           std::move(d));
}

}  // namespace funcproc

#endif  // FUNCPROC_PROPS_HPP_
