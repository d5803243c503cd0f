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

#ifndef FUNCPROC_MEASUREMENT_HPP_
#define FUNCPROC_MEASUREMENT_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"
#include "funcproc/grid.hpp"

namespace funcproc {

struct ReadoutRecord {
  TimeGrid grid;
  std::vector<double> values;

  void validate() const {
    if (static_cast<int>(values.size()) != grid.n_nodes()) {
      throw InvariantError("ReadoutRecord: length does not match grid");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw InvariantError("ReadoutRecord: non-finite value");
    }
  }
};

// Weights (0, 1, ..., 1): one readout per step, at its right end.
inline std::vector<double> step_end_weights(const TimeGrid& g) {
  std::vector<double> w(static_cast<std::size_t>(g.n_nodes()), 1.0);
  w[0] = 0.0;
  return w;
}

struct PositionMeasurementSpec {
  double tau_m = 1.0;
  TimeGrid grid;
  std::optional<std::vector<double>> weights;  // default trapezoid

  void validate() const {
    if (!(tau_m > 0) || !std::isfinite(tau_m)) {
      throw InvariantError("PositionMeasurementSpec: tau_m must be positive and finite");
    }
    if (weights && static_cast<int>(weights->size()) != grid.n_nodes()) {
      throw InvariantError("PositionMeasurementSpec: weight length mismatch");
    }
  }

  std::vector<double> weight_vector() const {
    return weights ? *weights : trapezoid_weights(grid);
  }

  std::vector<int> readout_nodes() const {
    std::vector<int> nodes;
    const auto w = weight_vector();
    for (int k = 0; k <= grid.n_steps; ++k) {
      if (w[k] > 0) nodes.push_back(k);
    }
    return nodes;
  }
};

// H(x, r) = xx x^2 + xr x r + rr r^2 + x x + r r + c at one node.
struct KrausGenerator {
  cplx xx = 0.0;
  cplx xr = 0.0;
  cplx rr = 0.0;
  cplx x = 0.0;
  cplx r = 0.0;
  cplx c = 0.0;

  bool depends_on_record() const { return xr != 0.0 || rr != 0.0 || r != 0.0; }
};

struct KrausSpec {
  TimeGrid grid;
  std::vector<KrausGenerator> generator;  // one per node
  std::optional<std::vector<double>> weights;
  std::vector<double> log_norm;  // optional per-node measure constant

  std::vector<double> weight_vector() const {
    return weights ? *weights : trapezoid_weights(grid);
  }
};

// Generator -i (r - x)^2 / (4 tau) of the weak position measurement.
inline KrausSpec position_kraus_spec(const PositionMeasurementSpec& spec) {
  spec.validate();
  KrausSpec ks;
  ks.grid = spec.grid;
  ks.weights = spec.weight_vector();
  KrausGenerator g;
  g.xx = -kI / (4.0 * spec.tau_m);
  g.xr = kI / (2.0 * spec.tau_m);
  g.rr = -kI / (4.0 * spec.tau_m);
  ks.generator.assign(static_cast<std::size_t>(spec.grid.n_nodes()), g);
  ks.log_norm.assign(ks.generator.size(), 0.0);
  const auto w = *ks.weights;
  for (int k = 0; k <= spec.grid.n_steps; ++k) {
    if (w[k] > 0) {
      ks.log_norm[k] = -0.5 * std::log(2.0 * kPi * spec.tau_m / (w[k] * spec.grid.dt));
    }
  }
  return ks;
}

// Exponent -i sum w dt H on the ket branch and +i sum w dt H* on the bra branch;
// record-dependent nodes carry symbolic readout labels.
inline GaussianFunctional build_kraus_functional(const KrausSpec& spec) {
  const TimeGrid& g = spec.grid;
  if (static_cast<int>(spec.generator.size()) != g.n_nodes()) {
    throw InvariantError("KrausSpec: generator length mismatch");
  }
  const auto w = spec.weight_vector();
  std::vector<VarLabel> labels;
  for (int k = 0; k <= g.n_steps; ++k) {
    if (w[k] == 0.0) continue;
    labels.push_back(ket(k));
    labels.push_back(bra(k));
    if (spec.generator[k].depends_on_record()) labels.push_back(readout(k));
  }
  auto F = GaussianFunctional::zeros(Layout(labels), g);
  for (int k = 0; k <= g.n_steps; ++k) {
    if (w[k] == 0.0) continue;
    const KrausGenerator& h = spec.generator[k];
    const double s = w[k] * g.dt;
    const VarLabel a = ket(k), b = bra(k);
    F.add_K(a, a, 2.0 * kI * s * h.xx);
    F.add_K(b, b, -2.0 * kI * s * std::conj(h.xx));
    F.add_b(a, -kI * s * h.x);
    F.add_b(b, kI * s * std::conj(h.x));
    F.add_c(-kI * s * h.c + kI * s * std::conj(h.c));
    if (h.depends_on_record()) {
      const VarLabel r = readout(k);
      F.add_K(a, r, kI * s * h.xr);
      F.add_K(b, r, -kI * s * std::conj(h.xr));
      F.add_K(r, r, 2.0 * kI * s * h.rr - 2.0 * kI * s * std::conj(h.rr));
      F.add_b(r, -kI * s * h.r + kI * s * std::conj(h.r));
    }
    if (!spec.log_norm.empty()) F.add_c(spec.log_norm.at(k));
  }
  return F;
}

// Operation functional with the record left symbolic.
inline GaussianFunctional build_position_measurement_symbolic(
    const PositionMeasurementSpec& spec) {
  return build_kraus_functional(position_kraus_spec(spec));
}

// Substitutes a numeric record into every readout label present.
inline GaussianFunctional apply_record(const GaussianFunctional& M,
                                       const ReadoutRecord& record) {
  record.validate();
  if (M.grid() && !(*M.grid() == record.grid)) {
    throw CompositionError("record grid does not match functional grid");
  }
  GaussianFunctional out = M;
  for (const auto& v : M.layout()) {
    if (v.kind == VarKind::readout) out = pin_value(out, v, record.values[v.node]);
  }
  return out;
}

inline GaussianFunctional build_position_measurement(
    const PositionMeasurementSpec& spec, const ReadoutRecord& record) {
  if (!(spec.grid == record.grid)) {
    throw CompositionError("build_position_measurement: grid mismatch");
  }
  return apply_record(build_position_measurement_symbolic(spec), record);
}

struct KrausNormalizationReport {
  double residual = 0.0;  // max(|K|, |b|, |c|) left on x after integrating r
  double log_constant = 0.0;
  bool pass = false;
};

// Integrates K^dagger K over records on the diagonal x = x-bar.
inline KrausNormalizationReport check_kraus_normalization(const KrausSpec& spec,
                                                          double threshold = 1e-12) {
  GaussianFunctional F = build_kraus_functional(spec);
  const double scale = std::max(1.0, F.max_abs_K());
  std::vector<VarLabel> records;
  const std::vector<VarLabel> labels = F.layout().labels();
  for (const auto& v : labels) {
    if (v.kind == VarKind::trajectory && v.branch == Branch::ket) {
      F = pin_equal(F, v, partner(v));
    } else if (v.kind == VarKind::readout) {
      records.push_back(v);
    }
  }
  F = marginalize(F, records);
  KrausNormalizationReport rep;
  double r = std::abs(wrap_log(F.c()));
  if (F.size()) {
    r = std::max({r, F.K().cwiseAbs().maxCoeff() / scale,
                  F.b().cwiseAbs().maxCoeff() / scale});
  }
  rep.residual = r;
  rep.log_constant = F.c().real();
  rep.pass = rep.residual <= threshold;
  return rep;
}

inline KrausNormalizationReport check_kraus_normalization(
    const PositionMeasurementSpec& spec, double threshold = 1e-12) {
  return check_kraus_normalization(position_kraus_spec(spec), threshold);
}

}  // namespace funcproc

#endif  // FUNCPROC_MEASUREMENT_HPP_
