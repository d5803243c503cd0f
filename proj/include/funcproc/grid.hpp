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

#ifndef FUNCPROC_GRID_HPP_
#define FUNCPROC_GRID_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "funcproc/errors.hpp"

namespace funcproc {

// Uniform time discretization of [t_i, t_f].
struct TimeGrid {
  double t_i = 0.0;
  double t_f = 1.0;
  int n_steps = 1;
  double dt = 1.0;
  std::vector<double> nodes;

  double node(int k) const { return nodes.at(static_cast<std::size_t>(k)); }
  int n_nodes() const { return n_steps + 1; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_i == b.t_i && a.t_f == b.t_f && a.n_steps == b.n_steps;
  }
};

inline TimeGrid make_grid(double t_i, double t_f, int n_steps) {
  if (!std::isfinite(t_i) || !std::isfinite(t_f)) {
    throw DomainError("make_grid: non-finite interval");
  }
  if (!(t_f > t_i)) throw DomainError("make_grid: t_f must exceed t_i");
  if (n_steps < 1) throw DomainError("make_grid: n_steps must be >= 1");
  TimeGrid g;
  g.t_i = t_i;
  g.t_f = t_f;
  g.n_steps = n_steps;
  g.dt = (t_f - t_i) / n_steps;
  g.nodes.resize(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) g.nodes[k] = t_i + k * g.dt;
  g.nodes.back() = t_f;
  return g;
}

// Grid over the first `last_node` steps of `g`, sharing its spacing.
inline TimeGrid truncate_grid(const TimeGrid& g, int last_node) {
  if (last_node < 1 || last_node > g.n_steps) {
    throw DomainError("truncate_grid: node out of range");
  }
  return make_grid(g.t_i, g.nodes[last_node], last_node);
}

// Locates a time on the grid; throws if it is not a node.
inline int node_of_time(const TimeGrid& g, double t) {
  const double x = (t - g.t_i) / g.dt;
  const long k = std::lround(x);
  if (k < 0 || k > g.n_steps || std::abs(x - k) > 1e-9) {
    throw DomainError("time " + std::to_string(t) + " is not a grid node");
  }
  return static_cast<int>(k);
}

enum class Branch { ket = 0, bra = 1 };

enum class VarKind {
  trajectory = 0,
  boundary_initial = 1,
  boundary_final = 2,
  readout = 3,
};

struct VarLabel {
  Branch branch = Branch::ket;
  int node = 0;
  VarKind kind = VarKind::trajectory;

  friend bool operator==(const VarLabel&, const VarLabel&) = default;
  friend auto operator<=>(const VarLabel& a, const VarLabel& b) {
    return std::tuple(static_cast<int>(a.kind), static_cast<int>(a.branch),
                      a.node) <=> std::tuple(static_cast<int>(b.kind),
                                             static_cast<int>(b.branch),
                                             b.node);
  }
};

inline VarLabel ket(int node) { return {Branch::ket, node, VarKind::trajectory}; }
inline VarLabel bra(int node) { return {Branch::bra, node, VarKind::trajectory}; }
inline VarLabel readout(int node) { return {Branch::ket, node, VarKind::readout}; }

inline VarLabel partner(const VarLabel& v) {
  VarLabel p = v;
  if (v.kind != VarKind::readout) {
    p.branch = v.branch == Branch::ket ? Branch::bra : Branch::ket;
  }
  return p;
}

inline std::string to_string(const VarLabel& v) {
  std::string kind;
  switch (v.kind) {
    case VarKind::trajectory: kind = "x"; break;
    case VarKind::boundary_initial: kind = "xi"; break;
    case VarKind::boundary_final: kind = "xf"; break;
    case VarKind::readout: return "r" + std::to_string(v.node);
  }
  return (v.branch == Branch::bra ? "bar_" : "") + kind + std::to_string(v.node);
}

// Ordered variable set: trajectory ket, trajectory bra, boundary, readout.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<VarLabel> labels) : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
    if (std::adjacent_find(labels_.begin(), labels_.end()) != labels_.end()) {
      throw InvariantError("layout: duplicate variable label");
    }
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const VarLabel& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<VarLabel>& labels() const { return labels_; }
  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }

  bool contains(const VarLabel& v) const {
    return std::binary_search(labels_.begin(), labels_.end(), v);
  }

  int index_of(const VarLabel& v) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), v);
    if (it == labels_.end() || !(*it == v)) {
      throw LookupError("unknown variable label " + to_string(v));
    }
    return static_cast<int>(it - labels_.begin());
  }

  friend bool operator==(const Layout&, const Layout&) = default;

 private:
  std::vector<VarLabel> labels_;
};

inline int flat_index(const VarLabel& label, const Layout& layout) {
  return layout.index_of(label);
}

// Both branches' trajectory labels on nodes [first, last].
inline Layout trajectory_layout(int first, int last) {
  std::vector<VarLabel> v;
  for (int k = first; k <= last; ++k) {
    v.push_back(ket(k));
    v.push_back(bra(k));
  }
  return Layout(std::move(v));
}

inline Layout trajectory_layout(const TimeGrid& g) {
  return trajectory_layout(0, g.n_steps);
}

// Trapezoid weights of the nodes of [first, last] on an (n+1)-node grid.
inline std::vector<double> trapezoid_weights(int n_nodes, int first, int last) {
  std::vector<double> w(static_cast<std::size_t>(n_nodes), 0.0);
  if (last <= first) return w;
  for (int k = first; k <= last; ++k) w[k] = 1.0;
  w[first] = 0.5;
  w[last] = 0.5;
  return w;
}

inline std::vector<double> trapezoid_weights(const TimeGrid& g) {
  return trapezoid_weights(g.n_nodes(), 0, g.n_steps);
}

}  // namespace funcproc

#endif  // FUNCPROC_GRID_HPP_
