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

#ifndef FUNCPROC_GAUSSIAN_HPP_
#define FUNCPROC_GAUSSIAN_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/grid.hpp"

namespace funcproc {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Unconjugated product a^T b.
template <typename A, typename B>
cplx bilinear(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a.array() * b.array()).sum();
}

enum class Boundary { unspecified, closed, open_future, open_boundary };

// F[x] = exp(-1/2 x^T K x + b^T x + c) over a labeled variable set.
class GaussianFunctional {
 public:
  GaussianFunctional() = default;

  GaussianFunctional(Layout layout, MatrixXcd K, VectorXcd b, cplx c,
                     std::optional<TimeGrid> grid = std::nullopt,
                     Boundary boundary = Boundary::unspecified)
      : layout_(std::move(layout)),
        K_(std::move(K)),
        b_(std::move(b)),
        c_(c),
        grid_(std::move(grid)),
        boundary_(boundary) {
    const auto n = static_cast<Eigen::Index>(layout_.size());
    if (K_.rows() != n || K_.cols() != n || b_.size() != n) {
      throw InvariantError("GaussianFunctional: layout/K/b size mismatch");
    }
    if (!K_.allFinite() || !b_.allFinite() || !std::isfinite(c_.real()) ||
        !std::isfinite(c_.imag())) {
      throw InvariantError("GaussianFunctional: non-finite coefficients");
    }
    const double scale = n ? K_.cwiseAbs().maxCoeff() : 0.0;
    const double asym = n ? (K_ - K_.transpose()).cwiseAbs().maxCoeff() : 0.0;
    if (asym > 1e-10 * (1.0 + scale)) {
      throw InvariantError("GaussianFunctional: K not symmetric");
    }
  }

  // Zero exponent on the given layout; a starting point for builders.
  static GaussianFunctional zeros(Layout layout,
                                  std::optional<TimeGrid> grid = std::nullopt) {
    const auto n = static_cast<Eigen::Index>(layout.size());
    return GaussianFunctional(std::move(layout), MatrixXcd::Zero(n, n),
                              VectorXcd::Zero(n), 0.0, std::move(grid));
  }

  static GaussianFunctional constant(cplx c = 0.0) {
    return GaussianFunctional(Layout{}, MatrixXcd(0, 0), VectorXcd(0), c);
  }

  const Layout& layout() const { return layout_; }
  const MatrixXcd& K() const { return K_; }
  const VectorXcd& b() const { return b_; }
  cplx c() const { return c_; }
  const std::optional<TimeGrid>& grid() const { return grid_; }
  Boundary boundary() const { return boundary_; }
  std::size_t size() const { return layout_.size(); }
  int index(const VarLabel& v) const { return layout_.index_of(v); }
  bool has(const VarLabel& v) const { return layout_.contains(v); }

  void set_boundary(Boundary b) { boundary_ = b; }
  void set_grid(std::optional<TimeGrid> g) { grid_ = std::move(g); }

  // Exponent += -v x_a x_b (off-diagonal) or -v/2 x_a^2 (diagonal).
  void add_K(const VarLabel& a, const VarLabel& b, cplx v) {
    const int i = index(a);
    const int j = index(b);
    K_(i, j) += v;
    if (i != j) K_(j, i) += v;
  }
  void add_b(const VarLabel& a, cplx v) { b_(index(a)) += v; }
  void add_c(cplx v) { c_ += v; }
  void set_c(cplx v) { c_ = v; }

  double max_abs_K() const {
    return size() ? K_.cwiseAbs().maxCoeff() : 0.0;
  }

  cplx log_value(const VectorXcd& x) const {
    if (x.size() != b_.size()) throw DomainError("log_value: size mismatch");
    return -0.5 * bilinear(x, K_ * x) + bilinear(b_, x) + c_;
  }
  cplx log_value(const VectorXd& x) const {
    return log_value(VectorXcd(x.cast<cplx>()));
  }

 private:
  Layout layout_;
  MatrixXcd K_;
  VectorXcd b_;
  cplx c_ = 0.0;
  std::optional<TimeGrid> grid_;
  Boundary boundary_ = Boundary::unspecified;
};

// Reduces the imaginary part of a log-value into (-pi, pi].
inline cplx wrap_log(cplx z) {
  double im = std::remainder(z.imag(), 2.0 * kPi);
  if (im <= -kPi) im += 2.0 * kPi;
  return {z.real(), im};
}

inline GaussianFunctional multiply(const GaussianFunctional& F,
                                   const GaussianFunctional& G) {
  if (F.grid() && G.grid() && !F.layout().empty() && !G.layout().empty() &&
      !(*F.grid() == *G.grid())) {
    throw CompositionError("multiply: operands live on different grids");
  }
  std::vector<VarLabel> all = F.layout().labels();
  for (const auto& v : G.layout()) {
    if (!F.has(v)) all.push_back(v);
  }
  Layout layout(std::move(all));
  const auto n = static_cast<Eigen::Index>(layout.size());
  MatrixXcd K = MatrixXcd::Zero(n, n);
  VectorXcd b = VectorXcd::Zero(n);
  for (const GaussianFunctional* src : {&F, &G}) {
    std::vector<int> map;
    map.reserve(src->size());
    for (const auto& v : src->layout()) map.push_back(layout.index_of(v));
    for (std::size_t i = 0; i < map.size(); ++i) {
      b(map[i]) += src->b()(i);
      for (std::size_t j = 0; j < map.size(); ++j) {
        K(map[i], map[j]) += src->K()(i, j);
      }
    }
  }
  auto grid = F.grid() && !F.layout().empty() ? F.grid() : G.grid();
  if (!grid) grid = F.grid();
  Boundary bd = F.boundary() != Boundary::unspecified ? F.boundary()
                                                       : G.boundary();
  return GaussianFunctional(std::move(layout), std::move(K), std::move(b),
                            F.c() + G.c(), grid, bd);
}

namespace detail {

inline GaussianFunctional with_data(const GaussianFunctional& proto,
                                    Layout layout, MatrixXcd K, VectorXcd b,
                                    cplx c) {
  // Restore exact symmetry lost to round-off in products.
  MatrixXcd Ks = 0.5 * (K + K.transpose());
  return GaussianFunctional(std::move(layout), std::move(Ks), std::move(b), c,
                            proto.grid(), proto.boundary());
}

// Principal-branch log det, valid for matrices with accretive numerical range.
inline cplx log_det(const MatrixXcd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<MatrixXcd> es(A, false);
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) s += std::log(es.eigenvalues()(i));
  return s;
}

// Removes index p from F after substituting x_p = alpha . x + s0.
inline GaussianFunctional affine_substitute(const GaussianFunctional& F, int p,
                                            const VectorXcd& alpha, cplx s0) {
  const auto n = static_cast<Eigen::Index>(F.size());
  MatrixXcd T = MatrixXcd::Zero(n, n - 1);
  std::vector<VarLabel> keep;
  for (Eigen::Index i = 0, j = 0; i < n; ++i) {
    if (i == p) continue;
    T(i, j) = 1.0;
    T(p, j) = alpha(i);
    keep.push_back(F.layout()[i]);
    ++j;
  }
  const MatrixXcd& K = F.K();
  VectorXcd shifted_b = F.b() - K.col(p) * s0;
  MatrixXcd Kn = T.transpose() * K * T;
  VectorXcd bn = T.transpose() * shifted_b;
  cplx cn = F.c() + F.b()(p) * s0 - 0.5 * K(p, p) * s0 * s0;
  return with_data(F, Layout(std::move(keep)), std::move(Kn), std::move(bn),
                   cn);
}

inline GaussianFunctional drop_variable(const GaussianFunctional& F, int p) {
  const auto n = static_cast<Eigen::Index>(F.size());
  std::vector<int> idx;
  std::vector<VarLabel> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == p) continue;
    idx.push_back(static_cast<int>(i));
    keep.push_back(F.layout()[i]);
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  MatrixXcd K(m, m);
  VectorXcd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i) = F.b()(idx[i]);
    for (Eigen::Index j = 0; j < m; ++j) K(i, j) = F.K()(idx[i], idx[j]);
  }
  return with_data(F, Layout(std::move(keep)), std::move(K), std::move(b),
                   F.c());
}

}  // namespace detail

// Exact Gaussian integration over `vars`.
inline GaussianFunctional marginalize(const GaussianFunctional& F,
                                      const std::vector<VarLabel>& vars) {
  std::vector<int> v_idx;
  for (const auto& v : vars) v_idx.push_back(F.index(v));
  std::sort(v_idx.begin(), v_idx.end());
  if (std::adjacent_find(v_idx.begin(), v_idx.end()) != v_idx.end()) {
    throw LookupError("marginalize: duplicate variable");
  }
  if (v_idx.empty()) return F;
  std::vector<int> r_idx;
  std::vector<VarLabel> keep;
  for (int i = 0; i < static_cast<int>(F.size()); ++i) {
    if (!std::binary_search(v_idx.begin(), v_idx.end(), i)) {
      r_idx.push_back(i);
      keep.push_back(F.layout()[i]);
    }
  }
  const auto nv = static_cast<Eigen::Index>(v_idx.size());
  const auto nr = static_cast<Eigen::Index>(r_idx.size());
  MatrixXcd Kvv(nv, nv), Krv(nr, nv), Krr(nr, nr);
  VectorXcd bv(nv), br(nr);
  for (Eigen::Index i = 0; i < nv; ++i) {
    bv(i) = F.b()(v_idx[i]);
    for (Eigen::Index j = 0; j < nv; ++j) Kvv(i, j) = F.K()(v_idx[i], v_idx[j]);
  }
  for (Eigen::Index i = 0; i < nr; ++i) {
    br(i) = F.b()(r_idx[i]);
    for (Eigen::Index j = 0; j < nv; ++j) Krv(i, j) = F.K()(r_idx[i], v_idx[j]);
    for (Eigen::Index j = 0; j < nr; ++j) Krr(i, j) = F.K()(r_idx[i], r_idx[j]);
  }
  const double scale = std::max(Kvv.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::PartialPivLU<MatrixXcd> lu(Kvv);
  const double rcond = lu.rcond();
  const double cond = rcond > 0 ? 1.0 / rcond : INFINITY;
  if (!(cond < 1e12)) {
    throw SingularMarginalError(
        "marginalize: singular block (condition " + std::to_string(cond) + ")",
        cond);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> re_es(Kvv.real(), Eigen::EigenvaluesOnly);
  if (re_es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw SingularMarginalError(
        "marginalize: divergent integral (Re K has negative eigenvalue " +
            std::to_string(re_es.eigenvalues().minCoeff()) + ")",
        cond);
  }
  const VectorXcd y = lu.solve(bv);
  const MatrixXcd Y = lu.solve(Krv.transpose());
  MatrixXcd Kn = Krr - Krv * Y;
  VectorXcd bn = br - Krv * y;
  const cplx cn = F.c() + 0.5 * bilinear(bv, y) +
                  0.5 * static_cast<double>(nv) * std::log(2.0 * kPi) -
                  0.5 * detail::log_det(Kvv);
  return detail::with_data(F, Layout(std::move(keep)), std::move(Kn),
                           std::move(bn), wrap_log(cn));
}

inline GaussianFunctional marginalize_all(const GaussianFunctional& F) {
  return marginalize(F, F.layout().labels());
}

inline GaussianFunctional pin_value(const GaussianFunctional& F,
                                    const VarLabel& var, double value) {
  const int p = F.index(var);
  return detail::affine_substitute(F, p, VectorXcd::Zero(F.size()), value);
}

// Multiplies by delta(x_a - x_b) and integrates x_b.
inline GaussianFunctional pin_equal(const GaussianFunctional& F,
                                    const VarLabel& a, const VarLabel& b) {
  const int ia = F.index(a);
  const int ib = F.index(b);
  if (ia == ib) return F;
  VectorXcd alpha = VectorXcd::Zero(F.size());
  alpha(ia) = 1.0;
  return detail::affine_substitute(F, ib, alpha, 0.0);
}

// Outcome of integrating a variable that enters only through a pure phase
// linear in the remaining variables: int dv exp(i v (beta - a.x)).
struct DeltaIntegration {
  GaussianFunctional result;
  VarLabel pivot;
  std::vector<std::pair<VarLabel, double>> coefficients;  // a, over the rest
  double constant = 0.0;                                   // beta
  double quadratic_residual = 0.0;
  double real_part_residual = 0.0;
};

inline DeltaIntegration integrate_delta(const GaussianFunctional& F,
                                        const VarLabel& var) {
  const int v = F.index(var);
  const double scale = std::max(F.max_abs_K(), 1e-300);
  DeltaIntegration out;
  out.quadratic_residual = std::abs(F.K()(v, v)) / scale;
  double re = std::abs(F.b()(v).real());
  std::vector<double> a;
  std::vector<VarLabel> rest;
  for (int j = 0; j < static_cast<int>(F.size()); ++j) {
    if (j == v) continue;
    re = std::max(re, std::abs(F.K()(v, j).real()));
    a.push_back(F.K()(v, j).imag());
    rest.push_back(F.layout()[j]);
  }
  out.real_part_residual = re / scale;
  out.constant = F.b()(v).imag();
  std::size_t piv = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a[j]) > std::abs(a[piv])) piv = j;
    out.coefficients.emplace_back(rest[j], a[j]);
  }
  if (a.empty() || std::abs(a[piv]) <= 1e-14 * scale) {
    throw SingularMarginalError("integrate_delta: variable has no constraint",
                                INFINITY);
  }
  out.pivot = rest[piv];
  GaussianFunctional reduced = detail::drop_variable(F, v);
  const int p = reduced.index(out.pivot);
  VectorXcd alpha = VectorXcd::Zero(reduced.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (j != piv) alpha(reduced.index(rest[j])) = -a[j] / a[piv];
  }
  out.result = detail::affine_substitute(reduced, p, alpha,
                                         out.constant / a[piv]);
  out.result.add_c(std::log(2.0 * kPi / std::abs(a[piv])));
  return out;
}

// Renames one variable; coefficients follow it into the new layout.
inline GaussianFunctional relabel(const GaussianFunctional& F, const VarLabel& from,
                                  const VarLabel& to) {
  const int src = F.index(from);
  if (from == to) return F;
  if (F.has(to)) throw CompositionError("relabel: target label already present");
  std::vector<VarLabel> labels(F.layout().labels().begin(), F.layout().labels().end());
  labels[static_cast<std::size_t>(src)] = to;
  Layout layout(labels);
  const auto n = static_cast<Eigen::Index>(F.size());
  std::vector<int> map(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) map[i] = layout.index_of(labels[i]);
  MatrixXcd K(n, n);
  VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(map[i]) = F.b()(i);
    for (Eigen::Index j = 0; j < n; ++j) K(map[i], map[j]) = F.K()(i, j);
  }
  return GaussianFunctional(std::move(layout), std::move(K), std::move(b), F.c(),
                            F.grid(), F.boundary());
}

// Swaps ket/bra labels and complex-conjugates all coefficients.
inline GaussianFunctional conjugate_swap(const GaussianFunctional& F) {
  std::vector<VarLabel> labels;
  for (const auto& v : F.layout()) {
    labels.push_back(partner(v));
  }
  Layout layout(labels);
  const auto n = static_cast<Eigen::Index>(F.size());
  std::vector<int> map(n);
  for (Eigen::Index i = 0; i < n; ++i) map[i] = layout.index_of(partner(F.layout()[i]));
  MatrixXcd K(n, n);
  VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(map[i]) = std::conj(F.b()(i));
    for (Eigen::Index j = 0; j < n; ++j) K(map[i], map[j]) = std::conj(F.K()(i, j));
  }
  return GaussianFunctional(std::move(layout), std::move(K), std::move(b),
                            std::conj(F.c()), F.grid(), F.boundary());
}

struct CoefficientDiff {
  double K = 0.0;  // max |dK| / (1 + max |K|)
  double b = 0.0;  // max |db| / (1 + max |b|)
  double c = 0.0;  // |dc| modulo 2 pi i
  double max() const { return std::max({K, b, c}); }
};

// Compares two functionals over the same layout.
inline CoefficientDiff compare(const GaussianFunctional& F,
                               const GaussianFunctional& G) {
  if (!(F.layout() == G.layout())) throw CompositionError("compare: layouts differ");
  CoefficientDiff d;
  if (F.size()) {
    d.K = (F.K() - G.K()).cwiseAbs().maxCoeff() /
          (1.0 + std::max(F.max_abs_K(), G.max_abs_K()));
    d.b = (F.b() - G.b()).cwiseAbs().maxCoeff() /
          (1.0 + std::max(F.b().cwiseAbs().maxCoeff(), G.b().cwiseAbs().maxCoeff()));
  }
  d.c = std::abs(wrap_log(F.c() - G.c()));
  return d;
}

inline CoefficientDiff hermitian_symmetry_residual(const GaussianFunctional& F) {
  return compare(conjugate_swap(F), F);
}

struct PositivityReport {
  double min_eig = 0.0;
  double max_eig = 0.0;
  double hermitian_residual = 0.0;
  bool pass = false;
};

// Gram-matrix test of the ket/bra kernel on random real trajectories.
inline PositivityReport positivity_sample_check(
    const GaussianFunctional& F, const std::vector<VarLabel>& ket_labels,
    const std::vector<VarLabel>& bra_labels, int n_samples,
    std::uint64_t seed, double width = 1.0) {
  if (n_samples < 2) throw PreconditionError("positivity: need >= 2 samples");
  if (ket_labels.size() != bra_labels.size() ||
      ket_labels.size() + bra_labels.size() != F.size()) {
    throw PreconditionError("positivity: ket/bra labels must partition layout");
  }
  const auto d = static_cast<Eigen::Index>(ket_labels.size());
  std::vector<int> ik, ib;
  for (const auto& v : ket_labels) ik.push_back(F.index(v));
  for (const auto& v : bra_labels) ib.push_back(F.index(v));
  MatrixXcd A(d, d), C(d, d), D(d, d);
  VectorXcd bk(d), bb(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    bk(i) = F.b()(ik[i]);
    bb(i) = F.b()(ib[i]);
    for (Eigen::Index j = 0; j < d; ++j) {
      A(i, j) = F.K()(ik[i], ik[j]);
      C(i, j) = F.K()(ik[i], ib[j]);
      D(i, j) = F.K()(ib[i], ib[j]);
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, width);
  MatrixXd U(d, n_samples);
  for (int j = 0; j < n_samples; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) U(i, j) = normal(rng);
  }
  const MatrixXcd Uc = U.cast<cplx>();
  VectorXcd left(n_samples), right(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    const VectorXcd u = Uc.col(j);
    left(j) = -0.5 * bilinear(u, A * u) + bilinear(bk, u);
    right(j) = -0.5 * bilinear(u, D * u) + bilinear(bb, u);
  }
  const MatrixXcd cross = Uc.transpose() * C * Uc;
  MatrixXcd L(n_samples, n_samples);
  double shift = -INFINITY;
  for (int j = 0; j < n_samples; ++j) {
    for (int k = 0; k < n_samples; ++k) {
      L(j, k) = left(j) + right(k) - cross(j, k) + F.c();
      shift = std::max(shift, L(j, k).real());
    }
  }
  if (!std::isfinite(shift)) {
    throw NumericRangeError("positivity: exponent overflow");
  }
  MatrixXcd Q(n_samples, n_samples);
  for (int j = 0; j < n_samples; ++j) {
    for (int k = 0; k < n_samples; ++k) Q(j, k) = std::exp(L(j, k) - shift);
  }
  PositivityReport rep;
  const double qmax = Q.cwiseAbs().maxCoeff();
  const MatrixXcd Qh = Q.adjoint();
  rep.hermitian_residual = (Q - Qh).cwiseAbs().maxCoeff() / qmax;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (Q + Qh),
                                              Eigen::EigenvaluesOnly);
  rep.min_eig = es.eigenvalues().minCoeff();
  rep.max_eig = es.eigenvalues().maxCoeff();
  rep.pass = rep.hermitian_residual <= 1e-8 && rep.max_eig > 0 &&
             rep.min_eig >= -1e-8 * rep.max_eig;
  return rep;
}

// Convenience overload pairing (ket, k) with (bra, k) for every node present.
inline PositivityReport positivity_sample_check(const GaussianFunctional& F,
                                                int n_samples,
                                                std::uint64_t seed,
                                                double width = 1.0) {
  std::vector<VarLabel> k, b;
  for (const auto& v : F.layout()) {
    if (v.kind == VarKind::readout) {
      throw PreconditionError("positivity: readout labels must be pinned");
    }
    if (v.branch == Branch::ket) {
      k.push_back(v);
      b.push_back(partner(v));
    }
  }
  return positivity_sample_check(F, k, b, n_samples, seed, width);
}

}  // namespace funcproc

#endif  // FUNCPROC_GAUSSIAN_HPP_
