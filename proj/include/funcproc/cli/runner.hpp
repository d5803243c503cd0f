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

#ifndef FUNCPROC_CLI_RUNNER_HPP_
#define FUNCPROC_CLI_RUNNER_HPP_

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcproc/born.hpp"
#include "funcproc/cli/config.hpp"
#include "funcproc/discrete.hpp"
#include "funcproc/fock.hpp"
#include "funcproc/io.hpp"
#include "funcproc/props.hpp"
#include "funcproc/saddle.hpp"
#include "json.hpp"

namespace funcproc::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericError = 3 };

struct RunOptions {
  std::optional<std::string> out_dir;
  bool validate_only = false;
};

struct RunResult {
  int exit_code = kOk;
  std::string message;
  std::string failing_task;
  nlohmann::json manifest;
};

// Kernel blocks restricted to the first nodes of a shorter grid.
inline MemoryKernel restrict_kernel(const MemoryKernel& K, const TimeGrid& h) {
  MemoryKernel out = MemoryKernel::zero(h);
  for (int k = 0; k <= h.n_steps; ++k) {
    for (int l = 0; l <= h.n_steps; ++l) out.at(k, l) = K.at(k, l);
  }
  return out;
}

// Everything a task needs, built once from the config.
struct Setup {
  TimeGrid grid;
  CLModel model;
  GaussianState state;
  PositionMeasurementSpec spec;

  CLModel model_on(const TimeGrid& h) const {
    return {model.m, model.omega0, restrict_kernel(model.kernel, h)};
  }
};

inline Setup build_setup(const ExperimentConfig& c) {
  Setup s;
  s.grid = make_grid(c.t_i, c.t_f, c.n_steps);
  const auto B = c.kernel.structure == "ones" ? ones_structure() : noise_structure();
  MemoryKernel K = MemoryKernel::zero(s.grid);
  if (c.kernel.type == "exp") {
    K = MemoryKernel::exponential(s.grid, c.kernel.eta, c.kernel.gamma, B);
  } else if (c.kernel.type == "file") {
    try {
      K = io::read_kernel_csv(c.kernel.path, s.grid);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  s.model = CLModel{c.m, c.omega0, std::move(K)};
  s.model.validate(s.grid);
  if (c.state.coherent) {
    if (!(c.omega0 > 0)) throw ConfigError("coherent state needs omega0 > 0");
    s.state = GaussianState::coherent(c.m, c.omega0, c.state.x0, c.state.p0);
  } else {
    s.state.xi << c.state.xi[0], c.state.xi[1], c.state.xi[2], c.state.xi[3];
    s.state.c << c.state.c[0], c.state.c[1];
  }
  s.state.validate();
  s.spec.tau_m = c.tau_m;
  s.spec.grid = s.grid;
  if (c.weights == "step_end") s.spec.weights = step_end_weights(s.grid);
  s.spec.validate();
  for (const auto& t : c.tasks) {
    if (t.kind == "oracle" && !c.state.coherent) {
      throw ConfigError("task 'oracle' needs a coherent state");
    }
  }
  return s;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, Setup setup, std::string out_dir)
      : cfg_(cfg), s_(std::move(setup)), dir_(std::move(out_dir)) {}

  RunResult run() {
    RunResult res;
    std::filesystem::create_directories(dir_);
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : cfg_.tasks) {
      task_ = nlohmann::json{{"name", t.name}, {"kind", t.kind}};
      artifacts_ = nlohmann::json::array();
      try {
        dispatch(t);
        task_["status"] = "ok";
      } catch (const IoError& e) {
        fail(res, tasks, t, kConfigError, e.what());
        break;
      } catch (const Error& e) {
        fail(res, tasks, t, kNumericError, e.what());
        break;
      }
      task_["artifacts"] = artifacts_;
      tasks.push_back(task_);
    }
    if (res.exit_code == kOk) route_equality();
    if (res.exit_code == kOk && !all_pass_) {
      res.exit_code = kCheckFailed;
      res.message = "one or more checks failed";
    }
    auto& m = res.manifest;
    m["version"] = kVersion;
    m["config_path"] = cfg_.source_path;
    m["config_hash"] = fnv_hex(fnv1a(cfg_.text));
    m["grid"] = {{"t_i", s_.grid.t_i}, {"t_f", s_.grid.t_f}, {"n_steps", s_.grid.n_steps}};
    m["seeds"] = seeds_;
    m["tasks"] = tasks;
    m["residuals"] = residuals_;
    m["checks"] = checks_;
    m["all_checks_pass"] = all_pass_;
    m["exit_code"] = res.exit_code;
    if (!res.failing_task.empty()) m["failing_task"] = res.failing_task;
    write_text("manifest.json", m.dump(2) + "\n");
    return res;
  }

 private:
  void fail(RunResult& res, nlohmann::json& tasks, const TaskConfig& t, int code,
            const std::string& what) {
    task_["status"] = "error";
    task_["error"] = what;
    task_["artifacts"] = artifacts_;
    tasks.push_back(task_);
    res.exit_code = code;
    res.failing_task = t.name;
    res.message = "task '" + t.name + "' failed: " + what;
  }

  static std::string fnv_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::string path(const std::string& file) {
    artifacts_.push_back(file);
    return (std::filesystem::path(dir_) / file).string();
  }

  void write_text(const std::string& file, const std::string& text) {
    auto f = io::open_out((std::filesystem::path(dir_) / file).string());
    f << text;
  }

  void write_json(const std::string& file, const nlohmann::json& j) {
    auto f = io::open_out(path(file));
    f << j.dump(2) << '\n';
  }

  static nlohmann::json matrix_json(const MatrixXd& A) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      std::vector<double> row(A.cols());
      for (Eigen::Index k = 0; k < A.cols(); ++k) row[k] = A(i, k);
      j.push_back(row);
    }
    return j;
  }

  static nlohmann::json complex_json(const MatrixXcd& A) {
    return {{"re", matrix_json(A.real())}, {"im", matrix_json(A.imag())}};
  }

  // Matrix artifact in the configured format.
  void emit_matrix(const std::string& stem, const MatrixXd& A, const std::vector<int>& nodes) {
    if (cfg_.format == "csv") {
      io::write_matrix_csv(path(stem + ".csv"), A, nodes);
    } else {
      write_json(stem + ".json", {{"nodes", nodes}, {"value", matrix_json(A)}});
    }
  }

  void emit_vector(const std::string& stem, const VectorXd& v, const std::vector<int>& nodes) {
    if (cfg_.format == "csv") {
      io::write_vector_csv(path(stem + ".csv"), v, nodes);
    } else {
      std::vector<double> x(v.data(), v.data() + v.size());
      write_json(stem + ".json", {{"nodes", nodes}, {"value", x}});
    }
  }

  void residual(const std::string& task, const std::string& key, double v) {
    residuals_[task + "." + key] = v;
  }

  void check(const std::string& task, const CheckReport& r, bool expect_pass = true) {
    const bool ok = r.pass == expect_pass;
    nlohmann::json j = r;
    j["task"] = task;
    j["expected"] = expect_pass ? "pass" : "fail";
    j["ok"] = ok;
    checks_.push_back(j);
    residual(task, r.name, r.residual);
    all_pass_ = all_pass_ && ok;
  }

  void check_value(const std::string& task, const std::string& name, double v, double thr) {
    check(task, CheckReport::make(name, v, thr));
  }

  std::string suffix(const TaskConfig& t, const std::string& base) const {
    const auto dash = t.name.rfind('-');
    const bool numbered = dash != std::string::npos &&
                          t.name.find_first_not_of("0123456789", dash + 1) == std::string::npos;
    return base + (numbered ? "_" + t.name.substr(dash + 1) : "");
  }

  GaussianFunctional process(Boundary b) const {
    return build_cl_process(s_.model, s_.grid, s_.state, b);
  }

  const ReadoutLaw& direct_law() {
    if (!direct_) {
      direct_ = compute_readout_law_direct(process(Boundary::closed),
                                           build_position_measurement_symbolic(s_.spec));
    }
    return *direct_;
  }

  void record_law(const TaskConfig& t, const ReadoutLaw& law, const std::string& sfx) {
    emit_matrix("R" + sfx, law.R, law.nodes);
    emit_vector("b" + sfx, law.b, law.nodes);
    write_json(t.name + ".json", {{"nodes", law.nodes},
                                  {"logZ", law.logZ},
                                  {"imag_residual", law.imag_residual},
                                  {"log_mass_residual", law.log_mass_residual}});
    residual(t.name, "imag_residual", law.imag_residual);
    check_value(t.name, "normalization", std::abs(law.log_mass_residual), kExactThreshold);
    if (!law.valid()) throw ValidityError("law has a complex exponent", 0.0);
  }

  void dispatch(const TaskConfig& t) {
    if (t.kind == "law-direct") {
      direct_.reset();
      record_law(t, direct_law(), suffix(t, ""));
    } else if (t.kind == "law-saddle") {
      saddle_ = compute_readout_law_saddle(s_.model, s_.state, s_.spec, s_.grid).first;
      record_law(t, *saddle_, suffix(t, "_saddle"));
    } else if (t.kind == "covariance") {
      const auto mom = readout_covariance(direct_law());
      emit_matrix(suffix(t, "covariance"), mom.covariance, direct_law().nodes);
      emit_vector(suffix(t, "mean"), mom.mean, direct_law().nodes);
    } else if (t.kind == "sample") {
      run_sample(t);
    } else if (t.kind == "conditional") {
      run_conditional(t);
    } else if (t.kind == "projective-limit") {
      run_projective(t);
    } else if (t.kind == "check") {
      run_check(t);
    } else if (t.kind == "recover") {
      run_recover(t);
    } else if (t.kind == "oracle") {
      run_oracle(t);
    }
  }

  void run_sample(const TaskConfig& t) {
    seeds_[t.name] = t.seed;
    const auto& law = direct_law();
    const auto recs = sample_records(law, t.n, t.seed);
    if (cfg_.format == "csv") {
      auto f = io::open_out(path(suffix(t, "samples") + ".csv"));
      f << "sample,t,r\n";
      for (std::size_t i = 0; i < recs.size(); ++i) {
        for (int k : law.nodes) {
          f << i << ',' << io::num(s_.grid.node(k)) << ',' << io::num(recs[i].values[k]) << '\n';
        }
      }
    } else {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : recs) j.push_back(r.values);
      write_json(suffix(t, "samples") + ".json", {{"records", j}});
    }
    if (t.n >= 2) {
      const auto mom = readout_covariance(law);
      const auto d = static_cast<Eigen::Index>(law.nodes.size());
      MatrixXd X(t.n, d);
      for (int i = 0; i < t.n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a) X(i, a) = recs[i].values[law.nodes[a]];
      }
      const MatrixXd Y = X.rowwise() - X.colwise().mean();
      const MatrixXd C = Y.transpose() * Y / (t.n - 1.0);
      double dev = 0.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
          const double s = std::sqrt(mom.covariance(a, a) * mom.covariance(b, b));
          dev = std::max(dev, std::abs(C(a, b) - mom.covariance(a, b)) / s);
        }
      }
      residual(t.name, "covariance_deviation", dev);
    }
  }

  void run_conditional(const TaskConfig& t) {
    ReadoutRecord rec;
    try {
      rec = io::read_record_csv(t.record_path, s_.grid);
    } catch (const DomainError& e) {
      throw IoError(t.record_path + ": " + e.what());
    }
    const auto cs = conditional_state(process(Boundary::open_future),
                                      build_position_measurement(s_.spec, rec));
    const double born = std::exp(direct_law().log_density(rec));
    const auto mom = state_moments(cs.state);
    nlohmann::json j{{"trace", cs.trace},
                     {"born", born},
                     {"log_scale", {cs.log_scale.real(), cs.log_scale.imag()}},
                     {"xi", complex_json(cs.state.xi)},
                     {"c", complex_json(cs.state.c)},
                     {"moments", {{"x", mom.x}, {"x2", mom.x2}, {"p", mom.p}, {"p2", mom.p2}}}};
    write_json(t.name + ".json", j);
    check_value(t.name, "trace_vs_born", std::abs(cs.trace / born - 1.0), 1e-9);
  }

  void run_projective(const TaskConfig& t) {
    const auto lim = projective_limit_law(s_.model, s_.state, s_.grid);
    std::vector<int> nodes(static_cast<std::size_t>(s_.grid.n_nodes()));
    for (int k = 0; k <= s_.grid.n_steps; ++k) nodes[k] = k;
    emit_matrix(suffix(t, "projective_modulus"), lim.modulus_kernel(), nodes);
    if (cfg_.format == "csv") {
      io::write_complex_matrix_csv(path(suffix(t, "projective_phase") + ".csv"),
                                   lim.phase_kernel);
    }
    write_json(t.name + ".json", {{"weight_quadratic", lim.weight_quadratic},
                                  {"weight_linear", lim.weight_linear},
                                  {"weight_log_norm", lim.weight_log_norm},
                                  {"phase_kernel", complex_json(lim.phase_kernel)}});
    if (static_cast<int>(direct_law().nodes.size()) == s_.grid.n_nodes()) {
      residual(t.name, "distance_at_tau_m", projective_relative_error(direct_law(), lim));
    }
  }

  void run_check(const TaskConfig& t) {
    const int N = s_.grid.n_steps;
    std::vector<CheckReport> reps;
    if (t.check_type == "causality") {
      const auto W = process(Boundary::closed);
      auto rebuild = [&](const TimeGrid& h) {
        return build_cl_process(s_.model_on(h), h, s_.state, Boundary::closed);
      };
      if (t.node) {
        reps.push_back(check_causality(W, *t.node, rebuild));
      } else {
        for (int p = 1; p < N; ++p) reps.push_back(check_causality(W, p, rebuild));
      }
    } else if (t.check_type == "trace") {
      reps.push_back(check_trace_preserving(process(Boundary::open_boundary)));
    } else if (t.check_type == "normalization") {
      reps.push_back(check_normalization(process(Boundary::closed)));
    } else {
      reps.push_back(check_divisibility(process(Boundary::open_boundary), t.node.value_or(N / 2)));
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reps) {
      check(t.name, r, t.expect_pass);
      j.push_back(r);
    }
    write_json(t.name + ".json", j);
  }

  void run_recover(const TaskConfig& t) {
    seeds_[t.name] = t.seed;
    const IntervalPartition P{s_.grid, t.cuts,
                              t.first_role == "process" ? IntervalRole::process
                                                        : IntervalRole::operation};
    P.validate();
    auto rebuild = [&](const IntervalPartition& Q) {
      return reconstruct_discrete(build_interleaved_process(s_.model_on(Q.grid), s_.state, Q),
                                  Q, KernelRole::process);
    };
    const auto W = build_interleaved_process(s_.model, s_.state, P);
    const auto law =
        compute_readout_law_direct(W, build_interleaved_operation(s_.model, P, s_.spec.tau_m));
    const auto Dw = reconstruct_discrete(W, P, KernelRole::process);
    double constancy = Dw.constancy_residual;
    double worst = 0.0;
    std::vector<std::vector<double>> rows;
    for (const auto& rec : sample_records(law, t.n, t.seed)) {
      const auto Dm = reconstruct_discrete(build_interleaved_operation(s_.model, P, s_.spec.tau_m, rec),
                                           P, KernelRole::tester_element);
      constancy = std::max(constancy, Dm.constancy_residual);
      const double d = discrete_born(Dw, Dm);
      const double c = std::exp(law.log_density(rec));
      worst = std::max(worst, std::abs(d / c - 1.0));
      rows.push_back({d, c, std::abs(d / c - 1.0)});
    }
    if (cfg_.format == "csv") {
      auto f = io::open_out(path(suffix(t, "recover") + ".csv"));
      f << "sample,discrete,continuous,rel_error\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        f << i << ',' << io::num(rows[i][0]) << ',' << io::num(rows[i][1]) << ','
          << io::num(rows[i][2]) << '\n';
      }
    }
    const CLModel markov{s_.model.m, s_.model.omega0, MemoryKernel::zero(s_.grid)};
    const double fact = factorization_residual(
        reconstruct_discrete(build_interleaved_process(markov, s_.state, P), P,
                             KernelRole::process));
    const auto causal = discrete_causality_check(Dw, rebuild);
    nlohmann::json j{{"process_kernel", to_json(Dw)}, {"born", rows}, {"causality", causal}};
    write_json(t.name + ".json", j);
    check_value(t.name, "constancy", constancy, 1e-10);
    check_value(t.name, "born_vs_continuous", worst, 1e-6);
    check(t.name, causal);
    check_value(t.name, "markov_factorization", fact, 1e-12);
  }

  void run_oracle(const TaskConfig& t) {
    FockParams P;
    P.m = cfg_.m;
    P.omega0 = cfg_.omega0;
    P.omega_E = t.omega_E;
    P.lambda = t.lambda;
    P.g = t.coupling;
    P.omega_M = t.omega_M;
    P.x0 = cfg_.state.x0;
    P.p0 = cfg_.state.p0;
    P.d_S = t.cutoffs[0];
    P.d_E = t.cutoffs[1];
    P.d_M = t.cutoffs[2];
    P.bin_edges = t.bins;
    const TimeGrid steps = make_grid(cfg_.t_i, cfg_.t_f, t.steps);
    const FockModel M = build_fock_model(P);
    const auto od = oracle_record_distribution(M, steps);
    const auto om = oracle_moments(M, oracle_reduced_state(M, steps));
    const auto ec = engine_counterpart(P, steps, t.refine);
    const auto em = engine_unconditional_moments(ec);
    const auto ed = engine_bin_distribution(ec, P);
    const double tv = total_variation(od, ed);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    const double dm = std::max({rel(em.x, om.x), rel(em.x2, om.x2), rel(em.p, om.p),
                                rel(em.p2, om.p2)});
    if (cfg_.format == "csv") {
      auto f = io::open_out(path(suffix(t, "oracle") + ".csv"));
      for (int k = 1; k <= t.steps; ++k) f << "bin_" << k << ',';
      f << "oracle,engine\n";
      for (const auto& [bins, p] : od) {
        for (int b : bins) f << b << ',';
        const auto it = ed.find(bins);
        f << io::num(p) << ',' << io::num(it == ed.end() ? 0.0 : it->second) << '\n';
      }
    }
    auto mj = [](const StateMoments& s) {
      return nlohmann::json{{"x", s.x}, {"x2", s.x2}, {"p", s.p}, {"p2", s.p2}};
    };
    write_json(t.name + ".json", {{"oracle_moments", mj(om)},
                                  {"engine_moments", mj(em)},
                                  {"total_variation", tv},
                                  {"moment_rel_error", dm}});
    check_value(t.name, "moments", dm, 0.02);
    check_value(t.name, "total_variation", tv, 0.05);
  }

  void route_equality() {
    if (!direct_ || !saddle_) return;
    const auto& a = *direct_;
    const auto& b = *saddle_;
    if (a.nodes != b.nodes) return;
    const std::string t = "route_equality";
    check_value(t, "R", (a.R - b.R).norm() / a.R.norm(), 1e-6);
    check_value(t, "b", (a.b - b.b).norm() / (1.0 + a.b.norm()), 1e-6);
    check_value(t, "logZ", std::abs(a.logZ - b.logZ), 1e-6);
  }

  const ExperimentConfig& cfg_;
  Setup s_;
  std::string dir_;
  std::optional<ReadoutLaw> direct_, saddle_;
  nlohmann::json task_, artifacts_;
  nlohmann::json residuals_ = nlohmann::json::object();
  nlohmann::json checks_ = nlohmann::json::array();
  nlohmann::json seeds_ = nlohmann::json::object();
  bool all_pass_ = true;
};

// Parses, validates and runs one config file.
inline RunResult run_config(const std::string& config_path, const RunOptions& opt = {}) {
  RunResult res;
  ExperimentConfig cfg;
  Setup setup;
  try {
    cfg = load_config(config_path);
    setup = build_setup(cfg);
  } catch (const ConfigError& e) {
    res.exit_code = kConfigError;
    res.message = e.what();
    return res;
  } catch (const Error& e) {
    res.exit_code = kConfigError;
    res.message = std::string("invalid config: ") + e.what();
    return res;
  }
  if (opt.validate_only) {
    res.message = "config ok: " + std::to_string(cfg.tasks.size()) + " task(s)";
    return res;
  }
  const std::string dir = opt.out_dir ? *opt.out_dir : cfg.out_dir;
  try {
    return Runner(cfg, std::move(setup), dir).run();
  } catch (const IoError& e) {
    res.exit_code = kConfigError;
    res.message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    res.exit_code = kConfigError;
    res.message = e.what();
  }
  return res;
}

}  // namespace funcproc::cli

#endif  // FUNCPROC_CLI_RUNNER_HPP_
