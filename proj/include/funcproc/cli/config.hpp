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

#ifndef FUNCPROC_CLI_CONFIG_HPP_
#define FUNCPROC_CLI_CONFIG_HPP_

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/gaussian.hpp"

namespace funcproc::cli {

// Malformed config or a missing referenced file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct KernelConfig {
  std::string type = "zero";  // zero | exp | file
  double eta = 0.0;
  double gamma = 1.0;
  std::string structure = "noise";  // noise | ones
  std::string path;
};

struct StateConfig {
  cplx xi[4] = {1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  cplx c[2] = {0.0, 0.0};
  bool coherent = false;
  double x0 = 0.0;
  double p0 = 0.0;
};

struct TaskConfig {
  std::string kind;
  std::string name;  // unique artifact prefix
  // sample / recover
  int n = 0;
  std::uint64_t seed = 0;
  // conditional / recover
  std::string record_path;
  // check
  std::string check_type;
  std::optional<int> node;
  bool expect_pass = true;
  // recover
  std::vector<int> cuts;
  std::string first_role = "operation";
  // oracle
  std::vector<int> cutoffs;
  std::vector<double> bins;
  int steps = 2;
  int refine = 16;
  double lambda = 0.1;
  double coupling = 0.1;
  double omega_E = 1.0;
  double omega_M = 1.0;
};

struct ExperimentConfig {
  std::string source_path;
  std::string text;
  double t_i = 0.0;
  double t_f = 1.0;
  int n_steps = 0;
  double m = 1.0;
  double omega0 = 0.0;
  KernelConfig kernel;
  StateConfig state;
  double tau_m = 1.0;
  std::string weights = "trapezoid";  // trapezoid | step_end
  std::vector<TaskConfig> tasks;
  std::string out_dir = "out";
  std::string format = "csv";
};

namespace detail {

inline std::string where(const YAML::Node& n, const std::string& key) {
  const auto& m = n.Mark();
  return "'" + key + "' (line " + std::to_string(m.line + 1) + ")";
}

template <typename T>
T get(const YAML::Node& n, const std::string& key, const T& fallback) {
  const YAML::Node v = n[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for " + where(v, key));
  }
}

template <typename T>
T require(const YAML::Node& n, const std::string& key) {
  if (!n[key]) throw ConfigError("missing key '" + key + "'");
  return get<T>(n, key, T{});
}

// Scalar, [re, im] or {re, im}.
inline cplx parse_complex(const YAML::Node& n, const std::string& key) {
  try {
    if (n.IsScalar()) return {n.as<double>(), 0.0};
    if (n.IsSequence() && n.size() == 2) return {n[0].as<double>(), n[1].as<double>()};
    if (n.IsMap()) return {n["re"].as<double>(0.0), n["im"].as<double>(0.0)};
  } catch (const YAML::Exception&) {
  }
  throw ConfigError("bad complex value for " + where(n, key));
}

inline void check_keys(const YAML::Node& n, const std::string& ctx,
                       std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) throw ConfigError(ctx + " must be a mapping");
  for (const auto& kv : n) {
    const auto k = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + ctx);
  }
}

inline std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path q(p);
  return q.is_absolute() ? p : (std::filesystem::path(base_dir) / q).string();
}

inline void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(what + " not found: " + path);
  }
}

inline TaskConfig parse_task(const YAML::Node& item, const std::string& base) {
  TaskConfig t;
  YAML::Node p;
  if (item.IsScalar()) {
    t.kind = item.as<std::string>();
  } else if (item.IsMap() && item.size() == 1) {
    t.kind = item.begin()->first.as<std::string>();
    p = item.begin()->second;
    if (p.IsNull()) p = YAML::Node(YAML::NodeType::Map);
  } else {
    throw ConfigError("task entries must be a name or a single-key mapping");
  }
  const std::string ctx = "task '" + t.kind + "'";
  if (t.kind == "law-direct" || t.kind == "law-saddle" || t.kind == "covariance" ||
      t.kind == "projective-limit") {
    if (p && p.size() > 0) throw ConfigError(ctx + " takes no parameters");
  } else if (t.kind == "sample") {
    check_keys(p, ctx, {"n", "seed"});
    t.n = require<int>(p, "n");
    t.seed = require<std::uint64_t>(p, "seed");
    if (t.n < 0) throw ConfigError(ctx + ": n must be >= 0");
  } else if (t.kind == "conditional") {
    check_keys(p, ctx, {"record_path"});
    t.record_path = resolve(base, require<std::string>(p, "record_path"));
    require_file(t.record_path, "record file");
  } else if (t.kind == "check") {
    check_keys(p, ctx, {"type", "node", "expect"});
    t.check_type = require<std::string>(p, "type");
    if (t.check_type != "causality" && t.check_type != "trace" &&
        t.check_type != "normalization" && t.check_type != "divisibility") {
      throw ConfigError(ctx + ": unknown check type '" + t.check_type + "'");
    }
    if (p["node"]) t.node = get<int>(p, "node", 0);
    const auto e = get<std::string>(p, "expect", "pass");
    if (e != "pass" && e != "fail") throw ConfigError(ctx + ": expect must be pass or fail");
    t.expect_pass = e == "pass";
  } else if (t.kind == "recover") {
    check_keys(p, ctx, {"partition", "first_role", "samples", "seed"});
    t.cuts = require<std::vector<int>>(p, "partition");
    t.first_role = get<std::string>(p, "first_role", "operation");
    if (t.first_role != "operation" && t.first_role != "process") {
      throw ConfigError(ctx + ": first_role must be operation or process");
    }
    t.n = get<int>(p, "samples", 4);
    t.seed = get<std::uint64_t>(p, "seed", 1);
  } else if (t.kind == "oracle") {
    check_keys(p, ctx, {"cutoffs", "bins", "steps", "refine", "lambda", "g", "omega_E",
                        "omega_M"});
    t.cutoffs = require<std::vector<int>>(p, "cutoffs");
    if (t.cutoffs.size() != 3) throw ConfigError(ctx + ": cutoffs needs three entries");
    t.bins = get<std::vector<double>>(p, "bins", {0.0});
    t.steps = get<int>(p, "steps", 2);
    t.refine = get<int>(p, "refine", 16);
    t.lambda = get<double>(p, "lambda", 0.1);
    t.coupling = get<double>(p, "g", 0.1);
    t.omega_E = get<double>(p, "omega_E", 1.0);
    t.omega_M = get<double>(p, "omega_M", 1.0);
  } else {
    throw ConfigError("unknown task '" + t.kind + "'");
  }
  return t;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& base_dir = ".") {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  ExperimentConfig c;
  c.text = text;
  check_keys(root, "config", {"grid", "model", "state", "measurement", "tasks", "output"});

  const YAML::Node g = root["grid"];
  if (!g) throw ConfigError("missing section 'grid'");
  check_keys(g, "grid", {"t_i", "t_f", "n_steps"});
  c.t_i = get<double>(g, "t_i", 0.0);
  c.t_f = require<double>(g, "t_f");
  c.n_steps = require<int>(g, "n_steps");

  if (const YAML::Node m = root["model"]) {
    check_keys(m, "model", {"m", "omega0", "kernel"});
    c.m = get<double>(m, "m", 1.0);
    c.omega0 = get<double>(m, "omega0", 0.0);
    if (const YAML::Node k = m["kernel"]) {
      check_keys(k, "kernel", {"type", "eta", "gamma", "structure", "path"});
      c.kernel.type = get<std::string>(k, "type", "zero");
      c.kernel.eta = get<double>(k, "eta", 0.0);
      c.kernel.gamma = get<double>(k, "gamma", 1.0);
      c.kernel.structure = get<std::string>(k, "structure", "noise");
      c.kernel.path = resolve(base_dir, get<std::string>(k, "path", ""));
      if (c.kernel.type != "zero" && c.kernel.type != "exp" && c.kernel.type != "file") {
        throw ConfigError("kernel type must be zero, exp or file");
      }
      if (c.kernel.structure != "noise" && c.kernel.structure != "ones") {
        throw ConfigError("kernel structure must be noise or ones");
      }
      if (c.kernel.type == "file") {
        if (c.kernel.path.empty()) throw ConfigError("kernel type file needs 'path'");
        require_file(c.kernel.path, "kernel file");
      }
    }
  }

  if (const YAML::Node s = root["state"]) {
    check_keys(s, "state", {"xi", "c", "coherent"});
    if (s["coherent"]) {
      if (s["xi"] || s["c"]) throw ConfigError("state: give either coherent or xi/c");
      check_keys(s["coherent"], "state.coherent", {"x0", "p0"});
      c.state.coherent = true;
      c.state.x0 = get<double>(s["coherent"], "x0", 0.0);
      c.state.p0 = get<double>(s["coherent"], "p0", 0.0);
    } else {
      if (const YAML::Node xi = s["xi"]) {
        if (!xi.IsSequence() || xi.size() != 4) throw ConfigError("state.xi needs 4 entries");
        for (int i = 0; i < 4; ++i) c.state.xi[i] = parse_complex(xi[i], "xi");
      }
      if (const YAML::Node cv = s["c"]) {
        if (!cv.IsSequence() || cv.size() != 2) throw ConfigError("state.c needs 2 entries");
        for (int i = 0; i < 2; ++i) c.state.c[i] = parse_complex(cv[i], "c");
      }
    }
  }

  if (const YAML::Node ms = root["measurement"]) {
    check_keys(ms, "measurement", {"tau_m", "weights"});
    c.tau_m = get<double>(ms, "tau_m", 1.0);
    c.weights = get<std::string>(ms, "weights", "trapezoid");
    if (c.weights != "trapezoid" && c.weights != "step_end") {
      throw ConfigError("measurement weights must be trapezoid or step_end");
    }
  }

  const YAML::Node tasks = root["tasks"];
  if (!tasks || !tasks.IsSequence() || tasks.size() == 0) {
    throw ConfigError("'tasks' must be a nonempty list");
  }
  std::map<std::string, int> seen;
  for (const auto& item : tasks) {
    TaskConfig t = parse_task(item, base_dir);
    std::string stem = t.kind;
    if (t.kind == "check") stem += "-" + t.check_type;
    const int k = ++seen[stem];
    t.name = k == 1 ? stem : stem + "-" + std::to_string(k);
    c.tasks.push_back(std::move(t));
  }

  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir", "format"});
    c.out_dir = resolve(base_dir, get<std::string>(o, "dir", "out"));
    c.format = get<std::string>(o, "format", "csv");
    if (c.format != "csv" && c.format != "json") {
      throw ConfigError("output format must be csv or json");
    }
  } else {
    c.out_dir = resolve(base_dir, "out");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto base = std::filesystem::path(path).parent_path().string();
  ExperimentConfig c = parse_config_text(ss.str(), base.empty() ? "." : base);
  c.source_path = path;
  return c;
}

// 64-bit FNV-1a of the config bytes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace funcproc::cli

#endif  // FUNCPROC_CLI_CONFIG_HPP_
