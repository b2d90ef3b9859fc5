#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "saddlesim/errors.hpp"

namespace saddlesim {

//! Experiment description, read from a flat [section] key = value text file.
//! Every field has a default, every key is written back by serialize_config,
//! and unknown keys are rejected with the offending field path, so a config
//! survives parse -> serialize -> parse unchanged.
struct ExperimentConfig {
  struct Problem {
    std::string family = "bilinear";  // bilinear | lowerbound
    int nodes = 5;                    // bilinear node count
    int n = 4;                        // per-side dimension
    double l = 10.0;
    double mu = 1.0;
    std::uint64_t seed = 1;  // bilinear instance draw
    int depth = 3;           // lowerbound d (node count 2d + 3)

    friend bool operator==(const Problem&, const Problem&) = default;
  };

  struct GraphCfg {
    std::string kind = "static";    // static | skeleton | markov | adversarial
    std::string topology = "ring";  // ring | path | star | complete
    int chords = 0;                 // volatile / candidate edges added to the base
    double fail_prob = 0.0;         // skeleton kind
    double flip_prob = 0.5;         // markov kind
    std::uint64_t seed = 1;
    int depth = 3;  // adversarial kind

    friend bool operator==(const GraphCfg&, const GraphCfg&) = default;
  };

  struct Solver {
    double gamma = 0.0;  // 0 picks 1/(4 L_max)
    int iterations = 50;

    friend bool operator==(const Solver&, const Solver&) = default;
  };

  struct Consensus {
    std::string kind = "accelerated";  // accelerated | plain | mlmc | exact
    int rounds = 0;                    // inner budget per invocation
    double eps0 = 0.0;                 // accelerated: derive rounds for this consensus accuracy
    double target_eps = 0.0;           // accelerated: eps0 = target_eps * mu / (10 L_max)
    std::uint64_t mlmc_seed = 0;

    friend bool operator==(const Consensus&, const Consensus&) = default;
  };

  struct Output {
    std::string directory = "out";
    int checkpoint_stride = 1;
    bool plot = false;
    bool dump_matrices = false;  // lowerbound family: write the coupling matrices as CSV

    friend bool operator==(const Output&, const Output&) = default;
  };

  struct Run {
    std::vector<std::uint64_t> repeats = {1};

    friend bool operator==(const Run&, const Run&) = default;
  };

  Problem problem;
  GraphCfg graph;
  Solver solver;
  Consensus consensus;
  Output output;
  Run run;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline void parse_into(std::string_view value, const std::string& path, int& out) {
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError(path + ": expected an integer, got '" + std::string(value) + "'");
}

inline void parse_into(std::string_view value, const std::string& path, std::uint64_t& out) {
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError(path + ": expected a nonnegative integer, got '" + std::string(value) + "'");
}

inline void parse_into(std::string_view value, const std::string& path, double& out) {
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError(path + ": expected a real number, got '" + std::string(value) + "'");
}

inline void parse_into(std::string_view value, const std::string& path, bool& out) {
  if (value == "true" || value == "1") {
    out = true;
  } else if (value == "false" || value == "0") {
    out = false;
  } else {
    throw ConfigError(path + ": expected true or false, got '" + std::string(value) + "'");
  }
}

inline void parse_into(std::string_view value, const std::string& path, std::string& out) {
  if (value.empty()) throw ConfigError(path + ": value cannot be empty");
  out = std::string(value);
}

inline void parse_into(std::string_view value, const std::string& path, std::vector<std::uint64_t>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < value.size()) {
    while (i < value.size() && (value[i] == ' ' || value[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < value.size() && value[j] != ' ' && value[j] != '\t') ++j;
    if (j > i) {
      std::uint64_t v = 0;
      parse_into(value.substr(i, j - i), path, v);
      out.push_back(v);
    }
    i = j;
  }
  if (out.empty()) throw ConfigError(path + ": expected at least one seed");
}

inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }

//! Shortest decimal that round-trips, independent of locale.
inline std::string format_value(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline std::string format_value(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::string section;
  int line_no = 0;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "problem" && section != "graph" && section != "solver" &&
          section != "consensus" && section != "output" && section != "run")
        throw ConfigError("unknown section: [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' outside any section");
    const std::string path = section + "." + key;

    bool known = true;
    if (section == "problem") {
      auto& p = cfg.problem;
      if (key == "family") detail::parse_into(value, path, p.family);
      else if (key == "nodes") detail::parse_into(value, path, p.nodes);
      else if (key == "n") detail::parse_into(value, path, p.n);
      else if (key == "l") detail::parse_into(value, path, p.l);
      else if (key == "mu") detail::parse_into(value, path, p.mu);
      else if (key == "seed") detail::parse_into(value, path, p.seed);
      else if (key == "depth") detail::parse_into(value, path, p.depth);
      else known = false;
    } else if (section == "graph") {
      auto& g = cfg.graph;
      if (key == "kind") detail::parse_into(value, path, g.kind);
      else if (key == "topology") detail::parse_into(value, path, g.topology);
      else if (key == "chords") detail::parse_into(value, path, g.chords);
      else if (key == "fail_prob") detail::parse_into(value, path, g.fail_prob);
      else if (key == "flip_prob") detail::parse_into(value, path, g.flip_prob);
      else if (key == "seed") detail::parse_into(value, path, g.seed);
      else if (key == "depth") detail::parse_into(value, path, g.depth);
      else known = false;
    } else if (section == "solver") {
      auto& s = cfg.solver;
      if (key == "gamma") detail::parse_into(value, path, s.gamma);
      else if (key == "iterations") detail::parse_into(value, path, s.iterations);
      else known = false;
    } else if (section == "consensus") {
      auto& c = cfg.consensus;
      if (key == "kind") detail::parse_into(value, path, c.kind);
      else if (key == "rounds") detail::parse_into(value, path, c.rounds);
      else if (key == "eps0") detail::parse_into(value, path, c.eps0);
      else if (key == "target_eps") detail::parse_into(value, path, c.target_eps);
      else if (key == "mlmc_seed") detail::parse_into(value, path, c.mlmc_seed);
      else known = false;
    } else if (section == "output") {
      auto& o = cfg.output;
      if (key == "directory") detail::parse_into(value, path, o.directory);
      else if (key == "checkpoint_stride") detail::parse_into(value, path, o.checkpoint_stride);
      else if (key == "plot") detail::parse_into(value, path, o.plot);
      else if (key == "dump_matrices") detail::parse_into(value, path, o.dump_matrices);
      else known = false;
    } else if (section == "run") {
      if (key == "repeats") detail::parse_into(value, path, cfg.run.repeats);
      else known = false;
    }
    if (!known) throw ConfigError("unknown key: " + path);
  }
  return cfg;
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
  using detail::format_value;
  std::string out;
  auto kv = [&out](const char* key, const auto& value) {
    out += key;
    out += " = ";
    out += format_value(value);
    out += '\n';
  };
  out += "[problem]\n";
  kv("family", cfg.problem.family);
  kv("nodes", cfg.problem.nodes);
  kv("n", cfg.problem.n);
  kv("l", cfg.problem.l);
  kv("mu", cfg.problem.mu);
  kv("seed", cfg.problem.seed);
  kv("depth", cfg.problem.depth);
  out += "\n[graph]\n";
  kv("kind", cfg.graph.kind);
  kv("topology", cfg.graph.topology);
  kv("chords", cfg.graph.chords);
  kv("fail_prob", cfg.graph.fail_prob);
  kv("flip_prob", cfg.graph.flip_prob);
  kv("seed", cfg.graph.seed);
  kv("depth", cfg.graph.depth);
  out += "\n[solver]\n";
  kv("gamma", cfg.solver.gamma);
  kv("iterations", cfg.solver.iterations);
  out += "\n[consensus]\n";
  kv("kind", cfg.consensus.kind);
  kv("rounds", cfg.consensus.rounds);
  kv("eps0", cfg.consensus.eps0);
  kv("target_eps", cfg.consensus.target_eps);
  kv("mlmc_seed", cfg.consensus.mlmc_seed);
  out += "\n[output]\n";
  kv("directory", cfg.output.directory);
  kv("checkpoint_stride", cfg.output.checkpoint_stride);
  kv("plot", cfg.output.plot);
  kv("dump_matrices", cfg.output.dump_matrices);
  out += "\n[run]\n";
  kv("repeats", cfg.run.repeats);
  return out;
}

//! Schema validation beyond per-value types; throws ConfigError naming the field.
inline void validate_config(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  if (p.family != "bilinear" && p.family != "lowerbound")
    throw ConfigError("problem.family: unknown family '" + p.family + "'");
  if (!(p.l > p.mu && p.mu > 0.0))
    throw ConfigError("problem.l/problem.mu: need l > mu > 0");
  if (p.family == "bilinear") {
    if (p.nodes < 1) throw ConfigError("problem.nodes: need at least one node");
    if (p.n < 1) throw ConfigError("problem.n: need dimension >= 1");
  } else {
    if (p.depth < 2) throw ConfigError("problem.depth: need depth >= 2");
    if (p.n < 2) throw ConfigError("problem.n: the lower-bound family needs n >= 2");
  }

  const auto& g = cfg.graph;
  const bool has_base = g.kind == "static" || g.kind == "skeleton" || g.kind == "markov";
  if (!has_base && g.kind != "adversarial")
    throw ConfigError("graph.kind: unknown kind '" + g.kind + "'");
  if (has_base && g.topology != "ring" && g.topology != "path" && g.topology != "star" &&
      g.topology != "complete")
    throw ConfigError("graph.topology: unknown topology '" + g.topology + "'");
  if (g.chords < 0) throw ConfigError("graph.chords: cannot be negative");
  if (g.kind == "skeleton" && !(g.fail_prob >= 0.0 && g.fail_prob <= 1.0))
    throw ConfigError("graph.fail_prob: must lie in [0, 1]");
  if (g.kind == "markov" && !(g.flip_prob > 0.0 && g.flip_prob < 1.0))
    throw ConfigError("graph.flip_prob: must lie strictly inside (0, 1)");
  if (g.kind == "adversarial" && g.depth < 2)
    throw ConfigError("graph.depth: need depth >= 2");

  // The problem fixes the vertex count; the graph has to agree.
  const int want_nodes = p.family == "bilinear" ? p.nodes : 2 * p.depth + 3;
  if (g.kind == "adversarial" && 2 * g.depth + 3 != want_nodes)
    throw ConfigError("graph.depth: adversarial sequence has " + std::to_string(2 * g.depth + 3) +
                      " vertices but the problem needs " + std::to_string(want_nodes));
  // A single node degenerates every topology to the trivial graph; otherwise a
  // ring needs room to close.
  if (has_base && g.topology == "ring" && want_nodes != 1 && want_nodes < 3)
    throw ConfigError("graph.topology: a ring needs at least 3 vertices");

  const auto& s = cfg.solver;
  if (s.gamma < 0.0) throw ConfigError("solver.gamma: cannot be negative");
  if (s.iterations < 0) throw ConfigError("solver.iterations: cannot be negative");

  const auto& c = cfg.consensus;
  if (c.kind != "accelerated" && c.kind != "plain" && c.kind != "mlmc" && c.kind != "exact")
    throw ConfigError("consensus.kind: unknown kind '" + c.kind + "'");
  if (c.rounds < 0) throw ConfigError("consensus.rounds: cannot be negative");
  if (c.eps0 < 0.0) throw ConfigError("consensus.eps0: cannot be negative");
  if (c.target_eps < 0.0) throw ConfigError("consensus.target_eps: cannot be negative");
  if (c.kind == "mlmc" && cfg.graph.kind != "markov")
    throw ConfigError("consensus.kind: mlmc needs graph.kind = markov");
  if (c.kind == "accelerated" && c.rounds == 0 && c.eps0 == 0.0 && c.target_eps == 0.0)
    throw ConfigError("consensus.rounds: give rounds, eps0, or target_eps");
  if ((c.kind == "plain" || c.kind == "mlmc") && c.rounds == 0)
    throw ConfigError("consensus.rounds: the " + c.kind + " kind needs an explicit budget");
  if (c.kind != "accelerated" && (c.eps0 > 0.0 || c.target_eps > 0.0))
    throw ConfigError("consensus.eps0: only the accelerated kind derives rounds from a target");

  const auto& o = cfg.output;
  if (o.directory.empty()) throw ConfigError("output.directory: cannot be empty");
  if (o.checkpoint_stride < 1) throw ConfigError("output.checkpoint_stride: must be >= 1");

  if (cfg.run.repeats.empty()) throw ConfigError("run.repeats: need at least one seed");
  std::vector<std::uint64_t> seeds = cfg.run.repeats;
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
    throw ConfigError("run.repeats: seeds must be distinct");
}

}  // namespace saddlesim
