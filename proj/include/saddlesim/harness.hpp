#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "saddlesim/config.hpp"
#include "saddlesim/consensus.hpp"
#include "saddlesim/errors.hpp"
#include "saddlesim/gossip.hpp"
#include "saddlesim/graph.hpp"
#include "saddlesim/lowerbound.hpp"
#include "saddlesim/problem.hpp"
#include "saddlesim/sequence.hpp"
#include "saddlesim/solver.hpp"

namespace saddlesim {

//! splitmix64-style combiner; each (section, repeat) pair gets an independent
//! stream so repeats replicate the whole experiment, not just one source of
//! randomness.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

inline Graph make_base_graph(const std::string& topology, int nodes) {
  if (nodes == 1) return Graph(1, {});
  if (topology == "ring") return ring_graph(nodes);
  if (topology == "path") return path_graph(nodes);
  if (topology == "star") return star_graph(nodes);
  if (topology == "complete") return complete_graph(nodes);
  throw ConfigError("graph.topology: unknown topology '" + topology + "'");
}

//! Deterministic chord picker: walk offsets near the diameter first so the
//! added edges spread around the base instead of clustering on one vertex.
inline std::vector<Edge> spread_chords(const Graph& base, int count) {
  std::vector<Edge> out;
  if (count <= 0) return out;
  const int m = base.vertex_count();
  auto taken = [&](const Edge& e) {
    return base.has_edge(e.u, e.v) || std::find(out.begin(), out.end(), e) != out.end();
  };
  for (int sweep = 0; static_cast<int>(out.size()) < count && sweep < m; ++sweep) {
    for (int u = 0; u < m && static_cast<int>(out.size()) < count; ++u) {
      const int v = (u + m / 2 + sweep) % m;
      if (u == v) continue;
      Edge e(u, v);
      if (!taken(e)) out.push_back(e);
    }
  }
  if (static_cast<int>(out.size()) < count)
    throw ConfigError("graph.chords: cannot place " + std::to_string(count) +
                      " chords on this base graph");
  std::sort(out.begin(), out.end());
  return out;
}

inline SaddleProblem make_problem(const ExperimentConfig& cfg, std::uint64_t repeat) {
  const auto& p = cfg.problem;
  if (p.family == "bilinear")
    return make_bilinear_problem(p.nodes, p.n, mix_seed(mix_seed(p.seed, 1), repeat), p.l, p.mu);
  if (p.family == "lowerbound") return make_lower_bound_problem(p.depth, p.l, p.mu, p.n);
  throw ConfigError("problem.family: unknown family '" + p.family + "'");
}

inline GraphSequence make_sequence(const ExperimentConfig& cfg, std::uint64_t repeat) {
  const auto& g = cfg.graph;
  const int nodes = cfg.problem.family == "bilinear" ? cfg.problem.nodes : 2 * cfg.problem.depth + 3;
  if (g.kind == "adversarial") return AdversarialTaabSequence(g.depth);
  const Graph base = make_base_graph(g.topology, nodes);
  if (g.kind == "static")
    return StaticSequence(graph_union(base, Graph(nodes, spread_chords(base, g.chords))));
  const std::uint64_t seed = mix_seed(mix_seed(g.seed, 2), repeat);
  if (g.kind == "skeleton") return SkeletonSequence(base, spread_chords(base, g.chords), g.fail_prob, seed);
  if (g.kind == "markov") return MarkovSequence(base, spread_chords(base, g.chords), g.flip_prob, seed);
  throw ConfigError("graph.kind: unknown kind '" + g.kind + "'");
}

inline ConsensusKind consensus_kind_from_name(const std::string& name) {
  if (name == "accelerated") return ConsensusKind::accelerated;
  if (name == "plain") return ConsensusKind::plain;
  if (name == "mlmc") return ConsensusKind::mlmc;
  if (name == "exact") return ConsensusKind::exact;
  throw ConfigError("consensus.kind: unknown kind '" + name + "'");
}

//! Fill in the derived solver parameters: the default step size, and for the
//! accelerated kind an inner budget from the consensus-accuracy formula when
//! no explicit budget was given.
inline SolverConfig resolve_solver_config(const ExperimentConfig& cfg, const SaddleProblem& prob,
                                          const GraphSequence& seq, std::uint64_t repeat) {
  SolverConfig sc;
  sc.gamma = cfg.solver.gamma > 0.0 ? cfg.solver.gamma : 1.0 / (4.0 * prob.lipschitz_max());
  sc.iterations = cfg.solver.iterations;
  sc.metrics_stride = cfg.output.checkpoint_stride;
  sc.kind = consensus_kind_from_name(cfg.consensus.kind);
  sc.mlmc_seed = mix_seed(mix_seed(cfg.consensus.mlmc_seed, 3), repeat);
  sc.consensus_rounds = cfg.consensus.rounds;
  if (prob.node_count() > 1 && sc.kind == ConsensusKind::accelerated && sc.consensus_rounds == 0) {
    double eps0 = cfg.consensus.eps0;
    if (eps0 <= 0.0) eps0 = cfg.consensus.target_eps * prob.mu() / (10.0 * prob.lipschitz_max());
    const double dist0_sq = prob.reference().squaredNorm();  // iterates start at zero
    const double q_sq = prob.operator_spread_sq(prob.reference());
    sc.consensus_rounds = static_cast<int>(required_rounds(
        spectral_summary(seq).chi(), eps0, dist0_sq, std::max(q_sq, 1e-300), prob.lipschitz_max()));
  }
  return sc;
}

namespace detail {

inline void append_double(std::string& s, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  s.append(buf, p);
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

//! Lower median: deterministic and never invents a value between samples.
inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline std::int64_t median_of_int(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline std::string matrix_to_csv(const Eigen::MatrixXd& a) {
  std::string s;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (c) s += ',';
      append_double(s, a(r, c));
    }
    s += '\n';
  }
  return s;
}

}  // namespace detail

inline std::string records_to_csv(const std::vector<RunRecord>& recs) {
  std::string s = "k,K,oracle_calls,consensus_err,dist_sq\n";
  for (const RunRecord& r : recs) {
    s += std::to_string(r.k);
    s += ',';
    s += std::to_string(r.rounds);
    s += ',';
    s += std::to_string(r.oracle_calls);
    s += ',';
    detail::append_double(s, r.consensus_err);
    s += ',';
    detail::append_double(s, r.dist_sq);
    s += '\n';
  }
  return s;
}

//! Per-checkpoint lower median across repeats. Checkpoint counts agree by
//! construction (same iteration count and stride everywhere).
inline std::vector<RunRecord> aggregate_median(const std::vector<std::vector<RunRecord>>& runs) {
  if (runs.empty()) throw InvalidParameter("nothing to aggregate");
  const std::size_t checkpoints = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != checkpoints) throw InvalidParameter("checkpoint counts differ across repeats");
  std::vector<RunRecord> agg(checkpoints);
  std::vector<double> ce(runs.size()), ds(runs.size());
  std::vector<std::int64_t> ks(runs.size());
  for (std::size_t i = 0; i < checkpoints; ++i) {
    for (std::size_t s = 0; s < runs.size(); ++s) {
      ce[s] = runs[s][i].consensus_err;
      ds[s] = runs[s][i].dist_sq;
      ks[s] = runs[s][i].rounds;
    }
    agg[i].k = runs.front()[i].k;
    agg[i].oracle_calls = runs.front()[i].oracle_calls;
    agg[i].rounds = detail::median_of_int(ks);
    agg[i].consensus_err = detail::median_of(ce);
    agg[i].dist_sq = detail::median_of(ds);
  }
  return agg;
}

//! One curve of the overlaid plot, already in (rounds, value) form.
struct PlotSeries {
  std::string label;
  std::string color;
  std::string dash;  // empty = solid
  std::vector<std::pair<double, double>> points;
};

//! Standalone single-pane SVG: x = communication rounds, y = log10 of the
//! plotted quantity. No external resources, safe to open anywhere.
inline std::string render_log_plot(const std::vector<PlotSeries>& series, const std::string& title) {
  const double width = 720, height = 480;
  const double ml = 76, mr = 24, mt = 40, mb = 56;

  double kmax = 1.0, lo = 0.0, hi = -300.0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [k, v] : s.points) {
      if (!(v > 0.0)) continue;
      const double lg = std::log10(v);
      if (!any) {
        lo = hi = lg;
        any = true;
      } else {
        lo = std::min(lo, lg);
        hi = std::max(hi, lg);
      }
      kmax = std::max(kmax, k);
    }
  if (!any) {
    lo = -1.0;
    hi = 0.0;
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi - lo < 1.0) hi = lo + 1.0;

  auto sx = [&](double k) { return ml + (k / kmax) * (width - ml - mr); };
  auto sy = [&](double lg) { return mt + (hi - lg) / (hi - lo) * (height - mt - mb); };
  auto num = [&](double v) {
    char buf[48];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    (void)ec;
    return std::string(buf, p);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "viewBox=\"0 0 720 480\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         title + "</text>\n";

  // frame
  svg += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(width - ml - mr) +
         "\" height=\"" + num(height - mt - mb) + "\" fill=\"none\" stroke=\"#444444\"/>\n";

  // x ticks
  for (int i = 0; i <= 4; ++i) {
    const double k = kmax * i / 4.0;
    const double x = sx(k);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(height - mb) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(height - mb + 5) + "\" stroke=\"#444444\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(height - mb + 20) +
           "\" text-anchor=\"middle\">" + std::to_string(static_cast<long long>(std::llround(k))) +
           "</text>\n";
  }
  svg += "<text x=\"" + num(ml + (width - ml - mr) / 2) + "\" y=\"" + num(height - 12) +
         "\" text-anchor=\"middle\">communication rounds</text>\n";

  // y ticks at integer exponents
  const int step = std::max(1, static_cast<int>((hi - lo) / 6.0));
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
    const double y = sy(e);
    svg += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(y) + "\" stroke=\"#444444\"/>\n";
    svg += "<text x=\"" + num(ml - 9) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
  }

  double legend_y = mt + 16;
  for (const auto& s : series) {
    std::string pts;
    for (const auto& [k, v] : s.points) {
      if (!(v > 0.0)) continue;
      const double lg = std::max(lo, std::min(hi, std::log10(v)));
      pts += num(sx(k)) + "," + num(sy(lg)) + " ";
    }
    if (pts.empty()) continue;
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.6\"";
    if (!s.dash.empty()) svg += " stroke-dasharray=\"" + s.dash + "\"";
    svg += " points=\"" + pts + "\"/>\n";
    svg += "<line x1=\"" + num(width - mr - 150) + "\" y1=\"" + num(legend_y) + "\" x2=\"" +
           num(width - mr - 122) + "\" y2=\"" + num(legend_y) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"1.6\"" + (s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"") +
           "/>\n";
    svg += "<text x=\"" + num(width - mr - 116) + "\" y=\"" + num(legend_y + 4) + "\">" + s.label +
           "</text>\n";
    legend_y += 18;
  }
  svg += "</svg>\n";
  return svg;
}

struct ExperimentResult {
  std::vector<std::filesystem::path> seed_csv_paths;
  std::filesystem::path aggregate_csv_path;
  std::filesystem::path summary_path;
  std::optional<std::filesystem::path> floor_csv_path;
  std::optional<std::filesystem::path> plot_path;
  std::vector<RunRecord> aggregate;
  std::string summary;
};

//! Run every repeat, write per-seed CSVs, the median-aggregate CSV, a
//! key = value summary, and the optional overlay plot. For the lower-bound
//! family the (K, floor, measured) triples and, on request, the coupling
//! matrices are emitted alongside.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log,
                                       bool quiet = false) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  ExperimentResult out;
  std::vector<std::vector<RunRecord>> runs;
  double chi = 0.0, gamma_used = 0.0, y0_dist_sq = 0.0;
  int rounds_budget = 0;
  std::int64_t total_rounds_first = 0;

  for (std::size_t si = 0; si < cfg.run.repeats.size(); ++si) {
    const std::uint64_t seed = cfg.run.repeats[si];
    const SaddleProblem prob = make_problem(cfg, seed);
    GraphSequence seq = make_sequence(cfg, seed);
    const SolverConfig sc = resolve_solver_config(cfg, prob, seq, seed);
    const NodeStates z0 = NodeStates::Zero(prob.node_count(), prob.dim());
    RunResult r = desm_run(prob, seq, z0, sc);

    if (si == 0) {
      chi = prob.node_count() > 1 ? spectral_summary(seq).chi() : 1.0;
      gamma_used = sc.gamma;
      rounds_budget = sc.consensus_rounds;
      total_rounds_first = r.total_rounds;
      y0_dist_sq = prob.reference().tail(prob.ny()).squaredNorm();
    }

    const fs::path csv = dir / ("seed_" + std::to_string(seed) + ".csv");
    detail::write_text_file(csv, records_to_csv(r.records));
    out.seed_csv_paths.push_back(csv);
    runs.push_back(std::move(r.records));
  }

  out.aggregate = aggregate_median(runs);
  out.aggregate_csv_path = dir / "aggregate.csv";
  detail::write_text_file(out.aggregate_csv_path, records_to_csv(out.aggregate));

  const bool lower_bound_family = cfg.problem.family == "lowerbound";
  if (lower_bound_family) {
    std::string floor_csv = "K,floor,measured\n";
    for (const RunRecord& r : out.aggregate) {
      const LowerBoundFloor f =
          lower_bound_floor(cfg.problem.l, cfg.problem.mu, cfg.problem.depth, r.rounds, y0_dist_sq);
      floor_csv += std::to_string(r.rounds);
      floor_csv += ',';
      detail::append_double(floor_csv, f.q_power);
      floor_csv += ',';
      detail::append_double(floor_csv, r.dist_sq);
      floor_csv += '\n';
    }
    out.floor_csv_path = dir / "floor.csv";
    detail::write_text_file(*out.floor_csv_path, floor_csv);

    if (cfg.output.dump_matrices) {
      const LowerBoundMatrices mats = make_lower_bound_matrices(cfg.problem.n);
      detail::write_text_file(dir / "a1.csv", detail::matrix_to_csv(mats.a1));
      detail::write_text_file(dir / "a2.csv", detail::matrix_to_csv(mats.a2));
      detail::write_text_file(dir / "a.csv", detail::matrix_to_csv(mats.a));
    }
  }

  if (cfg.output.plot) {
    std::vector<PlotSeries> series;
    PlotSeries measured{"measured dist_sq", "#1f77b4", "", {}};
    for (const RunRecord& r : out.aggregate)
      measured.points.emplace_back(static_cast<double>(r.rounds), r.dist_sq);
    series.push_back(std::move(measured));

    const bool rate_overlay = (cfg.consensus.kind == "accelerated" || cfg.consensus.kind == "plain") &&
                              rounds_budget >= 1 && !out.aggregate.empty() &&
                              out.aggregate.front().dist_sq > 0.0;
    if (rate_overlay) {
      PlotSeries rate{"rate envelope", "#d62728", "6 3", {}};
      const double d0 = out.aggregate.front().dist_sq;
      const double slope = cfg.problem.mu / (8.0 * cfg.problem.l * rounds_budget);
      for (const RunRecord& r : out.aggregate)
        rate.points.emplace_back(static_cast<double>(r.rounds),
                                 d0 * std::exp(-slope * static_cast<double>(r.rounds)));
      series.push_back(std::move(rate));
    }
    if (lower_bound_family) {
      PlotSeries floor{"q-power floor", "#2ca02c", "2 3", {}};
      for (const RunRecord& r : out.aggregate)
        floor.points.emplace_back(
            static_cast<double>(r.rounds),
            lower_bound_floor(cfg.problem.l, cfg.problem.mu, cfg.problem.depth, r.rounds, y0_dist_sq)
                .q_power);
      series.push_back(std::move(floor));
    }
    out.plot_path = dir / "plot.svg";
    detail::write_text_file(*out.plot_path,
                            render_log_plot(series, cfg.problem.family + " / " + cfg.graph.kind));
  }

  // key = value summary block
  std::string s;
  const RunRecord& last = out.aggregate.back();
  s += "family = " + cfg.problem.family + "\n";
  s += "graph_kind = " + cfg.graph.kind + "\n";
  s += "seeds = " + std::to_string(cfg.run.repeats.size()) + "\n";
  s += "iterations = " + std::to_string(cfg.solver.iterations) + "\n";
  s += "consensus_kind = " + cfg.consensus.kind + "\n";
  s += "consensus_rounds = " + std::to_string(rounds_budget) + "\n";
  s += "gamma = " + detail::format_double(gamma_used) + "\n";
  s += "chi = " + detail::format_double(chi) + "\n";
  s += "total_rounds = " + std::to_string(total_rounds_first) + "\n";
  s += "oracle_calls_per_node = " + std::to_string(last.oracle_calls) + "\n";
  s += "final_consensus_err = " + detail::format_double(last.consensus_err) + "\n";
  s += "final_dist_sq = " + detail::format_double(last.dist_sq) + "\n";
  if (lower_bound_family) {
    s += "q = " + detail::format_double(q_root(cfg.problem.l, cfg.problem.mu)) + "\n";
    s += "y0_dist_sq = " + detail::format_double(y0_dist_sq) + "\n";
    s += "floor_final = " +
         detail::format_double(lower_bound_floor(cfg.problem.l, cfg.problem.mu, cfg.problem.depth,
                                                 last.rounds, y0_dist_sq)
                                   .q_power) +
         "\n";
  }
  out.summary = s;
  out.summary_path = dir / "summary.txt";
  detail::write_text_file(out.summary_path, s);
  if (!quiet) log << s;
  return out;
}

namespace detail {

//! Contraction ratios of the extra-step gossip against its analytic envelope,
//! checked for every budget H up to ceil(5 sqrt(chi)).
inline bool check_gossip_contraction(GraphSequence seq, std::string& why) {
  const SpectralSummary ss = spectral_summary(seq);
  const double chi = ss.chi();
  const int h_max = static_cast<int>(std::ceil(5.0 * std::sqrt(chi)));
  std::mt19937_64 eng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NodeStates z0(vertex_count(seq), 3);
  for (Eigen::Index r = 0; r < z0.rows(); ++r)
    for (Eigen::Index c = 0; c < z0.cols(); ++c) z0(r, c) = gauss(eng);
  const double ce0 = consensus_error(z0);
  const Eigen::RowVectorXd mean0 = mean_state(z0);
  for (int h = 1; h <= h_max; ++h) {
    const ConsensusParams params = accelerated_gossip_params(ss.lambda_max, ss.lambda_min_plus, h);
    const GossipResult res = acc_gossip_non_recoverable(z0, seq, 0, params);
    const double ratio = consensus_error(res.z) / ce0;
    const double bound = accelerated_gossip_bound(chi, h);
    if (!(ratio <= bound * (1.0 + 1e-9))) {
      why = "H=" + std::to_string(h) + " ratio " + format_double(ratio) + " exceeds bound " +
            format_double(bound);
      return false;
    }
    if ((mean_state(res.z) - mean0).norm() > 1e-10 * (1.0 + mean0.norm())) {
      why = "mean drifted at H=" + std::to_string(h);
      return false;
    }
  }
  return true;
}

inline bool verify_gossip_contraction(std::string& why) {
  const Graph ring = ring_graph(8);
  if (!check_gossip_contraction(StaticSequence(ring), why)) return false;
  return check_gossip_contraction(SkeletonSequence(ring, spread_chords(ring, 4), 0.1, 5), why);
}

//! The first coordinate is communication-free (the e1 term on the right
//! cluster), so the span envelope is 1 + floor(K/d): one earned coordinate
//! per cross-cluster transfer, each costing at least d rounds amortized.
inline bool verify_bbp_span(std::string& why) {
  for (int d = 2; d <= 6; ++d) {
    const AdversarialTaabSequence seq(d);
    const BbpSpanResult res = simulate_bbp_span(seq, 10 * d);
    const auto& traj = res.global_prefix_by_round;
    if (traj.front() != 1) {
      why = "d=" + std::to_string(d) + " starting prefix is not the free coordinate alone";
      return false;
    }
    int last_advance = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const int limit = 1 + static_cast<int>(k) / d;  // equals 1 for all k < d
      if (traj[k] > limit) {
        why = "d=" + std::to_string(d) + " round " + std::to_string(k) + " prefix " +
              std::to_string(traj[k]) + " > " + std::to_string(limit);
        return false;
      }
      if (k > 0 && traj[k] > traj[k - 1]) {
        if (static_cast<int>(k) - last_advance < d && last_advance > 0) {
          why = "d=" + std::to_string(d) + " prefix advanced " +
                std::to_string(static_cast<int>(k) - last_advance) + " rounds after the previous advance";
          return false;
        }
        last_advance = static_cast<int>(k);
      }
    }
    if (traj[3 * d] > 3) {
      why = "d=" + std::to_string(d) + " prefix at K=3d exceeded 3";
      return false;
    }
    GraphSequence gs = seq;
    const std::vector<int> v1 = seq.v1(), v2 = seq.v2();
    // The clusters sit four hops apart at every instant, so raw transfers are
    // floored at 4 regardless of d; only for d <= 4 is that also >= d.
    const std::int64_t floor_rounds = std::min<std::int64_t>(d, 4);
    for (std::int64_t start = 0; start < seq.period(); ++start) {
      const std::int64_t fwd = greedy_transfer_rounds(gs, v1, v2, start);
      const std::int64_t bwd = greedy_transfer_rounds(gs, v2, v1, start);
      if (fwd < floor_rounds || bwd < floor_rounds) {
        why = "d=" + std::to_string(d) + " transfer from round " + std::to_string(start) +
              " took " + std::to_string(std::min(fwd, bwd)) + " < " + std::to_string(floor_rounds);
        return false;
      }
    }
  }
  return true;
}

inline bool verify_two_edge(std::string& why) {
  for (int d = 2; d <= 6; ++d) {
    const AdversarialTaabSequence seq(d);
    const int m = seq.vertex_count();
    Graph prev = seq.graph(0);
    if (seq.graph(seq.period()) != prev) {
      why = "d=" + std::to_string(d) + " sequence is not periodic";
      return false;
    }
    for (std::int64_t k = 0; k <= seq.period(); ++k) {
      const Graph g = seq.graph(k);
      if (!g.connected() || static_cast<int>(g.edges().size()) != m - 1) {
        why = "d=" + std::to_string(d) + " round " + std::to_string(k) + " is not a tree";
        return false;
      }
      if (k > 0 && edge_change_count(prev, g) > 2) {
        why = "d=" + std::to_string(d) + " rounds " + std::to_string(k - 1) + "->" +
              std::to_string(k) + " changed more than two edges";
        return false;
      }
      prev = g;
    }
  }
  return true;
}

inline bool verify_aggregation(std::string& why) {
  const double big_l = 4.0, mu = 1.0;
  const int n = 8, d = 3;
  const SaddleProblem prob = make_lower_bound_problem(d, big_l, mu, n);
  const LowerBoundMatrices mats = make_lower_bound_matrices(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double want = r == c ? 1.0 : (c == r + 1 ? -1.0 : 0.0);
      if (std::abs(mats.a(r, c) - want) > 0.0) {
        why = "averaged coupling matrix has wrong structure";
        return false;
      }
    }
  std::mt19937_64 eng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1(0) = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd z(2 * n);
    for (int i = 0; i < 2 * n; ++i) z(i) = gauss(eng);
    const Eigen::VectorXd x = z.head(n), y = z.tail(n);
    Eigen::VectorXd want(2 * n);
    want.head(n) = mu * x + (big_l / 2.0) * (mats.a * y);
    want.tail(n) = mu * y - (big_l / 2.0) * (mats.a.transpose() * x) -
                   (big_l * big_l / (4.0 * mu)) * e1;
    const Eigen::VectorXd got = prob.eval_mean_operator(z);
    if ((got - want).norm() > 1e-10 * (1.0 + want.norm())) {
      why = "mean of node operators drifted from the aggregate form";
      return false;
    }
    const Eigen::VectorXd root = prob.eval_operator(0, z);
    const Eigen::VectorXd mobile = prob.eval_operator(prob.node_count() - 1, z);
    if ((root - mu * z).norm() > 1e-12 * (1.0 + z.norm()) ||
        (mobile - mu * z).norm() > 1e-12 * (1.0 + z.norm())) {
      why = "uncoupled node operator is not the pure regularizer";
      return false;
    }
  }
  return true;
}

inline bool verify_q_root(std::string& why) {
  const double mus[] = {0.1, 0.5, 1.0, 2.0, 5.0};
  const double ratios[] = {1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 16.0, 32.0, 64.0};
  for (double mu : mus) {
    double prev_q = 0.0;
    for (double ratio : ratios) {
      const double big_l = mu * ratio;
      const double q = q_root(big_l, mu);
      if (!(q > 0.0 && q < 1.0)) {
        why = "q out of range at L/mu=" + format_double(ratio);
        return false;
      }
      const double alpha = coupling_alpha(big_l, mu);
      const double residual = std::abs(q * q - (2.0 + alpha) * q + 1.0);
      if (residual > 1e-12 * (2.0 + alpha)) {
        why = "characteristic residual " + format_double(residual) + " at L/mu=" +
              format_double(ratio);
        return false;
      }
      if (std::log(q) < -2.0 * mu / (big_l - mu) - 1e-12) {
        why = "log q fell below -2mu/(L-mu) at L/mu=" + format_double(ratio);
        return false;
      }
      if (q <= prev_q) {
        why = "q is not increasing in L/mu at L/mu=" + format_double(ratio);
        return false;
      }
      prev_q = q;
    }
  }
  return true;
}

}  // namespace detail

//! Self-check of the analytic identities the library leans on. Prints one
//! PASS/FAIL line per group; returns true when everything holds.
inline bool verify_invariants(std::ostream& out) {
  struct Group {
    const char* name;
    bool (*body)(std::string&);
  };
  const Group groups[] = {
      {"gossip-contraction", detail::verify_gossip_contraction},
      {"bbp-span", detail::verify_bbp_span},
      {"two-edge", detail::verify_two_edge},
      {"aggregation-identity", detail::verify_aggregation},
      {"q-root", detail::verify_q_root},
  };
  bool all = true;
  for (const Group& g : groups) {
    std::string why;
    bool ok = false;
    try {
      ok = g.body(why);
    } catch (const std::exception& e) {
      ok = false;
      why = e.what();
    }
    out << (ok ? "[PASS] " : "[FAIL] ") << g.name;
    if (!ok && !why.empty()) out << ": " << why;
    out << '\n';
    all = all && ok;
  }
  return all;
}

struct Preset {
  std::string name;
  std::string description;
  std::string text;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"skeleton-demo", "bilinear problem on a ring with failing chords, accelerated consensus",
       "[problem]\n"
       "family = bilinear\n"
       "nodes = 8\n"
       "n = 4\n"
       "l = 10\n"
       "mu = 1\n"
       "seed = 7\n"
       "\n"
       "[graph]\n"
       "kind = skeleton\n"
       "topology = ring\n"
       "chords = 3\n"
       "fail_prob = 0.1\n"
       "seed = 11\n"
       "\n"
       "[solver]\n"
       "iterations = 40\n"
       "\n"
       "[consensus]\n"
       "kind = accelerated\n"
       "eps0 = 1e-06\n"
       "\n"
       "[output]\n"
       "directory = skeleton-demo-out\n"
       "\n"
       "[run]\n"
       "repeats = 42 43 44\n"},
      {"markov-demo", "bilinear problem on a randomly flipping ring, multilevel consensus",
       "[problem]\n"
       "family = bilinear\n"
       "nodes = 10\n"
       "n = 2\n"
       "l = 10\n"
       "mu = 1\n"
       "seed = 7\n"
       "\n"
       "[graph]\n"
       "kind = markov\n"
       "topology = ring\n"
       "chords = 2\n"
       "flip_prob = 0.25\n"
       "seed = 11\n"
       "\n"
       "[solver]\n"
       "iterations = 10\n"
       "\n"
       "[consensus]\n"
       "kind = mlmc\n"
       "rounds = 30\n"
       "\n"
       "[output]\n"
       "directory = markov-demo-out\n"
       "\n"
       "[run]\n"
       "repeats = 42 43 44\n"},
      {"lowerbound-demo", "hard chain instance on the shifting two-cluster tree, with floor curve",
       "[problem]\n"
       "family = lowerbound\n"
       "depth = 3\n"
       "n = 256\n"
       "l = 4\n"
       "mu = 1\n"
       "\n"
       "[graph]\n"
       "kind = adversarial\n"
       "depth = 3\n"
       "\n"
       "[solver]\n"
       "iterations = 15\n"
       "\n"
       "[consensus]\n"
       "kind = plain\n"
       "rounds = 4\n"
       "\n"
       "[output]\n"
       "directory = lowerbound-demo-out\n"
       "\n"
       "[run]\n"
       "repeats = 1\n"}};
  return table;
}

inline const Preset* find_preset(std::string_view name) {
  for (const Preset& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

//! First `rounds` graphs of the configured sequence, one line per round:
//! `k: (i,j) (i,j) ...`.
inline void dump_graph_sequence(const ExperimentConfig& cfg, std::int64_t rounds,
                                std::ostream& out) {
  validate_config(cfg);
  if (rounds < 0) throw InvalidParameter("round count must be nonnegative");
  GraphSequence seq = make_sequence(cfg, cfg.run.repeats.front());
  for (std::int64_t k = 0; k < rounds; ++k) {
    const Graph g = graph_at(seq, k);
    out << k << ':';
    for (const Edge& e : g.edges()) out << " (" << e.u << ',' << e.v << ')';
    out << '\n';
  }
}

}  // namespace saddlesim
