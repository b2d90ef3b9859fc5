// Acceptance checks for the solver stack: one numbered property per line,
// each pinning a quantitative guarantee of the consensus, solver, or
// lower-bound layer at desk scale. Exit status is the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "saddlesim/harness.hpp"

using namespace saddlesim;

namespace {

int g_failed = 0;

void report(int index, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", index, name, detail.c_str());
  if (!ok) ++g_failed;
}

NodeStates gauss_states(int rows, int cols, std::mt19937_64& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  NodeStates z(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) z(r, c) = gauss(eng);
  return z;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

struct LineFit {
  double slope = 0.0;
  double r_sq = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit out;
  out.slope = sxy / sxx;
  out.r_sq = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return out;
}

// 1. Accelerated gossip contraction: the measured consensus-error ratio after
// H rounds never exceeds 2 chi (1 - 1/sqrt(chi))^H on static and skeleton
// sequences. 50 seeded (graph, input) pairs, M <= 16, H up to 5 sqrt(chi).
void criterion_contraction() {
  std::mt19937_64 eng(2024);
  double worst = 0.0;
  int checks = 0;
  bool ok = true;
  std::string why;

  for (int pair = 0; pair < 50 && ok; ++pair) {
    const int m = 4 + static_cast<int>(eng() % 13);
    const int shape = static_cast<int>(eng() % 4);
    Graph base = shape == 0   ? ring_graph(m)
                 : shape == 1 ? path_graph(m)
                 : shape == 2 ? star_graph(m)
                              : complete_graph(m);
    GraphSequence seq = StaticSequence(base);
    if (pair % 2 == 1 && shape != 3) {
      const int chords = std::min<int>(3, m / 2);
      seq = SkeletonSequence(base, spread_chords(base, chords), 0.15, eng());
    }
    const SpectralSummary s = spectral_summary(seq);
    const double chi = s.chi();
    const int h_max = static_cast<int>(std::ceil(5.0 * std::sqrt(chi)));
    const NodeStates z0 = gauss_states(m, 3, eng);
    const double ce0 = consensus_error(z0);

    for (int h = 1; h <= h_max; ++h) {
      const GossipResult r = acc_gossip_non_recoverable(
          z0, seq, 0, accelerated_gossip_params(s.lambda_max, s.lambda_min_plus, h));
      const double ratio = consensus_error(r.z) / ce0;
      const double bound = accelerated_gossip_bound(chi, h);
      ++checks;
      // 1e-24 absorbs the roundoff floor once the bound drops below what
      // double precision can resolve (near-degenerate spectra, chi -> 1)
      if (bound > 1e-12) worst = std::max(worst, ratio / bound);
      if (ratio > bound * (1.0 + 1e-9) + 1e-24) {
        ok = false;
        why = "pair " + std::to_string(pair) + " H " + std::to_string(h) + ": ratio " +
              std::to_string(ratio) + " > bound " + std::to_string(bound);
        break;
      }
    }
  }
  std::ostringstream detail;
  if (ok)
    detail << checks << " (pair, H) checks, worst ratio/bound " << worst
           << " where the bound resolves";
  else
    detail << why;
  report(1, "accelerated gossip contraction bound", ok, detail.str());
}

// 2. Consensus budget formula: with the derived per-call round count the
// recorded consensus error stays at or below eps0 at every checkpoint, for
// eps0 in {1e-2, 1e-4}. The squared reading eps0^2 is reported as well.
void criterion_budget_formula() {
  const Graph ring = ring_graph(5);
  GraphSequence probe = SkeletonSequence(ring, spread_chords(ring, 2), 0.15, 3);
  const SpectralSummary s = spectral_summary(probe);
  const double chi = s.chi();

  bool ok = chi <= 50.0;
  std::ostringstream detail;
  detail << "chi " << chi;
  for (const double eps0 : {1e-2, 1e-4}) {
    const SaddleProblem prob = make_bilinear_problem(5, 4, 71, 10.0, 1.0);
    const double d0 = prob.reference().squaredNorm();
    const double q_sq = std::max(prob.operator_spread_sq(prob.reference()), 1e-300);
    const int h = required_rounds(chi, eps0, d0, q_sq, prob.lipschitz_max());

    GraphSequence seq = SkeletonSequence(ring, spread_chords(ring, 2), 0.15, 3);
    SolverConfig cfg;
    cfg.iterations = 30;
    cfg.consensus_rounds = h;
    const RunResult run = desm_run(prob, seq, NodeStates::Zero(5, prob.dim()), cfg);

    double worst = 0.0;
    for (const RunRecord& r : run.records) worst = std::max(worst, r.consensus_err);
    detail << "; eps0 " << eps0 << ": H " << h << ", max err " << worst
           << (worst <= eps0 * eps0 ? " (squared reading holds too)" : "");
    if (worst > eps0) ok = false;
  }
  report(2, "derived consensus budget keeps checkpoints under eps0", ok, detail.str());
}

// 3. Solver linear rate: log dist_sq against cumulative rounds K is linear
// (R^2 >= 0.95 over the last 80% of checkpoints) and the fitted decay is
// within a factor 8 of mu / (8 L H). 20-seed median.
void criterion_solver_rate() {
  std::vector<double> slopes, r_sqs;
  int h_used = 0;
  double big_l = 0.0, mu = 0.0;

  for (int seed = 0; seed < 20; ++seed) {
    const SaddleProblem prob = make_bilinear_problem(5, 4, 100 + seed, 10.0, 1.0);
    GraphSequence seq = StaticSequence(ring_graph(5));
    const SpectralSummary s = spectral_summary(seq);
    const double d0 = prob.reference().squaredNorm();
    const double q_sq = std::max(prob.operator_spread_sq(prob.reference()), 1e-300);
    const int h = required_rounds(s.chi(), 1e-4, d0, q_sq, prob.lipschitz_max());
    h_used = h;
    big_l = prob.lipschitz();
    mu = prob.mu();

    SolverConfig cfg;
    cfg.iterations = 200;
    cfg.consensus_rounds = h;
    cfg.metrics_stride = 2;
    const RunResult run = desm_run(prob, seq, NodeStates::Zero(5, prob.dim()), cfg);

    std::vector<double> xs, ys;
    const std::size_t skip = run.records.size() / 5;
    for (std::size_t i = skip; i < run.records.size(); ++i) {
      xs.push_back(static_cast<double>(run.records[i].rounds));
      ys.push_back(std::log(run.records[i].dist_sq));
    }
    const LineFit fit = fit_line(xs, ys);
    slopes.push_back(-fit.slope);
    r_sqs.push_back(fit.r_sq);
  }

  const double med_slope = median(slopes);
  const double med_r_sq = median(r_sqs);
  const double target = mu / (8.0 * big_l * h_used);
  const double factor = med_slope / target;
  const bool ok = med_r_sq >= 0.95 && factor >= 1.0 / 8.0 && factor <= 8.0;
  std::ostringstream detail;
  detail << "median R^2 " << med_r_sq << ", median decay " << med_slope << " per round, target "
         << target << ", ratio " << factor;
  report(3, "per-round rate matches mu/(8 L H) within factor 8", ok, detail.str());
}

// 4. Adversarial schedule churn: consecutive graphs differ in at most two
// edges, exhaustively over one full period for every depth in {2..6}.
void criterion_two_edge() {
  bool ok = true;
  int worst = 0;
  for (int d = 2; d <= 6 && ok; ++d) {
    AdversarialTaabSequence seq(d);
    for (std::int64_t k = 0; k < seq.period(); ++k) {
      const int changed = edge_change_count(seq.graph(k), seq.graph(k + 1));
      worst = std::max(worst, changed);
      if (changed > 2) {
        ok = false;
        break;
      }
    }
  }
  std::ostringstream detail;
  detail << "depths 2..6, full periods, max edges changed per step " << worst;
  report(4, "adversarial schedule changes at most two edges per round", ok, detail.str());
}

// 5. Span propagation floor. Two clauses:
//   (a) coordinates gained after K rounds never exceed floor(K / d) beyond
//       the one coordinate available with no communication at all (the
//       right-hand cluster reads e1 from its own objective, so the raw
//       prefix starts at 1 at K = 0);
//   (b) a raw cluster-to-cluster transfer takes at least d rounds from
//       every start round.
// Clause (b) is asserted literally and is known to fail at depths 5 and 6:
// the two leaf clusters sit a fixed four hops apart (leaf, root, central
// root, root, leaf), so a single transfer is floored at 4 regardless of
// depth. Depth-proportional cost shows up only across repeated crossings,
// because each sweep phase opens one direction at a time; the per-crossing
// cadence of clause (a) is what the solver floor in criterion 6 rests on.
// The measured minima are printed so the failure stays quantified.
void criterion_span() {
  bool span_ok = true;
  std::string span_why;
  for (int d = 2; d <= 6 && span_ok; ++d) {
    AdversarialTaabSequence seq(d);
    const BbpSpanResult res = simulate_bbp_span(seq, 10 * d);
    for (std::size_t k = 0; k < res.global_prefix_by_round.size(); ++k) {
      const int earned = res.global_prefix_by_round[k] - 1;
      if (earned > static_cast<int>(k) / d) {
        span_ok = false;
        span_why = "depth " + std::to_string(d) + " round " + std::to_string(k) + ": earned " +
                   std::to_string(earned) + " > " + std::to_string(k / static_cast<std::size_t>(d));
        break;
      }
    }
  }

  bool transfer_ok = true;
  std::ostringstream minima;
  for (int d = 2; d <= 6; ++d) {
    AdversarialTaabSequence source(d);
    GraphSequence seq = source;
    std::int64_t min_fwd = -1, min_bwd = -1;
    for (std::int64_t start = 0; start < source.period(); ++start) {
      const std::int64_t fwd = greedy_transfer_rounds(seq, source.v1(), source.v2(), start);
      const std::int64_t bwd = greedy_transfer_rounds(seq, source.v2(), source.v1(), start);
      if (min_fwd < 0 || fwd < min_fwd) min_fwd = fwd;
      if (min_bwd < 0 || bwd < min_bwd) min_bwd = bwd;
    }
    if (std::min(min_fwd, min_bwd) < d) transfer_ok = false;
    minima << (d > 2 ? ", " : "") << "d" << d << ":" << std::min(min_fwd, min_bwd);
  }

  std::ostringstream detail;
  detail << "earned-prefix clause " << (span_ok ? "holds" : ("violated: " + span_why))
         << "; single-transfer minima [" << minima.str()
         << "] vs required d (four-hop corridor caps transfers at 4)";
  report(5, "span growth floored at one coordinate per d rounds", span_ok && transfer_ok,
         detail.str());
}

// 6. Lower-bound floor: the solver never reports a squared distance below
// q^{2K/d} ||y0 - y*||^2 / 16 at the consumed round count, on the depth-3
// instance with L/mu in {2, 10} and n large enough for every visited K.
void criterion_floor() {
  bool ok = true;
  std::ostringstream detail;
  for (const double big_l : {2.0, 10.0}) {
    const int d = 3, n = 256;
    const SaddleProblem prob = make_lower_bound_problem(d, big_l, 1.0, n);
    GraphSequence seq = AdversarialTaabSequence(d);
    SolverConfig cfg;
    cfg.iterations = 16;
    cfg.consensus_rounds = 4;
    cfg.kind = ConsensusKind::plain;
    const RunResult run = desm_run(prob, seq, NodeStates::Zero(prob.node_count(), prob.dim()), cfg);

    const double y0_dist_sq = prob.reference().tail(n).squaredNorm();
    const std::int64_t k_final = run.records.back().rounds;
    if (2 * k_final > n) {
      ok = false;
      detail << "L " << big_l << ": dimension " << n << " too small for K " << k_final << "; ";
      continue;
    }
    double closest = 1e300;
    for (const RunRecord& r : run.records) {
      const double floor_val = lower_bound_floor(big_l, 1.0, d, r.rounds, y0_dist_sq).q_power;
      closest = std::min(closest, r.dist_sq / floor_val);
      if (r.dist_sq < floor_val) ok = false;
    }
    detail << "L/mu " << big_l << ": K up to " << k_final << ", min measured/floor " << closest
           << "; ";
  }
  report(6, "measured distance never undercuts the q-power floor", ok, detail.str());
}

// 7. Geometric limit approximation: the closed-form profile q^i / (1 - q)
// sits within q^{n+1} / (alpha (1 - q)) of the dense-solve solution.
void criterion_limit_gap() {
  bool ok = true;
  std::ostringstream detail;
  for (const double big_l : {2.0, 4.0, 10.0}) {
    const int n = 20;
    const double q = q_root(big_l, 1.0);
    const double alpha = coupling_alpha(big_l, 1.0);
    const SaddleProblem prob = make_lower_bound_problem(2, big_l, 1.0, n);
    const double gap = (approx_solution_y(q, n) - prob.reference().tail(n)).norm();
    const double bound = approx_solution_gap(q, alpha, n);
    if (gap > bound) ok = false;
    detail << "L/mu " << big_l << ": gap " << gap << " <= " << bound << "; ";
  }
  report(7, "closed-form solution profile within its stated gap", ok, detail.str());
}

// 8. Markov consensus envelope: with the default parameters, the 20-seed
// median of (stacked consensus error at N = 200) / (envelope with constant
// 10) stays at or below 1, and the multilevel estimator is unbiased at 3
// sigma.
void criterion_markov_envelope() {
  const Graph base = ring_graph(10);
  const std::vector<Edge> cand = spread_chords(base, 4);
  MarkovSequence probe(base, cand, 0.25, 1);
  const MarkovStationary& st = probe.stationary();
  const MlmcParams params = mlmc_defaults(st, 5);
  const double rate = std::sqrt(params.p * params.p * st.lambda_min_plus * params.gamma / 3.0);

  std::vector<double> ratios;
  std::mt19937_64 eng(55);
  const int n_iters = 200;
  for (int seed = 0; seed < 20; ++seed) {
    GraphSequence seq = MarkovSequence(base, cand, 0.25, 300 + seed);
    const NodeStates z0 = gauss_states(10, 3, eng);
    MlmcParams p = params;
    p.seed = 900 + seed;
    const MlmcGossipResult r = mlmc_gossip(z0, seq, 0, p, n_iters);

    const double measured = 10.0 * consensus_error(r.z);
    const double r0 = (st.w_bar * z0).cwiseProduct(z0).sum();
    const double envelope = 10.0 * std::exp(-n_iters * rate) *
                            (10.0 * consensus_error(z0) + 24.0 / st.lambda_min_plus * r0);
    ratios.push_back(measured / envelope);
  }
  const double med = median(ratios);
  bool ok = med <= 1.0;

  // estimator mean against w_bar z at level 1, fresh chains
  const NodeStates z_g = gauss_states(10, 3, eng);
  const NodeStates want = st.w_bar * z_g;
  const int samples = 1500;
  NodeStates mean = NodeStates::Zero(10, 3);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(10, 3);
  for (int i = 0; i < samples; ++i) {
    GraphSequence seq = MarkovSequence(base, cand, 0.25, 5000 + i);
    const MlmcEstimate est = mlmc_gossip_estimate(seq, 0, params.batch, params.s_cap, 1, z_g);
    const NodeStates delta = est.g - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct(est.g - mean);
  }
  const double sigma = std::sqrt(m2.sum() / (samples - 1.0) / samples);
  const double dev = (mean - want).norm();
  if (dev > 3.0 * sigma) ok = false;

  std::ostringstream detail;
  detail << "median measured/envelope " << med << "; estimator deviation " << dev << " vs 3 sigma "
         << 3.0 * sigma;
  report(8, "markov consensus meets its decay envelope", ok, detail.str());
}

// 9. Operator certificates: finite-difference gradients agree with the
// operator to 1e-5 relative, and strong monotonicity and the per-node
// Lipschitz constant hold on 100 random pairs per instance family.
void criterion_certificates() {
  bool ok = true;
  std::ostringstream detail;
  std::mt19937_64 eng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const SaddleProblem bilinear = make_bilinear_problem(5, 4, 12, 10.0, 1.0);
  const SaddleProblem lower = make_lower_bound_problem(3, 4.0, 1.0, 16);
  const std::vector<const SaddleProblem*> families = {&bilinear, &lower};
  const std::vector<std::string> names = {"bilinear", "lowerbound"};

  for (std::size_t f = 0; f < families.size(); ++f) {
    const SaddleProblem& prob = *families[f];
    double worst_fd = 0.0, worst_mono = 1e300, worst_lip = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int m = static_cast<int>(eng() % prob.node_count());
      Eigen::VectorXd z1(prob.dim()), z2(prob.dim());
      for (int i = 0; i < prob.dim(); ++i) {
        z1(i) = gauss(eng);
        z2(i) = gauss(eng);
      }
      const Eigen::VectorXd f1 = prob.eval_operator(m, z1);
      const Eigen::VectorXd f2 = prob.eval_operator(m, z2);
      const Eigen::VectorXd dz = z1 - z2;
      worst_mono = std::min(worst_mono, (f1 - f2).dot(dz) / dz.squaredNorm());
      worst_lip = std::max(worst_lip, (f1 - f2).norm() / dz.norm());

      if (trial < 10) {
        // central differences of the scalar objective; the y block carries
        // the opposite sign in the operator
        const double h = 1e-5;
        for (int i = 0; i < prob.dim(); ++i) {
          Eigen::VectorXd zp = z1, zm = z1;
          zp(i) += h;
          zm(i) -= h;
          const double fp = prob.eval_function(m, zp.head(prob.nx()), zp.tail(prob.ny()));
          const double fm = prob.eval_function(m, zm.head(prob.nx()), zm.tail(prob.ny()));
          const double grad = (fp - fm) / (2.0 * h);
          const double want = i < prob.nx() ? f1(i) : -f1(i);
          const double rel = std::abs(grad - want) / std::max(1.0, std::abs(want));
          worst_fd = std::max(worst_fd, rel);
        }
      }
    }
    if (worst_fd > 1e-5) ok = false;
    if (worst_mono < prob.mu() * (1.0 - 1e-9)) ok = false;
    if (worst_lip > prob.lipschitz_max() * (1.0 + 1e-9)) ok = false;
    detail << names[f] << ": fd " << worst_fd << ", monotonicity " << worst_mono << " vs mu "
           << prob.mu() << ", lipschitz " << worst_lip << " vs " << prob.lipschitz_max() << "; ";
  }
  report(9, "operator certificates hold on random pairs", ok, detail.str());
}

// 10. Determinism: the self-check report and a full preset experiment are
// bit-identical across runs.
void criterion_determinism() {
  std::ostringstream a, b;
  const bool ok_a = verify_invariants(a);
  const bool ok_b = verify_invariants(b);
  bool ok = ok_a && ok_b && a.str() == b.str();

  ExperimentConfig cfg = parse_config(find_preset("markov-demo")->text);
  std::ostringstream sink;
  cfg.output.directory = "acceptance-det-a";
  const ExperimentResult ra = run_experiment(cfg, sink, true);
  cfg.output.directory = "acceptance-det-b";
  const ExperimentResult rb = run_experiment(cfg, sink, true);

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  for (std::size_t i = 0; i < ra.seed_csv_paths.size(); ++i)
    if (slurp(ra.seed_csv_paths[i]) != slurp(rb.seed_csv_paths[i])) ok = false;
  if (slurp(ra.aggregate_csv_path) != slurp(rb.aggregate_csv_path)) ok = false;
  if (ra.summary != rb.summary) ok = false;
  std::filesystem::remove_all("acceptance-det-a");
  std::filesystem::remove_all("acceptance-det-b");

  std::ostringstream detail;
  detail << "self-check reports identical, " << ra.seed_csv_paths.size()
         << " seed CSVs plus aggregate bit-identical";
  report(10, "repeated runs are bit-identical", ok, detail.str());
}

}  // namespace

int main() {
  criterion_contraction();
  criterion_budget_formula();
  criterion_solver_rate();
  criterion_two_edge();
  criterion_span();
  criterion_floor();
  criterion_limit_gap();
  criterion_markov_envelope();
  criterion_certificates();
  criterion_determinism();

  std::printf("%d of 10 criteria passed\n", 10 - g_failed);
  return g_failed;
}
