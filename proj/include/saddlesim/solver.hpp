#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "saddlesim/consensus.hpp"
#include "saddlesim/errors.hpp"
#include "saddlesim/problem.hpp"
#include "saddlesim/sequence.hpp"

namespace saddlesim {

enum class ConsensusKind { accelerated, plain, mlmc, exact };

inline const char* to_string(ConsensusKind k) {
  switch (k) {
    case ConsensusKind::accelerated: return "accelerated";
    case ConsensusKind::plain: return "plain";
    case ConsensusKind::mlmc: return "mlmc";
    case ConsensusKind::exact: return "exact";
  }
  return "?";
}

struct SolverConfig {
  double gamma = 0.0;        // extra-step size; 0 picks 1/(4 L_max)
  int consensus_rounds = 0;  // H per consensus call (mlmc: outer iterations per call)
  int iterations = 0;        // N outer iterations
  ConsensusKind kind = ConsensusKind::accelerated;
  int metrics_stride = 1;    // checkpoint every this many iterations
  std::uint64_t mlmc_seed = 0;
};

struct RunRecord {
  int k = 0;                       // outer iteration
  std::int64_t rounds = 0;         // cumulative communication rounds
  std::int64_t oracle_calls = 0;   // cumulative per-node operator evaluations
  double consensus_err = 0.0;
  double dist_sq = 0.0;            // || mean iterate - z* ||^2
};

struct RunResult {
  NodeStates z;
  std::vector<RunRecord> records;
  std::int64_t total_rounds = 0;
};

namespace detail {

inline void guard_finite(const NodeStates& z, int k) {
  if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e12)
    throw NonFiniteIterate("iterate diverged at outer iteration " + std::to_string(k));
}

}  // namespace detail

//! Decentralized extra-step loop. Each outer iteration makes two operator
//! calls per node, each followed by one consensus invocation over the rounds
//! the sequence emits next:
//!
//!   half = proj(consensus(z - gamma F(z)))
//!   z    = proj(consensus(z - gamma F(half)))
//!
//! Records carry the running round count so rates can be read against
//! communications rather than iterations.
inline RunResult desm_run(const SaddleProblem& prob, GraphSequence& seq, const NodeStates& z0,
                          const SolverConfig& cfg) {
  const int m = prob.node_count();
  if (vertex_count(seq) != m)
    throw VertexMismatch("sequence has " + std::to_string(vertex_count(seq)) +
                         " vertices for " + std::to_string(m) + " nodes");
  if (z0.rows() != m || z0.cols() != prob.dim())
    throw DimensionMismatch("initial state must be node_count by problem dimension");
  if (cfg.iterations < 0) throw InvalidParameter("iteration count must be nonnegative");
  if (cfg.consensus_rounds < 0) throw InvalidParameter("consensus budget must be nonnegative");

  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : 1.0 / (4.0 * prob.lipschitz_max());

  // Consensus plumbing shared by both half-steps.
  ConsensusParams acc_params;
  double plain_eta = 0.0;
  const MarkovSequence* markov = std::get_if<MarkovSequence>(&seq);
  if (m > 1 && cfg.kind == ConsensusKind::accelerated) {
    const SpectralSummary s = spectral_summary(seq);
    acc_params = accelerated_gossip_params(s.lambda_max, s.lambda_min_plus, cfg.consensus_rounds);
  } else if (m > 1 && cfg.kind == ConsensusKind::plain) {
    plain_eta = 1.0 / spectral_summary(seq).lambda_max;
  } else if (m > 1 && cfg.kind == ConsensusKind::mlmc) {
    if (!markov) throw InvalidParameter("mlmc consensus needs a markovian sequence");
  }

  std::int64_t cursor = 0;
  std::uint64_t mlmc_call = 0;
  auto run_consensus = [&](const NodeStates& z) -> NodeStates {
    if (m == 1 || cfg.kind == ConsensusKind::exact) {
      return m == 1 ? z : exact_average(z);
    }
    if (cfg.kind == ConsensusKind::accelerated) {
      GossipResult r = acc_gossip_non_recoverable(z, seq, cursor, acc_params);
      cursor += r.rounds_used;
      return std::move(r.z);
    }
    if (cfg.kind == ConsensusKind::plain) {
      GossipResult r = plain_gossip(z, seq, cursor, cfg.consensus_rounds, plain_eta);
      cursor += r.rounds_used;
      return std::move(r.z);
    }
    MlmcParams params = mlmc_defaults(markov->stationary(), cfg.mlmc_seed + mlmc_call);
    ++mlmc_call;
    MlmcGossipResult r = mlmc_gossip(z, seq, cursor, params, cfg.consensus_rounds);
    cursor += r.rounds_used;
    return std::move(r.z);
  };

  const Eigen::VectorXd& z_star = prob.reference();
  NodeStates z_cur = z0;
  auto record_at = [&](int k) {
    RunRecord rec;
    rec.k = k;
    rec.rounds = cursor;
    rec.oracle_calls = 2LL * k;
    rec.consensus_err = consensus_error(z_cur);
    rec.dist_sq = (mean_state(z_cur).transpose() - z_star).squaredNorm();
    return rec;
  };

  RunResult out;
  out.records.push_back(record_at(0));

  for (int k = 1; k <= cfg.iterations; ++k) {
    NodeStates hat(m, prob.dim());
    for (int i = 0; i < m; ++i)
      hat.row(i) = z_cur.row(i) - gamma * prob.eval_operator(i, z_cur.row(i)).transpose();
    NodeStates half = run_consensus(hat);
    prob.project_rows_in_place(half);

    for (int i = 0; i < m; ++i)
      hat.row(i) = z_cur.row(i) - gamma * prob.eval_operator(i, half.row(i)).transpose();
    NodeStates next = run_consensus(hat);
    prob.project_rows_in_place(next);
    z_cur = std::move(next);

    detail::guard_finite(z_cur, k);
    if (cfg.metrics_stride > 0 &&
        (k % cfg.metrics_stride == 0 || k == cfg.iterations))
      out.records.push_back(record_at(k));
  }
  out.total_rounds = cursor;
  out.z = std::move(z_cur);
  return out;
}

//! Predicted communication and oracle-call counts for the skeleton regime,
//! unit constants: sqrt(chi) log(chi) (L/mu) log^2(1/eps) communications and
//! (L/mu) log(1/eps) oracle calls per node.
struct ComplexityPrediction {
  double communications = 0.0;
  double oracle_calls = 0.0;
};

inline ComplexityPrediction skeleton_complexity(const SaddleProblem& prob, double chi,
                                                double eps) {
  if (!(chi >= 1.0) || !(eps > 0.0 && eps < 1.0))
    throw InvalidParameter("need chi >= 1 and eps in (0, 1)");
  const double ratio = prob.lipschitz() / prob.mu();
  const double log_eps = std::log(1.0 / eps);
  ComplexityPrediction out;
  out.oracle_calls = ratio * log_eps;
  out.communications = std::sqrt(chi) * std::log(chi) * ratio * log_eps * log_eps;
  return out;
}

//! Markovian-regime prediction: tau (sqrt(chi) + rho^2 / lambda_min^2)
//! (L/mu) log^2(1/eps) communications.
inline ComplexityPrediction markov_complexity(const SaddleProblem& prob, double chi, int tau,
                                              double rho, double lambda_min, double eps) {
  if (!(chi >= 1.0) || !(eps > 0.0 && eps < 1.0))
    throw InvalidParameter("need chi >= 1 and eps in (0, 1)");
  if (tau < 1 || !(lambda_min > 0.0) || rho < 0.0) throw InvalidParameter("bad chain constants");
  const double ratio = prob.lipschitz() / prob.mu();
  const double log_eps = std::log(1.0 / eps);
  ComplexityPrediction out;
  out.oracle_calls = ratio * log_eps;
  out.communications = tau * (std::sqrt(chi) + rho * rho / (lambda_min * lambda_min)) * ratio *
                       log_eps * log_eps;
  return out;
}

}  // namespace saddlesim
