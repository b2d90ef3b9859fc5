#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "saddlesim/errors.hpp"
#include "saddlesim/problem.hpp"
#include "saddlesim/sequence.hpp"

namespace saddlesim {

struct ConsensusParams {
  double eta = 0.0;   // gossip step size, 1 / lambda_max
  double beta = 0.0;  // momentum, (sqrt(chi) - 1) / (sqrt(chi) + 1)
  int rounds = 0;     // H
};

//! Step size and momentum tuned to the sequence's spectral envelope.
inline ConsensusParams accelerated_gossip_params(double lambda_max, double lambda_min_plus,
                                                 int rounds) {
  if (!(lambda_max >= lambda_min_plus && lambda_min_plus > 0.0))
    throw InvalidParameter("need lambda_max >= lambda_min_plus > 0");
  if (rounds < 0) throw InvalidParameter("round budget must be nonnegative");
  const double chi = lambda_max / lambda_min_plus;
  ConsensusParams out;
  out.eta = 1.0 / lambda_max;
  out.beta = (std::sqrt(chi) - 1.0) / (std::sqrt(chi) + 1.0);
  out.rounds = rounds;
  return out;
}

//! Guaranteed squared-consensus-error contraction after H rounds:
//! 2 chi (1 - 1/sqrt(chi))^H.
inline double accelerated_gossip_bound(double chi, int rounds) {
  if (!(chi >= 1.0)) throw InvalidParameter("chi must be at least 1");
  return 2.0 * chi * std::pow(1.0 - 1.0 / std::sqrt(chi), rounds);
}

//! Inner round budget that drives the consensus error below eps0 when the
//! outer loop starts dist0_sq from the solution with heterogeneity q_sq:
//! ceil(sqrt(chi) * ln(chi * (4 + (dist0_sq/2 + q_sq/(2 L_max^2)) / eps0^2))).
inline int required_rounds(double chi, double eps0, double dist0_sq, double q_sq,
                           double l_max) {
  if (!(chi >= 1.0)) throw InvalidParameter("chi must be at least 1");
  if (!(eps0 > 0.0)) throw InvalidParameter("eps0 must be positive");
  if (!(l_max > 0.0)) throw InvalidParameter("L_max must be positive");
  if (dist0_sq < 0.0 || q_sq < 0.0) throw InvalidParameter("squared distances cannot be negative");
  const double inner = 4.0 + (0.5 * dist0_sq + q_sq / (2.0 * l_max * l_max)) / (eps0 * eps0);
  const double h = std::sqrt(chi) * std::log(chi * inner);
  if (!(h < 2e9)) throw InvalidParameter("required round budget overflows");
  return static_cast<int>(std::ceil(h));
}

struct GossipResult {
  NodeStates z;
  std::int64_t rounds_used = 0;
};

inline void check_state_shape(const NodeStates& z, const GraphSequence& seq) {
  if (z.rows() != vertex_count(seq))
    throw DimensionMismatch("state rows " + std::to_string(z.rows()) + " != vertex count " +
                            std::to_string(vertex_count(seq)));
}

//! Momentum gossip over a shrinking neighborhood. Each node keeps only the
//! neighbors it has seen in every round since k0, so edges that disappear are
//! dropped for good within one invocation. Each Laplacian step preserves the
//! state mean exactly.
//!
//!   u^{t+1} = z^t - eta * L_eff^t z^t
//!   z^{t+1} = (1 + beta) u^{t+1} - beta u^t
//!
//! effective_trace, when given, receives the intersected edge set used at
//! every inner round.
inline GossipResult acc_gossip_non_recoverable(const NodeStates& z0, GraphSequence& seq,
                                               std::int64_t k0, const ConsensusParams& params,
                                               std::vector<std::vector<Edge>>* effective_trace =
                                                   nullptr) {
  check_state_shape(z0, seq);
  if (k0 < 0) throw InvalidParameter("start round must be nonnegative");

  GossipResult out;
  out.z = z0;
  out.rounds_used = params.rounds;
  if (params.rounds == 0 || z0.rows() == 1) return out;

  const int m = static_cast<int>(z0.rows());
  bool first = true;
  std::vector<Edge> effective;
  NodeStates u_prev = z0;
  NodeStates z_cur = z0;
  for (int t = 0; t < params.rounds; ++t) {
    const Graph g = graph_at(seq, k0 + t);
    if (first) {
      effective = g.edges();
      first = false;
    } else {
      std::vector<Edge> kept;
      std::set_intersection(effective.begin(), effective.end(), g.edges().begin(),
                            g.edges().end(), std::back_inserter(kept));
      effective.swap(kept);
    }
    if (effective_trace) effective_trace->push_back(effective);

    NodeStates u_next = z_cur - params.eta * apply_laplacian(Graph(m, effective), z_cur);
    NodeStates z_next = (1.0 + params.beta) * u_next - params.beta * u_prev;
    u_prev.swap(u_next);
    z_cur.swap(z_next);
  }
  out.z = std::move(z_cur);
  return out;
}

//! Memoryless gossip: z <- z - eta * L(G^k) z, one round per step.
inline GossipResult plain_gossip(const NodeStates& z0, GraphSequence& seq, std::int64_t k0,
                                 int rounds, double eta) {
  check_state_shape(z0, seq);
  if (rounds < 0) throw InvalidParameter("round budget must be nonnegative");
  GossipResult out;
  out.z = z0;
  out.rounds_used = rounds;
  if (z0.rows() == 1) return out;
  for (int t = 0; t < rounds; ++t) {
    const Graph g = graph_at(seq, k0 + t);
    out.z -= eta * apply_laplacian(g, out.z);
  }
  return out;
}

//! Every node replaced by the exact average. Consensus oracle for ablations.
inline NodeStates exact_average(const NodeStates& z) {
  const Eigen::RowVectorXd zbar = mean_state(z);
  NodeStates out(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) out.row(i) = zbar;
  return out;
}

// --- multilevel stochastic gossip over Markovian graphs ---

struct MlmcParams {
  double gamma = 0.0;  // gossip step scale
  double p = 0.25;
  double beta = 0.0;
  double eta = 0.0;
  double theta = 0.0;
  double s_cap = 2.0;  // correction is dropped when 2^J exceeds this
  int batch = 1;       // base batch size B
  std::uint64_t seed = 0;
};

//! Parameters from the theoretical defaults, with gamma at half its
//! admissible upper bound min{3/(4 lambda_max), lambda_min^3 /
//! (1800 rho^2 (tau/b + tau^2/b^2))^2} and mu_like the smallest positive
//! eigenvalue of the mean gossip matrix.
inline MlmcParams mlmc_defaults(double lambda_max, double lambda_min_plus, double rho, int tau,
                                int b, double mu_like, std::uint64_t seed = 0) {
  if (!(lambda_max > 0.0 && lambda_min_plus > 0.0))
    throw InvalidParameter("spectral bounds must be positive");
  if (tau < 1 || b < 1) throw InvalidParameter("tau and b must be at least 1");
  if (!(mu_like > 0.0)) throw InvalidParameter("mu_like must be positive");
  if (rho < 0.0) throw InvalidParameter("rho cannot be negative");

  double upper = 3.0 / (4.0 * lambda_max);
  if (rho > 0.0) {
    const double tb = static_cast<double>(tau) / b;
    const double denom = 1800.0 * rho * rho * (tb + tb * tb);
    const double second = std::pow(lambda_min_plus, 3) / (denom * denom);
    upper = std::min(upper, second);
  }
  if (!(upper > 0.0) || !std::isfinite(upper))
    throw InvalidParameter("admissible step interval is empty at working precision");

  MlmcParams out;
  out.gamma = 0.5 * upper;
  out.p = 0.25;
  out.beta = std::sqrt(4.0 * out.p * out.p * mu_like * out.gamma / 3.0);
  out.eta = std::sqrt(12.0 / (mu_like * out.gamma));
  const double eta_alt = 3.0 * out.beta / (out.p * mu_like * out.gamma);
  if (std::abs(out.eta - eta_alt) > 1e-10 * out.eta)
    throw Error("eta self-consistency check failed");
  const double p_over_eta = out.p / out.eta;
  out.theta = (p_over_eta - 1.0) / (out.beta * p_over_eta - 1.0);
  out.s_cap = std::max(2.0, std::sqrt(0.25 * (1.0 + 2.0 / out.beta)));
  out.batch = std::max(1, static_cast<int>(std::ceil(b * std::log2(out.s_cap))));
  out.seed = seed;
  return out;
}

inline MlmcParams mlmc_defaults(const MarkovStationary& stat, std::uint64_t seed = 0, int b = 0,
                                double mu_like = 0.0) {
  if (b <= 0) b = stat.tau;
  if (mu_like <= 0.0) mu_like = stat.lambda_min_plus;
  return mlmc_defaults(stat.lambda_max, stat.lambda_min_plus, stat.rho, stat.tau, b, mu_like,
                       seed);
}

struct MlmcEstimate {
  NodeStates g;
  std::int64_t rounds_used = 0;
};

//! Multilevel gossip estimate of w_bar * z_g built from 2^level * batch
//! consecutive rounds starting at t_start:
//!   g_j = mean of the first 2^j * batch Laplacian applications,
//!   g   = g_0 + 2^level (g_level - g_{level-1})   when 2^level <= s_cap,
//!   g   = g_0                                      otherwise (and level 0).
inline MlmcEstimate mlmc_gossip_estimate(GraphSequence& seq, std::int64_t t_start, int batch,
                                         double s_cap, int level, const NodeStates& z_g) {
  if (batch < 1) throw InvalidParameter("batch must be at least 1");
  if (level < 0 || level > 40) throw InvalidParameter("level out of range");
  const std::int64_t total = (std::int64_t{1} << level) * batch;

  // The partial means nest: batch <= total/2 <= total, so one pass suffices.
  MlmcEstimate out;
  out.rounds_used = total;
  NodeStates acc = NodeStates::Zero(z_g.rows(), z_g.cols());
  NodeStates g0, g_prev;
  for (std::int64_t i = 0; i < total; ++i) {
    const Graph g = graph_at(seq, t_start + i);
    acc += apply_laplacian(g, z_g);
    if ((i + 1) == batch) g0 = acc / static_cast<double>(batch);
    if (level >= 1 && (i + 1) == total / 2) g_prev = acc / static_cast<double>(total / 2);
  }
  if (level == 0) {
    out.g = std::move(g0);
    return out;
  }
  const double mult = std::pow(2.0, level);
  if (mult <= s_cap) {
    const NodeStates g_top = acc / static_cast<double>(total);
    out.g = g0 + mult * (g_top - g_prev);
  } else {
    out.g = std::move(g0);
  }
  return out;
}

struct MlmcGossipResult {
  NodeStates z;
  std::int64_t rounds_used = 0;
};

//! Accelerated gossip driven by the multilevel estimator. One outer iteration
//! consumes 2^{J} * batch rounds with J geometric of mean one; every node
//! shares the J stream through the common seed.
inline MlmcGossipResult mlmc_gossip(const NodeStates& z0, GraphSequence& seq,
                                    std::int64_t start_round, const MlmcParams& params,
                                    int iterations) {
  check_state_shape(z0, seq);
  if (iterations < 0) throw InvalidParameter("iteration budget must be nonnegative");

  std::mt19937_64 eng(params.seed);
  std::geometric_distribution<int> geom(0.5);  // P(J = j) = 2^{-(j+1)}, j >= 0

  MlmcGossipResult out;
  NodeStates z = z0;
  NodeStates z_f = z0;
  std::int64_t cursor = start_round;

  for (int k = 0; k < iterations; ++k) {
    const NodeStates z_g = params.theta * z_f + (1.0 - params.theta) * z;
    // Tail guard: a raw geometric draw can demand 2^J * B rounds in one shot.
    // Levels past 12 only reweight corrections whose mean is already zero, so
    // clamping keeps the estimator unbiased while bounding worst-case latency.
    const int level = std::min(geom(eng), 12);
    MlmcEstimate est = mlmc_gossip_estimate(seq, cursor, params.batch, params.s_cap, level, z_g);
    cursor += est.rounds_used;
    out.rounds_used += est.rounds_used;

    const NodeStates z_f_next = z_g - params.p * params.gamma * est.g;
    // eta * z_f_next + (p - eta) * z_f regrouped around the small difference.
    z = params.eta * (z_f_next - z_f) + params.p * z_f + (1.0 - params.p) * (1.0 - params.beta) * z +
        (1.0 - params.p) * params.beta * z_g;
    z_f = z_f_next;

    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e12)
      throw NonFiniteIterate("gossip iterate diverged at iteration " + std::to_string(k));
  }
  out.z = std::move(z);
  return out;
}

}  // namespace saddlesim
