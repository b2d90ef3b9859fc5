#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <variant>
#include <vector>

#include "saddlesim/errors.hpp"
#include "saddlesim/gossip.hpp"
#include "saddlesim/graph.hpp"

namespace saddlesim {

//! Fixed graph repeated every round.
class StaticSequence {
 public:
  explicit StaticSequence(Graph g) : g_(std::move(g)) {
    if (!g_.connected()) throw DisconnectedGraph("static sequence needs a connected graph");
  }

  Graph graph(std::int64_t) const { return g_; }
  const Graph& base() const { return g_; }
  int vertex_count() const { return g_.vertex_count(); }

  std::int64_t max_rounds = -1;

 private:
  Graph g_;
};

//! Skeleton plus volatile edges that die independently and never return.
//! Round 0 carries every volatile edge; each later round transition kills an
//! alive volatile edge with probability fail_prob. Death rounds are drawn at
//! construction, so graph_at(k) is pure in (parameters, seed).
class SkeletonSequence {
 public:
  SkeletonSequence(Graph skeleton, std::vector<Edge> volatile_edges, double fail_prob,
                   std::uint64_t seed)
      : skeleton_(std::move(skeleton)), volatile_(std::move(volatile_edges)) {
    if (fail_prob < 0.0 || fail_prob > 1.0)
      throw InvalidParameter("fail_prob must lie in [0, 1]");
    if (!skeleton_.connected()) throw DisconnectedGraph("skeleton must be connected");
    std::sort(volatile_.begin(), volatile_.end());
    volatile_.erase(std::unique(volatile_.begin(), volatile_.end()), volatile_.end());
    for (const Edge& e : volatile_) {
      if (e.u < 0 || e.v >= skeleton_.vertex_count())
        throw InvalidParameter("volatile edge endpoint out of range");
      if (e.u == e.v) throw InvalidParameter("volatile self-loop");
      if (skeleton_.has_edge(e.u, e.v))
        throw OverlapError("volatile edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                           ") already in skeleton");
    }

    // Edge e stays alive for rounds 0..S_e and is gone from round S_e + 1 on,
    // with P(S_e >= s) = (1 - fail_prob)^s. One uniform draw per edge.
    death_round_.resize(volatile_.size());
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < volatile_.size(); ++i) {
      const double u = std::max(unif(eng), 1e-300);
      if (fail_prob <= 0.0) {
        death_round_[i] = std::numeric_limits<std::int64_t>::max();
      } else if (fail_prob >= 1.0) {
        death_round_[i] = 1;
      } else {
        const double survived = std::floor(std::log(u) / std::log1p(-fail_prob));
        death_round_[i] = survived > 8e17 ? std::numeric_limits<std::int64_t>::max()
                                          : static_cast<std::int64_t>(survived) + 1;
      }
    }
  }

  Graph graph(std::int64_t k) const {
    std::vector<Edge> e = skeleton_.edges();
    for (std::size_t i = 0; i < volatile_.size(); ++i)
      if (k < death_round_[i]) e.push_back(volatile_[i]);
    return Graph(skeleton_.vertex_count(), std::move(e));
  }

  const Graph& skeleton() const { return skeleton_; }
  //! Round-0 graph: skeleton plus every volatile edge.
  Graph full_graph() const { return graph(0); }
  int vertex_count() const { return skeleton_.vertex_count(); }

  std::int64_t max_rounds = -1;

 private:
  Graph skeleton_;
  std::vector<Edge> volatile_;
  std::vector<std::int64_t> death_round_;
};

//! Stationary-mean data of a Markov edge process.
struct MarkovStationary {
  Eigen::MatrixXd w_bar;        // L(base) + (1/2) L(candidates)
  double lambda_max = 0.0;      // of w_bar
  double lambda_min_plus = 0.0; // of w_bar
  double rho = 0.0;             // max_G ||L(G) - w_bar|| over realizable graphs
  bool rho_exact = true;        // false when the enumeration bound was used
  int tau = 1;                  // mixing-time estimate of the edge chains
};

//! Independent two-state flip chains on a candidate edge set over a fixed base
//! graph. Each chain starts from its stationary law (present with probability
//! 1/2) and flips with probability flip_prob per round transition, so the
//! sequence is a stationary Markov chain with mean Laplacian w_bar.
//! Advancement is sequential; random access behind the cursor replays from
//! round 0, which keeps graph_at deterministic in (parameters, seed).
class MarkovSequence {
 public:
  MarkovSequence(Graph base, std::vector<Edge> candidates, double flip_prob, std::uint64_t seed)
      : base_(std::move(base)), cand_(std::move(candidates)), p_(flip_prob), seed_(seed) {
    if (!(flip_prob > 0.0 && flip_prob < 1.0))
      throw DegenerateChain("flip_prob must lie strictly inside (0, 1)");
    if (!base_.connected()) throw DisconnectedGraph("base graph must be connected");
    std::sort(cand_.begin(), cand_.end());
    cand_.erase(std::unique(cand_.begin(), cand_.end()), cand_.end());
    for (const Edge& e : cand_) {
      if (e.u < 0 || e.v >= base_.vertex_count())
        throw InvalidParameter("candidate edge endpoint out of range");
      if (e.u == e.v) throw InvalidParameter("candidate self-loop");
      if (base_.has_edge(e.u, e.v))
        throw OverlapError("candidate edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                           ") already in base graph");
    }
    reset();
    compute_stationary();
  }

  Graph graph(std::int64_t k) {
    if (k < cursor_) reset();
    while (cursor_ < k) advance_one();
    std::vector<Edge> e = base_.edges();
    for (std::size_t i = 0; i < cand_.size(); ++i)
      if (alive_[i]) e.push_back(cand_[i]);
    return Graph(base_.vertex_count(), std::move(e));
  }

  const Graph& base() const { return base_; }
  const std::vector<Edge>& candidates() const { return cand_; }
  const MarkovStationary& stationary() const { return stat_; }
  double flip_prob() const { return p_; }
  int vertex_count() const { return base_.vertex_count(); }

  std::int64_t max_rounds = -1;

 private:
  void reset() {
    eng_.seed(seed_);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    alive_.assign(cand_.size(), 0);
    for (std::size_t i = 0; i < cand_.size(); ++i) alive_[i] = unif(eng_) < 0.5 ? 1 : 0;
    cursor_ = 0;
  }

  void advance_one() {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < cand_.size(); ++i)
      if (unif(eng_) < p_) alive_[i] ^= 1;
    ++cursor_;
  }

  void compute_stationary() {
    const int m = base_.vertex_count();
    Eigen::MatrixXd lc = laplacian_matrix(Graph(m, cand_));
    stat_.w_bar = laplacian_matrix(base_) + 0.5 * lc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stat_.w_bar, Eigen::EigenvaluesOnly);
    stat_.lambda_max = es.eigenvalues()(m - 1);
    stat_.lambda_min_plus = es.eigenvalues()(1);

    // Deviation bound. Realizable graphs are base + S for S a candidate
    // subset, and L(base + S) - w_bar = L(S) - (1/2) L(C). Exact maximum by
    // enumeration for small candidate sets; || (1/2) L(C) || dominates the
    // maximum otherwise.
    const std::size_t nc = cand_.size();
    if (nc == 0) {
      stat_.rho = 0.0;
      stat_.rho_exact = true;
    } else if (nc <= 12) {
      double best = 0.0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nc); ++mask) {
        std::vector<Edge> sub;
        for (std::size_t i = 0; i < nc; ++i)
          if (mask & (std::uint64_t{1} << i)) sub.push_back(cand_[i]);
        Eigen::MatrixXd dev = laplacian_matrix(Graph(m, std::move(sub))) - 0.5 * lc;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dv(dev, Eigen::EigenvaluesOnly);
        best = std::max(best, std::max(std::abs(dv.eigenvalues()(0)),
                                       std::abs(dv.eigenvalues()(m - 1))));
      }
      stat_.rho = best;
      stat_.rho_exact = true;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lv(lc, Eigen::EigenvaluesOnly);
      stat_.rho = 0.5 * lv.eigenvalues()(m - 1);
      stat_.rho_exact = false;
    }

    // tau = ceil(1 / log2(1 / |1 - 2p|)); the chains decorrelate at rate
    // |1 - 2p| per round, and p = 1/2 mixes in a single round.
    const double r = std::abs(1.0 - 2.0 * p_);
    if (r < 1e-15) {
      stat_.tau = 1;
    } else {
      const double t = 1.0 / std::log2(1.0 / r);
      stat_.tau = std::max(1, static_cast<int>(std::ceil(t - 1e-12)));
    }
  }

  Graph base_;
  std::vector<Edge> cand_;
  double p_;
  std::uint64_t seed_;
  MarkovStationary stat_;

  std::mt19937_64 eng_;
  std::vector<char> alive_;
  std::int64_t cursor_ = 0;
};

//! Two-phase adversarial tree sequence on 2d+3 vertices.
//!
//! Vertex layout: 0 = left root, 1 = right root, the next floor(d/2) vertices
//! are the pinned left leaves, the next floor(d/2) the pinned right leaves,
//! and the remaining P+1 vertices (P = 2d - 2*floor(d/2)) form the mobile
//! pool. One mobile vertex is the central root, attached to both roots; the
//! rest are leaves split between the partitions. Phase one walks the trees
//! from a = 2d - floor(d/2) down to a = floor(d/2) by turning the central
//! root into a right leaf and promoting the smallest-index mobile left leaf;
//! phase two mirrors it. Starting with the largest-index mobile vertex as
//! central root makes the labeled period exactly 2P, so graph_at(k) is pure
//! arithmetic in k.
class AdversarialTaabSequence {
 public:
  explicit AdversarialTaabSequence(int d) : d_(d) {
    if (d < 2) throw InvalidParameter("adversarial sequence needs d >= 2");
    f_ = d / 2;
    p_ = 2 * d - 2 * f_;
    m_ = 2 * d + 3;
  }

  Graph graph(std::int64_t k) const {
    const std::int64_t period = 2 * p_;
    std::int64_t r = k % period;
    if (r < 0) r += period;

    // Mobile occupancy for this round.
    int central;
    std::vector<int> left_mob, right_mob;
    if (r <= p_) {
      const int t = static_cast<int>(r);
      if (t == 0) {
        central = mobile(p_);
        for (int i = 0; i < p_; ++i) left_mob.push_back(mobile(i));
      } else {
        central = mobile(t - 1);
        right_mob.push_back(mobile(p_));
        for (int i = 0; i + 2 <= t; ++i) right_mob.push_back(mobile(i));
        for (int i = t; i < p_; ++i) left_mob.push_back(mobile(i));
      }
    } else {
      const int s = static_cast<int>(r - p_);  // 1 .. p_-1
      central = mobile(s - 1);
      left_mob.push_back(mobile(p_ - 1));
      for (int i = 0; i + 2 <= s; ++i) left_mob.push_back(mobile(i));
      for (int i = s; i <= p_ - 2; ++i) right_mob.push_back(mobile(i));
      right_mob.push_back(mobile(p_));
    }

    std::vector<Edge> e;
    e.reserve(m_ - 1);
    e.emplace_back(kLeftRoot, central);
    e.emplace_back(kRightRoot, central);
    for (int v : v1()) e.emplace_back(kLeftRoot, v);
    for (int v : v2()) e.emplace_back(kRightRoot, v);
    for (int v : left_mob) e.emplace_back(kLeftRoot, v);
    for (int v : right_mob) e.emplace_back(kRightRoot, v);
    return Graph(m_, std::move(e));
  }

  int d() const { return d_; }
  int vertex_count() const { return m_; }
  std::int64_t period() const { return 2 * p_; }

  //! Pinned left-partition leaves.
  std::vector<int> v1() const {
    std::vector<int> out;
    for (int i = 0; i < f_; ++i) out.push_back(2 + i);
    return out;
  }
  //! Pinned right-partition leaves.
  std::vector<int> v2() const {
    std::vector<int> out;
    for (int i = 0; i < f_; ++i) out.push_back(2 + f_ + i);
    return out;
  }

  static constexpr int kLeftRoot = 0;
  static constexpr int kRightRoot = 1;

  std::int64_t max_rounds = -1;

 private:
  int mobile(int i) const { return 2 + 2 * f_ + i; }

  int d_;
  int f_;
  int p_;
  int m_;
};

using GraphSequence =
    std::variant<StaticSequence, SkeletonSequence, MarkovSequence, AdversarialTaabSequence>;

inline int vertex_count(const GraphSequence& seq) {
  return std::visit([](const auto& s) { return s.vertex_count(); }, seq);
}

inline std::int64_t sequence_limit(const GraphSequence& seq) {
  return std::visit([](const auto& s) { return s.max_rounds; }, seq);
}

inline void set_sequence_limit(GraphSequence& seq, std::int64_t max_rounds) {
  std::visit([&](auto& s) { s.max_rounds = max_rounds; }, seq);
}

//! Graph emitted at round k. Throws SequenceExhausted past a finite limit.
inline Graph graph_at(GraphSequence& seq, std::int64_t k) {
  if (k < 0) throw InvalidParameter("round index must be nonnegative");
  const std::int64_t limit = sequence_limit(seq);
  if (limit >= 0 && k >= limit)
    throw SequenceExhausted("round " + std::to_string(k) + " past sequence limit " +
                            std::to_string(limit));
  return std::visit([&](auto& s) { return s.graph(k); }, seq);
}

//! Spectral constants a consensus routine may assume for the whole sequence:
//! an upper bound on every round's lambda_max and a lower bound on the
//! algebraic connectivity of what survives intersection over time.
struct SpectralSummary {
  double lambda_max = 0.0;
  double lambda_min_plus = 0.0;
  double chi() const { return lambda_max / lambda_min_plus; }
};

inline SpectralSummary spectral_summary(const GraphSequence& seq) {
  SpectralSummary out;
  if (const auto* st = std::get_if<StaticSequence>(&seq)) {
    GossipMatrix w = laplacian(st->base());
    out.lambda_max = w.lambda_max;
    out.lambda_min_plus = w.lambda_min_plus;
  } else if (const auto* sk = std::get_if<SkeletonSequence>(&seq)) {
    // Edge deletion only shrinks the Laplacian in the PSD order, so round 0
    // has the largest lambda_max and the skeleton the smallest connectivity.
    out.lambda_max = laplacian(sk->full_graph()).lambda_max;
    out.lambda_min_plus = laplacian(sk->skeleton()).lambda_min_plus;
  } else if (const auto* mk = std::get_if<MarkovSequence>(&seq)) {
    Graph maximal = graph_union(mk->base(), Graph(mk->vertex_count(), mk->candidates()));
    out.lambda_max = laplacian(maximal).lambda_max;
    out.lambda_min_plus = laplacian(mk->base()).lambda_min_plus;
  } else {
    const auto& ad = std::get<AdversarialTaabSequence>(seq);
    double lmax = 0.0;
    double lmin = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 0; k < ad.period(); ++k) {
      GossipMatrix w = laplacian(ad.graph(k));
      lmax = std::max(lmax, w.lambda_max);
      lmin = std::min(lmin, w.lambda_min_plus);
    }
    out.lambda_max = lmax;
    out.lambda_min_plus = lmin;
  }
  return out;
}

}  // namespace saddlesim
