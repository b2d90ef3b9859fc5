#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "saddlesim/errors.hpp"
#include "saddlesim/problem.hpp"
#include "saddlesim/sequence.hpp"

namespace saddlesim {

//! Longest possibly-nonzero coordinate prefix of a node's x and y memories.
struct SpanState {
  int px = 0;
  int py = 0;

  friend bool operator==(const SpanState& a, const SpanState& b) {
    return a.px == b.px && a.py == b.py;
  }
};

namespace detail {

enum class SpanRole { left_pinned, right_pinned, passive };

//! Local-computation closure of one node's prefix pair.
//!
//! The couplings are unit-diagonal bidiagonal matrices, so a local operator
//! call can copy prefixes between x and y memories freely, but only extend
//! the y prefix past the x prefix when the coupling has a superdiagonal entry
//! on that row: odd rows on the left pinned leaves, even rows on the right
//! ones. The right pinned leaves also reach coordinate 1 outright through
//! their constant forcing term. Passive vertices carry nothing but the
//! regularizer and cannot grow anything.
inline void local_span_steps(SpanState& s, SpanRole role, int sweeps) {
  if (role == SpanRole::passive) return;
  for (int it = 0; it < sweeps; ++it) {
    const SpanState before = s;
    if (role == SpanRole::right_pinned) s.py = std::max(s.py, 1);
    int grow = s.py;
    grow = std::max(grow, s.px);
    const bool gate = role == SpanRole::left_pinned ? (s.px >= 1 && s.px % 2 == 1)
                                                    : (s.px >= 2 && s.px % 2 == 0);
    if (gate) grow = std::max(grow, s.px + 1);
    s.py = grow;
    s.px = std::max(s.px, s.py);
    if (s == before) break;
  }
}

}  // namespace detail

struct BbpSpanResult {
  std::vector<SpanState> final_states;
  //! Largest y prefix across nodes, measured after the initial local phase
  //! (index 0) and after every communication round (index k is the state
  //! after k rounds).
  std::vector<int> global_prefix_by_round;

  int final_global_prefix() const { return global_prefix_by_round.back(); }
};

//! Worst-case-favorable span tracker for black-box procedures on the
//! adversarial tree sequence: local computation runs to closure between
//! rounds, and a communication round hands every node the union of its
//! neighbors' memories. Coordinate progress therefore upper-bounds anything
//! a real method could achieve with the same schedule.
inline BbpSpanResult simulate_bbp_span(const AdversarialTaabSequence& seq, std::int64_t rounds,
                                       int local_steps_between_rounds = 4) {
  if (rounds < 0) throw InvalidParameter("round count must be nonnegative");
  if (local_steps_between_rounds < 1) throw InvalidParameter("need at least one local step");

  const int m = seq.vertex_count();
  std::vector<detail::SpanRole> role(m, detail::SpanRole::passive);
  for (int v : seq.v1()) role[v] = detail::SpanRole::left_pinned;
  for (int v : seq.v2()) role[v] = detail::SpanRole::right_pinned;

  BbpSpanResult out;
  out.final_states.assign(m, SpanState{});

  auto local_phase = [&] {
    for (int i = 0; i < m; ++i)
      detail::local_span_steps(out.final_states[i], role[i], local_steps_between_rounds);
  };
  auto global_prefix = [&] {
    int best = 0;
    for (const SpanState& s : out.final_states) best = std::max(best, s.py);
    return best;
  };

  local_phase();
  out.global_prefix_by_round.push_back(global_prefix());

  for (std::int64_t k = 0; k < rounds; ++k) {
    const Graph g = seq.graph(k);
    std::vector<SpanState> next = out.final_states;
    for (const Edge& e : g.edges()) {
      next[e.u].px = std::max(next[e.u].px, out.final_states[e.v].px);
      next[e.u].py = std::max(next[e.u].py, out.final_states[e.v].py);
      next[e.v].px = std::max(next[e.v].px, out.final_states[e.u].px);
      next[e.v].py = std::max(next[e.v].py, out.final_states[e.u].py);
    }
    out.final_states = std::move(next);
    local_phase();
    out.global_prefix_by_round.push_back(global_prefix());
  }
  return out;
}

//! Rounds until information seeded on from_set first reaches to_set, spreading
//! along each round's edges simultaneously (time-expanded BFS). Returns 0 if
//! the sets already intersect and -1 if the budget runs out.
inline std::int64_t greedy_transfer_rounds(GraphSequence& seq, const std::vector<int>& from_set,
                                           const std::vector<int>& to_set,
                                           std::int64_t start_round = 0,
                                           std::int64_t max_rounds = 1000000) {
  const int m = vertex_count(seq);
  if (from_set.empty() || to_set.empty()) throw InvalidParameter("transfer sets cannot be empty");
  std::vector<char> informed(m, 0), target(m, 0);
  for (int v : from_set) {
    if (v < 0 || v >= m) throw InvalidParameter("from_set vertex out of range");
    informed[v] = 1;
  }
  for (int v : to_set) {
    if (v < 0 || v >= m) throw InvalidParameter("to_set vertex out of range");
    target[v] = 1;
  }
  auto reached = [&] {
    for (int v = 0; v < m; ++v)
      if (informed[v] && target[v]) return true;
    return false;
  };
  if (reached()) return 0;

  for (std::int64_t t = 0; t < max_rounds; ++t) {
    const Graph g = graph_at(seq, start_round + t);
    std::vector<char> next = informed;
    for (const Edge& e : g.edges()) {
      if (informed[e.u]) next[e.v] = 1;
      if (informed[e.v]) next[e.u] = 1;
    }
    informed = std::move(next);
    if (reached()) return t + 1;
  }
  return -1;
}

//! Unbeatable error floor after K communication rounds, in both published
//! forms (each includes the explicit 1/16 constant):
//!   q_power:     q^{2K/d} * y0_dist_sq / 16
//!   exponential: exp(-32 mu / (L - mu) * K / chi) * y0_dist_sq / 16
//! The exponential form never exceeds the q-power form while chi <= 8d.
struct LowerBoundFloor {
  double q_power = 0.0;
  double exponential = 0.0;
};

inline LowerBoundFloor lower_bound_floor(double big_l, double mu, int d, std::int64_t rounds,
                                         double y0_dist_sq, double chi = 0.0) {
  if (d < 1) throw InvalidParameter("need d >= 1");
  if (rounds < 0) throw InvalidParameter("round count must be nonnegative");
  if (y0_dist_sq < 0.0) throw InvalidParameter("squared distance cannot be negative");
  if (chi <= 0.0) chi = 8.0 * d;
  const double q = q_root(big_l, mu);
  LowerBoundFloor out;
  out.q_power = std::pow(q, 2.0 * rounds / d) * y0_dist_sq / 16.0;
  out.exponential = std::exp(-32.0 * mu / (big_l - mu) * rounds / chi) * y0_dist_sq / 16.0;
  // ln(q) >= -2mu/(L-mu) forces this ordering whenever chi <= 8d; a violation
  // would mean the two forms were computed inconsistently.
  if (chi <= 8.0 * d && out.q_power < out.exponential * (1.0 - 1e-12))
    throw Error("floor forms out of order: q-power fell below the exponential form");
  return out;
}

//! Floor against a measured condition number, recovering the smallest tree
//! depth consistent with chi <= 8d.
inline LowerBoundFloor lower_bound_floor_from_chi(double big_l, double mu, double chi,
                                                  std::int64_t rounds, double y0_dist_sq) {
  if (!(chi >= 1.0)) throw InvalidParameter("chi must be at least 1");
  const int d = std::max(1, static_cast<int>(std::ceil(chi / 8.0)));
  return lower_bound_floor(big_l, mu, d, rounds, y0_dist_sq, chi);
}

}  // namespace saddlesim
