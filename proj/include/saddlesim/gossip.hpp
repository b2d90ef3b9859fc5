#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "saddlesim/errors.hpp"
#include "saddlesim/graph.hpp"

namespace saddlesim {

//! Gossip matrix together with its extreme spectrum.
//! Invariants: symmetric PSD, zero off-diagonal entries on non-edges,
//! W * 1 = 0 with kernel of dimension exactly one on a connected graph.
struct GossipMatrix {
  Eigen::MatrixXd w;
  double lambda_max = 0.0;
  double lambda_min_plus = 0.0;

  double chi() const { return lambda_max / lambda_min_plus; }
};

inline Eigen::MatrixXd laplacian_matrix(const Graph& g) {
  const int m = g.vertex_count();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  for (const Edge& e : g.edges()) {
    l(e.u, e.u) += 1.0;
    l(e.v, e.v) += 1.0;
    l(e.u, e.v) -= 1.0;
    l(e.v, e.u) -= 1.0;
  }
  return l;
}

//! Graph Laplacian as a gossip matrix, with extreme eigenvalues from a dense
//! symmetric eigensolve. Requires a connected graph on at least two vertices.
inline GossipMatrix laplacian(const Graph& g) {
  if (g.vertex_count() < 2)
    throw InvalidParameter("gossip matrix needs at least two vertices");
  if (!g.connected()) throw DisconnectedGraph("graph is disconnected");

  GossipMatrix out;
  out.w = laplacian_matrix(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.w, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  out.lambda_max = ev(g.vertex_count() - 1);
  // Connectivity was checked exactly, so the kernel is one-dimensional and
  // the second-smallest eigenvalue is the smallest positive one.
  out.lambda_min_plus = ev(1);
  const double tol = 1e-9 * std::max(1.0, out.lambda_max);
  if (out.lambda_min_plus <= tol)
    throw DisconnectedGraph("numerically zero algebraic connectivity");
  return out;
}

//! chi(W) = lambda_max / lambda_min_plus, the gossip condition number.
inline double condition_number(const GossipMatrix& w) {
  if (w.lambda_min_plus <= 0.0) throw InvalidParameter("lambda_min_plus must be positive");
  return w.chi();
}

//! Applies the Laplacian of g to row-stacked node states: out = L(g) * z.
//! Edge-based accumulation, O(|E| * cols).
inline Eigen::MatrixXd apply_laplacian(const Graph& g, const Eigen::MatrixXd& z) {
  if (z.rows() != g.vertex_count())
    throw DimensionMismatch("state row count " + std::to_string(z.rows()) +
                            " != vertex count " + std::to_string(g.vertex_count()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (const Edge& e : g.edges()) {
    const auto d = (z.row(e.u) - z.row(e.v)).eval();
    out.row(e.u) += d;
    out.row(e.v) -= d;
  }
  return out;
}

}  // namespace saddlesim
