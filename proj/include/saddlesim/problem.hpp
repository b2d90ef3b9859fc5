#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "saddlesim/errors.hpp"

namespace saddlesim {

//! Row-stacked per-node iterates: row m is node m's point (x_m, y_m).
using NodeStates = Eigen::MatrixXd;

inline Eigen::RowVectorXd mean_state(const NodeStates& z) { return z.colwise().mean(); }

//! (1/M) sum_m ||z_m - mean||^2.
inline double consensus_error(const NodeStates& z) {
  const Eigen::RowVectorXd zbar = mean_state(z);
  return (z.rowwise() - zbar).squaredNorm() / static_cast<double>(z.rows());
}

//! Every node at the same point z0.
inline NodeStates replicate_state(const Eigen::VectorXd& z0, int m) {
  NodeStates z(m, z0.size());
  for (int i = 0; i < m; ++i) z.row(i) = z0.transpose();
  return z;
}

//! One saddle term f_m(x, y) = x^T G y + a^T x + b^T y + (mu/2)(|x|^2 - |y|^2).
//! Its operator is F_m(z) = (grad_x f_m, -grad_y f_m), affine in z.
struct QuadraticNode {
  Eigen::MatrixXd g;  // n_x by n_y coupling
  Eigen::VectorXd a;  // linear term on x
  Eigen::VectorXd b;  // linear term on y
};

enum class FeasibleSet { all_space, box };

class SaddleProblem {
 public:
  SaddleProblem(std::vector<QuadraticNode> nodes, double mu)
      : nodes_(std::move(nodes)), mu_(mu) {
    if (nodes_.empty()) throw InvalidParameter("problem needs at least one node");
    if (mu_ <= 0.0) throw InvalidParameter("mu must be positive");
    nx_ = static_cast<int>(nodes_[0].g.rows());
    ny_ = static_cast<int>(nodes_[0].g.cols());
    for (const auto& nd : nodes_) {
      if (nd.g.rows() != nx_ || nd.g.cols() != ny_ || nd.a.size() != nx_ || nd.b.size() != ny_)
        throw DimensionMismatch("node term dimensions disagree");
    }
    measure_constants();
    solve_reference();
  }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int dim() const { return nx_ + ny_; }

  double mu() const { return mu_; }
  //! Measured Lipschitz constant of the averaged operator.
  double lipschitz() const { return l_; }
  //! Largest measured per-node Lipschitz constant.
  double lipschitz_max() const { return l_max_; }

  const QuadraticNode& node(int m) const { return nodes_.at(m); }
  const Eigen::VectorXd& reference() const { return z_star_; }

  double eval_function(int m, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (x.size() != nx_ || y.size() != ny_) throw DimensionMismatch("bad point dimensions");
    const QuadraticNode& nd = nodes_.at(m);
    return x.dot(nd.g * y) + nd.a.dot(x) + nd.b.dot(y) +
           0.5 * mu_ * (x.squaredNorm() - y.squaredNorm());
  }

  //! F_m(z) = (mu x + G y + a, mu y - G^T x - b).
  Eigen::VectorXd eval_operator(int m, const Eigen::VectorXd& z) const {
    if (z.size() != dim()) throw DimensionMismatch("bad point dimension");
    const QuadraticNode& nd = nodes_.at(m);
    const auto x = z.head(nx_);
    const auto y = z.tail(ny_);
    Eigen::VectorXd out(dim());
    out.head(nx_) = mu_ * x + nd.g * y + nd.a;
    out.tail(ny_) = mu_ * y - nd.g.transpose() * x - nd.b;
    return out;
  }

  Eigen::VectorXd eval_mean_operator(const Eigen::VectorXd& z) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim());
    for (int m = 0; m < node_count(); ++m) acc += eval_operator(m, z);
    return acc / static_cast<double>(node_count());
  }

  //! (1/M) sum_m ||F_m(z)||^2; at z* this is the heterogeneity constant Q^2.
  double operator_spread_sq(const Eigen::VectorXd& z) const {
    double acc = 0.0;
    for (int m = 0; m < node_count(); ++m) acc += eval_operator(m, z).squaredNorm();
    return acc / static_cast<double>(node_count());
  }

  FeasibleSet feasible_set() const { return set_; }

  void set_box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    if (lower.size() != dim() || upper.size() != dim())
      throw DimensionMismatch("box bounds must match problem dimension");
    if ((lower.array() > upper.array()).any())
      throw InvalidParameter("box lower bound exceeds upper bound");
    set_ = FeasibleSet::box;
    lower_ = std::move(lower);
    upper_ = std::move(upper);
  }

  Eigen::VectorXd project(const Eigen::VectorXd& z) const {
    if (z.size() != dim()) throw DimensionMismatch("bad point dimension");
    if (set_ == FeasibleSet::all_space) return z;
    return z.cwiseMax(lower_).cwiseMin(upper_);
  }

  void project_rows_in_place(NodeStates& z) const {
    if (set_ == FeasibleSet::all_space) return;
    for (int m = 0; m < z.rows(); ++m)
      z.row(m) = z.row(m).cwiseMax(lower_.transpose()).cwiseMin(upper_.transpose());
  }

 private:
  static double spectral_norm(const Eigen::MatrixXd& g) {
    if (g.size() == 0) return 0.0;
    // sigma_max via the symmetric eigensolve of G^T G.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.transpose() * g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(g.cols() - 1)));
  }

  void measure_constants() {
    // For P = [[mu I, G], [-G^T, mu I]] the singular values are
    // sqrt(mu^2 + sigma_i(G)^2), so ||P|| = sqrt(mu^2 + ||G||^2).
    Eigen::MatrixXd gbar = Eigen::MatrixXd::Zero(nx_, ny_);
    double worst = 0.0;
    for (const auto& nd : nodes_) {
      gbar += nd.g;
      worst = std::max(worst, spectral_norm(nd.g));
    }
    gbar /= static_cast<double>(nodes_.size());
    l_ = std::hypot(mu_, spectral_norm(gbar));
    l_max_ = std::hypot(mu_, worst);
  }

  void solve_reference() {
    const int n = dim();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    p.topLeftCorner(nx_, nx_) = mu_ * Eigen::MatrixXd::Identity(nx_, nx_);
    p.bottomRightCorner(ny_, ny_) = mu_ * Eigen::MatrixXd::Identity(ny_, ny_);
    Eigen::MatrixXd gbar = Eigen::MatrixXd::Zero(nx_, ny_);
    Eigen::VectorXd abar = Eigen::VectorXd::Zero(nx_);
    Eigen::VectorXd bbar = Eigen::VectorXd::Zero(ny_);
    for (const auto& nd : nodes_) {
      gbar += nd.g;
      abar += nd.a;
      bbar += nd.b;
    }
    const double m = static_cast<double>(nodes_.size());
    gbar /= m;
    abar /= m;
    bbar /= m;
    p.topRightCorner(nx_, ny_) = gbar;
    p.bottomLeftCorner(ny_, nx_) = -gbar.transpose();
    c.head(nx_) = abar;
    c.tail(ny_) = -bbar;

    z_star_ = Eigen::PartialPivLU<Eigen::MatrixXd>(p).solve(-c);
    const double residual = (p * z_star_ + c).norm();
    if (!(residual <= 1e-8 * (1.0 + z_star_.norm())))
      throw Error("reference solution certificate failed, residual " + std::to_string(residual));
  }

  std::vector<QuadraticNode> nodes_;
  double mu_;
  int nx_ = 0;
  int ny_ = 0;
  double l_ = 0.0;
  double l_max_ = 0.0;
  Eigen::VectorXd z_star_;
  FeasibleSet set_ = FeasibleSet::all_space;
  Eigen::VectorXd lower_, upper_;
};

//! Random bilinear-coupling family. The averaged coupling matrix is scaled so
//! the measured global Lipschitz constant equals L exactly, and per-node
//! deviations are scaled so L_max stays below 3L.
inline SaddleProblem make_bilinear_problem(int m, int n, std::uint64_t seed, double big_l,
                                           double mu) {
  if (m < 1 || n < 1) throw InvalidParameter("need at least one node and one dimension");
  if (!(big_l > mu && mu > 0.0)) throw InvalidParameter("need L > mu > 0");

  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](int r, int c) {
    Eigen::MatrixXd out(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out(i, j) = gauss(eng);
    return out;
  };

  Eigen::MatrixXd direction = random_matrix(n, n);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(direction.transpose() * direction,
                                                      Eigen::EigenvaluesOnly);
    direction *= std::sqrt(big_l * big_l - mu * mu) /
                 std::sqrt(std::max(1e-300, es.eigenvalues()(n - 1)));
  }

  std::vector<Eigen::MatrixXd> delta(m);
  Eigen::MatrixXd delta_mean = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < m; ++i) {
    delta[i] = random_matrix(n, n);
    delta_mean += delta[i];
  }
  delta_mean /= static_cast<double>(m);
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    delta[i] -= delta_mean;
    worst = std::max(worst, delta[i].norm());  // Frobenius bounds the spectral norm
  }
  const double scale = worst > 0.0 ? big_l / worst : 0.0;

  std::vector<QuadraticNode> nodes(m);
  for (int i = 0; i < m; ++i) {
    nodes[i].g = direction + scale * delta[i];
    nodes[i].a = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return gauss(eng); });
    nodes[i].b = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return gauss(eng); });
  }
  return SaddleProblem(std::move(nodes), mu);
}

//! alpha = 4 mu^2 / L^2.
inline double coupling_alpha(double big_l, double mu) {
  if (!(big_l > mu && mu > 0.0)) throw InvalidParameter("need L > mu > 0");
  return 4.0 * mu * mu / (big_l * big_l);
}

//! Smaller root of q^2 - (2 + alpha) q + 1 = 0, computed through the larger
//! root so no cancellation occurs. For L = 2 mu this is (3 - sqrt(5)) / 2.
inline double q_root(double big_l, double mu) {
  const double alpha = coupling_alpha(big_l, mu);
  const double q_plus = 0.5 * (2.0 + alpha + std::sqrt(alpha * alpha + 4.0 * alpha));
  const double q = 1.0 / q_plus;
  const double residual = std::abs(q * q - (2.0 + alpha) * q + 1.0);
  if (!(residual <= 1e-12))
    throw Error("q root residual " + std::to_string(residual) + " out of tolerance");
  return q;
}

//! Geometric tail vector with entries q^i / (1 - q), i = 1..n.
inline Eigen::VectorXd approx_solution_y(double q, int n) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("q must lie in (0, 1)");
  if (n < 1) throw InvalidParameter("need n >= 1");
  Eigen::VectorXd y(n);
  double p = 1.0;
  for (int i = 0; i < n; ++i) {
    p *= q;
    y(i) = p / (1.0 - q);
  }
  return y;
}

//! Distance bound between the geometric tail and the exact solution.
inline double approx_solution_gap(double q, double alpha, int n) {
  return std::pow(q, n + 1) / (alpha * (1.0 - q));
}

namespace detail {

//! Upper bidiagonal matrix with unit diagonal whose superdiagonal alternates
//! between 0 and -2. start_with_zero selects which value row 1 carries.
inline Eigen::MatrixXd alternating_bidiagonal(int n, bool start_with_zero) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int row = 1; row < n; ++row) {
    const bool zero_row = (row % 2 == 1) == start_with_zero;  // row index is 1-based here
    a(row - 1, row) = zero_row ? 0.0 : -2.0;
  }
  return a;
}

}  // namespace detail

//! Hard-instance pieces on the adversarial tree layout: n by n couplings.
struct LowerBoundMatrices {
  Eigen::MatrixXd a1;  // superdiagonal -2 on even rows
  Eigen::MatrixXd a2;  // superdiagonal -2 on odd rows
  Eigen::MatrixXd a;   // (a1 + a2) / 2: unit diagonal, superdiagonal all -1
};

inline LowerBoundMatrices make_lower_bound_matrices(int n) {
  if (n < 2) throw InvalidParameter("need n >= 2");
  LowerBoundMatrices out;
  out.a1 = detail::alternating_bidiagonal(n, true);
  out.a2 = detail::alternating_bidiagonal(n, false);
  out.a = 0.5 * (out.a1 + out.a2);
  return out;
}

//! Hard saddle instance matched to the adversarial tree on 2d+3 vertices.
//! The pinned right leaves carry the A1 coupling and the e1 forcing term, the
//! pinned left leaves carry A2, and every other vertex only the regularizer.
//! Averaging the node terms reproduces (L/2) x^T A y + (L^2/(4 mu)) e1^T y
//! plus the quadratics.
inline SaddleProblem make_lower_bound_problem(int d, double big_l, double mu, int n) {
  if (d < 2) throw InvalidParameter("lower-bound instance needs d >= 2");
  if (!(big_l > mu && mu > 0.0)) throw InvalidParameter("need L > mu > 0");
  const int m = 2 * d + 3;
  const int f = d / 2;
  const LowerBoundMatrices mats = make_lower_bound_matrices(n);
  const double c = static_cast<double>(m) / (2.0 * f);

  std::vector<QuadraticNode> nodes(m);
  for (int i = 0; i < m; ++i) {
    nodes[i].g = Eigen::MatrixXd::Zero(n, n);
    nodes[i].a = Eigen::VectorXd::Zero(n);
    nodes[i].b = Eigen::VectorXd::Zero(n);
  }
  for (int i = 0; i < f; ++i) {
    const int left_leaf = 2 + i;
    const int right_leaf = 2 + f + i;
    nodes[left_leaf].g = c * (big_l / 2.0) * mats.a2;
    nodes[right_leaf].g = c * (big_l / 2.0) * mats.a1;
    nodes[right_leaf].b(0) = c * big_l * big_l / (2.0 * mu);
  }
  return SaddleProblem(std::move(nodes), mu);
}

}  // namespace saddlesim
