#pragma once

// One-dimensional spectral basis utilities on [-1,1]: Gauss-Legendre and
// Gauss-Lobatto-Legendre nodes/weights, nodal differentiation matrices and
// barycentric interpolation between grids. All outputs are plain dense
// matrices/vectors, immutable once built; concurrent reads are safe.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace stokesls::basis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Nodal differentiation matrix: maps values on a grid to values of the
// derivative of the interpolating polynomial on the same grid.
using DiffMatrix = Eigen::MatrixXd;

// Maps values on a source grid to values of the source interpolant on a
// target grid. Rows sum to one.
using InterpMatrix = Eigen::MatrixXd;

enum class NodeKind { GLL, Gauss };

struct NodeSet1D {
  NodeKind kind;
  Vector nodes;    // strictly ascending in [-1,1]
  Vector weights;  // positive, sum to 2
  int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Value and first derivative of the Legendre polynomial P_m at interior x.
inline std::pair<double, double> legendre(int m, double x) {
  if (m == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  for (int k = 2; k <= m; ++k) {
    const double p_next = ((2 * k - 1) * x * p - (k - 1) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  const double dp = m * (x * p - p_prev) / (x * x - 1.0);
  return {p, dp};
}

inline void enforce_symmetry(Vector& nodes, Vector& weights) {
  const int n = nodes.size();
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (nodes(i) - nodes(n - 1 - i));
    nodes(i) = x;
    nodes(n - 1 - i) = -x;
    const double w = 0.5 * (weights(i) + weights(n - 1 - i));
    weights(i) = w;
    weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) nodes(n / 2) = 0.0;
}

}  // namespace detail

/// Gauss-Lobatto-Legendre nodes (roots of (1-x^2)P'_{n-1}) and weights.
/// Quadrature is exact for polynomials of degree <= 2n-3.
inline NodeSet1D gll_nodes(int n) {
  if (n < 2) throw std::invalid_argument("gll_nodes: need at least 2 nodes");
  const int m = n - 1;
  Vector x(n), w(n);
  x(0) = -1.0;
  x(n - 1) = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    // Newton on P'_m, Chebyshev-Lobatto initial guess; P'' from the ODE.
    double xi = -std::cos(M_PI * i / m);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(m, xi);
      const double d2p = (2.0 * xi * dp - m * (m + 1) * p) / (1.0 - xi * xi);
      const double step = dp / d2p;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x(i) = xi;
  }
  for (int i = 0; i < n; ++i) {
    const auto [p, dp] = (i == 0 || i == n - 1)
                             ? std::make_pair(std::pow(x(i), m), 0.0)
                             : detail::legendre(m, x(i));
    w(i) = 2.0 / (m * (m + 1) * p * p);
  }
  detail::enforce_symmetry(x, w);
  return {NodeKind::GLL, std::move(x), std::move(w)};
}

/// Gauss-Legendre nodes (roots of P_n) and weights; exact to degree 2n-1.
inline NodeSet1D gauss_nodes(int n) {
  if (n < 1) throw std::invalid_argument("gauss_nodes: need at least 1 node");
  Vector x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double xi = -std::cos(M_PI * (4 * i + 3) / (4 * n + 2));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(n, xi);
      const double step = p / dp;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const auto [p, dp] = detail::legendre(n, xi);
    x(i) = xi;
    w(i) = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  detail::enforce_symmetry(x, w);
  return {NodeKind::Gauss, std::move(x), std::move(w)};
}

/// Barycentric weights of a node set (normalized to unit max magnitude).
inline Vector barycentric_weights(const Vector& nodes) {
  const int n = static_cast<int>(nodes.size());
  Vector lam = Vector::Ones(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) lam(i) /= (nodes(i) - nodes(j));
  lam /= lam.cwiseAbs().maxCoeff();
  return lam;
}

/// Differentiation matrix in barycentric form. Rows sum to zero exactly.
inline DiffMatrix diff_matrix(const NodeSet1D& nodes) {
  const int n = nodes.size();
  const Vector& x = nodes.nodes;
  const Vector lam = barycentric_weights(x);
  DiffMatrix d(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d(i, j) = (lam(j) / lam(i)) / (x(i) - x(j));
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

/// Second-kind barycentric interpolation from source onto target nodes.
inline InterpMatrix interp_matrix(const NodeSet1D& source, const NodeSet1D& target) {
  const int n = source.size();
  const int m = target.size();
  const Vector& x = source.nodes;
  const Vector lam = barycentric_weights(x);
  InterpMatrix p = InterpMatrix::Zero(m, n);
  for (int a = 0; a < m; ++a) {
    const double t = target.nodes(a);
    int hit = -1;
    for (int j = 0; j < n; ++j)
      if (t == x(j)) hit = j;
    if (hit >= 0) {
      p(a, hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      p(a, j) = lam(j) / (t - x(j));
      denom += p(a, j);
    }
    p.row(a) /= denom;
  }
  return p;
}

}  // namespace stokesls::basis
