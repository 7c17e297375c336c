#pragma once

// Quadratic forms realizing the fractional Sobolev trace norms on I = (-1,1)
// and the H1/H2 Gram matrices on the reference square S = (-1,1)^2. All
// matrices act on nodal values over GLL grids and are exact for the
// polynomial trace/field spaces they are built for.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <stdexcept>

#include "stokesls/basis.hpp"

namespace stokesls::norms {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SpdViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// L2(I) mass matrix over the trace grid, exact for degree 2(n-1) products.
inline Matrix trace_mass_matrix(const basis::NodeSet1D& trace_nodes) {
  const int n = trace_nodes.size();
  const auto gauss = basis::gauss_nodes(n);
  const Matrix e = basis::interp_matrix(trace_nodes, gauss);
  Matrix m = e.transpose() * gauss.weights.asDiagonal() * e;
  return 0.5 * (m + m.transpose());
}

/// Quadratic form of the H^{1/2} seminorm
///   |w|^2 = int int (w(x) - w(y))^2 / (x - y)^2 dx dy
/// over nodal values on the trace grid. The divided difference
/// q(x,y) = (w(x) - w(y))/(x - y) is a polynomial of degree n-2 per variable
/// (with q(x,x) = w'(x) on the diagonal), so tensor Gauss quadrature of
/// order n integrates q^2 exactly and no singular quadrature is needed.
inline Matrix half_seminorm_matrix(const basis::NodeSet1D& trace_nodes) {
  const int n = trace_nodes.size();
  const auto gauss = basis::gauss_nodes(n);
  const Matrix e = basis::interp_matrix(trace_nodes, gauss);
  const Matrix ed = e * basis::diff_matrix(trace_nodes);
  Matrix s = Matrix::Zero(n, n);
  Vector r(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b)
        r = ed.row(a);
      else
        r = (e.row(a) - e.row(b)) / (gauss.nodes(a) - gauss.nodes(b));
      s += (gauss.weights(a) * gauss.weights(b)) * (r * r.transpose());
    }
  }
  return 0.5 * (s + s.transpose());
}

struct EdgeNormTables {
  Matrix mass;       // L2(I)
  Matrix half_semi;  // |.|^2_{1/2,I}
};

inline EdgeNormTables make_edge_norm_tables(const basis::NodeSet1D& trace_nodes) {
  return {trace_mass_matrix(trace_nodes), half_seminorm_matrix(trace_nodes)};
}

/// ||w||^2_{1/2,I} of the trace polynomial with nodal values v.
inline double edge_norm_half(const Vector& v, const EdgeNormTables& t) {
  return v.dot(t.mass * v) + v.dot(t.half_semi * v);
}

/// ||w||^2_{3/2,I} = ||w||^2_0 + ||w'||^2_{1/2,I} with the tangential
/// (trace-parameter) derivative w' = d v.
inline double edge_norm_threehalf(const Vector& v, const Matrix& d, const EdgeNormTables& t) {
  const Vector dv = d * v;
  return v.dot(t.mass * v) + edge_norm_half(dv, t);
}

enum class SquareNorm { H1, H2 };

namespace detail {

// kron(a, b) under the flat layout (xi-index major): the matrix of
// V -> a V b^T acting on vec(V).
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Gram matrix of the H1 or H2 inner product on S over the tensor GLL nodal
/// basis of degree `order`, integrated with the given (oversampled) rule.
inline Matrix square_gram(int order, const basis::NodeSet1D& quad, SquareNorm which) {
  if (quad.size() < order + 1)
    throw std::invalid_argument("square_gram: quadrature order below polynomial order");
  const auto gll = basis::gll_nodes(order + 1);
  const Matrix d = basis::diff_matrix(gll);
  const Matrix e = basis::interp_matrix(gll, quad);
  const Matrix e1 = e * d;
  const Matrix e2 = e1 * d;
  const auto a_of = [&](const Matrix& c) -> Matrix {
    Matrix a = c.transpose() * quad.weights.asDiagonal() * c;
    return 0.5 * (a + a.transpose());
  };
  const Matrix a0 = a_of(e), a1 = a_of(e1), a2 = a_of(e2);
  Matrix g = detail::kron(a0, a0) + detail::kron(a1, a0) + detail::kron(a0, a1);
  if (which == SquareNorm::H2)
    g += detail::kron(a2, a0) + detail::kron(a1, a1) + detail::kron(a0, a2);
  return g;
}

struct SquareGramTables {
  Matrix g1, g2;
  Eigen::LLT<Matrix> g1_llt, g2_llt;
};

inline SquareGramTables make_square_gram_tables(int order, const basis::NodeSet1D& quad) {
  SquareGramTables t;
  t.g1 = square_gram(order, quad, SquareNorm::H1);
  t.g2 = square_gram(order, quad, SquareNorm::H2);
  t.g1_llt.compute(t.g1);
  t.g2_llt.compute(t.g2);
  if (t.g1_llt.info() != Eigen::Success || t.g2_llt.info() != Eigen::Success)
    throw SpdViolationError("square Gram matrix is not numerically SPD");
  return t;
}

}  // namespace stokesls::norms
