#pragma once

// Global degree-of-freedom vector of the discretization: per element and per
// variable (u1, u2, p), the (W+1)x(W+1) nodal values on the tensor GLL grid
// of the reference square. Flat layout is element-major, then variable, then
// lexicographic in (xi-index, eta-index).

#include <Eigen/Dense>

#include <stdexcept>

#include "stokesls/basis.hpp"
#include "stokesls/geometry.hpp"

namespace stokesls::assembly {

struct LayoutError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Nodal matrix addressed as (xi-index, eta-index); row-major so that the flat
// view coincides with the lexicographic layout.
using NodalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Var { U1 = 0, U2 = 1, P = 2 };

struct SpectralField {
  int order = 0;         // polynomial degree W
  int num_elements = 0;  // L
  Eigen::VectorXd data;

  static constexpr int kVars = 3;

  SpectralField() = default;
  SpectralField(int w, int elements)
      : order(w),
        num_elements(elements),
        data(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kVars) * elements * (w + 1) * (w + 1))) {}

  int nodes() const { return order + 1; }
  int block_size() const { return nodes() * nodes(); }
  Eigen::Index size() const { return data.size(); }

  Eigen::Index offset(int elem, Var var) const {
    return (static_cast<Eigen::Index>(elem) * kVars + static_cast<int>(var)) * block_size();
  }
  Eigen::Map<NodalMatrix> block(int elem, Var var) {
    return {data.data() + offset(elem, var), nodes(), nodes()};
  }
  Eigen::Map<const NodalMatrix> block(int elem, Var var) const {
    return {data.data() + offset(elem, var), nodes(), nodes()};
  }
};

/// Nodal interpolant of closed-form physical fields (u1, u2, p) on the GLL
/// grids of every element.
template <typename F1, typename F2, typename FP>
SpectralField interpolate(const geom::Mesh& mesh, int order, F1&& u1, F2&& u2, FP&& p) {
  SpectralField x(order, mesh.num_elements());
  const auto gll = basis::gll_nodes(order + 1);
  for (int l = 0; l < mesh.num_elements(); ++l) {
    auto b1 = x.block(l, Var::U1);
    auto b2 = x.block(l, Var::U2);
    auto bp = x.block(l, Var::P);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; j <= order; ++j) {
        const geom::Vec2 pt = mesh.elements[l].point(gll.nodes(i), gll.nodes(j));
        b1(i, j) = u1(pt.x, pt.y);
        b2(i, j) = u2(pt.x, pt.y);
        bp(i, j) = p(pt.x, pt.y);
      }
  }
  return x;
}

}  // namespace stokesls::assembly
