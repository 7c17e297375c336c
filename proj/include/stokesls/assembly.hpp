#pragma once

// Evaluation of the least-squares functional
//
//   R(u,p) = sum_l ||L_l u_l - F_l||^2_{0,S} + sum_l ||D_l u_l - H_l||^2_{1,S}
//          + sum_{interior edges} ( ||[u]||^2_0 + sum_k ||[u_xk]||^2_{1/2}
//                                   + ||[p]||^2_{1/2} )
//          + sum_{Dirichlet edges} ||u - g||^2_{3/2}
//          + sum_{Neumann edges}   ||gamma_N(u,p) - g^N||^2_{1/2}
//          + (p at the gauge point)^2
//
// together with the matrix-free normal operator A = F^T Wgt F and right-hand
// side r = F^T Wgt c, where F is the linear residual map, c the data samples
// and Wgt the block weight (quadrature weights on volume blocks, trace norm
// matrices on edge blocks). The operator action never forms A.
//
// Volume residuals are evaluated on an oversampled tensor Gauss grid with
// analytic metric factors; trace residuals live on the W+1 GLL nodes of the
// owning side, with the partner side's trace reversed when the two
// parametrizations run in opposite directions.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stokesls/basis.hpp"
#include "stokesls/field.hpp"
#include "stokesls/geometry.hpp"
#include "stokesls/norms.hpp"
#include "stokesls/problems.hpp"

namespace stokesls::assembly {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// residual term families
enum class Term {
  Momentum,
  Continuity,
  JumpValue,
  JumpDerivative,
  JumpPressure,
  DirichletTrace,
  NeumannTrace,
  Gauge,
};

struct ResidualBlock {
  Term term;
  int offset;
  int size;
};

struct FunctionalBreakdown {
  double momentum = 0.0;
  double continuity = 0.0;
  double jumps = 0.0;
  double dirichlet = 0.0;
  double neumann = 0.0;
  double gauge = 0.0;
  double total() const { return momentum + continuity + jumps + dirichlet + neumann + gauge; }
};

class Assembler {
 public:
  /// Builds all tables and data samples for (mesh, case, W). `quad_nodes` is
  /// the per-direction Gauss count of the volume grid; 0 selects W+3.
  Assembler(const geom::Mesh& mesh, const problems::CaseData& cd, int order, int quad_nodes = 0)
      : mesh_(mesh), case_(cd), order_(order), n_(order + 1) {
    if (order < 1) throw std::invalid_argument("Assembler: order must be at least 1");
    if (cd.spec.alpha == 0.0 && cd.spec.nu == 0.0)
      throw std::invalid_argument("Assembler: alpha and nu must not both vanish");
    nq_ = quad_nodes > 0 ? quad_nodes : order + 3;
    if (nq_ < n_) throw std::invalid_argument("Assembler: quadrature grid under-resolves order");

    gll_ = basis::gll_nodes(n_);
    quad_ = basis::gauss_nodes(nq_);
    d1_ = basis::diff_matrix(gll_);
    iq_ = basis::interp_matrix(gll_, quad_);
    iqd_ = iq_ * d1_;
    iqd2_ = iqd_ * d1_;
    wq_ = Vector(nq_ * nq_);
    for (int a = 0; a < nq_; ++a)
      for (int b = 0; b < nq_; ++b) wq_(a * nq_ + b) = quad_.weights(a) * quad_.weights(b);

    const auto edge_tables = norms::make_edge_norm_tables(gll_);
    m0_ = edge_tables.mass;
    mhalf_ = edge_tables.mass + edge_tables.half_semi;
    m32_ = m0_ + d1_.transpose() * mhalf_ * d1_;

    build_element_caches();
    build_layout_and_data();
  }

  int order() const { return order_; }
  int num_elements() const { return mesh_.num_elements(); }
  const geom::Mesh& mesh() const { return mesh_; }
  const problems::CaseData& case_data() const { return case_; }

  int residual_size() const { return residual_size_; }
  const std::vector<ResidualBlock>& residual_blocks() const { return blocks_; }
  /// Data samples c; the minimizer of R solves (F^T Wgt F) x = F^T Wgt c.
  const Vector& data_vector() const { return data_; }

  /// Linear residual map F x (no data subtracted).
  Vector forward(const SpectralField& x) const {
    check_layout(x);
    Vector r = Vector::Zero(residual_size_);
    for (int l = 0; l < num_elements(); ++l) forward_element(x, l, r);
    for (std::size_t e = 0; e < mesh_.edges.size(); ++e) forward_edge(x, e, r);
    if (gauge_block_ >= 0)
      r(blocks_[gauge_block_].offset) =
          gauge_rxi_.dot(Matrix(x.block(mesh_.gauge->element, Var::P)) * gauge_reta_);
    return r;
  }

  /// Applies the block weights Wgt to a residual vector.
  Vector weigh(const Vector& r) const {
    if (r.size() != residual_size_) throw LayoutError("weigh: residual size mismatch");
    Vector out(residual_size_);
    for (const auto& b : blocks_) {
      auto seg = r.segment(b.offset, b.size);
      switch (b.term) {
        case Term::Momentum:
        case Term::Continuity: out.segment(b.offset, b.size) = wq_.cwiseProduct(seg); break;
        case Term::JumpValue: out.segment(b.offset, b.size) = m0_ * seg; break;
        case Term::JumpDerivative:
        case Term::JumpPressure:
        case Term::NeumannTrace: out.segment(b.offset, b.size) = mhalf_ * seg; break;
        case Term::DirichletTrace: out.segment(b.offset, b.size) = m32_ * seg; break;
        case Term::Gauge: out.segment(b.offset, b.size) = seg; break;
      }
    }
    return out;
  }

  /// Adjoint residual map F^T r.
  SpectralField adjoint(const Vector& r) const {
    if (r.size() != residual_size_) throw LayoutError("adjoint: residual size mismatch");
    SpectralField y(order_, num_elements());
    for (int l = 0; l < num_elements(); ++l) adjoint_element(r, l, y);
    for (std::size_t e = 0; e < mesh_.edges.size(); ++e) adjoint_edge(r, e, y);
    if (gauge_block_ >= 0) {
      const double w = r(blocks_[gauge_block_].offset);
      y.block(mesh_.gauge->element, Var::P).noalias() +=
          w * (gauge_rxi_ * gauge_reta_.transpose());
    }
    return y;
  }

  /// R(x) with the per-term breakdown.
  FunctionalBreakdown evaluate_functional(const SpectralField& x) const {
    const Vector res = forward(x) - data_;
    const Vector wres = weigh(res);
    FunctionalBreakdown out;
    for (const auto& b : blocks_) {
      const double v = res.segment(b.offset, b.size).dot(wres.segment(b.offset, b.size));
      switch (b.term) {
        case Term::Momentum: out.momentum += v; break;
        case Term::Continuity: out.continuity += v; break;
        case Term::JumpValue:
        case Term::JumpDerivative:
        case Term::JumpPressure: out.jumps += v; break;
        case Term::DirichletTrace: out.dirichlet += v; break;
        case Term::NeumannTrace: out.neumann += v; break;
        case Term::Gauge: out.gauge += v; break;
      }
    }
    return out;
  }

  /// Action of the normal operator, A x = F^T Wgt F x.
  SpectralField normal_action(const SpectralField& x) const { return adjoint(weigh(forward(x))); }

  /// Vector-in/vector-out form of the action for iterative solvers.
  void normal_action_vec(const Vector& x, Vector& y) const {
    SpectralField xf(order_, num_elements());
    if (x.size() != xf.size()) throw LayoutError("normal_action_vec: size mismatch");
    xf.data = x;
    y = normal_action(xf).data;
  }

  /// Right-hand side r = F^T Wgt c of the normal equations.
  SpectralField normal_rhs() const { return adjoint(weigh(data_)); }

  /// Both components of gamma_N(u,p) at the trace nodes of a Neumann edge.
  std::pair<Vector, Vector> neumann_trace(const SpectralField& x, int edge_index) const {
    check_layout(x);
    if (edge_index < 0 || edge_index >= static_cast<int>(mesh_.edges.size()))
      throw std::out_of_range("neumann_trace: edge index");
    const auto& e = mesh_.edges[edge_index];
    if (e.kind != geom::Edge::Kind::Boundary || e.tag == geom::BcTag::Dirichlet)
      throw std::logic_error("neumann_trace: edge is not Neumann-tagged");
    return neumann_components(x, e);
  }

 private:
  // -- caches ---------------------------------------------------------------

  struct SideCache {
    Vector g11, g12, g21, g22;  // inverse-Jacobian entries at the trace nodes
    Vector n1, n2;              // outward unit normal
  };

  struct ElementCache {
    // coefficient fields on the volume quadrature grid
    NodalMatrix a0;                      // alpha sqrt(J)
    NodalMatrix lxx, lee, lxe, lx, le;   // -nu sqrt(J) (Laplacian chain rule)
    NodalMatrix q11, q12, q21, q22;      // sqrt(J) * inverse Jacobian
    NodalMatrix q11x, q12x, q21x, q22x;  // xi-derivatives of the q fields
    NodalMatrix q11e, q12e, q21e, q22e;  // eta-derivatives
    std::array<SideCache, 4> sides;
  };

  struct EdgeLayout {
    int first_block = -1;  // index into blocks_
  };

  void build_element_caches() {
    const double alpha = case_.spec.alpha;
    const double nu = case_.spec.nu;
    elements_.resize(mesh_.num_elements());
    for (int l = 0; l < mesh_.num_elements(); ++l) {
      ElementCache& c = elements_[l];
      for (NodalMatrix* m : {&c.a0, &c.lxx, &c.lee, &c.lxe, &c.lx, &c.le, &c.q11, &c.q12, &c.q21,
                             &c.q22, &c.q11x, &c.q12x, &c.q21x, &c.q22x, &c.q11e, &c.q12e,
                             &c.q21e, &c.q22e})
        m->resize(nq_, nq_);
      for (int a = 0; a < nq_; ++a) {
        for (int b = 0; b < nq_; ++b) {
          const auto jet = mesh_.elements[l].at(quad_.nodes(a), quad_.nodes(b));
          const double j = jet.jacobian();
          if (!(j > 0.0)) throw geom::InvalidGeometryError("Assembler: nonpositive Jacobian");
          const double sj = std::sqrt(j);
          const double jx = jet.d_xixi.x * jet.d_eta.y + jet.d_xi.x * jet.d_xieta.y -
                            jet.d_xieta.x * jet.d_xi.y - jet.d_eta.x * jet.d_xixi.y;
          const double je = jet.d_xieta.x * jet.d_eta.y + jet.d_xi.x * jet.d_etaeta.y -
                            jet.d_etaeta.x * jet.d_xi.y - jet.d_eta.x * jet.d_xieta.y;
          const double g11 = jet.d_eta.y / j, g12 = -jet.d_xi.y / j;
          const double g21 = -jet.d_eta.x / j, g22 = jet.d_xi.x / j;
          c.a0(a, b) = alpha * sj;
          c.q11(a, b) = sj * g11;
          c.q12(a, b) = sj * g12;
          c.q21(a, b) = sj * g21;
          c.q22(a, b) = sj * g22;
          const double jxj = jx / (2.0 * j * sj), jej = je / (2.0 * j * sj);
          c.q11x(a, b) = jet.d_xieta.y / sj - jet.d_eta.y * jxj;
          c.q11e(a, b) = jet.d_etaeta.y / sj - jet.d_eta.y * jej;
          c.q12x(a, b) = -jet.d_xixi.y / sj + jet.d_xi.y * jxj;
          c.q12e(a, b) = -jet.d_xieta.y / sj + jet.d_xi.y * jej;
          c.q21x(a, b) = -jet.d_xieta.x / sj + jet.d_eta.x * jxj;
          c.q21e(a, b) = -jet.d_etaeta.x / sj + jet.d_eta.x * jej;
          c.q22x(a, b) = jet.d_xixi.x / sj - jet.d_xi.x * jxj;
          c.q22e(a, b) = jet.d_xieta.x / sj - jet.d_xi.x * jej;
          const double g11x = jet.d_xieta.y / j - jet.d_eta.y * jx / (j * j);
          const double g11e = jet.d_etaeta.y / j - jet.d_eta.y * je / (j * j);
          const double g12x = -jet.d_xixi.y / j + jet.d_xi.y * jx / (j * j);
          const double g12e = -jet.d_xieta.y / j + jet.d_xi.y * je / (j * j);
          const double g21x = -jet.d_xieta.x / j + jet.d_eta.x * jx / (j * j);
          const double g21e = -jet.d_etaeta.x / j + jet.d_eta.x * je / (j * j);
          const double g22x = jet.d_xixi.x / j - jet.d_xi.x * jx / (j * j);
          const double g22e = jet.d_xieta.x / j - jet.d_xi.x * je / (j * j);
          const double nsj = -nu * sj;
          c.lxx(a, b) = nsj * (g11 * g11 + g21 * g21);
          c.lee(a, b) = nsj * (g12 * g12 + g22 * g22);
          c.lxe(a, b) = nsj * 2.0 * (g11 * g12 + g21 * g22);
          c.lx(a, b) = nsj * (g11 * g11x + g12 * g11e + g21 * g21x + g22 * g21e);
          c.le(a, b) = nsj * (g11 * g12x + g12 * g12e + g21 * g22x + g22 * g22e);
        }
      }
      for (int sidx = 0; sidx < 4; ++sidx) {
        const auto side = static_cast<geom::Side>(sidx);
        SideCache& sc = c.sides[sidx];
        for (Vector* v : {&sc.g11, &sc.g12, &sc.g21, &sc.g22, &sc.n1, &sc.n2}) v->resize(n_);
        for (int k = 0; k < n_; ++k) {
          const double t = gll_.nodes(k);
          const auto [xi, eta] = geom::side_point(side, t);
          const auto jet = mesh_.elements[l].at(xi, eta);
          const double j = jet.jacobian();
          sc.g11(k) = jet.d_eta.y / j;
          sc.g12(k) = -jet.d_xi.y / j;
          sc.g21(k) = -jet.d_eta.x / j;
          sc.g22(k) = jet.d_xi.x / j;
          const auto nvec = geom::outward_normal(mesh_.elements[l], side, t);
          sc.n1(k) = nvec.x;
          sc.n2(k) = nvec.y;
        }
      }
    }
  }

  void push_block(Term term, int size) {
    blocks_.push_back({term, residual_size_, size});
    residual_size_ += size;
  }

  void build_layout_and_data() {
    residual_size_ = 0;
    const int v = nq_ * nq_;
    for (int l = 0; l < mesh_.num_elements(); ++l) {
      element_first_block_.push_back(static_cast<int>(blocks_.size()));
      push_block(Term::Momentum, v);    // component 1
      push_block(Term::Momentum, v);    // component 2
      push_block(Term::Continuity, v);  // value
      push_block(Term::Continuity, v);  // xi-derivative
      push_block(Term::Continuity, v);  // eta-derivative
    }
    edge_layout_.resize(mesh_.edges.size());
    for (std::size_t e = 0; e < mesh_.edges.size(); ++e) {
      const auto& edge = mesh_.edges[e];
      edge_layout_[e].first_block = static_cast<int>(blocks_.size());
      if (edge.kind == geom::Edge::Kind::Interior) {
        push_block(Term::JumpValue, n_);       // [u1]
        push_block(Term::JumpValue, n_);       // [u2]
        push_block(Term::JumpDerivative, n_);  // [u1_x1]
        push_block(Term::JumpDerivative, n_);  // [u2_x1]
        push_block(Term::JumpDerivative, n_);  // [u1_x2]
        push_block(Term::JumpDerivative, n_);  // [u2_x2]
        push_block(Term::JumpPressure, n_);    // [p]
      } else if (edge.tag == geom::BcTag::Dirichlet) {
        push_block(Term::DirichletTrace, n_);
        push_block(Term::DirichletTrace, n_);
      } else {
        push_block(Term::NeumannTrace, n_);
        push_block(Term::NeumannTrace, n_);
      }
    }
    gauge_block_ = -1;
    if (mesh_.gauge) {
      gauge_block_ = static_cast<int>(blocks_.size());
      push_block(Term::Gauge, 1);
      // interpolation rows evaluating at the gauge reference point
      basis::NodeSet1D pt{basis::NodeKind::Gauss, Vector::Constant(1, mesh_.gauge->xi),
                          Vector::Constant(1, 2.0)};
      gauge_rxi_ = basis::interp_matrix(gll_, pt).row(0).transpose();
      pt.nodes(0) = mesh_.gauge->eta;
      gauge_reta_ = basis::interp_matrix(gll_, pt).row(0).transpose();
    }

    // data samples c
    data_ = Vector::Zero(residual_size_);
    for (int l = 0; l < mesh_.num_elements(); ++l) {
      const int base = blocks_[element_first_block_[l]].offset;
      const int v2 = nq_ * nq_;
      for (int a = 0; a < nq_; ++a)
        for (int b = 0; b < nq_; ++b) {
          const auto jet = mesh_.elements[l].at(quad_.nodes(a), quad_.nodes(b));
          const double j = jet.jacobian();
          const double sj = std::sqrt(j);
          const double jx = jet.d_xixi.x * jet.d_eta.y + jet.d_xi.x * jet.d_xieta.y -
                            jet.d_xieta.x * jet.d_xi.y - jet.d_eta.x * jet.d_xixi.y;
          const double je = jet.d_xieta.x * jet.d_eta.y + jet.d_xi.x * jet.d_etaeta.y -
                            jet.d_etaeta.x * jet.d_xi.y - jet.d_eta.x * jet.d_xieta.y;
          const double px = jet.x.x, py = jet.x.y;
          const int k = a * nq_ + b;
          data_(base + k) = case_.f1(px, py) * sj;
          data_(base + v2 + k) = case_.f2(px, py) * sj;
          const double h = case_.h(px, py);
          const double hx1 = case_.h_x1(px, py), hx2 = case_.h_x2(px, py);
          data_(base + 2 * v2 + k) = h * sj;
          data_(base + 3 * v2 + k) =
              (hx1 * jet.d_xi.x + hx2 * jet.d_xi.y) * sj + h * jx / (2.0 * sj);
          data_(base + 4 * v2 + k) =
              (hx1 * jet.d_eta.x + hx2 * jet.d_eta.y) * sj + h * je / (2.0 * sj);
        }
    }
    for (std::size_t e = 0; e < mesh_.edges.size(); ++e) {
      const auto& edge = mesh_.edges[e];
      if (edge.kind != geom::Edge::Kind::Boundary) continue;
      const int base = blocks_[edge_layout_[e].first_block].offset;
      for (int k = 0; k < n_; ++k) {
        const double t = gll_.nodes(k);
        const auto [xi, eta] = geom::side_point(edge.side_a, t);
        const geom::Vec2 x = mesh_.elements[edge.elem_a].point(xi, eta);
        if (edge.tag == geom::BcTag::Dirichlet) {
          data_(base + k) = case_.exact.u1(x.x, x.y);
          data_(base + n_ + k) = case_.exact.u2(x.x, x.y);
        } else {
          const auto& sc = elements_[edge.elem_a].sides[static_cast<int>(edge.side_a)];
          const auto [g1, g2] =
              problems::neumann_data(case_, edge.tag, x, {sc.n1(k), sc.n2(k)});
          data_(base + k) = g1;
          data_(base + n_ + k) = g2;
        }
      }
    }
  }

  void check_layout(const SpectralField& x) const {
    if (x.order != order_ || x.num_elements != mesh_.num_elements())
      throw LayoutError("Assembler: field layout does not match (mesh, order)");
  }

  // -- trace helpers ----------------------------------------------------------

  Vector take_side(const NodalMatrix& m, geom::Side s) const {
    switch (s) {
      case geom::Side::XiMinus: return m.row(0).transpose();
      case geom::Side::XiPlus: return m.row(n_ - 1).transpose();
      case geom::Side::EtaMinus: return m.col(0);
      default: return m.col(n_ - 1);
    }
  }

  // m += side-scatter of v
  void scatter_side(NodalMatrix& m, geom::Side s, const Vector& v) const {
    switch (s) {
      case geom::Side::XiMinus: m.row(0) += v.transpose(); break;
      case geom::Side::XiPlus: m.row(n_ - 1) += v.transpose(); break;
      case geom::Side::EtaMinus: m.col(0) += v; break;
      default: m.col(n_ - 1) += v; break;
    }
  }

  struct SideTraces {
    Vector u1, u2, p;              // value traces
    Vector u1x1, u1x2, u2x1, u2x2; // physical derivative traces
  };

  SideTraces side_traces(const SpectralField& x, int elem, geom::Side side) const {
    const auto& sc = elements_[elem].sides[static_cast<int>(side)];
    const NodalMatrix u1 = x.block(elem, Var::U1);
    const NodalMatrix u2 = x.block(elem, Var::U2);
    const NodalMatrix p = x.block(elem, Var::P);
    SideTraces t;
    t.u1 = take_side(u1, side);
    t.u2 = take_side(u2, side);
    t.p = take_side(p, side);
    const Vector u1x = take_side(d1_ * u1, side), u1e = take_side(u1 * d1_.transpose(), side);
    const Vector u2x = take_side(d1_ * u2, side), u2e = take_side(u2 * d1_.transpose(), side);
    t.u1x1 = sc.g11.cwiseProduct(u1x) + sc.g12.cwiseProduct(u1e);
    t.u1x2 = sc.g21.cwiseProduct(u1x) + sc.g22.cwiseProduct(u1e);
    t.u2x1 = sc.g11.cwiseProduct(u2x) + sc.g12.cwiseProduct(u2e);
    t.u2x2 = sc.g21.cwiseProduct(u2x) + sc.g22.cwiseProduct(u2e);
    return t;
  }

  // adjoint of a value trace: y_elem_var += scatter(w)
  void adj_value_trace(SpectralField& y, int elem, Var var, geom::Side side,
                       const Vector& w) const {
    auto blk = y.block(elem, var);
    NodalMatrix m = NodalMatrix::Zero(n_, n_);
    scatter_side(m, side, w);
    blk += m;
  }

  // adjoint of the physical-derivative traces: given weights (w1 for d/dx1,
  // w2 for d/dx2) on the trace of variable `var`
  void adj_deriv_trace(SpectralField& y, int elem, Var var, geom::Side side, const Vector& w1,
                       const Vector& w2) const {
    const auto& sc = elements_[elem].sides[static_cast<int>(side)];
    const Vector wx = sc.g11.cwiseProduct(w1) + sc.g21.cwiseProduct(w2);
    const Vector we = sc.g12.cwiseProduct(w1) + sc.g22.cwiseProduct(w2);
    NodalMatrix mx = NodalMatrix::Zero(n_, n_), me = NodalMatrix::Zero(n_, n_);
    scatter_side(mx, side, wx);
    scatter_side(me, side, we);
    y.block(elem, var).noalias() += d1_.transpose() * mx;
    y.block(elem, var).noalias() += me * d1_;
  }

  // -- volume terms -----------------------------------------------------------

  struct FieldJet {
    NodalMatrix v, x, e, xx, xe, ee;
  };

  FieldJet field_jet(Eigen::Map<const NodalMatrix> nodal) const {
    FieldJet f;
    const NodalMatrix vt = nodal * iq_.transpose();   // n x Nq
    const NodalMatrix dt = nodal * iqd_.transpose();  // n x Nq
    const NodalMatrix d2t = nodal * iqd2_.transpose();
    f.v = iq_ * vt;
    f.e = iq_ * dt;
    f.ee = iq_ * d2t;
    f.x = iqd_ * vt;
    f.xe = iqd_ * dt;
    f.xx = iqd2_ * vt;
    return f;
  }

  void forward_element(const SpectralField& x, int l, Vector& r) const {
    const ElementCache& c = elements_[l];
    const FieldJet u1 = field_jet(x.block(l, Var::U1));
    const FieldJet u2 = field_jet(x.block(l, Var::U2));
    const FieldJet p = field_jet(x.block(l, Var::P));
    const int v2 = nq_ * nq_;
    const int base = blocks_[element_first_block_[l]].offset;
    const auto flat = [&](const NodalMatrix& m) {
      return Eigen::Map<const Vector>(m.data(), v2);
    };
    const NodalMatrix mom1 = c.a0.cwiseProduct(u1.v) + c.lxx.cwiseProduct(u1.xx) +
                             c.lee.cwiseProduct(u1.ee) + c.lxe.cwiseProduct(u1.xe) +
                             c.lx.cwiseProduct(u1.x) + c.le.cwiseProduct(u1.e) +
                             c.q11.cwiseProduct(p.x) + c.q12.cwiseProduct(p.e);
    const NodalMatrix mom2 = c.a0.cwiseProduct(u2.v) + c.lxx.cwiseProduct(u2.xx) +
                             c.lee.cwiseProduct(u2.ee) + c.lxe.cwiseProduct(u2.xe) +
                             c.lx.cwiseProduct(u2.x) + c.le.cwiseProduct(u2.e) +
                             c.q21.cwiseProduct(p.x) + c.q22.cwiseProduct(p.e);
    const NodalMatrix div = -(c.q11.cwiseProduct(u1.x) + c.q12.cwiseProduct(u1.e) +
                              c.q21.cwiseProduct(u2.x) + c.q22.cwiseProduct(u2.e));
    const NodalMatrix divx =
        -(c.q11x.cwiseProduct(u1.x) + c.q11.cwiseProduct(u1.xx) + c.q12x.cwiseProduct(u1.e) +
          c.q12.cwiseProduct(u1.xe) + c.q21x.cwiseProduct(u2.x) + c.q21.cwiseProduct(u2.xx) +
          c.q22x.cwiseProduct(u2.e) + c.q22.cwiseProduct(u2.xe));
    const NodalMatrix dive =
        -(c.q11e.cwiseProduct(u1.x) + c.q11.cwiseProduct(u1.xe) + c.q12e.cwiseProduct(u1.e) +
          c.q12.cwiseProduct(u1.ee) + c.q21e.cwiseProduct(u2.x) + c.q21.cwiseProduct(u2.xe) +
          c.q22e.cwiseProduct(u2.e) + c.q22.cwiseProduct(u2.ee));
    r.segment(base, v2) = flat(mom1);
    r.segment(base + v2, v2) = flat(mom2);
    r.segment(base + 2 * v2, v2) = flat(div);
    r.segment(base + 3 * v2, v2) = flat(divx);
    r.segment(base + 4 * v2, v2) = flat(dive);
  }

  // adjoint of the field jet: y_block += sum of chain transposes
  void adj_field_jet(SpectralField& y, int l, Var var, const NodalMatrix& gv,
                     const NodalMatrix& gx, const NodalMatrix& ge, const NodalMatrix& gxx,
                     const NodalMatrix& gxe, const NodalMatrix& gee) const {
    auto blk = y.block(l, var);
    blk.noalias() += iq_.transpose() * gv * iq_;
    blk.noalias() += iqd_.transpose() * gx * iq_;
    blk.noalias() += iq_.transpose() * ge * iqd_;
    blk.noalias() += iqd2_.transpose() * gxx * iq_;
    blk.noalias() += iqd_.transpose() * gxe * iqd_;
    blk.noalias() += iq_.transpose() * gee * iqd2_;
  }

  void adjoint_element(const Vector& r, int l, SpectralField& y) const {
    const ElementCache& c = elements_[l];
    const int v2 = nq_ * nq_;
    const int base = blocks_[element_first_block_[l]].offset;
    const auto grid = [&](int which) {
      return Eigen::Map<const NodalMatrix>(r.data() + base + which * v2, nq_, nq_);
    };
    const NodalMatrix m1 = grid(0), m2 = grid(1), dv = grid(2), dx = grid(3), de = grid(4);
    // momentum 1 -> u1 and p
    adj_field_jet(y, l, Var::U1, c.a0.cwiseProduct(m1), c.lx.cwiseProduct(m1),
                  c.le.cwiseProduct(m1), c.lxx.cwiseProduct(m1), c.lxe.cwiseProduct(m1),
                  c.lee.cwiseProduct(m1));
    // momentum 2 -> u2
    adj_field_jet(y, l, Var::U2, c.a0.cwiseProduct(m2), c.lx.cwiseProduct(m2),
                  c.le.cwiseProduct(m2), c.lxx.cwiseProduct(m2), c.lxe.cwiseProduct(m2),
                  c.lee.cwiseProduct(m2));
    // pressure gradient from both momentum components
    const NodalMatrix zero = NodalMatrix::Zero(nq_, nq_);
    adj_field_jet(y, l, Var::P, zero, c.q11.cwiseProduct(m1) + c.q21.cwiseProduct(m2),
                  c.q12.cwiseProduct(m1) + c.q22.cwiseProduct(m2), zero, zero, zero);
    // continuity (value, xi- and eta-derivative fields) -> u1, u2
    adj_field_jet(y, l, Var::U1, zero,
                  -(c.q11.cwiseProduct(dv) + c.q11x.cwiseProduct(dx) + c.q11e.cwiseProduct(de)),
                  -(c.q12.cwiseProduct(dv) + c.q12x.cwiseProduct(dx) + c.q12e.cwiseProduct(de)),
                  -c.q11.cwiseProduct(dx), -(c.q12.cwiseProduct(dx) + c.q11.cwiseProduct(de)),
                  -c.q12.cwiseProduct(de));
    adj_field_jet(y, l, Var::U2, zero,
                  -(c.q21.cwiseProduct(dv) + c.q21x.cwiseProduct(dx) + c.q21e.cwiseProduct(de)),
                  -(c.q22.cwiseProduct(dv) + c.q22x.cwiseProduct(dx) + c.q22e.cwiseProduct(de)),
                  -c.q21.cwiseProduct(dx), -(c.q22.cwiseProduct(dx) + c.q21.cwiseProduct(de)),
                  -c.q22.cwiseProduct(de));
  }

  // -- edge terms ---------------------------------------------------------------

  std::pair<Vector, Vector> neumann_components(const SpectralField& x,
                                               const geom::Edge& e) const {
    const SideTraces t = side_traces(x, e.elem_a, e.side_a);
    const auto& sc = elements_[e.elem_a].sides[static_cast<int>(e.side_a)];
    Vector r1(n_), r2(n_);
    if (e.tag == geom::BcTag::NeumannA) {
      r1 = sc.n1.cwiseProduct(t.u1x1) + sc.n2.cwiseProduct(t.u1x2) - sc.n1.cwiseProduct(t.p);
      r2 = sc.n1.cwiseProduct(t.u2x1) + sc.n2.cwiseProduct(t.u2x2) - sc.n2.cwiseProduct(t.p);
    } else {
      const Vector mixed = t.u1x2 + t.u2x1;
      r1 = 2.0 * sc.n1.cwiseProduct(t.u1x1) + sc.n2.cwiseProduct(mixed) - sc.n1.cwiseProduct(t.p);
      r2 = sc.n1.cwiseProduct(mixed) + 2.0 * sc.n2.cwiseProduct(t.u2x2) - sc.n2.cwiseProduct(t.p);
    }
    return {r1, r2};
  }

  void forward_edge(const SpectralField& x, std::size_t e_idx, Vector& r) const {
    const auto& e = mesh_.edges[e_idx];
    const int base = blocks_[edge_layout_[e_idx].first_block].offset;
    if (e.kind == geom::Edge::Kind::Interior) {
      const SideTraces ta = side_traces(x, e.elem_a, e.side_a);
      SideTraces tb = side_traces(x, e.elem_b, e.side_b);
      if (e.reversed)
        for (Vector* v : {&tb.u1, &tb.u2, &tb.p, &tb.u1x1, &tb.u1x2, &tb.u2x1, &tb.u2x2})
          v->reverseInPlace();
      r.segment(base + 0 * n_, n_) = tb.u1 - ta.u1;
      r.segment(base + 1 * n_, n_) = tb.u2 - ta.u2;
      r.segment(base + 2 * n_, n_) = tb.u1x1 - ta.u1x1;
      r.segment(base + 3 * n_, n_) = tb.u2x1 - ta.u2x1;
      r.segment(base + 4 * n_, n_) = tb.u1x2 - ta.u1x2;
      r.segment(base + 5 * n_, n_) = tb.u2x2 - ta.u2x2;
      r.segment(base + 6 * n_, n_) = tb.p - ta.p;
    } else if (e.tag == geom::BcTag::Dirichlet) {
      const NodalMatrix u1 = x.block(e.elem_a, Var::U1);
      const NodalMatrix u2 = x.block(e.elem_a, Var::U2);
      r.segment(base, n_) = take_side(u1, e.side_a);
      r.segment(base + n_, n_) = take_side(u2, e.side_a);
    } else {
      const auto [r1, r2] = neumann_components(x, e);
      r.segment(base, n_) = r1;
      r.segment(base + n_, n_) = r2;
    }
  }

  void adjoint_edge(const Vector& r, std::size_t e_idx, SpectralField& y) const {
    const auto& e = mesh_.edges[e_idx];
    const int base = blocks_[edge_layout_[e_idx].first_block].offset;
    if (e.kind == geom::Edge::Kind::Interior) {
      Vector w[7];
      for (int k = 0; k < 7; ++k) w[k] = r.segment(base + k * n_, n_);
      // side a enters each jump with weight -1
      adj_value_trace(y, e.elem_a, Var::U1, e.side_a, -w[0]);
      adj_value_trace(y, e.elem_a, Var::U2, e.side_a, -w[1]);
      adj_value_trace(y, e.elem_a, Var::P, e.side_a, -w[6]);
      adj_deriv_trace(y, e.elem_a, Var::U1, e.side_a, -w[2], -w[4]);
      adj_deriv_trace(y, e.elem_a, Var::U2, e.side_a, -w[3], -w[5]);
      if (e.reversed)
        for (auto& v : w) v.reverseInPlace();
      adj_value_trace(y, e.elem_b, Var::U1, e.side_b, w[0]);
      adj_value_trace(y, e.elem_b, Var::U2, e.side_b, w[1]);
      adj_value_trace(y, e.elem_b, Var::P, e.side_b, w[6]);
      adj_deriv_trace(y, e.elem_b, Var::U1, e.side_b, w[2], w[4]);
      adj_deriv_trace(y, e.elem_b, Var::U2, e.side_b, w[3], w[5]);
    } else if (e.tag == geom::BcTag::Dirichlet) {
      adj_value_trace(y, e.elem_a, Var::U1, e.side_a, r.segment(base, n_));
      adj_value_trace(y, e.elem_a, Var::U2, e.side_a, r.segment(base + n_, n_));
    } else {
      const auto& sc = elements_[e.elem_a].sides[static_cast<int>(e.side_a)];
      const Vector w1 = r.segment(base, n_), w2 = r.segment(base + n_, n_);
      if (e.tag == geom::BcTag::NeumannA) {
        adj_deriv_trace(y, e.elem_a, Var::U1, e.side_a, sc.n1.cwiseProduct(w1),
                        sc.n2.cwiseProduct(w1));
        adj_deriv_trace(y, e.elem_a, Var::U2, e.side_a, sc.n1.cwiseProduct(w2),
                        sc.n2.cwiseProduct(w2));
      } else {
        const Vector mixed = sc.n2.cwiseProduct(w1) + sc.n1.cwiseProduct(w2);
        adj_deriv_trace(y, e.elem_a, Var::U1, e.side_a, 2.0 * sc.n1.cwiseProduct(w1), mixed);
        adj_deriv_trace(y, e.elem_a, Var::U2, e.side_a, mixed, 2.0 * sc.n2.cwiseProduct(w2));
      }
      adj_value_trace(y, e.elem_a, Var::P, e.side_a,
                      -(sc.n1.cwiseProduct(w1) + sc.n2.cwiseProduct(w2)));
    }
  }

  // -- members ------------------------------------------------------------------

  geom::Mesh mesh_;
  problems::CaseData case_;
  int order_, n_, nq_ = 0;

  basis::NodeSet1D gll_, quad_;
  Matrix d1_, iq_, iqd_, iqd2_;
  Vector wq_;
  Matrix m0_, mhalf_, m32_;

  std::vector<ElementCache> elements_;
  std::vector<int> element_first_block_;
  std::vector<EdgeLayout> edge_layout_;
  std::vector<ResidualBlock> blocks_;
  int residual_size_ = 0;
  int gauge_block_ = -1;
  Vector gauge_rxi_, gauge_reta_;
  Vector data_;
};

}  // namespace stokesls::assembly
