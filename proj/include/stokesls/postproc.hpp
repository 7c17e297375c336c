#pragma once

// Error measurement in broken norms against the exact solution, and
// convergence sweeps over the polynomial order. Velocity errors use the
// element-wise H1 norm with physical derivatives, pressure the L2 norm after
// aligning both fields at the gauge point (when one exists), and the
// continuity error is the L2 norm of div z + h.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stokesls/assembly.hpp"
#include "stokesls/basis.hpp"
#include "stokesls/field.hpp"
#include "stokesls/geometry.hpp"
#include "stokesls/problems.hpp"
#include "stokesls/solver.hpp"

namespace stokesls::postproc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ErrorReport {
  int case_id = 0;
  int order = 0;
  double param = 0.0;
  double e_u_h1 = 0.0;  // relative broken-H1 velocity error
  double e_p_l2 = 0.0;  // relative L2 pressure error
  double e_c_l2 = 0.0;  // L2 error of the continuity equation
  int iterations = 0;
  bool converged = true;
  double seconds = 0.0;
};

inline ErrorReport compute_errors(const assembly::SpectralField& x, const problems::CaseData& cd,
                                  const geom::Mesh& mesh) {
  using assembly::NodalMatrix;
  using assembly::Var;
  const int w = x.order;
  const int n = w + 1;
  if (x.num_elements != mesh.num_elements())
    throw assembly::LayoutError("compute_errors: field does not match mesh");
  const auto gll = basis::gll_nodes(n);
  const auto quad = basis::gauss_nodes(std::max(2 * w, 4));
  const int nq = quad.size();
  const Matrix iq = basis::interp_matrix(gll, quad);
  const Matrix iqd = iq * basis::diff_matrix(gll);

  // gauge alignment: both pressures shifted to vanish at the gauge point
  double shift_z = 0.0, shift_p = 0.0;
  if (mesh.gauge) {
    const auto& g = *mesh.gauge;
    basis::NodeSet1D pt{basis::NodeKind::Gauss, Vector::Constant(1, g.xi), Vector::Constant(1, 2.0)};
    const Vector rxi = basis::interp_matrix(gll, pt).row(0).transpose();
    pt.nodes(0) = g.eta;
    const Vector reta = basis::interp_matrix(gll, pt).row(0).transpose();
    shift_z = rxi.dot(Matrix(x.block(g.element, Var::P)) * reta);
    const geom::Vec2 gp = mesh.elements[g.element].point(g.xi, g.eta);
    shift_p = cd.exact.p(gp.x, gp.y);
  }

  double num_u = 0.0, den_u = 0.0, num_p = 0.0, den_p = 0.0, num_c = 0.0;
  for (int l = 0; l < mesh.num_elements(); ++l) {
    const NodalMatrix z1 = x.block(l, Var::U1);
    const NodalMatrix z2 = x.block(l, Var::U2);
    const NodalMatrix zp = x.block(l, Var::P);
    const NodalMatrix z1v = iq * z1 * iq.transpose(), z1x = iqd * z1 * iq.transpose(),
                      z1e = iq * z1 * iqd.transpose();
    const NodalMatrix z2v = iq * z2 * iq.transpose(), z2x = iqd * z2 * iq.transpose(),
                      z2e = iq * z2 * iqd.transpose();
    const NodalMatrix zpv = iq * zp * iq.transpose();
    for (int a = 0; a < nq; ++a)
      for (int b = 0; b < nq; ++b) {
        const auto jet = mesh.elements[l].at(quad.nodes(a), quad.nodes(b));
        const double jw = jet.jacobian() * quad.weights(a) * quad.weights(b);
        const double j = jet.jacobian();
        const double g11 = jet.d_eta.y / j, g12 = -jet.d_xi.y / j;
        const double g21 = -jet.d_eta.x / j, g22 = jet.d_xi.x / j;
        const double px = jet.x.x, py = jet.x.y;
        const double z1x1 = g11 * z1x(a, b) + g12 * z1e(a, b);
        const double z1x2 = g21 * z1x(a, b) + g22 * z1e(a, b);
        const double z2x1 = g11 * z2x(a, b) + g12 * z2e(a, b);
        const double z2x2 = g21 * z2x(a, b) + g22 * z2e(a, b);
        const double u1 = cd.exact.u1(px, py), u2 = cd.exact.u2(px, py);
        const double u1x1 = cd.exact.u1_x1(px, py), u1x2 = cd.exact.u1_x2(px, py);
        const double u2x1 = cd.exact.u2_x1(px, py), u2x2 = cd.exact.u2_x2(px, py);
        const auto sq = [](double v) { return v * v; };
        num_u += jw * (sq(u1 - z1v(a, b)) + sq(u2 - z2v(a, b)) + sq(u1x1 - z1x1) +
                       sq(u1x2 - z1x2) + sq(u2x1 - z2x1) + sq(u2x2 - z2x2));
        den_u += jw * (sq(u1) + sq(u2) + sq(u1x1) + sq(u1x2) + sq(u2x1) + sq(u2x2));
        const double p_ex = cd.exact.p(px, py) - shift_p;
        num_p += jw * sq(p_ex - (zpv(a, b) - shift_z));
        den_p += jw * sq(p_ex);
        num_c += jw * sq(z1x1 + z2x2 + cd.h(px, py));
      }
  }
  ErrorReport rep;
  rep.case_id = cd.id;
  rep.order = w;
  rep.param = cd.param;
  // a vanishing exact field makes the relative errors absolute
  rep.e_u_h1 = den_u > 0.0 ? std::sqrt(num_u / den_u) : std::sqrt(num_u);
  rep.e_p_l2 = den_p > 0.0 ? std::sqrt(num_p / den_p) : std::sqrt(num_p);
  rep.e_c_l2 = std::sqrt(num_c);
  return rep;
}

struct SweepConfig {
  double tol = 1e-10;
  int max_iter = 20000;
  int quad_oversample = 3;  // volume quadrature uses W + quad_oversample nodes
};

/// Assemble, solve with the preconditioned normal equations and measure.
inline ErrorReport solve_and_measure(const problems::CaseData& cd, const geom::Mesh& mesh,
                                     int order, const SweepConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const assembly::Assembler a(mesh, cd, order, order + cfg.quad_oversample);
  const solver::Preconditioner precond(order, mesh.num_elements());
  const Vector rhs = a.normal_rhs().data;
  auto [xvec, solve_report] = solver::pcg_solve(
      [&a](const Vector& in, Vector& out) { a.normal_action_vec(in, out); }, rhs,
      [&precond](const Vector& v, Vector& z) { precond.apply(v, z); }, cfg.tol, cfg.max_iter);
  assembly::SpectralField x(order, mesh.num_elements());
  x.data = std::move(xvec);
  ErrorReport rep = compute_errors(x, cd, mesh);
  rep.iterations = solve_report.iterations;
  rep.converged = solve_report.converged;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct SweepResult {
  std::vector<ErrorReport> reports;
  double slope_u = 0.0;  // least-squares slope of ln(e_u) against W
  double slope_p = 0.0;
};

namespace detail {

inline double fit_slope(const std::vector<double>& ws, const std::vector<double>& log_errors) {
  const std::size_t m = ws.size();
  double mean_w = 0.0, mean_e = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_w += ws[i];
    mean_e += log_errors[i];
  }
  mean_w /= m;
  mean_e /= m;
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    cov += (ws[i] - mean_w) * (log_errors[i] - mean_e);
    var += (ws[i] - mean_w) * (ws[i] - mean_w);
  }
  return var > 0.0 ? cov / var : 0.0;
}

}  // namespace detail

/// One solve per order in `w_list` (ascending); non-converged solves are kept
/// in the report list with their flag, never dropped.
inline SweepResult convergence_sweep(const problems::CaseData& cd, const geom::Mesh& mesh,
                                     const std::vector<int>& w_list, const SweepConfig& cfg = {}) {
  if (w_list.empty()) throw std::invalid_argument("convergence_sweep: empty order list");
  for (std::size_t i = 1; i < w_list.size(); ++i)
    if (w_list[i] <= w_list[i - 1])
      throw std::invalid_argument("convergence_sweep: orders must be ascending");
  SweepResult out;
  std::vector<double> ws, log_u, log_p;
  for (int w : w_list) {
    out.reports.push_back(solve_and_measure(cd, mesh, w, cfg));
    const auto& r = out.reports.back();
    ws.push_back(w);
    log_u.push_back(std::log(std::max(r.e_u_h1, 1e-300)));
    log_p.push_back(std::log(std::max(r.e_p_l2, 1e-300)));
  }
  out.slope_u = detail::fit_slope(ws, log_u);
  out.slope_p = detail::fit_slope(ws, log_p);
  return out;
}

}  // namespace stokesls::postproc
