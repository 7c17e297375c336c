#pragma once

// Matrix-free preconditioned conjugate gradients for the normal equations.
// The preconditioner applies, per element, the Cholesky-factored H2(S) Gram
// matrix to each velocity block and the H1(S) Gram matrix to the pressure
// block; the blocks live on the reference square, so a single factorization
// pair serves every element.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "stokesls/basis.hpp"
#include "stokesls/norms.hpp"

namespace stokesls::solver {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// non-finite values inside the iteration: operator or preconditioner bug
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // relative preconditioned residual
  bool converged = false;
  double seconds = 0.0;
};

class Preconditioner {
 public:
  /// Blocks for polynomial degree `order`, Gram quadrature order+3.
  Preconditioner(int order, int num_elements) : num_elements_(num_elements) {
    const auto tables = norms::make_square_gram_tables(order, basis::gauss_nodes(order + 3));
    block_ = static_cast<int>(tables.g1.rows());
    velocity_llt_ = tables.g2_llt;
    pressure_llt_ = tables.g1_llt;
  }

  /// Custom SPD blocks (velocity applied twice per element, then pressure).
  Preconditioner(const Matrix& velocity_block, const Matrix& pressure_block, int num_elements)
      : num_elements_(num_elements), block_(static_cast<int>(velocity_block.rows())) {
    velocity_llt_.compute(velocity_block);
    pressure_llt_.compute(pressure_block);
    if (velocity_llt_.info() != Eigen::Success || pressure_llt_.info() != Eigen::Success)
      throw norms::SpdViolationError("Preconditioner: block is not numerically SPD");
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(3) * num_elements_ * block_; }

  void apply(const Vector& v, Vector& z) const {
    if (v.size() != size()) throw std::invalid_argument("Preconditioner: size mismatch");
    z.resize(v.size());
    for (int l = 0; l < num_elements_; ++l) {
      const Eigen::Index base = static_cast<Eigen::Index>(3) * l * block_;
      z.segment(base, block_) = velocity_llt_.solve(v.segment(base, block_));
      z.segment(base + block_, block_) = velocity_llt_.solve(v.segment(base + block_, block_));
      z.segment(base + 2 * block_, block_) = pressure_llt_.solve(v.segment(base + 2 * block_, block_));
    }
  }

  Vector operator()(const Vector& v) const {
    Vector z;
    apply(v, z);
    return z;
  }

 private:
  int num_elements_ = 0;
  int block_ = 0;
  Eigen::LLT<Matrix> velocity_llt_, pressure_llt_;
};

inline void identity_preconditioner(const Vector& v, Vector& z) { z = v; }

/// Standard PCG on A x = rhs from a zero initial guess. `action(p, q)` must
/// apply the SPD operator and `precond(r, z)` the SPD preconditioner solve.
/// Stops when ||rhs - A x||_{P^-1} / ||rhs||_{P^-1} <= tol. The optional
/// observer is called with (iteration, current x) after every update.
template <typename Action, typename Precond>
std::pair<Vector, SolveReport> pcg_solve(
    Action&& action, const Vector& rhs, Precond&& precond, double tol = 1e-10,
    int max_iter = 20000, const std::function<void(int, const Vector&)>& on_iterate = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  SolveReport report;
  Vector x = Vector::Zero(rhs.size());
  Vector r = rhs;
  Vector z(rhs.size()), q(rhs.size());
  precond(r, z);
  double rho = r.dot(z);
  if (!std::isfinite(rho)) throw DivergenceError("pcg_solve: preconditioner produced non-finite values");
  const double denom = std::sqrt(std::max(rho, 0.0));
  if (denom == 0.0) {
    report.converged = true;
    report.seconds = elapsed();
    return {std::move(x), report};
  }
  Vector p = z;
  for (int k = 1; k <= max_iter; ++k) {
    action(p, q);
    const double pq = p.dot(q);
    if (!std::isfinite(pq) || pq <= 0.0)
      throw DivergenceError("pcg_solve: operator is not positive definite on the search direction");
    const double alpha = rho / pq;
    x += alpha * p;
    r -= alpha * q;
    precond(r, z);
    const double rho_next = r.dot(z);
    if (!std::isfinite(rho_next)) throw DivergenceError("pcg_solve: non-finite residual");
    report.iterations = k;
    report.final_residual = std::sqrt(std::max(rho_next, 0.0)) / denom;
    if (on_iterate) on_iterate(k, x);
    if (report.final_residual <= tol) {
      report.converged = true;
      break;
    }
    p = z + (rho_next / rho) * p;
    rho = rho_next;
  }
  report.seconds = elapsed();
  return {std::move(x), report};
}

}  // namespace stokesls::solver
