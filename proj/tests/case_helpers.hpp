#pragma once

// Hand-built CaseData fixtures shared by the test suites. The data fields are
// derived by hand from the stated exact solutions, like the built-in cases.

#include "stokesls/problems.hpp"

namespace stokesls::testcases {

inline problems::ScalarFn zero() {
  return [](double, double) { return 0.0; };
}

// u = (y, x), p = 0, alpha = nu = 1: f = u, h = 0. Exactly representable at
// W >= 1, so every residual vanishes identically at the interpolant.
inline problems::CaseData patch_case() {
  problems::CaseData cd;
  cd.id = 0;
  cd.spec = {1.0, 1.0};
  cd.param = 1.0;
  auto& e = cd.exact;
  e.u1 = [](double, double y) { return y; };
  e.u2 = [](double x, double) { return x; };
  e.p = zero();
  e.u1_x1 = zero();
  e.u1_x2 = [](double, double) { return 1.0; };
  e.u2_x1 = [](double, double) { return 1.0; };
  e.u2_x2 = zero();
  cd.f1 = e.u1;
  cd.f2 = e.u2;
  cd.h = zero();
  cd.h_x1 = zero();
  cd.h_x2 = zero();
  cd.description = "patch fields u = (y, x), p = 0";
  return cd;
}

// tensor-cubic fields with a nonzero continuity source:
//   u1 = x^3 - 3 x y^2, u2 = y^3, p = x^2 y, alpha = 2, nu = 1/2
//   => f = (2 u1 + 2 x y, 2 u2 - 3 y + x^2), h = -3 x^2
inline problems::CaseData cubic_case() {
  problems::CaseData cd;
  cd.id = 0;
  cd.spec = {2.0, 0.5};
  cd.param = 0.5;
  auto& e = cd.exact;
  e.u1 = [](double x, double y) { return x * x * x - 3.0 * x * y * y; };
  e.u2 = [](double, double y) { return y * y * y; };
  e.p = [](double x, double y) { return x * x * y; };
  e.u1_x1 = [](double x, double y) { return 3.0 * x * x - 3.0 * y * y; };
  e.u1_x2 = [](double x, double y) { return -6.0 * x * y; };
  e.u2_x1 = zero();
  e.u2_x2 = [](double, double y) { return 3.0 * y * y; };
  cd.f1 = [](double x, double y) { return 2.0 * (x * x * x - 3.0 * x * y * y) + 2.0 * x * y; };
  cd.f2 = [](double x, double y) { return 2.0 * y * y * y - 3.0 * y + x * x; };
  cd.h = [](double x, double) { return -3.0 * x * x; };
  cd.h_x1 = [](double x, double) { return -6.0 * x; };
  cd.h_x2 = zero();
  cd.description = "tensor-cubic fields with nonzero h";
  return cd;
}

inline problems::CaseData zero_case() {
  problems::CaseData cd;
  cd.id = 0;
  cd.spec = {1.0, 1.0};
  cd.param = 1.0;
  auto& e = cd.exact;
  e.u1 = e.u2 = e.p = zero();
  e.u1_x1 = e.u1_x2 = e.u2_x1 = e.u2_x2 = zero();
  cd.f1 = cd.f2 = zero();
  cd.h = cd.h_x1 = cd.h_x2 = zero();
  cd.description = "all-zero data";
  return cd;
}

}  // namespace stokesls::testcases
