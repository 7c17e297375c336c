#include "stokesls/assembly.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "case_helpers.hpp"
#include "stokesls/field.hpp"
#include "stokesls/geometry.hpp"
#include "stokesls/problems.hpp"

using namespace stokesls;
using assembly::Assembler;
using assembly::SpectralField;
using assembly::Term;
using assembly::Var;
using assembly::Vector;

namespace {

SpectralField random_field(int order, int elements, unsigned seed) {
  SpectralField x(order, elements);
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < x.data.size(); ++i) x.data(i) = gauss(rng);
  return x;
}

SpectralField interpolate_case(const problems::CaseData& cd, const geom::Mesh& mesh, int order) {
  return assembly::interpolate(mesh, order, cd.exact.u1, cd.exact.u2, cd.exact.p);
}

// single curvilinear element with Dirichlet sides, for metric-chain oracles
geom::Mesh single_polar_mesh() {
  geom::Mesh mesh;
  mesh.elements.push_back(geom::make_polar_map(1.0, 2.5, 0.2, 1.1));
  for (auto s : {geom::Side::XiMinus, geom::Side::XiPlus, geom::Side::EtaMinus, geom::Side::EtaPlus}) {
    geom::Edge e;
    e.kind = geom::Edge::Kind::Boundary;
    e.elem_a = 0;
    e.side_a = s;
    e.tag = geom::BcTag::Dirichlet;
    mesh.edges.push_back(e);
  }
  mesh.gauge = geom::GaugePoint{};
  return mesh;
}

}  // namespace

TEST(SpectralField, BlockLayoutRoundTrip) {
  SpectralField x(3, 2);
  EXPECT_EQ(x.size(), 3 * 2 * 16);
  x.block(1, Var::U2)(2, 3) = 42.0;
  // element-major, variable-major, lexicographic (xi, eta)
  EXPECT_DOUBLE_EQ(x.data((1 * 3 + 1) * 16 + 2 * 4 + 3), 42.0);
  const SpectralField& cx = x;
  EXPECT_DOUBLE_EQ(cx.block(1, Var::U2)(2, 3), 42.0);
}

TEST(Assembler, ValidatesInputs) {
  const auto mesh = geom::build_case_mesh(1);
  auto cd = testcases::patch_case();
  cd.spec = {0.0, 0.0};
  EXPECT_THROW(Assembler(mesh, cd, 4), std::invalid_argument);
  const Assembler ok(mesh, testcases::patch_case(), 4);
  EXPECT_THROW(ok.normal_action(SpectralField(5, 4)), assembly::LayoutError);
  EXPECT_THROW(ok.normal_action(SpectralField(4, 3)), assembly::LayoutError);
}

TEST(Functional, ZeroDataZeroFieldGivesZero) {
  const auto mesh = geom::build_case_mesh(1);
  const Assembler a(mesh, testcases::zero_case(), 4);
  const auto breakdown = a.evaluate_functional(SpectralField(4, 4));
  EXPECT_DOUBLE_EQ(breakdown.total(), 0.0);
  EXPECT_LT(a.normal_rhs().data.cwiseAbs().maxCoeff(), 1e-300);
}

TEST(Functional, PatchInterpolantIsExactMinimizer) {
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = testcases::patch_case();
  for (int w : {2, 4}) {
    const Assembler a(mesh, cd, w);
    const SpectralField x = interpolate_case(cd, mesh, w);
    EXPECT_LE(a.evaluate_functional(x).total(), 1e-20) << "W=" << w;
    // zero residual at the minimizer: A x = r (roundoff grows with the trace
    // differentiation scale at higher W)
    const Vector defect = a.normal_action(x).data - a.normal_rhs().data;
    EXPECT_LE(defect.cwiseAbs().maxCoeff(), w == 2 ? 1e-12 : 1e-11) << "W=" << w;
  }
}

TEST(Functional, CubicFieldsWithSourceAreExact) {
  // exercises every volume chain (including the H1 continuity data with its
  // reference derivatives) on the affine mesh
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = testcases::cubic_case();
  const Assembler a(mesh, cd, 4);
  const SpectralField x = interpolate_case(cd, mesh, 4);
  EXPECT_LE(a.evaluate_functional(x).total(), 1e-20);
}

TEST(Functional, CaseOneInterpolantResidualIsSpectrallySmall) {
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = problems::make_case(1);
  const Assembler a(mesh, cd, 10);
  const SpectralField x = interpolate_case(cd, mesh, 10);
  EXPECT_LE(a.evaluate_functional(x).total(), 1e-8);
}

TEST(Functional, JumpTermsVanishOnConformingInterpolant) {
  const auto mesh = geom::build_case_mesh(1);
  const Assembler a(mesh, testcases::cubic_case(), 3);
  // any globally-polynomial field of tensor degree <= W is conforming
  const SpectralField x = assembly::interpolate(
      mesh, 3, [](double x1, double y) { return x1 * x1 * y; },
      [](double x1, double y) { return x1 + y * y * y; },
      [](double x1, double y) { return x1 * y * y; });
  EXPECT_LE(a.evaluate_functional(x).jumps, 1e-20);
}

TEST(Functional, InvariantUnderInteriorEdgeRelabeling) {
  const auto cd = testcases::cubic_case();
  const auto mesh = geom::build_case_mesh(1);
  auto swapped = geom::build_case_mesh(1);
  for (auto& e : swapped.edges)
    if (e.kind == geom::Edge::Kind::Interior) {
      std::swap(e.elem_a, e.elem_b);
      std::swap(e.side_a, e.side_b);
      break;
    }
  const Assembler a(mesh, cd, 5), b(swapped, cd, 5);
  const SpectralField x = random_field(5, 4, 11);
  const double ra = a.evaluate_functional(x).total();
  const double rb = b.evaluate_functional(x).total();
  EXPECT_NEAR(ra, rb, 1e-13 * std::abs(ra));
}

TEST(Functional, ContinuityTermDecaysForDivergenceFreeField) {
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = problems::make_case(1);
  double prev = 0.0;
  for (int w : {6, 8}) {
    const Assembler a(mesh, cd, w);
    const double c = a.evaluate_functional(interpolate_case(cd, mesh, w)).continuity;
    if (w > 6) EXPECT_LT(c, 0.1 * prev);
    prev = c;
  }
}

TEST(NormalOperator, SymmetricAndPositive) {
  const auto mesh = geom::build_case_mesh(5);  // includes Neumann blocks
  const Assembler a(mesh, problems::make_case(5), 4);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const SpectralField v = random_field(4, 4, rng());
    const SpectralField w = random_field(4, 4, rng());
    const Vector av = a.normal_action(v).data;
    const Vector aw = a.normal_action(w).data;
    const double vw = av.dot(w.data), wv = aw.dot(v.data);
    EXPECT_NEAR(vw, wv, 1e-10 * std::max(std::abs(vw), 1.0));
    EXPECT_GE(av.dot(v.data), 0.0);
  }
}

TEST(NormalOperator, QuadraticExpansionIdentity) {
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = problems::make_case(1);
  const Assembler a(mesh, cd, 4);
  const Vector r = a.normal_rhs().data;
  const double r0 = a.evaluate_functional(SpectralField(4, 4)).total();
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField x = random_field(4, 4, rng());
    const double lhs = a.evaluate_functional(x).total() - r0;
    const double rhs = a.normal_action(x).data.dot(x.data) - 2.0 * r.dot(x.data);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(std::abs(lhs), 1.0));
  }
}

TEST(NormalOperator, FiniteDifferenceGradient) {
  const auto mesh = geom::build_case_mesh(1);
  const auto cd = problems::make_case(1);
  const Assembler a(mesh, cd, 3);
  SpectralField x = random_field(3, 4, 29);
  const Vector grad = 2.0 * (a.normal_action(x).data - a.normal_rhs().data);
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(x.size()) - 1);
  const double step = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const int j = pick(rng);
    const double keep = x.data(j);
    x.data(j) = keep + step;
    const double up = a.evaluate_functional(x).total();
    x.data(j) = keep - step;
    const double dn = a.evaluate_functional(x).total();
    x.data(j) = keep;
    const double fd = (up - dn) / (2.0 * step);
    EXPECT_NEAR(fd, grad(j), 1e-5 * std::max(std::abs(grad(j)), 1.0));
  }
}

TEST(NormalOperator, AdjointConsistencyPerTermFamily) {
  struct Setup {
    int case_id;
    int order;
  };
  for (const auto [case_id, order] : {Setup{1, 4}, Setup{3, 5}, Setup{5, 4}, Setup{6, 3}}) {
    const auto mesh = geom::build_case_mesh(case_id);
    const Assembler a(mesh, problems::make_case(case_id), order);
    std::mt19937 rng(1000 + case_id);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const SpectralField v = random_field(order, mesh.num_elements(), rng());
    Vector w(a.residual_size());
    for (int i = 0; i < w.size(); ++i) w(i) = gauss(rng);
    const Vector fv = a.forward(v);
    for (Term term : {Term::Momentum, Term::Continuity, Term::JumpValue, Term::JumpDerivative,
                      Term::JumpPressure, Term::DirichletTrace, Term::NeumannTrace, Term::Gauge}) {
      Vector masked = Vector::Zero(a.residual_size());
      bool present = false;
      for (const auto& b : a.residual_blocks())
        if (b.term == term) {
          masked.segment(b.offset, b.size) = w.segment(b.offset, b.size);
          present = true;
        }
      if (!present) continue;
      const double lhs = fv.dot(masked);
      const double rhs = a.adjoint(masked).data.dot(v.data);
      EXPECT_NEAR(lhs, rhs, 1e-11 * v.data.norm() * masked.norm())
          << "case " << case_id << " term " << static_cast<int>(term);
    }
  }
}

// ---------------------------------------------------------------------------
// Curvilinear metric oracles: compare residual fields on a polar element
// against values assembled independently from the map jets.
// ---------------------------------------------------------------------------

TEST(CurvilinearChains, MomentumAndDivergenceValuesMatchAnalytic) {
  const auto mesh = single_polar_mesh();
  auto cd = testcases::zero_case();
  cd.spec = {1.3, 0.7};
  const int w = 12;
  const Assembler a(mesh, cd, w);
  // physical polynomial fields
  const SpectralField x = assembly::interpolate(
      mesh, w, [](double x1, double y) { return x1 * x1 * y; },
      [](double x1, double y) { return x1 * y * y; },
      [](double x1, double y) { return x1 * x1 * x1 - y; });
  const Vector r = a.forward(x);
  const auto quad = basis::gauss_nodes(w + 3);
  const int nq = quad.size();
  int mom1_off = -1, mom2_off = -1, div_off = -1;
  int seen = 0;
  for (const auto& b : a.residual_blocks()) {
    if (b.term == Term::Momentum && seen == 0) mom1_off = b.offset, ++seen;
    else if (b.term == Term::Momentum && seen == 1) mom2_off = b.offset, ++seen;
    else if (b.term == Term::Continuity && div_off < 0) div_off = b.offset;
  }
  for (int qa = 0; qa < nq; ++qa)
    for (int qb = 0; qb < nq; ++qb) {
      const auto jet = mesh.elements[0].at(quad.nodes(qa), quad.nodes(qb));
      const double sj = std::sqrt(jet.jacobian());
      const double px = jet.x.x, py = jet.x.y;
      // L(u, p) = alpha u - nu lap u + grad p for the fields above
      const double l1 = 1.3 * px * px * py - 0.7 * 2.0 * py + 3.0 * px * px;
      const double l2 = 1.3 * px * py * py - 0.7 * 2.0 * px - 1.0;
      const double div = -(2.0 * px * py + 2.0 * px * py);
      const int k = qa * nq + qb;
      EXPECT_NEAR(r(mom1_off + k), sj * l1, 1e-6);
      EXPECT_NEAR(r(mom2_off + k), sj * l2, 1e-6);
      EXPECT_NEAR(r(div_off + k), sj * div, 1e-6);
    }
}

TEST(CurvilinearChains, ContinuityDerivativeFieldsMatchFiniteDifferences) {
  const auto mesh = single_polar_mesh();
  const int w = 8;
  const int n = w + 1;
  const Assembler a(mesh, testcases::zero_case(), w);
  // fields given directly in reference coordinates: u1 = xi^2 eta, u2 = xi eta^3
  SpectralField x(w, 1);
  const auto gll = basis::gll_nodes(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      x.block(0, Var::U1)(i, j) = gll.nodes(i) * gll.nodes(i) * gll.nodes(j);
      x.block(0, Var::U2)(i, j) = gll.nodes(i) * std::pow(gll.nodes(j), 3);
    }
  // sqrt(J)-scaled divergence reconstructed from the map jets alone
  const auto t_of = [&](double xi, double eta) {
    const auto jet = mesh.elements[0].at(xi, eta);
    const double sj = std::sqrt(jet.jacobian());
    const double q11 = jet.d_eta.y / sj, q12 = -jet.d_xi.y / sj;
    const double q21 = -jet.d_eta.x / sj, q22 = jet.d_xi.x / sj;
    const double u1x = 2.0 * xi * eta, u1e = xi * xi;
    const double u2x = eta * eta * eta, u2e = 3.0 * xi * eta * eta;
    return -(q11 * u1x + q12 * u1e + q21 * u2x + q22 * u2e);
  };
  const Vector r = a.forward(x);
  int div_off = -1;
  int idx = 0;
  std::array<int, 3> cont_offsets{};
  for (const auto& b : a.residual_blocks())
    if (b.term == Term::Continuity && idx < 3) cont_offsets[idx++] = b.offset;
  div_off = cont_offsets[0];
  const auto quad = basis::gauss_nodes(w + 3);
  const int nq = quad.size();
  const double h = 1e-6;
  for (int qa = 0; qa < nq; ++qa)
    for (int qb = 0; qb < nq; ++qb) {
      const double xi = quad.nodes(qa), eta = quad.nodes(qb);
      const int k = qa * nq + qb;
      EXPECT_NEAR(r(div_off + k), t_of(xi, eta), 1e-12);
      const double tx = (t_of(xi + h, eta) - t_of(xi - h, eta)) / (2.0 * h);
      const double te = (t_of(xi, eta + h) - t_of(xi, eta - h)) / (2.0 * h);
      EXPECT_NEAR(r(cont_offsets[1] + k), tx, 1e-6);
      EXPECT_NEAR(r(cont_offsets[2] + k), te, 1e-6);
    }
}

TEST(NeumannTrace, ConstantPressureAndShearFlow) {
  const auto mesh5 = geom::build_case_mesh(5);
  const Assembler a5(mesh5, problems::make_case(5), 4);
  int neumann_edge = -1;
  for (std::size_t e = 0; e < mesh5.edges.size(); ++e)
    if (mesh5.edges[e].kind == geom::Edge::Kind::Boundary &&
        mesh5.edges[e].tag == geom::BcTag::NeumannA) {
      neumann_edge = static_cast<int>(e);
      break;
    }
  ASSERT_GE(neumann_edge, 0);

  // u = 0, p = 1: gamma_N = -p n = (0, 1) on y = 0
  SpectralField x(4, 4);
  for (int l = 0; l < 4; ++l) x.block(l, Var::P).setOnes();
  auto [g1, g2] = a5.neumann_trace(x, neumann_edge);
  EXPECT_LT((g1.array().abs()).maxCoeff(), 1e-14);
  EXPECT_LT((g2.array() - 1.0).abs().maxCoeff(), 1e-14);

  // u = (y, 0), p = 0: du/dn = -du/dy = (-1, 0)
  const SpectralField shear = assembly::interpolate(
      mesh5, 4, [](double, double y) { return y; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; });
  std::tie(g1, g2) = a5.neumann_trace(shear, neumann_edge);
  EXPECT_LT((g1.array() + 1.0).abs().maxCoeff(), 1e-13);
  EXPECT_LT(g2.cwiseAbs().maxCoeff(), 1e-13);

  // Dirichlet edge is a contract violation
  int dirichlet_edge = -1;
  for (std::size_t e = 0; e < mesh5.edges.size(); ++e)
    if (mesh5.edges[e].kind == geom::Edge::Kind::Boundary &&
        mesh5.edges[e].tag == geom::BcTag::Dirichlet)
      dirichlet_edge = static_cast<int>(e);
  EXPECT_THROW(a5.neumann_trace(x, dirichlet_edge), std::logic_error);
}

TEST(NeumannTrace, FormBShearOnAnnulusAxisEdge) {
  // u = (y, 0) composed with the polar map is not polynomial, so compare at
  // an order where the interpolation error is negligible
  const auto mesh6 = geom::build_case_mesh(6);
  const int w = 12;
  const Assembler a6(mesh6, problems::make_case(6), w);
  int edge = -1;
  for (std::size_t e = 0; e < mesh6.edges.size(); ++e)
    if (mesh6.edges[e].kind == geom::Edge::Kind::Boundary &&
        mesh6.edges[e].tag == geom::BcTag::NeumannB)
      edge = static_cast<int>(e);
  ASSERT_GE(edge, 0);
  const SpectralField shear = assembly::interpolate(
      mesh6, w, [](double, double y) { return y; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; });
  const auto [g1, g2] = a6.neumann_trace(shear, edge);
  // ((grad u + grad u^T) - p I) n with n = (0,-1): (-1, 0)
  EXPECT_LT((g1.array() + 1.0).abs().maxCoeff(), 1e-9);
  EXPECT_LT(g2.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NeumannTrace, MatchesCaseFiveDataAtHighOrder) {
  const auto mesh = geom::build_case_mesh(5);
  const auto cd = problems::make_case(5);
  const int w = 12;
  const Assembler a(mesh, cd, w);
  const SpectralField x = interpolate_case(cd, mesh, w);
  const auto gll = basis::gll_nodes(w + 1);
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    if (mesh.edges[e].kind != geom::Edge::Kind::Boundary ||
        mesh.edges[e].tag != geom::BcTag::NeumannA)
      continue;
    const auto [g1, g2] = a.neumann_trace(x, static_cast<int>(e));
    const auto& edge = mesh.edges[e];
    for (int k = 0; k <= w; ++k) {
      const auto [xi, eta] = geom::side_point(edge.side_a, gll.nodes(k));
      const geom::Vec2 pt = mesh.elements[edge.elem_a].point(xi, eta);
      const geom::Vec2 nrm = geom::outward_normal(mesh.elements[edge.elem_a], edge.side_a,
                                                  gll.nodes(k));
      const auto [d1, d2] = problems::neumann_data(cd, geom::BcTag::NeumannA, pt, nrm);
      EXPECT_NEAR(g1(k), d1, 1e-6);
      EXPECT_NEAR(g2(k), d2, 1e-6);
      // the paper's spot value at (0.5, 0): first component equals -pi
      if (std::abs(pt.x - 0.5) < 1e-14 && std::abs(pt.y) < 1e-14)
        EXPECT_NEAR(g1(k), -M_PI, 1e-8);
    }
  }
}
