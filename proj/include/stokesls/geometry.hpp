#pragma once

// Element maps from the reference square S = (-1,1)^2 onto quadrilateral
// (possibly curvilinear) elements, with analytic derivatives through second
// order, plus the built-in benchmark meshes. Maps and meshes are immutable
// after construction.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stokesls::geom {

struct InvalidGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Position and derivatives of a coordinate map at one reference point.
struct MapJet {
  Vec2 x;                          // physical position
  Vec2 d_xi, d_eta;                // first derivatives
  Vec2 d_xixi, d_xieta, d_etaeta;  // second derivatives
  double jacobian() const { return d_xi.x * d_eta.y - d_eta.x * d_xi.y; }
};

enum class MapKind { Affine, PolarAnnulus, Blending };

class ElementMap {
 public:
  ElementMap() = default;
  ElementMap(MapKind kind, std::function<MapJet(double, double)> jet)
      : kind_(kind), jet_(std::move(jet)) {}

  MapJet at(double xi, double eta) const { return jet_(xi, eta); }
  Vec2 point(double xi, double eta) const { return jet_(xi, eta).x; }
  MapKind kind() const { return kind_; }

 private:
  MapKind kind_ = MapKind::Affine;
  std::function<MapJet(double, double)> jet_;
};

// Parametric side curve on t in [-1,1] with two derivatives.
struct Curve {
  std::function<Vec2(double)> value;
  std::function<Vec2(double)> d1;
  std::function<Vec2(double)> d2;
};

inline Curve line_segment(Vec2 a, Vec2 b) {
  const Vec2 half = 0.5 * (b - a);
  return {[=](double t) { return a + (0.5 * (t + 1.0)) * (b - a); },
          [=](double) { return half; },
          [](double) { return Vec2{0.0, 0.0}; }};
}

inline Curve circular_arc(Vec2 center, double radius, double angle0, double angle1) {
  const double mid = 0.5 * (angle0 + angle1);
  const double half = 0.5 * (angle1 - angle0);
  return {[=](double t) {
            const double a = mid + half * t;
            return center + radius * Vec2{std::cos(a), std::sin(a)};
          },
          [=](double t) {
            const double a = mid + half * t;
            return radius * half * Vec2{-std::sin(a), std::cos(a)};
          },
          [=](double t) {
            const double a = mid + half * t;
            return radius * half * half * Vec2{-std::cos(a), -std::sin(a)};
          }};
}

/// Bilinear map of a convex quadrilateral; corners counterclockwise.
inline ElementMap make_affine_map(const std::array<Vec2, 4>& c) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 e0 = c[(i + 1) % 4] - c[i];
    const Vec2 e1 = c[(i + 2) % 4] - c[(i + 1) % 4];
    const double cross = e0.x * e1.y - e0.y * e1.x;
    if (!(cross > 0.0))
      throw InvalidGeometryError("make_affine_map: corners must be convex counterclockwise");
  }
  return {MapKind::Affine, [c](double xi, double eta) {
            MapJet j;
            const double sm = 1.0 - xi, sp = 1.0 + xi;
            const double tm = 1.0 - eta, tp = 1.0 + eta;
            j.x = 0.25 * (sm * tm * c[0] + sp * tm * c[1] + sp * tp * c[2] + sm * tp * c[3]);
            j.d_xi = 0.25 * (tm * (c[1] - c[0]) + tp * (c[2] - c[3]));
            j.d_eta = 0.25 * (sm * (c[3] - c[0]) + sp * (c[2] - c[1]));
            j.d_xieta = 0.25 * ((c[0] - c[1]) + (c[2] - c[3]));
            return j;
          }};
}

/// Annulus sector in polar coordinates, r and theta linear in (xi, eta).
inline ElementMap make_polar_map(double r_in, double r_out, double theta0, double theta1) {
  if (!(0.0 < r_in && r_in < r_out) || !(theta0 < theta1))
    throw InvalidGeometryError("make_polar_map: need 0 < r_in < r_out and theta0 < theta1");
  const double rm = 0.5 * (r_in + r_out), rh = 0.5 * (r_out - r_in);
  const double tm = 0.5 * (theta0 + theta1), th = 0.5 * (theta1 - theta0);
  return {MapKind::PolarAnnulus, [=](double xi, double eta) {
            const double r = rm + rh * xi;
            const double a = tm + th * eta;
            const double ca = std::cos(a), sa = std::sin(a);
            MapJet j;
            j.x = {r * ca, r * sa};
            j.d_xi = {rh * ca, rh * sa};
            j.d_eta = {-r * th * sa, r * th * ca};
            j.d_xixi = {0.0, 0.0};
            j.d_xieta = {-rh * th * sa, rh * th * ca};
            j.d_etaeta = {-r * th * th * ca, -r * th * th * sa};
            return j;
          }};
}

/// Gordon-Hall transfinite interpolant of four side curves.
/// Sides: [0] eta=-1 (param xi), [1] xi=+1 (param eta), [2] eta=+1 (param xi),
/// [3] xi=-1 (param eta). Shared corners must match within 1e-12.
inline ElementMap make_blending_map(const std::array<Curve, 4>& s) {
  const Curve& bottom = s[0];
  const Curve& right = s[1];
  const Curve& top = s[2];
  const Curve& left = s[3];
  const Vec2 a = bottom.value(-1.0), b = bottom.value(1.0);
  const Vec2 c = top.value(1.0), d = top.value(-1.0);
  const double mismatch =
      std::max(std::max(norm(left.value(-1.0) - a), norm(right.value(-1.0) - b)),
               std::max(norm(right.value(1.0) - c), norm(left.value(1.0) - d)));
  if (mismatch > 1e-12)
    throw InvalidGeometryError("make_blending_map: side curves do not meet at corners");
  return {MapKind::Blending, [=](double xi, double eta) {
            const double sm = 0.5 * (1.0 - xi), sp = 0.5 * (1.0 + xi);
            const double tm = 0.5 * (1.0 - eta), tp = 0.5 * (1.0 + eta);
            MapJet j;
            const Vec2 bo = bottom.value(xi), to = top.value(xi);
            const Vec2 le = left.value(eta), ri = right.value(eta);
            const Vec2 bo1 = bottom.d1(xi), to1 = top.d1(xi);
            const Vec2 le1 = left.d1(eta), ri1 = right.d1(eta);
            j.x = tm * bo + tp * to + sm * le + sp * ri -
                  (sm * tm * a + sp * tm * b + sp * tp * c + sm * tp * d);
            j.d_xi = tm * bo1 + tp * to1 + 0.5 * (ri - le) - (0.5 * tm) * (b - a) -
                     (0.5 * tp) * (c - d);
            j.d_eta = 0.5 * (to - bo) + sm * le1 + sp * ri1 - (0.5 * sm) * (d - a) -
                      (0.5 * sp) * (c - b);
            j.d_xixi = tm * bottom.d2(xi) + tp * top.d2(xi);
            j.d_etaeta = sm * left.d2(eta) + sp * right.d2(eta);
            j.d_xieta = 0.5 * (to1 - bo1) + 0.5 * (ri1 - le1) - 0.25 * ((a - b) + (c - d));
            return j;
          }};
}

enum class Side { XiMinus = 0, XiPlus = 1, EtaMinus = 2, EtaPlus = 3 };

/// Reference coordinates of a point on a side, trace parameter t in [-1,1].
inline std::pair<double, double> side_point(Side s, double t) {
  switch (s) {
    case Side::XiMinus: return {-1.0, t};
    case Side::XiPlus: return {1.0, t};
    case Side::EtaMinus: return {t, -1.0};
    default: return {t, 1.0};
  }
}

enum class BcTag { Dirichlet, NeumannA, NeumannB };

struct Edge {
  enum class Kind { Interior, Boundary };
  Kind kind = Kind::Boundary;
  // first (or only) side
  int elem_a = -1;
  Side side_a = Side::XiMinus;
  // interior edges only
  int elem_b = -1;
  Side side_b = Side::XiMinus;
  bool reversed = false;  // true: trace of b runs opposite to trace of a
  // boundary edges only
  BcTag tag = BcTag::Dirichlet;
};

struct GaugePoint {
  int element = 0;
  double xi = -1.0;
  double eta = -1.0;
};

struct Mesh {
  std::vector<ElementMap> elements;
  std::vector<Edge> edges;
  // pressure pin for pure-Dirichlet problems; absent when Neumann edges exist
  std::optional<GaugePoint> gauge;

  int num_elements() const { return static_cast<int>(elements.size()); }
  bool has_neumann() const {
    for (const auto& e : edges)
      if (e.kind == Edge::Kind::Boundary && e.tag != BcTag::Dirichlet) return true;
    return false;
  }
};

namespace detail {

// Interior edge with orientation determined by matching the two traces.
inline Edge match_interior_edge(const std::vector<ElementMap>& elems, int ea, Side sa, int eb,
                                Side sb) {
  double worst_fwd = 0.0, worst_rev = 0.0;
  for (double t : {-1.0, -0.37, 0.0, 0.58, 1.0}) {
    const auto [xa, ya] = side_point(sa, t);
    const auto [xbf, ybf] = side_point(sb, t);
    const auto [xbr, ybr] = side_point(sb, -t);
    const Vec2 pa = elems[ea].point(xa, ya);
    worst_fwd = std::max(worst_fwd, norm(pa - elems[eb].point(xbf, ybf)));
    worst_rev = std::max(worst_rev, norm(pa - elems[eb].point(xbr, ybr)));
  }
  Edge e;
  e.kind = Edge::Kind::Interior;
  e.elem_a = ea;
  e.side_a = sa;
  e.elem_b = eb;
  e.side_b = sb;
  if (worst_fwd <= 1e-12)
    e.reversed = false;
  else if (worst_rev <= 1e-12)
    e.reversed = true;
  else
    throw InvalidGeometryError("interior edge traces do not coincide");
  return e;
}

inline Edge boundary_edge(int elem, Side side, BcTag tag) {
  Edge e;
  e.kind = Edge::Kind::Boundary;
  e.elem_a = elem;
  e.side_a = side;
  e.tag = tag;
  return e;
}

// 2x2 tensor mesh of an axis-aligned rectangle, elements row-major from the
// lower-left corner. bottom_tag applies to the two edges along y = y0.
inline Mesh grid_mesh_2x2(double x0, double x1, double y0, double y1, BcTag bottom_tag) {
  Mesh mesh;
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  const auto rect = [](double ax, double bx, double ay, double by) {
    return make_affine_map({Vec2{ax, ay}, {bx, ay}, {bx, by}, {ax, by}});
  };
  mesh.elements.push_back(rect(x0, xm, y0, ym));
  mesh.elements.push_back(rect(xm, x1, y0, ym));
  mesh.elements.push_back(rect(x0, xm, ym, y1));
  mesh.elements.push_back(rect(xm, x1, ym, y1));
  auto& el = mesh.elements;
  mesh.edges.push_back(match_interior_edge(el, 0, Side::XiPlus, 1, Side::XiMinus));
  mesh.edges.push_back(match_interior_edge(el, 2, Side::XiPlus, 3, Side::XiMinus));
  mesh.edges.push_back(match_interior_edge(el, 0, Side::EtaPlus, 2, Side::EtaMinus));
  mesh.edges.push_back(match_interior_edge(el, 1, Side::EtaPlus, 3, Side::EtaMinus));
  mesh.edges.push_back(boundary_edge(0, Side::EtaMinus, bottom_tag));
  mesh.edges.push_back(boundary_edge(1, Side::EtaMinus, bottom_tag));
  mesh.edges.push_back(boundary_edge(1, Side::XiPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(3, Side::XiPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(3, Side::EtaPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(2, Side::EtaPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(2, Side::XiMinus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(0, Side::XiMinus, BcTag::Dirichlet));
  if (bottom_tag == BcTag::Dirichlet) mesh.gauge = GaugePoint{};
  return mesh;
}

// Quarter annulus 1 <= r <= 4, 0 <= theta <= pi/2, split at r = 2 and
// theta = pi/4. x_axis_tag applies to the two edges along theta = 0.
inline Mesh annulus_mesh(BcTag x_axis_tag) {
  Mesh mesh;
  const double pi = M_PI;
  mesh.elements.push_back(make_polar_map(1.0, 2.0, 0.0, pi / 4));
  mesh.elements.push_back(make_polar_map(2.0, 4.0, 0.0, pi / 4));
  mesh.elements.push_back(make_polar_map(1.0, 2.0, pi / 4, pi / 2));
  mesh.elements.push_back(make_polar_map(2.0, 4.0, pi / 4, pi / 2));
  auto& el = mesh.elements;
  mesh.edges.push_back(match_interior_edge(el, 0, Side::XiPlus, 1, Side::XiMinus));
  mesh.edges.push_back(match_interior_edge(el, 2, Side::XiPlus, 3, Side::XiMinus));
  mesh.edges.push_back(match_interior_edge(el, 0, Side::EtaPlus, 2, Side::EtaMinus));
  mesh.edges.push_back(match_interior_edge(el, 1, Side::EtaPlus, 3, Side::EtaMinus));
  mesh.edges.push_back(boundary_edge(0, Side::EtaMinus, x_axis_tag));
  mesh.edges.push_back(boundary_edge(1, Side::EtaMinus, x_axis_tag));
  mesh.edges.push_back(boundary_edge(0, Side::XiMinus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(2, Side::XiMinus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(1, Side::XiPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(3, Side::XiPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(2, Side::EtaPlus, BcTag::Dirichlet));
  mesh.edges.push_back(boundary_edge(3, Side::EtaPlus, BcTag::Dirichlet));
  if (x_axis_tag == BcTag::Dirichlet) mesh.gauge = GaugePoint{};
  return mesh;
}

// Unit square with a circular hole (center (.5,.5), radius .2), four blending
// elements cut along the square diagonals. Element k has the k-th square side
// at eta=-1 and the facing quarter arc at eta=+1; ordering bottom, right,
// top, left.
inline Mesh square_with_hole_mesh() {
  Mesh mesh;
  const Vec2 center{0.5, 0.5};
  const double radius = 0.2;
  const std::array<Vec2, 4> sq{Vec2{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  const auto circle_pt = [&](double a) {
    return center + radius * Vec2{std::cos(a), std::sin(a)};
  };
  for (int k = 0; k < 4; ++k) {
    const Vec2 c0 = sq[k], c1 = sq[(k + 1) % 4];
    // arc endpoints face the square corners along the diagonals
    const double a0 = 5 * M_PI / 4 + k * M_PI / 2;
    const double a1 = a0 + M_PI / 2;
    const std::array<Curve, 4> sides{
        line_segment(c0, c1),                       // outer square side
        line_segment(c1, circle_pt(a1)),            // diagonal, xi=+1
        circular_arc(center, radius, a0, a1),       // inner arc
        line_segment(c0, circle_pt(a0)),            // diagonal, xi=-1
    };
    mesh.elements.push_back(make_blending_map(sides));
  }
  auto& el = mesh.elements;
  for (int k = 0; k < 4; ++k)
    mesh.edges.push_back(match_interior_edge(el, k, Side::XiPlus, (k + 1) % 4, Side::XiMinus));
  for (int k = 0; k < 4; ++k) mesh.edges.push_back(boundary_edge(k, Side::EtaMinus, BcTag::Dirichlet));
  for (int k = 0; k < 4; ++k) mesh.edges.push_back(boundary_edge(k, Side::EtaPlus, BcTag::Dirichlet));
  mesh.gauge = GaugePoint{};
  return mesh;
}

}  // namespace detail

/// Benchmark meshes for the six built-in cases.
inline Mesh build_case_mesh(int case_id) {
  switch (case_id) {
    case 1: return detail::grid_mesh_2x2(0.0, 1.0, 0.0, 1.0, BcTag::Dirichlet);
    case 2: return detail::grid_mesh_2x2(-0.5, 0.5, 0.0, 1.0, BcTag::Dirichlet);
    case 3: return detail::annulus_mesh(BcTag::Dirichlet);
    case 4: return detail::square_with_hole_mesh();
    case 5: return detail::grid_mesh_2x2(0.0, 1.0, 0.0, 1.0, BcTag::NeumannA);
    case 6: return detail::annulus_mesh(BcTag::NeumannB);
    default: throw std::invalid_argument("build_case_mesh: case_id must be 1..6");
  }
}

/// Outward unit normal of an element side at trace parameter t.
inline Vec2 outward_normal(const ElementMap& map, Side side, double t) {
  const auto [xi, eta] = side_point(side, t);
  const MapJet j = map.at(xi, eta);
  Vec2 n;
  switch (side) {
    case Side::XiMinus: n = {-j.d_eta.y, j.d_eta.x}; break;   // -grad xi direction
    case Side::XiPlus: n = {j.d_eta.y, -j.d_eta.x}; break;
    case Side::EtaMinus: n = {j.d_xi.y, -j.d_xi.x}; break;
    case Side::EtaPlus: n = {-j.d_xi.y, j.d_xi.x}; break;
  }
  const double len = norm(n);
  return {n.x / len, n.y / len};
}

}  // namespace stokesls::geom
