#ifndef CUTSTOKES_TESTS_FIXTURES_HPP
#define CUTSTOKES_TESTS_FIXTURES_HPP

#include "cutstokes/assembly.hpp"
#include "cutstokes/harness.hpp"
#include "cutstokes/solver.hpp"

namespace fixture {

using namespace cutstokes;
using V = Vec2<double>;

/// Mesh, cut and spaces of the disc benchmark at one resolution.
struct DiscSetup {
  BackgroundMesh<double> mesh;
  Disc<double> domain;
  CutTopology<double> topo;
  StokesParams<double> params;
  FeSpace velocity, pressure;

  explicit DiscSetup(int n, StokesParams<double> p = {}, V center = V::Zero())
      : mesh(build_structured_mesh(Box<double>{V(-1.5, -1.5), V(1.5, 1.5)}, n)),
        domain(center, 1.0),
        topo(build_cut_topology(mesh, domain)),
        params(p) {
    std::tie(velocity, pressure) = make_spaces(mesh, topo, params);
  }
};

/// Global dof of mesh vertex v in a scalar map, or -1.
inline Index vertex_dof(const BackgroundMesh<double>& mesh, const DofMap& map, Index v) {
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    if (!map.contains(e)) continue;
    for (int i = 0; i < 3; ++i)
      if (mesh.triangles[e][i] == v) return map.dofs(e)[i];
  }
  return -1;
}

/// Value and gradient of a scalar finite element field at x in element e.
struct PointValue {
  double value;
  V gradient;
};

inline PointValue field_at(const BackgroundMesh<double>& mesh, const DofMap& map, const VectorX<double>& c,
                           Index e, const V& x, Index offset = 0) {
  const LagrangeElement<double> fe(mesh.coords(e), map.order);
  const auto b = fe.eval(x);
  const auto dofs = map.dofs(e);
  PointValue out{0, V::Zero()};
  for (int i = 0; i < fe.n_basis(); ++i) {
    out.value += b.values(i) * c(offset + dofs[i]);
    out.gradient += b.gradients.col(i) * c(offset + dofs[i]);
  }
  return out;
}

inline double sparse_max_abs(const SparseMatrix<double>& m) {
  double r = 0;
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix<double>::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

/// (q, v.nu)_{boundary} by Simpson's rule on every boundary segment; exact
/// for the cubic integrand of a P1 pressure times a P2 velocity.
inline double boundary_pairing(const BackgroundMesh<double>& mesh, const CutTopology<double>& topo,
                               const FeSpace& velocity, const FeSpace& pressure, const VectorX<double>& v,
                               const VectorX<double>& q) {
  double total = 0;
  for (const auto& s : topo.boundary_segments) {
    auto integrand = [&](const V& x) {
      const double qx = field_at(mesh, pressure.map, q, s.element, x).value;
      const double vx = field_at(mesh, velocity.map, v, s.element, x, velocity.offset(0)).value;
      const double vy = field_at(mesh, velocity.map, v, s.element, x, velocity.offset(1)).value;
      return qx * (vx * s.normal.x() + vy * s.normal.y());
    };
    const double len = s.length();
    total += len / 6 * (integrand(s.a) + 4 * integrand(V((s.a + s.b) / 2)) + integrand(s.b));
  }
  return total;
}

/// Flow reproduced exactly by P2/P1 on a polygonal domain:
/// u = (y^2, 0), p = -2x, with body force (-4, 0).
struct PolygonFlow {
  static V velocity(const V& x) { return V(x.y() * x.y(), 0); }
  static Mat2<double> gradient(const V& x) {
    Mat2<double> g;
    g << 0, 2 * x.y(), 0, 0;
    return g;
  }
  static double pressure(const V& x) { return -2 * x.x(); }
  static V force(const V&) { return V(-4, 0); }
  static ExactFields fields() { return {&velocity, &gradient, &pressure}; }
};

/// The benchmark mesh cut by the piecewise-linear interpolant of the disc,
/// used as the exact domain itself so that boundary distances vanish.
struct FittedPolygon {
  BackgroundMesh<double> mesh;
  InterpolatedLevelSet<double> domain;
  CutTopology<double> topo;
  StokesParams<double> params;
  FeSpace velocity, pressure;

  explicit FittedPolygon(int n, StokesParams<double> p = {})
      : mesh(build_structured_mesh(Box<double>{V(-1.5, -1.5), V(1.5, 1.5)}, n)),
        domain(mesh, build_cut_topology(mesh, Disc<double>(V::Zero(), 1.0)).phi_h, 0.5),
        topo(build_cut_topology(mesh, domain)),
        params(p) {
    std::tie(velocity, pressure) = make_spaces(mesh, topo, params);
  }

  SaddleSystem<double> system() const {
    return assemble_system(mesh, topo, velocity, pressure, params, &PolygonFlow::force, &PolygonFlow::velocity,
                           domain);
  }
};

struct FittedErrors {
  double velocity = 0;  // max dof error
  double pressure = 0;  // max dof error after removing the Omega_h means
  double residual = 0;
  double max_rho = 0;
};

inline FittedErrors fitted_polygon_errors(int n) {
  const FittedPolygon fp(n);
  const SaddleSystem<double> sys = fp.system();
  const auto sol = solve(sys);
  const VectorX<double> u_exact = interpolate_vector<double>(fp.mesh, fp.velocity, &PolygonFlow::velocity);
  const VectorX<double> p_exact = interpolate<double>(fp.mesh, fp.pressure.map, &PolygonFlow::pressure);
  const double area = sys.L.sum();
  const double shift = sys.L.dot(sol.p) / area - sys.L.dot(p_exact) / area;
  FittedErrors out;
  out.velocity = (sol.u - u_exact).cwiseAbs().maxCoeff();
  out.pressure = (sol.p - p_exact - VectorX<double>::Constant(sol.p.size(), shift)).cwiseAbs().maxCoeff();
  out.residual = sol.report.residual_rel;
  for (const auto& bp : boundary_quadrature(fp.topo, fp.domain, fp.params.boundary_degree()))
    out.max_rho = std::max(out.max_rho, std::abs(bp.rho));
  return out;
}

}  // namespace fixture

#endif
