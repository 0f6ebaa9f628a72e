#ifndef CUTSTOKES_CUT_TOPOLOGY_HPP
#define CUTSTOKES_CUT_TOPOLOGY_HPP

#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include "cutstokes/common.hpp"
#include "cutstokes/levelset.hpp"
#include "cutstokes/mesh.hpp"
#include "cutstokes/quadrature.hpp"

namespace cutstokes {

enum class ElementTag : char { inside, outside, cut };

inline const char* to_string(ElementTag tag) {
  switch (tag) {
    case ElementTag::inside: return "INSIDE";
    case ElementTag::outside: return "OUTSIDE";
    case ElementTag::cut: return "CUT";
  }
  return "?";
}

/// Straight piece of the discrete boundary inside one CUT element, with
/// the outward normal of the discrete domain.
template <typename Scalar>
struct BoundarySegment {
  Index element;
  Vec2<Scalar> a;
  Vec2<Scalar> b;
  Vec2<Scalar> normal;

  Scalar length() const { return (b - a).norm(); }
};

template <typename Scalar>
struct CutTopology {
  VectorX<Scalar> phi_h;  // nodal level-set values after snapping
  std::vector<ElementTag> classification;
  std::vector<Index> active_elements;
  std::vector<char> active;    // per element
  std::vector<char> in_strip;  // OUTSIDE but intersecting the exact domain
  std::vector<BoundarySegment<Scalar>> boundary_segments;
  std::vector<Index> ghost_faces;
  Scalar h = 0;

  Eigen::Matrix<Scalar, 3, 1> element_phi(const BackgroundMesh<Scalar>& mesh, Index e) const {
    const auto& t = mesh.triangles[e];
    return {phi_h(t[0]), phi_h(t[1]), phi_h(t[2])};
  }

  /// Elements carrying a volume contribution (INSIDE or CUT).
  bool integrates(Index e) const { return classification[e] != ElementTag::outside; }
};

/// Nodal values of the level set at the mesh vertices.
template <typename Scalar, typename Domain>
  requires ImplicitDomain<Domain, Scalar>
VectorX<Scalar> interpolate_levelset(const BackgroundMesh<Scalar>& mesh, const Domain& domain) {
  VectorX<Scalar> phi(mesh.n_vertices());
  for (Index v = 0; v < mesh.n_vertices(); ++v) phi(v) = domain.signed_distance(mesh.vertices[v]);
  return phi;
}

/// Moves nodal values with |phi| < 1e-12 h to +1e-12 h so that no vertex
/// lies exactly on the discrete boundary.
template <typename Scalar>
void snap_nodal_values(VectorX<Scalar>& phi, Scalar h) {
  const Scalar eps = Scalar(1e-12) * h;
  for (Index i = 0; i < phi.size(); ++i)
    if (std::abs(phi(i)) < eps) phi(i) = eps;
}

/// Tag of a triangle from (already snapped) nodal values.
template <typename Scalar>
ElementTag classify(const Eigen::Matrix<Scalar, 3, 1>& phi) {
  if ((phi.array() < 0).all()) return ElementTag::inside;
  if ((phi.array() > 0).all()) return ElementTag::outside;
  return ElementTag::cut;
}

template <typename Scalar>
std::vector<ElementTag> classify_elements(const BackgroundMesh<Scalar>& mesh, const VectorX<Scalar>& phi) {
  std::vector<ElementTag> tags(mesh.n_elements());
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    tags[e] = classify(Eigen::Matrix<Scalar, 3, 1>(phi(t[0]), phi(t[1]), phi(t[2])));
  }
  return tags;
}

/// Chord where the linear interpolant vanishes inside one triangle, with
/// unit normal along the interpolant's gradient.
template <typename Scalar>
BoundarySegment<Scalar> cut_segment(const TriangleCoords<Scalar>& tri, const Eigen::Matrix<Scalar, 3, 1>& phi,
                                    Index element = -1) {
  Mat2<Scalar> jac;
  jac << tri.col(1) - tri.col(0), tri.col(2) - tri.col(0);
  const Vec2<Scalar> grad =
      jac.transpose().inverse() * Vec2<Scalar>(phi(1) - phi(0), phi(2) - phi(0));
  const Scalar gnorm = grad.norm();
  if (!(gnorm > Scalar(0))) throw MeshError("cut_segment: vanishing level-set gradient on a cut element");

  std::vector<Vec2<Scalar>> ends;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    if ((phi(i) < 0) != (phi(j) < 0))
      ends.push_back(edge_crossing<Scalar>(tri.col(i), phi(i), tri.col(j), phi(j)));
  }
  if (ends.size() != 2) throw MeshError("cut_segment: element is not cut by the level set");
  return {element, ends[0], ends[1], grad / gnorm};
}

template <typename Scalar>
std::vector<BoundarySegment<Scalar>> extract_boundary_segments(const BackgroundMesh<Scalar>& mesh,
                                                               const VectorX<Scalar>& phi,
                                                               const std::vector<ElementTag>& tags) {
  std::vector<BoundarySegment<Scalar>> segments;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    if (tags[e] != ElementTag::cut) continue;
    const auto& t = mesh.triangles[e];
    segments.push_back(cut_segment<Scalar>(mesh.coords(e), {phi(t[0]), phi(t[1]), phi(t[2])}, e));
  }
  return segments;
}

/// Fills `active`, `active_elements`, `in_strip` and `ghost_faces`.
///
/// OUTSIDE elements join the active mesh when the exact level set is
/// negative at one of their degree-4 quadrature points or vertices. Ghost
/// faces are the interior faces of the active mesh touching a CUT element
/// or a strip element.
template <typename Scalar, typename Domain>
  requires ImplicitDomain<Domain, Scalar>
void select_active_and_ghost(const BackgroundMesh<Scalar>& mesh, const Domain& domain, CutTopology<Scalar>& topo) {
  const Index ne = mesh.n_elements();
  topo.active.assign(ne, 0);
  topo.in_strip.assign(ne, 0);
  topo.active_elements.clear();
  const auto& ref = reference_triangle_rule<Scalar>(4);
  for (Index e = 0; e < ne; ++e) {
    if (topo.classification[e] != ElementTag::outside) {
      topo.active[e] = 1;
    } else {
      const TriangleCoords<Scalar> tri = mesh.coords(e);
      const QuadRule<Scalar> rule = map_to_triangle(ref, tri);
      bool hit = false;
      for (Index q = 0; q < rule.size() && !hit; ++q)
        hit = domain.signed_distance(Vec2<Scalar>(rule.points.col(q))) < 0;
      for (int i = 0; i < 3 && !hit; ++i) hit = domain.signed_distance(Vec2<Scalar>(tri.col(i))) < 0;
      topo.active[e] = hit;
      topo.in_strip[e] = hit;
    }
    if (topo.active[e]) topo.active_elements.push_back(e);
  }

  topo.ghost_faces.clear();
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    const Face<Scalar>& face = mesh.faces[f];
    if (!face.interior()) continue;
    const Index e0 = face.elements[0], e1 = face.elements[1];
    if (!topo.active[e0] || !topo.active[e1]) continue;
    auto near_boundary = [&](Index e) { return topo.classification[e] == ElementTag::cut || topo.in_strip[e]; };
    if (near_boundary(e0) || near_boundary(e1)) topo.ghost_faces.push_back(f);
  }
}

/// Full cut analysis of `mesh` against `domain`.
template <typename Scalar, typename Domain>
  requires ImplicitDomain<Domain, Scalar>
CutTopology<Scalar> build_cut_topology(const BackgroundMesh<Scalar>& mesh, const Domain& domain) {
  CutTopology<Scalar> topo;
  topo.h = mesh.h;
  topo.phi_h = interpolate_levelset(mesh, domain);
  snap_nodal_values(topo.phi_h, mesh.h);
  topo.classification = classify_elements(mesh, topo.phi_h);
  topo.boundary_segments = extract_boundary_segments(mesh, topo.phi_h, topo.classification);
  select_active_and_ghost(mesh, domain, topo);
  return topo;
}

/// The piecewise-linear interpolant of a level set on a background mesh,
/// seen as a domain in its own right. Its boundary coincides with the
/// discrete boundary, so ray distances from that boundary vanish.
template <typename Scalar>
class InterpolatedLevelSet {
 public:
  InterpolatedLevelSet(const BackgroundMesh<Scalar>& mesh, VectorX<Scalar> nodal, Scalar tube_width)
      : mesh_(&mesh), nodal_(std::move(nodal)), tube_width_(tube_width) {}

  Scalar tube_width() const { return tube_width_; }

  Scalar signed_distance(const Vec2<Scalar>& x) const {
    const Index e = mesh_->locate(x);
    if (e < 0) throw GeometryError("InterpolatedLevelSet: point outside the background mesh");
    const TriangleCoords<Scalar> tri = mesh_->coords(e);
    Mat2<Scalar> jac;
    jac << tri.col(1) - tri.col(0), tri.col(2) - tri.col(0);
    const Vec2<Scalar> ref = jac.inverse() * (x - tri.col(0));
    const auto& t = mesh_->triangles[e];
    return (1 - ref.sum()) * nodal_(t[0]) + ref.x() * nodal_(t[1]) + ref.y() * nodal_(t[2]);
  }

  Scalar directional_distance(const Vec2<Scalar>& x, const Vec2<Scalar>& nu) const {
    return bisect_ray_root<Scalar>([this](const Vec2<Scalar>& y) { return signed_distance(y); }, x, nu,
                                   tube_width_, Scalar(1e-14));
  }

 private:
  const BackgroundMesh<Scalar>* mesh_;
  VectorX<Scalar> nodal_;
  Scalar tube_width_;
};

/// Area of the discrete domain.
template <typename Scalar>
Scalar discrete_area(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo) {
  Scalar area = 0;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    if (!topo.integrates(e)) continue;
    area += cut_volume_rule(mesh.coords(e), topo.element_phi(mesh, e), 1).measure();
  }
  return area;
}

template <typename Scalar>
Scalar boundary_length(const CutTopology<Scalar>& topo) {
  Scalar len = 0;
  for (const auto& s : topo.boundary_segments) len += s.length();
  return len;
}

/// Debug listing. Column order:
///   v <id> <x> <y> <phi_h>
///   t <id> <v0> <v1> <v2> <INSIDE|OUTSIDE|CUT> <active 0|1>
///   s <element> <ax> <ay> <bx> <by> <nx> <ny>
///   g <face> <element0> <element1>
template <typename Scalar>
void write_mesh_dump(std::ostream& os, const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo) {
  os.precision(17);
  os << "# vertices " << mesh.n_vertices() << " triangles " << mesh.n_elements() << " segments "
     << topo.boundary_segments.size() << " ghost_faces " << topo.ghost_faces.size() << " h " << mesh.h << '\n';
  for (Index v = 0; v < mesh.n_vertices(); ++v)
    os << "v " << v << ' ' << mesh.vertices[v].x() << ' ' << mesh.vertices[v].y() << ' ' << topo.phi_h(v) << '\n';
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    os << "t " << e << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << to_string(topo.classification[e]) << ' '
       << int(topo.active[e]) << '\n';
  }
  for (const auto& s : topo.boundary_segments)
    os << "s " << s.element << ' ' << s.a.x() << ' ' << s.a.y() << ' ' << s.b.x() << ' ' << s.b.y() << ' '
       << s.normal.x() << ' ' << s.normal.y() << '\n';
  for (Index f : topo.ghost_faces)
    os << "g " << f << ' ' << mesh.faces[f].elements[0] << ' ' << mesh.faces[f].elements[1] << '\n';
}

}  // namespace cutstokes

#endif  // CUTSTOKES_CUT_TOPOLOGY_HPP
