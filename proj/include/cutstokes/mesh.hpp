#ifndef CUTSTOKES_MESH_HPP
#define CUTSTOKES_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <utility>
#include <vector>

#include "cutstokes/common.hpp"

namespace cutstokes {

template <typename Scalar>
struct Box {
  Vec2<Scalar> lower;
  Vec2<Scalar> upper;
};

enum class SplitPattern { two_triangle, criss_cross };

/// Mesh edge. `elements[1]` is -1 on the boundary of the background mesh.
/// `normal` is fixed once: the left-to-right rotation of the edge
/// direction taken from the lower to the higher vertex id.
template <typename Scalar>
struct Face {
  std::array<Index, 2> vertices;
  std::array<Index, 2> elements;
  Vec2<Scalar> normal;

  bool interior() const { return elements[1] >= 0; }
};

/// Conforming triangulation of an axis-aligned box. Triangles are stored
/// counter-clockwise; local edge i is the edge opposite local vertex i.
template <typename Scalar>
struct BackgroundMesh {
  std::vector<Vec2<Scalar>> vertices;
  std::vector<std::array<Index, 3>> triangles;
  std::vector<std::array<Index, 3>> triangle_faces;
  std::vector<Face<Scalar>> faces;
  Scalar h = 0;

  Box<Scalar> bbox;
  int subdivisions = 0;
  SplitPattern pattern = SplitPattern::criss_cross;

  Index n_vertices() const { return static_cast<Index>(vertices.size()); }
  Index n_elements() const { return static_cast<Index>(triangles.size()); }
  Index n_faces() const { return static_cast<Index>(faces.size()); }

  TriangleCoords<Scalar> coords(Index e) const {
    TriangleCoords<Scalar> c;
    for (int i = 0; i < 3; ++i) c.col(i) = vertices[triangles[e][i]];
    return c;
  }

  Vec2<Scalar> centroid(Index e) const { return coords(e).rowwise().mean(); }

  Scalar edge_length(Index f) const {
    return (vertices[faces[f].vertices[1]] - vertices[faces[f].vertices[0]]).norm();
  }

  /// Element containing x (closure), or -1 outside the box.
  Index locate(const Vec2<Scalar>& x) const {
    const Vec2<Scalar> span = bbox.upper - bbox.lower;
    const Scalar sx = (x.x() - bbox.lower.x()) / span.x() * subdivisions;
    const Scalar sy = (x.y() - bbox.lower.y()) / span.y() * subdivisions;
    const Scalar slack = Scalar(1e-12) * subdivisions;
    if (sx < -slack || sy < -slack || sx > subdivisions + slack || sy > subdivisions + slack)
      return -1;
    const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, subdivisions - 1);
    const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, subdivisions - 1);
    const int per_cell = pattern == SplitPattern::criss_cross ? 4 : 2;
    const Index first = static_cast<Index>(j * subdivisions + i) * per_cell;
    Index best = first;
    Scalar best_min = -std::numeric_limits<Scalar>::infinity();
    for (Index e = first; e < first + per_cell; ++e) {
      const TriangleCoords<Scalar> c = coords(e);
      Mat2<Scalar> jac;
      jac << c.col(1) - c.col(0), c.col(2) - c.col(0);
      const Vec2<Scalar> ref = jac.inverse() * (x - c.col(0));
      const Scalar lmin = std::min({Scalar(1) - ref.sum(), ref.x(), ref.y()});
      if (lmin > best_min) {
        best_min = lmin;
        best = e;
      }
    }
    return best;
  }
};

namespace detail {

template <typename Scalar>
void build_faces(BackgroundMesh<Scalar>& mesh) {
  std::map<std::pair<Index, Index>, Index> lookup;
  mesh.triangle_faces.assign(mesh.triangles.size(), {-1, -1, -1});
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    for (int i = 0; i < 3; ++i) {
      Index a = t[(i + 1) % 3], b = t[(i + 2) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = lookup.try_emplace({a, b}, mesh.n_faces());
      if (inserted) {
        const Vec2<Scalar> dir = (mesh.vertices[b] - mesh.vertices[a]).normalized();
        mesh.faces.push_back({{a, b}, {e, -1}, Vec2<Scalar>(dir.y(), -dir.x())});
      } else {
        Face<Scalar>& f = mesh.faces[it->second];
        if (f.elements[1] >= 0) throw MeshError("build_faces: edge shared by more than two triangles");
        f.elements[1] = e;
      }
      mesh.triangle_faces[e][i] = it->second;
    }
  }
}

}  // namespace detail

/// Structured triangulation of `bbox` with n x n cells; criss-cross splits
/// each cell into four triangles through its center.
template <typename Scalar>
BackgroundMesh<Scalar> build_structured_mesh(const Box<Scalar>& bbox, int n,
                                             SplitPattern pattern = SplitPattern::criss_cross) {
  if (n < 1) throw MeshError("build_structured_mesh: need at least one subdivision");
  const Vec2<Scalar> span = bbox.upper - bbox.lower;
  if (!(span.x() > Scalar(0)) || !(span.y() > Scalar(0)))
    throw MeshError("build_structured_mesh: degenerate bounding box");

  BackgroundMesh<Scalar> mesh;
  mesh.bbox = bbox;
  mesh.subdivisions = n;
  mesh.pattern = pattern;

  const Scalar dx = span.x() / n, dy = span.y() / n;
  auto grid = [n](int i, int j) { return static_cast<Index>(j) * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.emplace_back(bbox.lower.x() + i * dx, bbox.lower.y() + j * dy);
  if (pattern == SplitPattern::criss_cross) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        mesh.vertices.emplace_back(bbox.lower.x() + (i + Scalar(0.5)) * dx,
                                   bbox.lower.y() + (j + Scalar(0.5)) * dy);
  }

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Index v00 = grid(i, j), v10 = grid(i + 1, j), v11 = grid(i + 1, j + 1),
                  v01 = grid(i, j + 1);
      if (pattern == SplitPattern::criss_cross) {
        const Index c = static_cast<Index>(n + 1) * (n + 1) + static_cast<Index>(j) * n + i;
        mesh.triangles.push_back({v00, v10, c});
        mesh.triangles.push_back({v10, v11, c});
        mesh.triangles.push_back({v11, v01, c});
        mesh.triangles.push_back({v01, v00, c});
      } else {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      }
    }
  }
  detail::build_faces(mesh);

  for (Index f = 0; f < mesh.n_faces(); ++f) mesh.h = std::max(mesh.h, mesh.edge_length(f));
  return mesh;
}

/// Smallest interior angle of any triangle, in degrees.
template <typename Scalar>
Scalar min_angle_degrees(const BackgroundMesh<Scalar>& mesh) {
  Scalar result = 180;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const TriangleCoords<Scalar> c = mesh.coords(e);
    for (int i = 0; i < 3; ++i) {
      const Vec2<Scalar> a = c.col((i + 1) % 3) - c.col(i);
      const Vec2<Scalar> b = c.col((i + 2) % 3) - c.col(i);
      const Scalar angle = std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), Scalar(-1), Scalar(1)));
      result = std::min(result, angle * Scalar(180) / std::numbers::pi_v<Scalar>);
    }
  }
  return result;
}

/// Ratio of longest to shortest edge.
template <typename Scalar>
Scalar edge_length_ratio(const BackgroundMesh<Scalar>& mesh) {
  Scalar lo = std::numeric_limits<Scalar>::infinity(), hi = 0;
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    lo = std::min(lo, mesh.edge_length(f));
    hi = std::max(hi, mesh.edge_length(f));
  }
  return hi / lo;
}

}  // namespace cutstokes

#endif  // CUTSTOKES_MESH_HPP
