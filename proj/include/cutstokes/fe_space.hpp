#ifndef CUTSTOKES_FE_SPACE_HPP
#define CUTSTOKES_FE_SPACE_HPP

#include <array>
#include <span>
#include <vector>

#include "cutstokes/common.hpp"
#include "cutstokes/cut_topology.hpp"
#include "cutstokes/mesh.hpp"
#include "cutstokes/quadrature.hpp"

namespace cutstokes {

/// Basis values and derivatives at one point; one column per local basis
/// function. Hessian rows are (xx, xy, yy).
template <typename Scalar>
struct BasisEval {
  VectorX<Scalar> values;
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> gradients;
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> hessians;
};

/// Nodal Lagrange P1/P2 basis on one physical triangle. Local nodes are the
/// three vertices followed (P2) by the midpoints of the edges opposite
/// vertex 0, 1, 2.
template <typename Scalar>
class LagrangeElement {
 public:
  LagrangeElement(const TriangleCoords<Scalar>& tri, int order) : tri_(tri), order_(order) {
    if (order != 1 && order != 2) throw Error("LagrangeElement: order must be 1 or 2");
    Mat2<Scalar> jac;
    jac << tri.col(1) - tri.col(0), tri.col(2) - tri.col(0);
    const Mat2<Scalar> inv = jac.inverse();
    grad_lambda_.col(1) = inv.row(0).transpose();
    grad_lambda_.col(2) = inv.row(1).transpose();
    grad_lambda_.col(0) = -grad_lambda_.col(1) - grad_lambda_.col(2);
    inv_jac_ = inv;
  }

  int order() const { return order_; }
  int n_basis() const { return order_ == 1 ? 3 : 6; }
  const TriangleCoords<Scalar>& coords() const { return tri_; }

  Eigen::Matrix<Scalar, 3, 1> barycentric(const Vec2<Scalar>& x) const {
    const Vec2<Scalar> ref = inv_jac_ * (x - tri_.col(0));
    return {1 - ref.sum(), ref.x(), ref.y()};
  }

  Vec2<Scalar> node(int i) const {
    if (i < 3) return tri_.col(i);
    return (tri_.col((i - 2) % 3) + tri_.col((i - 1) % 3)) / 2;
  }

  BasisEval<Scalar> eval(const Vec2<Scalar>& x, Scalar tol = Scalar(1e-9)) const {
    const auto lam = barycentric(x);
    if (lam.minCoeff() < -tol) throw Error("LagrangeElement::eval: point outside the element");
    const int nb = n_basis();
    BasisEval<Scalar> out;
    out.values.resize(nb);
    out.gradients.resize(2, nb);
    out.hessians.setZero(3, nb);
    if (order_ == 1) {
      out.values = lam;
      out.gradients = grad_lambda_;
      return out;
    }
    auto sym = [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
      return Eigen::Matrix<Scalar, 3, 1>(2 * a.x() * b.x(), a.x() * b.y() + a.y() * b.x(), 2 * a.y() * b.y());
    };
    for (int i = 0; i < 3; ++i) {
      const Vec2<Scalar> gi = grad_lambda_.col(i);
      out.values(i) = lam(i) * (2 * lam(i) - 1);
      out.gradients.col(i) = (4 * lam(i) - 1) * gi;
      out.hessians.col(i) = 2 * sym(gi, gi);
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      const Vec2<Scalar> gj = grad_lambda_.col(j), gk = grad_lambda_.col(k);
      out.values(3 + i) = 4 * lam(j) * lam(k);
      out.gradients.col(3 + i) = 4 * (lam(j) * gk + lam(k) * gj);
      out.hessians.col(3 + i) = 4 * sym(gj, gk);
    }
    return out;
  }

 private:
  TriangleCoords<Scalar> tri_;
  Eigen::Matrix<Scalar, 2, 3> grad_lambda_;
  Mat2<Scalar> inv_jac_;
  int order_;
};

/// j-th derivative of every basis function along the unit vector `dir`.
/// Derivatives beyond the polynomial order are zero.
template <typename Scalar>
VectorX<Scalar> directional_derivative(const BasisEval<Scalar>& basis, const Vec2<Scalar>& dir, int j) {
  switch (j) {
    case 0: return basis.values;
    case 1: return basis.gradients.transpose() * dir;
    case 2: {
      const Eigen::Matrix<Scalar, 3, 1> w(dir.x() * dir.x(), 2 * dir.x() * dir.y(), dir.y() * dir.y());
      return basis.hessians.transpose() * w;
    }
    default: return VectorX<Scalar>::Zero(basis.values.size());
  }
}

/// Global numbering of scalar Lagrange dofs on the active elements:
/// active vertices by increasing vertex id, then (P2) active edges by
/// increasing edge id.
struct DofMap {
  int order = 1;
  Index n_dofs = 0;
  std::vector<Index> element_slot;  // -1 for inactive elements
  std::vector<std::array<Index, 6>> cell_dofs;

  int dofs_per_cell() const { return order == 1 ? 3 : 6; }

  std::span<const Index> dofs(Index e) const {
    const Index slot = element_slot[e];
    if (slot < 0) throw Error("DofMap: element is not active");
    return {cell_dofs[slot].data(), static_cast<std::size_t>(dofs_per_cell())};
  }

  bool contains(Index e) const { return element_slot[e] >= 0; }
};

template <typename Scalar>
DofMap build_dofmap(const BackgroundMesh<Scalar>& mesh, std::span<const Index> active_elements, int order) {
  if (order != 1 && order != 2) throw Error("build_dofmap: order must be 1 or 2");
  if (active_elements.empty()) throw Error("build_dofmap: no active elements");
  DofMap map;
  map.order = order;
  std::vector<Index> vertex_dof(mesh.n_vertices(), -1), face_dof(mesh.n_faces(), -1);
  for (Index e : active_elements) {
    for (Index v : mesh.triangles[e]) vertex_dof[v] = 0;
    if (order == 2)
      for (Index f : mesh.triangle_faces[e]) face_dof[f] = 0;
  }
  for (auto& d : vertex_dof)
    if (d == 0) d = map.n_dofs++;
  for (auto& d : face_dof)
    if (d == 0) d = map.n_dofs++;

  map.element_slot.assign(mesh.n_elements(), -1);
  for (Index e : active_elements) {
    map.element_slot[e] = static_cast<Index>(map.cell_dofs.size());
    std::array<Index, 6> dofs{-1, -1, -1, -1, -1, -1};
    for (int i = 0; i < 3; ++i) {
      dofs[i] = vertex_dof[mesh.triangles[e][i]];
      if (order == 2) dofs[3 + i] = face_dof[mesh.triangle_faces[e][i]];
    }
    map.cell_dofs.push_back(dofs);
  }
  return map;
}

template <typename Scalar>
DofMap build_dofmap(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo, int order) {
  return build_dofmap(mesh, std::span<const Index>(topo.active_elements), order);
}

/// Scalar or vector Lagrange space; vector fields are stored component
/// blocked, all x-dofs then all y-dofs.
struct FeSpace {
  DofMap map;
  int components = 1;

  int order() const { return map.order; }
  Index n_scalar_dofs() const { return map.n_dofs; }
  Index n_dofs() const { return components * map.n_dofs; }
  Index offset(int component) const { return component * map.n_dofs; }
};

/// Nodal interpolant of a scalar function.
template <typename Scalar, typename F>
VectorX<Scalar> interpolate(const BackgroundMesh<Scalar>& mesh, const DofMap& map, const F& f) {
  VectorX<Scalar> coeffs = VectorX<Scalar>::Zero(map.n_dofs);
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    if (!map.contains(e)) continue;
    const LagrangeElement<Scalar> fe(mesh.coords(e), map.order);
    const auto dofs = map.dofs(e);
    for (int i = 0; i < fe.n_basis(); ++i) coeffs(dofs[i]) = f(fe.node(i));
  }
  return coeffs;
}

/// Nodal interpolant of a vector field into a component-blocked space.
template <typename Scalar, typename F>
VectorX<Scalar> interpolate_vector(const BackgroundMesh<Scalar>& mesh, const FeSpace& space, const F& f) {
  VectorX<Scalar> coeffs(space.n_dofs());
  for (int c = 0; c < space.components; ++c)
    coeffs.segment(space.offset(c), space.n_scalar_dofs()) =
        interpolate<Scalar>(mesh, space.map, [&](const Vec2<Scalar>& x) { return Scalar(f(x)(c)); });
  return coeffs;
}

/// Jumps of the l-th normal derivative across an interior face, as linear
/// functionals on the concatenated local dofs [plus element, minus element].
///
/// With n the face normal, v+ is the trace from the side opposite to n and
/// [v] = v+ - v-.
template <typename Scalar>
struct FaceJump {
  std::array<Index, 2> elements;       // plus, minus
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rows;  // n_points x 2 n_basis
  QuadRule<Scalar> rule;
};

template <typename Scalar>
FaceJump<Scalar> face_jump_rows(const BackgroundMesh<Scalar>& mesh, Index f, int order, int l, int degree,
                                bool flip_normal = false) {
  const Face<Scalar>& face = mesh.faces[f];
  if (!face.interior()) throw Error("face_jump_rows: boundary face");
  if (l < 1 || l > 2) throw Error("face_jump_rows: derivative order must be 1 or 2");
  const Vec2<Scalar> n = flip_normal ? Vec2<Scalar>(-face.normal) : face.normal;
  const Vec2<Scalar> a = mesh.vertices[face.vertices[0]], b = mesh.vertices[face.vertices[1]];
  const Vec2<Scalar> mid = (a + b) / 2;

  FaceJump<Scalar> jump;
  jump.rule = segment_rule(a, b, degree);
  Index plus = face.elements[0], minus = face.elements[1];
  if ((mesh.centroid(plus) - mid).dot(n) > 0) std::swap(plus, minus);
  jump.elements = {plus, minus};

  const LagrangeElement<Scalar> fe_plus(mesh.coords(plus), order), fe_minus(mesh.coords(minus), order);
  const int nb = fe_plus.n_basis();
  jump.rows.resize(jump.rule.size(), 2 * nb);
  for (Index q = 0; q < jump.rule.size(); ++q) {
    const Vec2<Scalar> x = jump.rule.points.col(q);
    jump.rows.row(q).head(nb) = directional_derivative(fe_plus.eval(x), n, l).transpose();
    jump.rows.row(q).tail(nb) = -directional_derivative(fe_minus.eval(x), n, l).transpose();
  }
  return jump;
}

}  // namespace cutstokes

#endif  // CUTSTOKES_FE_SPACE_HPP
