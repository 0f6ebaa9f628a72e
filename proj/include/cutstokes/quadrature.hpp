#ifndef CUTSTOKES_QUADRATURE_HPP
#define CUTSTOKES_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cutstokes/common.hpp"

namespace cutstokes {

/// Points and positive weights in physical coordinates. Weights carry the
/// measure (area or length) of the integration region.
template <typename Scalar>
struct QuadRule {
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> points;
  VectorX<Scalar> weights;
  int exactness_degree = 0;

  Index size() const { return weights.size(); }
  Scalar measure() const { return weights.sum(); }

  template <typename F>
  auto integrate(const F& f) const {
    decltype(f(Vec2<Scalar>(points.col(0)))) acc = weights(0) * f(Vec2<Scalar>(points.col(0)));
    for (Index q = 1; q < size(); ++q) acc += weights(q) * f(Vec2<Scalar>(points.col(q)));
    return acc;
  }

  void append(const QuadRule& other) {
    const Index n = size();
    points.conservativeResize(2, n + other.size());
    weights.conservativeResize(n + other.size());
    points.rightCols(other.size()) = other.points;
    weights.tail(other.size()) = other.weights;
  }
};

/// 1D Gauss rule on [0, 1] for the weight (1 - t)^alpha, alpha in {0, 1},
/// from the eigen-decomposition of the Jacobi matrix (Golub-Welsch).
template <typename Scalar>
std::pair<VectorX<Scalar>, VectorX<Scalar>> gauss_jacobi_unit(int n, int alpha) {
  // three-term recurrence of Jacobi polynomials P^(alpha, 0) on [-1, 1]
  const Scalar a = alpha, b = 0;
  MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const Scalar s = 2 * k + a + b;
    jacobi(k, k) = (k == 0) ? (b - a) / (a + b + 2) : (b * b - a * a) / (s * (s + 2));
    if (k + 1 < n) {
      const Scalar m = k + 1;
      const Scalar t = 2 * m + a + b;
      const Scalar off =
          std::sqrt(4 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1) * (t - 1)));
      jacobi(k, k + 1) = off;
      jacobi(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(jacobi);
  // integral of (1 - x)^alpha over [-1, 1], equal to 2 for alpha in {0, 1}
  const Scalar mu0 = 2;
  VectorX<Scalar> nodes = (eig.eigenvalues().array() + 1) / 2;
  VectorX<Scalar> weights =
      mu0 * eig.eigenvectors().row(0).transpose().array().square() / std::pow(Scalar(2), alpha + 1);
  return {nodes, weights};
}

/// Gauss-Legendre nodes and weights on [0, 1].
template <typename Scalar>
std::pair<VectorX<Scalar>, VectorX<Scalar>> gauss_legendre_unit(int n) {
  return gauss_jacobi_unit<Scalar>(n, 0);
}

/// Rule on the reference triangle {x, y >= 0, x + y <= 1} exact for
/// bivariate polynomials of total degree <= `degree`.
///
/// Collapsed (Duffy) product of Gauss-Legendre and Gauss-Jacobi(1, 0);
/// for degree 1 this is the centroid rule.
template <typename Scalar>
const QuadRule<Scalar>& reference_triangle_rule(int degree) {
  static const std::array<QuadRule<Scalar>, 10> table = [] {
    std::array<QuadRule<Scalar>, 10> rules;
    for (int d = 1; d <= 10; ++d) {
      const int n = (d + 2) / 2;
      const auto [u, wu] = gauss_legendre_unit<Scalar>(n);
      const auto [v, wv] = gauss_jacobi_unit<Scalar>(n, 1);
      QuadRule<Scalar>& rule = rules[d - 1];
      rule.points.resize(2, n * n);
      rule.weights.resize(n * n);
      rule.exactness_degree = d;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          rule.points.col(j * n + i) = Vec2<Scalar>(u(i) * (1 - v(j)), v(j));
          rule.weights(j * n + i) = wu(i) * wv(j);
        }
    }
    return rules;
  }();
  if (degree < 1 || degree > 10)
    throw QuadratureError("reference_triangle_rule: degree must lie in [1, 10]");
  return table[degree - 1];
}

/// Affine image of the reference rule on the triangle with vertex columns `tri`.
template <typename Scalar>
QuadRule<Scalar> map_to_triangle(const QuadRule<Scalar>& ref, const TriangleCoords<Scalar>& tri) {
  Mat2<Scalar> jac;
  jac << tri.col(1) - tri.col(0), tri.col(2) - tri.col(0);
  QuadRule<Scalar> rule;
  rule.points = (jac * ref.points).colwise() + tri.col(0);
  rule.weights = std::abs(jac.determinant()) * ref.weights;
  rule.exactness_degree = ref.exactness_degree;
  return rule;
}

template <typename Scalar>
QuadRule<Scalar> triangle_rule(const TriangleCoords<Scalar>& tri, int degree) {
  return map_to_triangle(reference_triangle_rule<Scalar>(degree), tri);
}

enum class Side { inside, outside };

/// Zero of the linear interpolant on the edge [p, q]. Always interpolates
/// from the negative to the positive end so both neighbours of an edge
/// produce bit-identical points.
template <typename Scalar>
Vec2<Scalar> edge_crossing(const Vec2<Scalar>& p, Scalar phi_p, const Vec2<Scalar>& q, Scalar phi_q) {
  if (phi_p > phi_q) return edge_crossing(q, phi_q, p, phi_p);
  const Scalar t = phi_p / (phi_p - phi_q);
  return p + t * (q - p);
}

/// Polygon {phi < 0} (inside) or {phi > 0} (outside) of a triangle cut by
/// the zero set of the linear function with nodal values `phi`. Vertices
/// follow the triangle's orientation, starting from the first kept vertex
/// or crossing in local order.
template <typename Scalar>
std::vector<Vec2<Scalar>> clip_triangle(const TriangleCoords<Scalar>& tri, const Eigen::Matrix<Scalar, 3, 1>& phi,
                                        Side side = Side::inside) {
  const Scalar sign = side == Side::inside ? Scalar(1) : Scalar(-1);
  std::vector<Vec2<Scalar>> poly;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const Scalar fi = sign * phi(i), fj = sign * phi(j);
    if (fi < 0) poly.push_back(tri.col(i));
    if ((fi < 0) != (fj < 0)) poly.push_back(edge_crossing<Scalar>(tri.col(i), phi(i), tri.col(j), phi(j)));
  }
  return poly;
}

/// Fan triangulation of a convex polygon from its first vertex.
template <typename Scalar>
std::vector<TriangleCoords<Scalar>> fan_triangulate(const std::vector<Vec2<Scalar>>& poly) {
  std::vector<TriangleCoords<Scalar>> tris;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    TriangleCoords<Scalar> t;
    t << poly[0], poly[i], poly[i + 1];
    tris.push_back(t);
  }
  return tris;
}

/// Rule on K ∩ {phi_h < 0} (or its complement) for a triangle K with
/// nodal level-set values `phi`.
template <typename Scalar>
QuadRule<Scalar> cut_volume_rule(const TriangleCoords<Scalar>& tri, const Eigen::Matrix<Scalar, 3, 1>& phi,
                                 int degree, Side side = Side::inside) {
  const auto& ref = reference_triangle_rule<Scalar>(degree);
  const Scalar sign = side == Side::inside ? Scalar(1) : Scalar(-1);
  if ((sign * phi.array() < 0).all()) return map_to_triangle(ref, tri);

  const auto poly = clip_triangle(tri, phi, side);
  if (poly.size() < 3) throw QuadratureError("cut_volume_rule: empty integration region");
  QuadRule<Scalar> rule;
  rule.points.resize(2, 0);
  rule.exactness_degree = degree;
  for (const auto& t : fan_triangulate(poly)) rule.append(map_to_triangle(ref, t));
  return rule;
}

/// Gauss-Legendre rule on the straight segment [a, b], exact to `degree`.
template <typename Scalar>
QuadRule<Scalar> segment_rule(const Vec2<Scalar>& a, const Vec2<Scalar>& b, int degree) {
  const Scalar length = (b - a).norm();
  if (!(length > Scalar(0))) throw QuadratureError("segment_rule: zero-length segment");
  if (degree < 0) throw QuadratureError("segment_rule: negative degree");
  const auto [t, w] = gauss_legendre_unit<Scalar>(degree / 2 + 1);
  QuadRule<Scalar> rule;
  rule.points.resize(2, t.size());
  for (Index q = 0; q < t.size(); ++q) rule.points.col(q) = a + t(q) * (b - a);
  rule.weights = length * w;
  rule.exactness_degree = degree;
  return rule;
}

}  // namespace cutstokes

#endif  // CUTSTOKES_QUADRATURE_HPP
