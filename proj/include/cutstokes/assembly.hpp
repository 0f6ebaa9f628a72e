#ifndef CUTSTOKES_ASSEMBLY_HPP
#define CUTSTOKES_ASSEMBLY_HPP

#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "cutstokes/common.hpp"
#include "cutstokes/cut_topology.hpp"
#include "cutstokes/fe_space.hpp"
#include "cutstokes/levelset.hpp"
#include "cutstokes/mesh.hpp"
#include "cutstokes/quadrature.hpp"

namespace cutstokes {

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

template <typename Scalar>
using Triplets = std::vector<Eigen::Triplet<Scalar>>;

/// Method parameters. Defaults are the Taylor-Hood (P2/P1) configuration
/// with the full boundary correction.
template <typename Scalar>
struct StokesParams {
  Scalar beta = 100;       // Nitsche penalty
  Scalar gamma_v = 1e-3;   // velocity ghost penalty
  Scalar gamma_q = 1e-3;   // pressure ghost penalty
  Scalar gamma_p = 0;      // extra pressure gradient-jump penalty
  int k = 2;               // velocity order
  int m = 1;               // pressure order
  int taylor_order = 2;    // 0 disables the boundary correction

  void validate() const {
    if (!(beta > 0)) throw Error("StokesParams: beta must be positive");
    if (gamma_v < 0 || gamma_q < 0 || gamma_p < 0) throw Error("StokesParams: penalties must be nonnegative");
    if (k < 1 || k > 2 || m < 1 || m > 2) throw Error("StokesParams: orders must be 1 or 2");
    if (taylor_order < 0 || taylor_order > k) throw Error("StokesParams: taylor_order must lie in [0, k]");
    const bool equal_order = m == k && gamma_p > 0;
    const bool taylor_hood = k == 2 && m == 1 && gamma_p == 0;
    if (!equal_order && !taylor_hood)
      throw Error("StokesParams: need m == k with gamma_p > 0, or k == 2, m == 1 with gamma_p == 0");
  }

  int volume_degree() const { return 2 * k; }
  int boundary_degree() const { return 2 * k + 2; }
  int face_degree() const { return 2 * k; }
};

/// A quadrature point of the discrete boundary together with its distance
/// to the exact boundary along the discrete normal.
template <typename Scalar>
struct BoundaryPoint {
  Index element;
  Vec2<Scalar> x;
  Vec2<Scalar> normal;
  Scalar weight;
  Scalar rho;

  Vec2<Scalar> mapped() const { return x + rho * normal; }
};

template <typename Scalar, typename Domain>
  requires ImplicitDomain<Domain, Scalar>
std::vector<BoundaryPoint<Scalar>> boundary_quadrature(const CutTopology<Scalar>& topo, const Domain& domain,
                                                       int degree) {
  std::vector<BoundaryPoint<Scalar>> points;
  for (const auto& seg : topo.boundary_segments) {
    const QuadRule<Scalar> rule = segment_rule(seg.a, seg.b, degree);
    for (Index q = 0; q < rule.size(); ++q) {
      const Vec2<Scalar> x = rule.points.col(q);
      points.push_back({seg.element, x, seg.normal, rule.weights(q), domain.directional_distance(x, seg.normal)});
    }
  }
  return points;
}

/// Taylor expansion of the trace along the normal:
///   sum_{j <= taylor_order} D^j_nu phi(x) rho^j / j!
/// for every local basis function.
template <typename Scalar>
VectorX<Scalar> taylor_trace(const BasisEval<Scalar>& basis, const Vec2<Scalar>& nu, Scalar rho, int taylor_order) {
  VectorX<Scalar> result = basis.values;
  Scalar factor = 1;
  for (int j = 1; j <= taylor_order; ++j) {
    factor *= rho / j;
    result += factor * directional_derivative(basis, nu, j);
  }
  return result;
}

namespace detail {

template <typename Scalar, typename Local>
void scatter(Triplets<Scalar>& out, std::span<const Index> rows, Index row_offset, std::span<const Index> cols,
             Index col_offset, const Local& local) {
  for (Index i = 0; i < local.rows(); ++i)
    for (Index j = 0; j < local.cols(); ++j)
      if (local(i, j) != Scalar(0)) out.emplace_back(row_offset + rows[i], col_offset + cols[j], local(i, j));
}

/// Copies a scalar-field matrix onto the diagonal blocks of a vector field.
template <typename Scalar>
SparseMatrix<Scalar> block_diagonal(const Triplets<Scalar>& scalar, Index n, int components) {
  Triplets<Scalar> all;
  all.reserve(scalar.size() * components);
  for (int c = 0; c < components; ++c)
    for (const auto& t : scalar) all.emplace_back(t.row() + c * n, t.col() + c * n, t.value());
  SparseMatrix<Scalar> mat(components * n, components * n);
  mat.setFromTriplets(all.begin(), all.end());
  return mat;
}

inline std::vector<Index> concat(std::span<const Index> a, std::span<const Index> b) {
  std::vector<Index> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// sum over faces F of coefficient(l) (J_l^T W J_l) for l = 1..max_order,
/// assembled for one scalar field.
template <typename Scalar, typename Coefficient>
Triplets<Scalar> face_jump_penalty(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                   const DofMap& map, int max_order, int degree, const Coefficient& coefficient) {
  Triplets<Scalar> trips;
  for (Index f : topo.ghost_faces) {
    MatrixX<Scalar> local;
    std::vector<Index> dofs;
    for (int l = 1; l <= max_order; ++l) {
      const Scalar c = coefficient(l);
      if (c == Scalar(0)) continue;
      const FaceJump<Scalar> jump = face_jump_rows(mesh, f, map.order, l, degree);
      if (dofs.empty()) {
        dofs = concat(map.dofs(jump.elements[0]), map.dofs(jump.elements[1]));
        local = MatrixX<Scalar>::Zero(jump.rows.cols(), jump.rows.cols());
      }
      local += c * jump.rows.transpose() * jump.rule.weights.asDiagonal() * jump.rows;
    }
    if (!dofs.empty()) scatter<Scalar>(trips, dofs, 0, dofs, 0, local);
  }
  return trips;
}

}  // namespace detail

/// Nitsche form with Taylor-corrected trace on the velocity space:
///   (grad v, grad w)_{Omega_h} - (nu.grad v, w) - (T(v), nu.grad w) + beta/h (T(v), w)
/// with the boundary pairings on the discrete boundary. Rows are test
/// functions w, columns trial functions v.
template <typename Scalar, typename Domain>
  requires ImplicitDomain<Domain, Scalar>
SparseMatrix<Scalar> assemble_a0(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                 const FeSpace& velocity, const StokesParams<Scalar>& params, const Domain& domain) {
  const DofMap& map = velocity.map;
  Triplets<Scalar> trips;
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const LagrangeElement<Scalar> fe(mesh.coords(e), map.order);
    const QuadRule<Scalar> rule = cut_volume_rule(fe.coords(), topo.element_phi(mesh, e), params.volume_degree());
    MatrixX<Scalar> local = MatrixX<Scalar>::Zero(fe.n_basis(), fe.n_basis());
    for (Index q = 0; q < rule.size(); ++q) {
      const auto basis = fe.eval(rule.points.col(q));
      local += rule.weights(q) * basis.gradients.transpose() * basis.gradients;
    }
    detail::scatter<Scalar>(trips, map.dofs(e), 0, map.dofs(e), 0, local);
  }

  const Scalar penalty = params.beta / topo.h;
  for (const auto& bp : boundary_quadrature(topo, domain, params.boundary_degree())) {
    const LagrangeElement<Scalar> fe(mesh.coords(bp.element), map.order);
    const auto basis = fe.eval(bp.x);
    const VectorX<Scalar> v = basis.values;
    const VectorX<Scalar> dn = directional_derivative(basis, bp.normal, 1);
    const VectorX<Scalar> t = taylor_trace(basis, bp.normal, bp.rho, params.taylor_order);
    const MatrixX<Scalar> local = bp.weight * (-v * dn.transpose() - dn * t.transpose() + penalty * v * t.transpose());
    detail::scatter<Scalar>(trips, map.dofs(bp.element), 0, map.dofs(bp.element), 0, local);
  }
  return detail::block_diagonal(trips, map.n_dofs, velocity.components);
}

/// Velocity ghost penalty: gamma_v sum_F sum_{l=1..k} h^{2l-1} ([D^l_n v], [D^l_n w])_F.
template <typename Scalar>
SparseMatrix<Scalar> assemble_ghost_velocity(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                             const FeSpace& velocity, const StokesParams<Scalar>& params) {
  const Scalar h = topo.h;
  const auto trips = detail::face_jump_penalty(mesh, topo, velocity.map, velocity.order(), params.face_degree(),
                                               [&](int l) { return params.gamma_v * std::pow(h, 2 * l - 1); });
  return detail::block_diagonal(trips, velocity.n_scalar_dofs(), velocity.components);
}

/// Pressure stabilization: gamma_q sum_F sum_{l=1..m} h^{2l+1} ([D^l_n p], [D^l_n q])_F
/// plus gamma_p sum_F h^3 ([n.grad p], [n.grad q])_F.
template <typename Scalar>
SparseMatrix<Scalar> assemble_pressure_stab(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                            const FeSpace& pressure, const StokesParams<Scalar>& params) {
  const Scalar h = topo.h;
  const auto trips = detail::face_jump_penalty(mesh, topo, pressure.map, pressure.order(), params.face_degree(),
                                               [&](int l) {
                                                 Scalar c = params.gamma_q * std::pow(h, 2 * l + 1);
                                                 if (l == 1) c += params.gamma_p * h * h * h;
                                                 return c;
                                               });
  SparseMatrix<Scalar> mat(pressure.n_dofs(), pressure.n_dofs());
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

/// Pressure-velocity coupling (q, div v)_{Omega_h} - sigma (q, v.nu)_{boundary}
/// as a (pressure x velocity) matrix.
template <typename Scalar>
SparseMatrix<Scalar> assemble_b(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                const FeSpace& velocity, const FeSpace& pressure, int sigma,
                                const StokesParams<Scalar>& params) {
  const DofMap& vmap = velocity.map;
  const DofMap& pmap = pressure.map;
  Triplets<Scalar> trips;
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const TriangleCoords<Scalar> tri = mesh.coords(e);
    const LagrangeElement<Scalar> vfe(tri, vmap.order), pfe(tri, pmap.order);
    const QuadRule<Scalar> rule = cut_volume_rule(tri, topo.element_phi(mesh, e), params.volume_degree());
    MatrixX<Scalar> bx = MatrixX<Scalar>::Zero(pfe.n_basis(), vfe.n_basis()), by = bx;
    for (Index q = 0; q < rule.size(); ++q) {
      const Vec2<Scalar> x = rule.points.col(q);
      const auto vb = vfe.eval(x);
      const VectorX<Scalar> chi = pfe.eval(x).values;
      bx += rule.weights(q) * chi * vb.gradients.row(0);
      by += rule.weights(q) * chi * vb.gradients.row(1);
    }
    detail::scatter<Scalar>(trips, pmap.dofs(e), 0, vmap.dofs(e), velocity.offset(0), bx);
    detail::scatter<Scalar>(trips, pmap.dofs(e), 0, vmap.dofs(e), velocity.offset(1), by);
  }
  if (sigma != 0) {
    for (const auto& seg : topo.boundary_segments) {
      const TriangleCoords<Scalar> tri = mesh.coords(seg.element);
      const LagrangeElement<Scalar> vfe(tri, vmap.order), pfe(tri, pmap.order);
      const QuadRule<Scalar> rule = segment_rule(seg.a, seg.b, params.boundary_degree());
      MatrixX<Scalar> mass = MatrixX<Scalar>::Zero(pfe.n_basis(), vfe.n_basis());
      for (Index q = 0; q < rule.size(); ++q) {
        const Vec2<Scalar> x = rule.points.col(q);
        mass += rule.weights(q) * pfe.eval(x).values * vfe.eval(x).values.transpose();
      }
      for (int c = 0; c < 2; ++c) {
        const MatrixX<Scalar> local = -Scalar(sigma) * seg.normal(c) * mass;
        detail::scatter<Scalar>(trips, pmap.dofs(seg.element), 0, vmap.dofs(seg.element), velocity.offset(c), local);
      }
    }
  }
  SparseMatrix<Scalar> mat(pressure.n_dofs(), velocity.n_dofs());
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

/// L_i = integral of the i-th pressure basis function over Omega_h.
template <typename Scalar>
VectorX<Scalar> assemble_mean_constraint(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                         const FeSpace& pressure, int degree) {
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(pressure.n_dofs());
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const LagrangeElement<Scalar> fe(mesh.coords(e), pressure.order());
    const QuadRule<Scalar> rule = cut_volume_rule(fe.coords(), topo.element_phi(mesh, e), degree);
    VectorX<Scalar> local = VectorX<Scalar>::Zero(fe.n_basis());
    for (Index q = 0; q < rule.size(); ++q) local += rule.weights(q) * fe.eval(rule.points.col(q)).values;
    const auto dofs = pressure.map.dofs(e);
    for (int i = 0; i < fe.n_basis(); ++i) mean(dofs[i]) += local(i);
  }
  return mean;
}

/// Load vector (f, w)_{Omega_h} - (g o p_h, nu.grad w) + beta/h (g o p_h, w)
/// where p_h moves a boundary point along nu onto the exact boundary.
template <typename Scalar, typename Domain, typename Force, typename Dirichlet>
  requires ImplicitDomain<Domain, Scalar>
VectorX<Scalar> assemble_rhs(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                             const FeSpace& velocity, const StokesParams<Scalar>& params, const Force& f,
                             const Dirichlet& g, const Domain& domain) {
  const DofMap& map = velocity.map;
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(velocity.n_dofs());
  auto add = [&](Index e, const VectorX<Scalar>& local, int c) {
    const auto dofs = map.dofs(e);
    for (Index i = 0; i < local.size(); ++i) rhs(velocity.offset(c) + dofs[i]) += local(i);
  };
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const LagrangeElement<Scalar> fe(mesh.coords(e), map.order);
    const QuadRule<Scalar> rule = cut_volume_rule(fe.coords(), topo.element_phi(mesh, e), params.volume_degree());
    MatrixX<Scalar> local = MatrixX<Scalar>::Zero(fe.n_basis(), 2);
    for (Index q = 0; q < rule.size(); ++q) {
      const Vec2<Scalar> x = rule.points.col(q);
      const Vec2<Scalar> fx = f(x);
      local += rule.weights(q) * fe.eval(x).values * fx.transpose();
    }
    for (int c = 0; c < 2; ++c) add(e, local.col(c), c);
  }
  const Scalar penalty = params.beta / topo.h;
  for (const auto& bp : boundary_quadrature(topo, domain, params.boundary_degree())) {
    const LagrangeElement<Scalar> fe(mesh.coords(bp.element), map.order);
    const auto basis = fe.eval(bp.x);
    const Vec2<Scalar> gx = g(bp.mapped());
    const VectorX<Scalar> dn = directional_derivative(basis, bp.normal, 1);
    for (int c = 0; c < 2; ++c) add(bp.element, VectorX<Scalar>(bp.weight * gx(c) * (penalty * basis.values - dn)), c);
  }
  return rhs;
}

/// Assembled saddle-point blocks. The full operator acting on (u, p, lambda) is
///   [ A    -B1^T  0 ]
///   [ B0    S     L ]
///   [ 0     L^T   0 ]
template <typename Scalar>
struct SaddleSystem {
  SparseMatrix<Scalar> A, B1, B0, S;
  VectorX<Scalar> L, rhs_u, rhs_p;

  Index n_u() const { return A.rows(); }
  Index n_p() const { return S.rows(); }
  Index size() const { return n_u() + n_p() + 1; }

  SparseMatrix<Scalar> matrix() const {
    Triplets<Scalar> trips;
    trips.reserve(A.nonZeros() + B1.nonZeros() + B0.nonZeros() + S.nonZeros() + 2 * L.size());
    auto append = [&](const SparseMatrix<Scalar>& block, Index r0, Index c0, bool transpose, Scalar sign) {
      for (Index col = 0; col < block.outerSize(); ++col)
        for (typename SparseMatrix<Scalar>::InnerIterator it(block, col); it; ++it) {
          const Index r = transpose ? it.col() : it.row(), c = transpose ? it.row() : it.col();
          trips.emplace_back(r0 + r, c0 + c, sign * it.value());
        }
    };
    const Index nu = n_u(), np = n_p();
    append(A, 0, 0, false, 1);
    append(B1, 0, nu, true, -1);
    append(B0, nu, 0, false, 1);
    append(S, nu, nu, false, 1);
    for (Index i = 0; i < np; ++i) {
      if (L(i) == Scalar(0)) continue;
      trips.emplace_back(nu + i, nu + np, L(i));
      trips.emplace_back(nu + np, nu + i, L(i));
    }
    SparseMatrix<Scalar> mat(size(), size());
    mat.setFromTriplets(trips.begin(), trips.end());
    return mat;
  }

  VectorX<Scalar> rhs() const {
    VectorX<Scalar> b = VectorX<Scalar>::Zero(size());
    b.head(n_u()) = rhs_u;
    b.segment(n_u(), n_p()) = rhs_p;
    return b;
  }
};

/// Velocity ([P_k]^2) and pressure (P_m) spaces on the active mesh.
template <typename Scalar>
std::pair<FeSpace, FeSpace> make_spaces(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                        const StokesParams<Scalar>& params) {
  return {FeSpace{build_dofmap(mesh, topo, params.k), 2}, FeSpace{build_dofmap(mesh, topo, params.m), 1}};
}

template <typename Scalar, typename Domain, typename Force, typename Dirichlet>
  requires ImplicitDomain<Domain, Scalar>
SaddleSystem<Scalar> assemble_system(const BackgroundMesh<Scalar>& mesh, const CutTopology<Scalar>& topo,
                                     const FeSpace& velocity, const FeSpace& pressure,
                                     const StokesParams<Scalar>& params, const Force& f, const Dirichlet& g,
                                     const Domain& domain) {
  params.validate();
  if (topo.boundary_segments.empty()) throw MeshError("assemble_system: the domain does not cut the mesh");
  SaddleSystem<Scalar> sys;
  sys.A = assemble_a0(mesh, topo, velocity, params, domain);
  sys.A += assemble_ghost_velocity(mesh, topo, velocity, params);
  sys.B1 = assemble_b(mesh, topo, velocity, pressure, 1, params);
  sys.B0 = assemble_b(mesh, topo, velocity, pressure, 0, params);
  sys.S = assemble_pressure_stab(mesh, topo, pressure, params);
  sys.L = assemble_mean_constraint(mesh, topo, pressure, params.volume_degree());
  sys.rhs_u = assemble_rhs(mesh, topo, velocity, params, f, g, domain);
  sys.rhs_p = VectorX<Scalar>::Zero(pressure.n_dofs());
  return sys;
}

}  // namespace cutstokes

#endif  // CUTSTOKES_ASSEMBLY_HPP
