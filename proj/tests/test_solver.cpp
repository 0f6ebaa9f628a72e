#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "cutstokes/solver.hpp"

using namespace cutstokes;
using V = Vec2<double>;

namespace {
SparseMatrix<double> diagonal(std::initializer_list<double> d) {
  SparseMatrix<double> m(Index(d.size()), Index(d.size()));
  Index i = 0;
  for (double v : d) {
    m.insert(i, i) = v;
    ++i;
  }
  m.makeCompressed();
  return m;
}
}  // namespace

TEST_CASE("scalar system") {
  const SparseMatrix<double> m = diagonal({4.0});
  VectorX<double> b(1);
  b << 2;
  SolveReport report;
  const VectorX<double> x = solve_sparse<double>(m, b, report);
  CHECK(x(0) == 0.5);
  CHECK(report.residual_rel == 0.0);
  CHECK(!report.method.empty());
}

TEST_CASE("singular system is reported") {
  SparseMatrix<double> m(2, 2);
  m.insert(0, 0) = 1;
  m.insert(0, 1) = 1;
  m.insert(1, 0) = 1;
  m.insert(1, 1) = 1;
  m.makeCompressed();
  SolveReport report;
  CHECK_THROWS_AS(solve_sparse<double>(m, VectorX<double>::Ones(2), report, 1), SingularSystemError);
  const auto est = estimate_condition(m);
  CHECK(est.singular);
  CHECK(std::isinf(est.condition));
}

TEST_CASE("condition estimates of simple matrices") {
  const auto id = estimate_condition(diagonal({1, 1, 1, 1}));
  CHECK(id.condition == doctest::Approx(1).epsilon(1e-12));
  CHECK(id.converged);
  const auto d = estimate_condition(diagonal({1, 10}));
  CHECK(d.condition == doctest::Approx(10).epsilon(1e-3));
  CHECK(d.largest == doctest::Approx(10).epsilon(1e-3));
  CHECK(d.smallest == doctest::Approx(1).epsilon(1e-3));
  // a non-symmetric matrix: singular values of [[1, 3], [0, 2]]
  SparseMatrix<double> m(2, 2);
  m.insert(0, 0) = 1;
  m.insert(0, 1) = 3;
  m.insert(1, 1) = 2;
  m.makeCompressed();
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(Eigen::Matrix2d(m.toDense()));
  const auto est = estimate_condition(m, 1e-10);
  CHECK(est.largest == doctest::Approx(svd.singularValues()(0)).epsilon(1e-8));
  CHECK(est.smallest == doctest::Approx(svd.singularValues()(1)).epsilon(1e-8));
}

TEST_CASE("benchmark system at n = 16") {
  const fixture::DiscSetup s(16);
  const auto sys = assemble_system(s.mesh, s.topo, s.velocity, s.pressure, s.params, &BenchmarkCase::force,
                                   &BenchmarkCase::velocity, s.domain);
  const auto sol = solve(sys);
  const VectorX<double> x = (VectorX<double>(sys.size()) << sol.u, sol.p, sol.lambda).finished();
  const double res = (sys.matrix() * x - sys.rhs()).norm() / sys.rhs().norm();
  CHECK(res <= 1e-10);
  CHECK(sol.report.residual_rel == doctest::Approx(res).epsilon(1e-3));
  // the multiplier keeps the discrete pressure mean free
  CHECK(std::abs(sys.L.dot(sol.p)) <= 1e-10 * sys.L.cwiseAbs().dot(sol.p.cwiseAbs()));
  const auto again = solve(sys);
  CHECK(again.u == sol.u);
  CHECK(again.p == sol.p);
}

TEST_CASE("solution does not depend on the vertex numbering") {
  const fixture::DiscSetup s(8);
  const auto sys = assemble_system(s.mesh, s.topo, s.velocity, s.pressure, s.params, &BenchmarkCase::force,
                                   &BenchmarkCase::velocity, s.domain);
  const auto sol = solve(sys);

  // reverse the vertex ids, keep element order and local vertex order
  BackgroundMesh<double> relabelled = s.mesh;
  const Index nv = s.mesh.n_vertices();
  for (Index v = 0; v < nv; ++v) relabelled.vertices[nv - 1 - v] = s.mesh.vertices[v];
  for (auto& t : relabelled.triangles)
    for (auto& v : t) v = nv - 1 - v;
  relabelled.faces.clear();
  relabelled.triangle_faces.clear();
  detail::build_faces(relabelled);
  const CutTopology<double> topo = build_cut_topology(relabelled, s.domain);
  const auto [vel, pre] = make_spaces(relabelled, topo, s.params);
  const auto sys2 = assemble_system(relabelled, topo, vel, pre, s.params, &BenchmarkCase::force,
                                    &BenchmarkCase::velocity, s.domain);
  const auto sol2 = solve(sys2);
  REQUIRE(vel.n_dofs() == s.velocity.n_dofs());
  double du = 0, dp = 0;
  for (Index e : s.topo.active_elements) {
    REQUIRE(vel.map.contains(e));
    const auto a = s.velocity.map.dofs(e), b = vel.map.dofs(e);
    for (int i = 0; i < 6; ++i)
      for (int c = 0; c < 2; ++c)
        du = std::max(du, std::abs(sol.u(s.velocity.offset(c) + a[i]) - sol2.u(vel.offset(c) + b[i])));
    const auto pa = s.pressure.map.dofs(e), pb = pre.map.dofs(e);
    for (int i = 0; i < 3; ++i) dp = std::max(dp, std::abs(sol.p(pa[i]) - sol2.p(pb[i])));
  }
  CHECK(du <= 1e-9);
  CHECK(dp <= 1e-9);
}
