// Acceptance checks for the benchmark. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cutstokes;
using V = Vec2<double>;

namespace {

// pinned thresholds
constexpr int kFitLevels = 3;  // rates use the finest three ladder levels
constexpr double kOnVelocityL2 = 2.7, kOnVelocityH1 = 1.7, kPressureL2 = 1.7;
constexpr double kOffVelocityL2Max = 2.3, kOnOffGap = 0.5;
constexpr double kGeometryRate = 2.0, kGeometrySlack = 0.3;
constexpr double kFittedTol = 1e-8;
constexpr double kDivergenceTol = 1e-12;
constexpr int kSkewPairs = 20;
constexpr double kSkewTol = 1e-11;
constexpr int kSlidingN = 32, kSlidingOffsets = 16;
constexpr double kResidualTol = 1e-10, kConditionSpread = 10, kUnstabilizedFactor = 10;
constexpr int kQuadratureCases = 200;
constexpr double kQuadratureTol = 1e-12;
constexpr int kTaylorPoints = 100;
constexpr double kTaylorTol = 1e-13;

const std::vector<int> kLadder{8, 16, 32, 64, 128};

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void print_ladder(const ErrorReport& r) {
  std::printf("  correction %s\n", r.correction ? "ON" : "OFF");
  for (const auto& l : r.levels)
    std::printf("    n=%4d h=%.4e dofs=%7td e_u_L2=%.4e e_u_H1=%.4e e_p_L2=%.4e delta_h=%.4e res=%.1e\n", l.n, l.h,
                l.n_dofs, l.errors.e_u_L2, l.errors.e_u_H1, l.errors.e_p_L2, l.delta_h, l.residual);
}

void convergence_criteria() {
  const BenchmarkCase bench;
  ErrorReport on, off;
  try {
    on = run_convergence(bench, kLadder, true);
    off = run_convergence(bench, kLadder, false);
  } catch (const std::exception& err) {
    for (int id : {1, 2, 3}) report(id, "convergence ladder", false, err.what());
    return;
  }
  print_ladder(on);
  print_ladder(off);
  const Rates ron = fit_rates(on.levels, kFitLevels), roff = fit_rates(off.levels, kFitLevels);

  report(1, "correction ON rates",
         ron.e_u_L2 >= kOnVelocityL2 && ron.e_u_H1 >= kOnVelocityH1 && ron.e_p_L2 >= kPressureL2,
         fmt("u_L2 %.3f (>= %.1f), u_H1 %.3f (>= %.1f), p_L2 %.3f (>= %.1f)", ron.e_u_L2, kOnVelocityL2, ron.e_u_H1,
             kOnVelocityH1, ron.e_p_L2, kPressureL2));

  report(2, "correction OFF rates",
         roff.e_u_L2 <= kOffVelocityL2Max && ron.e_u_L2 - roff.e_u_L2 >= kOnOffGap && roff.e_p_L2 >= kPressureL2,
         fmt("u_L2 %.3f (<= %.1f, gap to ON %.3f >= %.1f), p_L2 %.3f (>= %.1f)", roff.e_u_L2, kOffVelocityL2Max,
             ron.e_u_L2 - roff.e_u_L2, kOnOffGap, roff.e_p_L2, kPressureL2));

  const double full = fit_rates(on.levels).delta_h;
  report(3, "geometry gap rate", std::abs(ron.delta_h - kGeometryRate) <= kGeometrySlack,
         fmt("delta_h rate %.3f (2 +- %.1f); whole ladder %.3f", ron.delta_h, kGeometrySlack, full));
}

void fitted_polygon_criterion() {
  double worst = 0;
  std::string detail;
  for (int n : {8, 16, 32}) {
    const auto e = fixture::fitted_polygon_errors(n);
    worst = std::max({worst, e.velocity, e.pressure});
    detail += fmt("n=%d u %.1e p %.1e; ", n, e.velocity, e.pressure);
  }
  report(4, "fitted polygon exactness", worst <= kFittedTol, detail + fmt("tol %.0e", kFittedTol));
}

void divergence_criterion() {
  double worst = 0;
  for (int n : kLadder) {
    const fixture::DiscSetup s(n);
    const SparseMatrix<double> b1 = assemble_b(s.mesh, s.topo, s.velocity, s.pressure, 1, s.params);
    const VectorX<double> ones = VectorX<double>::Ones(s.pressure.n_dofs());
    const VectorX<double> action = b1.transpose() * ones;
    const VectorX<double> scale = SparseMatrix<double>(b1.cwiseAbs()).transpose() * ones;
    worst = std::max(worst, action.cwiseAbs().maxCoeff() / scale.maxCoeff());
  }
  report(5, "constant pressure in the kernel of B1", worst <= kDivergenceTol,
         fmt("max relative |B1^T 1| over the ladder %.2e (<= %.0e)", worst, kDivergenceTol));
}

void skew_criterion() {
  const fixture::DiscSetup s(16);
  const SparseMatrix<double> b1 = assemble_b(s.mesh, s.topo, s.velocity, s.pressure, 1, s.params);
  const SparseMatrix<double> b0 = assemble_b(s.mesh, s.topo, s.velocity, s.pressure, 0, s.params);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int i = 0; i < kSkewPairs; ++i) {
    VectorX<double> v(s.velocity.n_dofs()), q(s.pressure.n_dofs());
    for (Index k = 0; k < v.size(); ++k) v(k) = u(rng);
    for (Index k = 0; k < q.size(); ++k) q(k) = u(rng);
    const double defect = -q.dot(b1 * v) + q.dot(b0 * v);
    const double pairing = fixture::boundary_pairing(s.mesh, s.topo, s.velocity, s.pressure, v, q);
    worst = std::max(worst, std::abs(defect - pairing) / std::abs(pairing));
  }
  report(6, "skew-symmetry defect equals the boundary pairing", worst <= kSkewTol,
         fmt("max relative deviation over %d pairs %.2e (<= %.0e)", kSkewPairs, worst, kSkewTol));
}

void sliding_criterion() {
  BenchmarkCase bench;
  const auto stab = run_sliding_study(bench, kSlidingN, kSlidingOffsets);
  bench.params.gamma_v = bench.params.gamma_q = 0;
  const auto bare = run_sliding_study(bench, kSlidingN, kSlidingOffsets);
  bool all_solved = true;
  double worst_res = 0, lo = std::numeric_limits<double>::infinity(), hi = 0, bare_hi = 0;
  for (const auto& e : stab) {
    all_solved = all_solved && e.solved;
    worst_res = std::max(worst_res, e.solved ? e.residual : std::numeric_limits<double>::infinity());
    lo = std::min(lo, e.condition.condition);
    hi = std::max(hi, e.condition.condition);
  }
  for (const auto& e : bare) bare_hi = std::max(bare_hi, e.condition.condition);
  const bool pass = all_solved && worst_res <= kResidualTol && hi / lo <= kConditionSpread &&
                    bare_hi >= kUnstabilizedFactor * hi;
  report(7, "cut position robustness", pass,
         fmt("worst residual %.1e (<= %.0e), condition %.3e..%.3e ratio %.2f (<= %.0f), unstabilized worst %.3e "
             "= %.1e x stabilized (>= %.0f)",
             worst_res, kResidualTol, lo, hi, hi / lo, kConditionSpread, bare_hi, bare_hi / hi, kUnstabilizedFactor));
}

void quadrature_criterion() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> deg(1, 10);
  double worst = 0;
  int tested = 0;
  while (tested < kQuadratureCases) {
    TriangleCoords<double> tri;
    for (int k = 0; k < 6; ++k) tri(k) = u(rng);
    const V a = tri.col(1) - tri.col(0), b = tri.col(2) - tri.col(0);
    if (a.x() * b.y() - a.y() * b.x() < 0.05) continue;
    const Eigen::Vector3d phi(u(rng), u(rng), u(rng));
    if (phi.minCoeff() > 0 || phi.maxCoeff() < 0) continue;
    const Side side = tested % 2 ? Side::outside : Side::inside;
    const auto poly = oracle::clip_linear({tri.col(0), tri.col(1), tri.col(2)}, {phi(0), phi(1), phi(2)},
                                          side == Side::inside);
    if (oracle::polygon_area(poly) < 1e-6) continue;
    const int d = deg(rng);
    const auto p = oracle::random_polynomial(d, rng);
    const auto rule = cut_volume_rule<double>(tri, phi, d, side);
    const double q = rule.integrate([&](const V& x) { return p(x); });
    const double scale = rule.integrate([&](const V& x) { return std::abs(p(x)); });
    worst = std::max(worst, std::abs(q - p.integrate(poly)) / scale);
    ++tested;
  }
  report(8, "cut quadrature against Green's theorem", worst <= kQuadratureTol,
         fmt("max relative error over %d configurations %.2e (<= %.0e)", kQuadratureCases, worst, kQuadratureTol));
}

void taylor_criterion() {
  const fixture::DiscSetup s(16);
  const auto points = boundary_quadrature(s.topo, s.domain, s.params.boundary_degree());
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  double worst = 0;
  for (int i = 0; i < kTaylorPoints; ++i) {
    const auto& bp = points[pick(rng)];
    const double a0 = u(rng);
    const V grad(u(rng), u(rng));
    const VectorX<double> c =
        interpolate<double>(s.mesh, s.velocity.map, [&](const V& x) { return a0 + grad.dot(x); });
    const LagrangeElement<double> fe(s.mesh.coords(bp.element), s.params.k);
    const auto dofs = s.velocity.map.dofs(bp.element);
    const VectorX<double> t = taylor_trace(fe.eval(bp.x), bp.normal, bp.rho, s.params.k);
    double value = 0;
    for (int j = 0; j < fe.n_basis(); ++j) value += t(j) * c(dofs[j]);
    const V target = bp.x + bp.rho * bp.normal;
    const double exact = a0 + grad.dot(target);
    worst = std::max(worst, std::abs(value - exact) / std::max(1.0, std::abs(exact)));
  }
  report(9, "Taylor trace exact on affine fields", worst <= kTaylorTol,
         fmt("max deviation over %d boundary points %.2e (<= %.0e)", kTaylorPoints, worst, kTaylorTol));
}

}  // namespace

int main() {
  auto guard = [](int id, const char* name, auto fn) {
    try {
      fn();
    } catch (const std::exception& err) {
      report(id, name, false, std::string("error: ") + err.what());
    }
  };
  guard(8, "cut quadrature against Green's theorem", quadrature_criterion);
  guard(9, "Taylor trace exact on affine fields", taylor_criterion);
  guard(6, "skew-symmetry defect equals the boundary pairing", skew_criterion);
  guard(4, "fitted polygon exactness", fitted_polygon_criterion);
  guard(5, "constant pressure in the kernel of B1", divergence_criterion);
  guard(7, "cut position robustness", sliding_criterion);
  guard(1, "convergence ladder", convergence_criteria);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
