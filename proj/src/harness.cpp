#include "cutstokes/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace cutstokes {

Vec2d BenchmarkCase::velocity(const Vec2d& x) {
  const double a = x.x(), b = x.y();
  return {20 * a * b * b * b, 5 * std::pow(a, 4) - 5 * std::pow(b, 4)};
}

Mat2d BenchmarkCase::velocity_gradient(const Vec2d& x) {
  const double a = x.x(), b = x.y();
  Mat2d g;
  g << 20 * b * b * b, 60 * a * b * b,  //
      20 * a * a * a, -20 * b * b * b;
  return g;
}

double BenchmarkCase::pressure(const Vec2d& x) {
  const double a = x.x(), b = x.y();
  return 60 * a * a * b - 20 * b * b * b;
}

Vec2d BenchmarkCase::pressure_gradient(const Vec2d& x) {
  const double a = x.x(), b = x.y();
  return {120 * a * b, 60 * a * a - 60 * b * b};
}

Vec2d BenchmarkCase::velocity_laplacian(const Vec2d& x) {
  const double a = x.x(), b = x.y();
  return {120 * a * b, 60 * a * a - 60 * b * b};
}

Vec2d BenchmarkCase::force(const Vec2d&) { return Vec2d::Zero(); }

namespace {

/// Values and gradients of a discrete velocity/pressure pair at one point.
struct FieldSample {
  Vec2d u;
  Mat2d grad_u;  // row c = gradient of component c
  double p;
};

FieldSample sample_fields(const LagrangeElement<double>& vfe, const LagrangeElement<double>& pfe,
                          std::span<const Index> vdofs, std::span<const Index> pdofs, const FeSpace& velocity,
                          const VectorX<double>& u, const VectorX<double>& p, const Vec2d& x) {
  const auto vb = vfe.eval(x);
  const auto pb = pfe.eval(x);
  FieldSample s;
  s.u.setZero();
  s.grad_u.setZero();
  s.p = 0;
  for (int c = 0; c < 2; ++c)
    for (Index i = 0; i < vb.values.size(); ++i) {
      const double coeff = u(velocity.offset(c) + vdofs[i]);
      s.u(c) += coeff * vb.values(i);
      s.grad_u.row(c) += coeff * vb.gradients.col(i).transpose();
    }
  for (Index i = 0; i < pb.values.size(); ++i) s.p += p(pdofs[i]) * pb.values(i);
  return s;
}

std::string level_context(int n, const std::string& what) {
  std::ostringstream msg;
  msg << "level n=" << n << ": " << what;
  return msg.str();
}

}  // namespace

ErrorEntries compute_errors(const BackgroundMesh<double>& mesh, const CutTopology<double>& topo,
                            const FeSpace& velocity, const FeSpace& pressure, const VectorX<double>& u,
                            const VectorX<double>& p, int degree, const ExactFields& exact) {
  // pass 1: means of both pressures over Omega_h
  double area = 0, mean_h = 0, mean_exact = 0;
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const TriangleCoords<double> tri = mesh.coords(e);
    const LagrangeElement<double> vfe(tri, velocity.order()), pfe(tri, pressure.order());
    const QuadRule<double> rule = cut_volume_rule(tri, topo.element_phi(mesh, e), degree);
    for (Index q = 0; q < rule.size(); ++q) {
      const Vec2d x = rule.points.col(q);
      const FieldSample s = sample_fields(vfe, pfe, velocity.map.dofs(e), pressure.map.dofs(e), velocity, u, p, x);
      area += rule.weights(q);
      mean_h += rule.weights(q) * s.p;
      mean_exact += rule.weights(q) * exact.pressure(x);
    }
  }
  mean_h /= area;
  mean_exact /= area;

  double eu = 0, egrad = 0, ep = 0;
  for (Index e : topo.active_elements) {
    if (!topo.integrates(e)) continue;
    const TriangleCoords<double> tri = mesh.coords(e);
    const LagrangeElement<double> vfe(tri, velocity.order()), pfe(tri, pressure.order());
    const QuadRule<double> rule = cut_volume_rule(tri, topo.element_phi(mesh, e), degree);
    for (Index q = 0; q < rule.size(); ++q) {
      const Vec2d x = rule.points.col(q);
      const FieldSample s = sample_fields(vfe, pfe, velocity.map.dofs(e), pressure.map.dofs(e), velocity, u, p, x);
      const double w = rule.weights(q);
      eu += w * (s.u - exact.velocity(x)).squaredNorm();
      egrad += w * (s.grad_u - exact.velocity_gradient(x)).squaredNorm();
      const double dp = (s.p - mean_h) - (exact.pressure(x) - mean_exact);
      ep += w * dp * dp;
    }
  }
  return {std::sqrt(eu), std::sqrt(egrad), std::sqrt(ep)};
}

double fit_rate(std::span<const double> h, std::span<const double> errors, int finest) {
  if (h.size() != errors.size()) throw Error("fit_rate: size mismatch");
  if (h.size() < 3) throw Error("fit_rate: need at least three levels");
  std::vector<std::size_t> order(h.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
  if (finest > 0 && static_cast<std::size_t>(finest) < order.size()) order.resize(finest);

  std::vector<double> lx, ly;
  for (std::size_t i : order) {
    if (!(errors[i] > 0) || !(h[i] > 0)) {
      std::cerr << "fit_rate: skipping nonpositive entry (h=" << h[i] << ", error=" << errors[i] << ")\n";
      continue;
    }
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(errors[i]));
  }
  if (lx.size() < 2) throw Error("fit_rate: fewer than two usable levels");
  const double n = double(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

LevelResult run_level(const BenchmarkCase& bench, int n, const LevelOptions& options, LevelState* state) {
  try {
    const StokesParams<double>& params = bench.params;
    params.validate();
    LevelState local;
    LevelState& st = state ? *state : local;
    const Disc<double> domain = bench.domain();

    st.mesh = build_structured_mesh(bench.background, n);
    st.topology = build_cut_topology(st.mesh, domain);
    std::tie(st.velocity, st.pressure) = make_spaces(st.mesh, st.topology, params);
    const SaddleSystem<double> system =
        assemble_system(st.mesh, st.topology, st.velocity, st.pressure, params, &BenchmarkCase::force,
                        &BenchmarkCase::velocity, domain);
    st.solution = solve(system);

    LevelResult result;
    result.n = n;
    result.h = st.mesh.h;
    result.n_dofs = system.n_u() + system.n_p();
    result.residual = st.solution.report.residual_rel;
    result.errors = compute_errors(st.mesh, st.topology, st.velocity, st.pressure, st.solution.u, st.solution.p,
                                   error_quadrature_degree(params));
    result.area_h = discrete_area(st.mesh, st.topology);

    const double delta0 = domain.tube_width();
    for (const auto& bp : boundary_quadrature(st.topology, domain, params.boundary_degree())) {
      result.delta_h = std::max(result.delta_h, std::abs(bp.rho));
      const Vec2d n_exact = domain.exact_normal(domain.closest_point(bp.x));
      result.normal_error = std::max(result.normal_error, (bp.normal - n_exact).norm());
      for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0})
        if (!(std::abs(domain.signed_distance(bp.x + frac * bp.rho * bp.normal)) < delta0)) {
          ++result.tube_violations;
          break;
        }
    }
    if (result.tube_violations > 0)
      std::cerr << level_context(n, "boundary map leaves the tubular neighbourhood at ")
                << result.tube_violations << " quadrature points\n";
    if (options.estimate_condition) result.condition = estimate_condition(system.matrix()).condition;
    return result;
  } catch (const Error& err) {
    throw Error(level_context(n, err.what()));
  }
}

Rates fit_rates(const std::vector<LevelResult>& levels, int finest) {
  std::vector<double> h, eu, eg, ep, dh;
  for (const auto& l : levels) {
    h.push_back(l.h);
    eu.push_back(l.errors.e_u_L2);
    eg.push_back(l.errors.e_u_H1);
    ep.push_back(l.errors.e_p_L2);
    dh.push_back(l.delta_h);
  }
  return {fit_rate(h, eu, finest), fit_rate(h, eg, finest), fit_rate(h, ep, finest), fit_rate(h, dh, finest)};
}

ErrorReport run_convergence(const BenchmarkCase& bench, std::span<const int> ladder, bool correction,
                            const LevelOptions& options) {
  if (ladder.size() < 4) throw Error("run_convergence: need at least four levels");
  BenchmarkCase variant = bench;
  variant.params.taylor_order = correction ? bench.params.k : 0;
  ErrorReport report;
  report.correction = correction;
  for (int n : ladder) report.levels.push_back(run_level(variant, n, options));
  for (std::size_t i = 1; i < report.levels.size(); ++i)
    if (!(report.levels[i].h < report.levels[i - 1].h))
      throw Error("run_convergence: the ladder must refine strictly");
  report.rates = fit_rates(report.levels);
  return report;
}

void write_csv(std::ostream& os, const ErrorReport& report) {
  os << "level,h,n_dofs,e_u_L2,e_u_H1,e_p_L2,delta_h,cond_est\n";
  os << std::scientific << std::setprecision(10);
  for (const auto& l : report.levels) {
    os << l.n << ',' << l.h << ',' << l.n_dofs << ',' << l.errors.e_u_L2 << ',' << l.errors.e_u_H1 << ','
       << l.errors.e_p_L2 << ',' << l.delta_h << ',';
    if (l.condition) os << *l.condition;
    else os << "nan";
    os << '\n';
  }
  os << std::fixed << std::setprecision(4);
  os << "rate,,," << report.rates.e_u_L2 << ',' << report.rates.e_u_H1 << ',' << report.rates.e_p_L2 << ','
     << report.rates.delta_h << ",\n";
}

std::vector<SlidingEntry> run_sliding_study(const BenchmarkCase& bench, int n, int count, const Vec2d& direction) {
  if (count < 1) throw Error("run_sliding_study: need at least one offset");
  const BackgroundMesh<double> mesh = build_structured_mesh(bench.background, n);
  const double cell = (bench.background.upper.x() - bench.background.lower.x()) / n;
  std::vector<SlidingEntry> entries;
  for (int i = 0; i < count; ++i) {
    SlidingEntry entry;
    entry.offset = cell * i / count;
    BenchmarkCase shifted = bench;
    shifted.center = bench.center + entry.offset * direction.normalized();
    try {
      const Disc<double> domain = shifted.domain();
      const CutTopology<double> topo = build_cut_topology(mesh, domain);
      const auto [velocity, pressure] = make_spaces(mesh, topo, shifted.params);
      const SaddleSystem<double> system = assemble_system(mesh, topo, velocity, pressure, shifted.params,
                                                          &BenchmarkCase::force, &BenchmarkCase::velocity, domain);
      const SparseMatrix<double> mat = system.matrix();
      entry.condition = estimate_condition(mat);
      try {
        SolveReport report;
        solve_sparse<double>(mat, system.rhs(), report, system.n_u());
        entry.solved = true;
        entry.residual = report.residual_rel;
      } catch (const SolverError& err) {
        entry.error = err.what();
      }
    } catch (const Error& err) {
      entry.error = err.what();
    }
    entries.push_back(entry);
  }
  return entries;
}

void write_sliding_csv(std::ostream& os, const std::vector<SlidingEntry>& entries) {
  os << "offset,solved,residual,sigma_max,sigma_min,cond_est,converged\n";
  os << std::scientific << std::setprecision(10);
  for (const auto& e : entries)
    os << e.offset << ',' << int(e.solved) << ',' << e.residual << ',' << e.condition.largest << ','
       << e.condition.smallest << ',' << e.condition.condition << ',' << int(e.condition.converged) << '\n';
}

namespace {

template <typename Visit>
void for_each_field_triangle(const LevelState& st, const Visit& visit) {
  for (Index e : st.topology.active_elements) {
    if (!st.topology.integrates(e)) continue;
    const TriangleCoords<double> tri = st.mesh.coords(e);
    const auto poly = clip_triangle(tri, st.topology.element_phi(st.mesh, e));
    for (const auto& sub : fan_triangulate(poly)) visit(e, tri, sub);
  }
}

}  // namespace

std::pair<Index, Index> field_mesh_size(const LevelState& st) {
  Index tris = 0;
  for_each_field_triangle(st, [&](Index, const TriangleCoords<double>&, const TriangleCoords<double>&) { ++tris; });
  return {3 * tris, tris};
}

void export_fields(std::ostream& os, const LevelState& st) {
  std::vector<Vec2d> points;
  std::vector<double> speed, pressure;
  for_each_field_triangle(st, [&](Index e, const TriangleCoords<double>& tri, const TriangleCoords<double>& sub) {
    const LagrangeElement<double> vfe(tri, st.velocity.order()), pfe(tri, st.pressure.order());
    for (int i = 0; i < 3; ++i) {
      const Vec2d x = sub.col(i);
      const FieldSample s = sample_fields(vfe, pfe, st.velocity.map.dofs(e), st.pressure.map.dofs(e), st.velocity,
                                          st.solution.u, st.solution.p, x);
      points.push_back(x);
      speed.push_back(s.u.norm());
      pressure.push_back(s.p);
    }
  });
  if (!os) throw Error("export_fields: output stream is not writable");
  const std::size_t np = points.size(), nt = np / 3;
  os << "# vtk DataFile Version 3.0\n"
     << "cut Stokes solution: |u_h| and p_h on the discrete domain\n"
     << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(12);
  os << "POINTS " << np << " double\n";
  for (const auto& x : points) os << x.x() << ' ' << x.y() << " 0\n";
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) os << "3 " << 3 * t << ' ' << 3 * t + 1 << ' ' << 3 * t + 2 << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) os << "5\n";
  os << "POINT_DATA " << np << '\n';
  os << "SCALARS velocity_magnitude double 1\nLOOKUP_TABLE default\n";
  for (double v : speed) os << v << '\n';
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (double v : pressure) os << v << '\n';
  if (!os) throw Error("export_fields: write failed");
}

}  // namespace cutstokes
