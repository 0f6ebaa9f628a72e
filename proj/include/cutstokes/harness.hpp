#ifndef CUTSTOKES_HARNESS_HPP
#define CUTSTOKES_HARNESS_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cutstokes/assembly.hpp"
#include "cutstokes/cut_topology.hpp"
#include "cutstokes/fe_space.hpp"
#include "cutstokes/levelset.hpp"
#include "cutstokes/mesh.hpp"
#include "cutstokes/solver.hpp"

namespace cutstokes {

using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;

/// Reference velocity, its gradient (row i = gradient of component i) and
/// pressure for error measurement.
struct ExactFields {
  std::function<Vec2d(const Vec2d&)> velocity;
  std::function<Mat2d(const Vec2d&)> velocity_gradient;
  std::function<double(const Vec2d&)> pressure;
};

/// Manufactured Stokes flow on a disc with zero body force:
///   u = (20 x y^3, 5 x^4 - 5 y^4),  p = 60 x^2 y - 20 y^3.
struct BenchmarkCase {
  Vec2d center = Vec2d::Zero();
  double radius = 1;
  Box<double> background{Vec2d(-1.5, -1.5), Vec2d(1.5, 1.5)};
  StokesParams<double> params{};

  static Vec2d velocity(const Vec2d& x);
  /// Row i holds the gradient of velocity component i.
  static Mat2d velocity_gradient(const Vec2d& x);
  static double pressure(const Vec2d& x);
  static Vec2d pressure_gradient(const Vec2d& x);
  static Vec2d velocity_laplacian(const Vec2d& x);
  static Vec2d force(const Vec2d& x);

  Disc<double> domain() const { return Disc<double>(center, radius); }
  static ExactFields exact_fields() { return {&velocity, &velocity_gradient, &pressure}; }
};

struct ErrorEntries {
  double e_u_L2 = 0;
  double e_u_H1 = 0;  // seminorm
  double e_p_L2 = 0;  // both pressures shifted to zero mean on Omega_h
};

struct LevelResult {
  int n = 0;
  double h = 0;
  Index n_dofs = 0;
  ErrorEntries errors;
  double delta_h = 0;       // max |rho_h| over boundary quadrature points
  double normal_error = 0;  // max |nu_h - n o p| over boundary quadrature points
  double area_h = 0;
  double residual = 0;
  std::optional<double> condition;
  Index tube_violations = 0;
};

struct Rates {
  double e_u_L2 = 0;
  double e_u_H1 = 0;
  double e_p_L2 = 0;
  double delta_h = 0;
};

struct ErrorReport {
  bool correction = true;
  std::vector<LevelResult> levels;
  Rates rates;  // fitted over all levels
};

/// Everything built for one mesh level, kept for post-processing.
struct LevelState {
  BackgroundMesh<double> mesh;
  CutTopology<double> topology;
  FeSpace velocity;
  FeSpace pressure;
  StokesSolution<double> solution;
};

struct LevelOptions {
  bool estimate_condition = false;
};

/// L2 and H1-seminorm velocity errors and the mean-adjusted L2 pressure
/// error over Omega_h, using cut quadrature of the given degree. Measured
/// against the benchmark flow unless other exact fields are given.
ErrorEntries compute_errors(const BackgroundMesh<double>& mesh, const CutTopology<double>& topo,
                            const FeSpace& velocity, const FeSpace& pressure, const VectorX<double>& u,
                            const VectorX<double>& p, int degree,
                            const ExactFields& exact = BenchmarkCase::exact_fields());

/// Cut quadrature degree for error norms: exact for squared errors of
/// quartic fields when k = 2.
inline int error_quadrature_degree(const StokesParams<double>& params) { return 2 * params.k + 4; }

/// Least-squares slope of log(error) against log(h) over the `finest`
/// smallest-h entries (all entries when `finest` <= 0). Nonpositive errors
/// are skipped with a warning on stderr.
double fit_rate(std::span<const double> h, std::span<const double> errors, int finest = 0);

/// Full pipeline on an n x n background grid: mesh, cut, assembly, solve,
/// error and geometry measurements.
LevelResult run_level(const BenchmarkCase& bench, int n, const LevelOptions& options = {},
                      LevelState* state = nullptr);

ErrorReport run_convergence(const BenchmarkCase& bench, std::span<const int> ladder, bool correction,
                            const LevelOptions& options = {});

Rates fit_rates(const std::vector<LevelResult>& levels, int finest = 0);

/// CSV with header level,h,n_dofs,e_u_L2,e_u_H1,e_p_L2,delta_h,cond_est and
/// a footer row `rate,...` holding the fitted slopes.
void write_csv(std::ostream& os, const ErrorReport& report);

struct SlidingEntry {
  double offset = 0;  // disc-center shift along the study direction
  bool solved = false;
  double residual = 0;
  ConditionEstimate condition;
  std::string error;
};

/// Condition estimates while the disc center slides across one cell of an
/// n x n mesh in `count` equal steps along `direction`.
std::vector<SlidingEntry> run_sliding_study(const BenchmarkCase& bench, int n, int count,
                                            const Vec2d& direction = Vec2d(2, 1).normalized());

void write_sliding_csv(std::ostream& os, const std::vector<SlidingEntry>& entries);

/// Legacy VTK unstructured grid of the discrete domain, cut cells split
/// into triangles, with point data |u_h| and p_h.
void export_fields(std::ostream& os, const LevelState& state);

/// Number of points and triangles `export_fields` writes for a state.
std::pair<Index, Index> field_mesh_size(const LevelState& state);

}  // namespace cutstokes

#endif  // CUTSTOKES_HARNESS_HPP
