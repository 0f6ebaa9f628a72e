#ifndef CUTSTOKES_SOLVER_HPP
#define CUTSTOKES_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include "cutstokes/assembly.hpp"
#include "cutstokes/common.hpp"

namespace cutstokes {

struct SolveReport {
  double residual_rel = 0;
  std::string method;
  int refinement_steps = 0;
  double wall_time = 0;  // seconds
};

template <typename Scalar>
struct StokesSolution {
  VectorX<Scalar> u;
  VectorX<Scalar> p;
  Scalar lambda = 0;
  SolveReport report;
};

/// Raised when the factorization breaks down. Carries the velocity and
/// pressure shares of an approximate null vector of the operator.
class SingularSystemError : public SolverError {
 public:
  SingularSystemError(const std::string& what, double velocity_share, double pressure_share)
      : SolverError(what), velocity_share_(velocity_share), pressure_share_(pressure_share) {}

  double velocity_share() const { return velocity_share_; }
  double pressure_share() const { return pressure_share_; }

 private:
  double velocity_share_;
  double pressure_share_;
};

template <typename Scalar>
using SparseLUSolver = Eigen::SparseLU<SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>>;

namespace detail {

/// Deterministic, non-symmetric start vector for power iterations.
template <typename Scalar>
VectorX<Scalar> start_vector(Index n) {
  VectorX<Scalar> x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1 + Scalar(0.5) * std::sin(Scalar(i) * Scalar(1.3));
  return x.normalized();
}

/// Approximate null vector of a singular matrix via inverse iteration on a
/// slightly shifted copy.
template <typename Scalar>
VectorX<Scalar> near_null_vector(const SparseMatrix<Scalar>& mat) {
  Scalar scale = 0;
  for (Index k = 0; k < mat.outerSize(); ++k)
    for (typename SparseMatrix<Scalar>::InnerIterator it(mat, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  SparseMatrix<Scalar> id(mat.rows(), mat.cols());
  id.setIdentity();
  const SparseMatrix<Scalar> shifted = mat + Scalar(1e-8) * scale * id;
  SparseLUSolver<Scalar> lu(shifted);
  if (lu.info() != Eigen::Success) return {};
  VectorX<Scalar> x = start_vector<Scalar>(mat.rows());
  for (int it = 0; it < 20; ++it) x = lu.solve(x).normalized();
  return x;
}

}  // namespace detail

/// Direct LU solve of a general sparse system with up to two steps of
/// iterative refinement; throws when the relative residual stays above
/// `tol`.
template <typename Scalar>
VectorX<Scalar> solve_sparse(const SparseMatrix<Scalar>& mat, const VectorX<Scalar>& rhs, SolveReport& report,
                             Index n_velocity = -1, double tol = 1e-10) {
  const auto t0 = std::chrono::steady_clock::now();
  report.method = "sparse LU (COLAMD)";
  SparseLUSolver<Scalar> lu;
  lu.analyzePattern(mat);
  lu.factorize(mat);
  if (lu.info() != Eigen::Success) {
    const VectorX<Scalar> null = detail::near_null_vector(mat);
    double vshare = std::numeric_limits<double>::quiet_NaN(), pshare = vshare;
    if (null.size() > 0 && n_velocity >= 0) {
      vshare = double(null.head(n_velocity).squaredNorm());
      pshare = double(null.tail(null.size() - n_velocity).squaredNorm());
    }
    std::ostringstream msg;
    msg << "singular system: " << lu.lastErrorMessage() << " (near-null vector: velocity share " << vshare
        << ", pressure share " << pshare << ")";
    throw SingularSystemError(msg.str(), vshare, pshare);
  }
  VectorX<Scalar> x = lu.solve(rhs);
  const Scalar bnorm = rhs.norm() > 0 ? rhs.norm() : Scalar(1);
  Scalar res = (mat * x - rhs).norm() / bnorm;
  report.refinement_steps = 0;
  while (res > tol && report.refinement_steps < 2) {
    x += lu.solve(VectorX<Scalar>(rhs - mat * x));
    res = (mat * x - rhs).norm() / bnorm;
    ++report.refinement_steps;
  }
  report.residual_rel = double(res);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!(res <= tol)) {
    std::ostringstream msg;
    msg << "solve did not reach the residual tolerance: " << double(res) << " > " << tol;
    throw SolverError(msg.str());
  }
  return x;
}

template <typename Scalar>
StokesSolution<Scalar> solve(const SaddleSystem<Scalar>& system) {
  StokesSolution<Scalar> sol;
  const VectorX<Scalar> x = solve_sparse<Scalar>(system.matrix(), system.rhs(), sol.report, system.n_u());
  sol.u = x.head(system.n_u());
  sol.p = x.segment(system.n_u(), system.n_p());
  sol.lambda = x(system.size() - 1);
  return sol;
}

struct ConditionEstimate {
  double largest = 0;   // largest singular value
  double smallest = 0;  // smallest singular value
  double condition = 0;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

/// Extreme singular values of a sparse matrix: power iteration on M^T M for
/// the largest, inverse iteration through an LU factorization for the
/// smallest. Both stop when the estimate changes by less than `rel_tol`
/// relative; non-convergence after `max_iter` is reported, not thrown.
template <typename Scalar>
ConditionEstimate estimate_condition(const SparseMatrix<Scalar>& mat, double rel_tol = 1e-4, int max_iter = 5000) {
  ConditionEstimate est;
  bool conv_hi = false, conv_lo = false;

  VectorX<Scalar> x = detail::start_vector<Scalar>(mat.cols());
  Scalar prev = 0;
  for (int it = 0; it < max_iter; ++it) {
    const VectorX<Scalar> y = mat * x;
    const Scalar sigma = y.norm();
    x = (mat.transpose() * y).normalized();
    est.iterations = std::max(est.iterations, it + 1);
    if (it > 0 && std::abs(sigma - prev) <= Scalar(rel_tol) * sigma) {
      conv_hi = true;
      prev = sigma;
      break;
    }
    prev = sigma;
  }
  est.largest = double(prev);

  SparseLUSolver<Scalar> lu;
  lu.analyzePattern(mat);
  lu.factorize(mat);
  if (lu.info() != Eigen::Success) {
    est.singular = true;
    est.smallest = 0;
    est.condition = std::numeric_limits<double>::infinity();
    return est;
  }
  x = detail::start_vector<Scalar>(mat.cols());
  prev = 0;
  for (int it = 0; it < max_iter; ++it) {
    const VectorX<Scalar> y = lu.transpose().solve(x);
    const VectorX<Scalar> z = lu.solve(y);
    const Scalar sigma = 1 / y.norm();
    x = z.normalized();
    est.iterations = std::max(est.iterations, it + 1);
    if (!std::isfinite(double(sigma))) {
      est.singular = true;
      break;
    }
    if (it > 0 && std::abs(sigma - prev) <= Scalar(rel_tol) * sigma) {
      conv_lo = true;
      prev = sigma;
      break;
    }
    prev = sigma;
  }
  est.smallest = double(prev);
  est.condition = est.smallest > 0 ? est.largest / est.smallest : std::numeric_limits<double>::infinity();
  est.converged = conv_hi && conv_lo;
  return est;
}

}  // namespace cutstokes

#endif  // CUTSTOKES_SOLVER_HPP
