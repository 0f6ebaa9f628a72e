#ifndef CUTSTOKES_COMMON_HPP
#define CUTSTOKES_COMMON_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cutstokes {

using Index = std::ptrdiff_t;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Vertex coordinates of a triangle, one column per vertex.
template <typename Scalar>
using TriangleCoords = Eigen::Matrix<Scalar, 2, 3>;

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query outside the validity region of an implicit geometry map.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed mesh input or degenerate cut configuration.
class MeshError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Counter-clockwise rotation of a vector by 90 degrees.
template <typename Scalar>
Vec2<Scalar> perp(const Vec2<Scalar>& v) {
  return Vec2<Scalar>(-v.y(), v.x());
}

}  // namespace cutstokes

#endif  // CUTSTOKES_COMMON_HPP
