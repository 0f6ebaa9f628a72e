#ifndef CUTSTOKES_LEVELSET_HPP
#define CUTSTOKES_LEVELSET_HPP

#include <cmath>
#include <concepts>
#include <limits>
#include <sstream>

#include "cutstokes/common.hpp"

namespace cutstokes {

/// Anything that describes a domain {x : phi(x) < 0} and can shoot rays
/// onto its boundary.
template <typename Domain, typename Scalar>
concept ImplicitDomain = requires(const Domain& d, const Vec2<Scalar>& x) {
  { d.signed_distance(x) } -> std::convertible_to<Scalar>;
  { d.directional_distance(x, x) } -> std::convertible_to<Scalar>;
  { d.tube_width() } -> std::convertible_to<Scalar>;
};

template <typename Scalar>
struct GeometryConfig {
  Scalar delta0;    // half-width of the tubular neighbourhood
  Scalar root_tol;  // tolerance on |phi| at computed boundary points
  int zeta = 2;     // expected order of the boundary approximation

  void validate(Scalar radius) const {
    if (!(delta0 > Scalar(0)) || !(delta0 < radius))
      throw GeometryError("GeometryConfig: delta0 must lie in (0, radius)");
    if (!(root_tol > Scalar(0)) || root_tol > Scalar(1e-10))
      throw GeometryError("GeometryConfig: root_tol must lie in (0, 1e-10]");
    if (zeta != 1 && zeta != 2)
      throw GeometryError("GeometryConfig: zeta must be 1 or 2");
  }
};

/// Smallest-magnitude root of s -> phi(x + s nu) in [-delta0, delta0] by
/// scanning outwards from s = 0 for a sign change and bisecting.
///
/// Works for any level set that is continuous along the ray; used as the
/// fallback for domains without a closed-form ray intersection.
template <typename Scalar, typename Phi>
Scalar bisect_ray_root(const Phi& phi, const Vec2<Scalar>& x, const Vec2<Scalar>& nu,
                       Scalar delta0, Scalar root_tol, int samples = 256) {
  const Scalar f0 = phi(x);
  if (std::abs(f0) <= root_tol) return Scalar(0);

  auto bisect = [&](Scalar a, Scalar fa, Scalar b) {
    // invariant: sign(phi(a)) == sign(fa) != sign(phi(b))
    for (int it = 0; it < 200; ++it) {
      const Scalar mid = (a + b) / 2;
      const Scalar fm = phi(Vec2<Scalar>(x + mid * nu));
      if (std::abs(fm) <= root_tol || std::abs(b - a) <= std::numeric_limits<Scalar>::epsilon() * delta0)
        return mid;
      if ((fm < 0) == (fa < 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    return (a + b) / 2;
  };

  const Scalar step = delta0 / samples;
  Scalar prev_pos = 0, prev_neg = 0;
  Scalar f_pos = f0, f_neg = f0;
  for (int i = 1; i <= samples; ++i) {
    const Scalar s = step * i;
    const Scalar fp = phi(Vec2<Scalar>(x + s * nu));
    const Scalar fn = phi(Vec2<Scalar>(x - s * nu));
    const bool cross_pos = (fp <= 0) != (f_pos <= 0) || fp == 0;
    const bool cross_neg = (fn <= 0) != (f_neg <= 0) || fn == 0;
    if (cross_pos && cross_neg) {
      const Scalar rp = fp == 0 ? s : bisect(prev_pos, f_pos, s);
      const Scalar rn = fn == 0 ? -s : bisect(prev_neg, f_neg, -s);
      return std::abs(rp) <= std::abs(rn) ? rp : rn;
    }
    if (cross_pos) return fp == 0 ? s : bisect(prev_pos, f_pos, s);
    if (cross_neg) return fn == 0 ? -s : bisect(prev_neg, f_neg, -s);
    prev_pos = s;
    prev_neg = -s;
    f_pos = fp;
    f_neg = fn;
  }
  std::ostringstream msg;
  msg << "ray from (" << x.x() << ", " << x.y() << ") along (" << nu.x() << ", " << nu.y()
      << ") does not cross the boundary within the tube";
  throw GeometryError(msg.str());
}

/// The disc {x : |x - center| < radius} with its exact signed distance.
template <typename Scalar>
class Disc {
 public:
  Disc(const Vec2<Scalar>& center, Scalar radius)
      : Disc(center, radius, GeometryConfig<Scalar>{radius / 2, Scalar(1e-12), 2}) {}

  Disc(const Vec2<Scalar>& center, Scalar radius, const GeometryConfig<Scalar>& config)
      : center_(center), radius_(radius), config_(config) {
    if (!(radius > Scalar(0))) throw GeometryError("Disc: radius must be positive");
    config_.validate(radius);
  }

  const Vec2<Scalar>& center() const { return center_; }
  Scalar radius() const { return radius_; }
  const GeometryConfig<Scalar>& config() const { return config_; }
  Scalar tube_width() const { return config_.delta0; }

  Scalar signed_distance(const Vec2<Scalar>& x) const { return (x - center_).norm() - radius_; }

  Vec2<Scalar> closest_point(const Vec2<Scalar>& x) const {
    const Vec2<Scalar> d = x - center_;
    const Scalar r = d.norm();
    if (r == Scalar(0)) throw GeometryError("closest_point: direction undefined at the disc center");
    if (!(std::abs(r - radius_) < config_.delta0))
      throw GeometryError("closest_point: point outside the tubular neighbourhood");
    return center_ + (radius_ / r) * d;
  }

  /// Exterior unit normal at a point of the boundary.
  Vec2<Scalar> exact_normal(const Vec2<Scalar>& x) const {
    if (!(std::abs(signed_distance(x)) < config_.root_tol * radius_))
      throw GeometryError("exact_normal: point is not on the boundary");
    return (x - center_).normalized();
  }

  /// Signed distance along nu from x to the boundary, i.e. the root s of
  /// |x + s nu - center| = radius with the smallest |s|.
  Scalar directional_distance(const Vec2<Scalar>& x, const Vec2<Scalar>& nu) const {
    const Vec2<Scalar> d = x - center_;
    const Scalar r = d.norm();
    // c = |d|^2 - R^2 in factored form to avoid cancellation near the circle
    const Scalar c = (r - radius_) * (r + radius_);
    if (c == Scalar(0)) return Scalar(0);
    const Scalar b = d.dot(nu);
    const Scalar disc = b * b - c;
    if (disc < Scalar(0)) throw GeometryError("directional_distance: ray misses the boundary");
    const Scalar q = -(b + std::copysign(std::sqrt(disc), b));
    const Scalar root = c / q;
    if (!(std::abs(root) < config_.delta0))
      throw GeometryError("directional_distance: boundary crossing outside the tube");
    return root;
  }

  /// The point x + s nu on the boundary reached along nu.
  Vec2<Scalar> map_ph(const Vec2<Scalar>& x, const Vec2<Scalar>& nu) const {
    return x + directional_distance(x, nu) * nu;
  }

 private:
  Vec2<Scalar> center_;
  Scalar radius_;
  GeometryConfig<Scalar> config_;
};

static_assert(ImplicitDomain<Disc<double>, double>);

}  // namespace cutstokes

#endif  // CUTSTOKES_LEVELSET_HPP
