#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rbmc/point.hpp"
#include "rbmc/rng.hpp"

namespace rbmc {

enum class DomainKind { whole_space, box, ball, radial };

// A point of the boundary together with the inward unit normal there.
struct BoundaryPoint {
  Point location{};
  Point inward_normal{};
};

// Geometric oracle for the supported state spaces: all of R^d, an
// axis-aligned box, a ball, or (d = 2) a star-shaped region given by a
// trigonometric-polynomial radius r(theta) > 0. Immutable after
// construction; all queries are reentrant.
class Domain {
 public:
  static Domain whole_space(int d);
  static Domain box(const Point& lo, const Point& hi, int d);
  static Domain ball(const Point& center, double radius, int d);
  // r(theta) = r0 + sum_k cos_coef[k] cos((k+1) theta) + sin_coef[k] sin((k+1) theta)
  static Domain radial(double r0, std::vector<double> cos_coef, std::vector<double> sin_coef);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool bounded() const { return kind_ != DomainKind::whole_space; }

  // Length scale used for relative tolerances. Infinity for whole space.
  double diameter() const;
  // Lebesgue measure m(D). Exact for all bounded kinds; infinity otherwise.
  double volume() const;
  // Tight axis-aligned bounding box (bounded kinds only).
  void bounding_box(Point& lo, Point& hi) const;

  // Membership in the open set D.
  bool contains(const Point& x) const;

  // Euclidean distance to the boundary. Requires x in closure(D) up to a
  // relative tolerance; +infinity for whole space.
  double dist_to_boundary(const Point& x) const;

  // A nearest boundary point with its inward normal. Ties are broken toward
  // the lexicographically smallest location; from the exact center of a ball
  // the point in direction of the first basis vector is returned.
  BoundaryPoint nearest_boundary_point(const Point& x) const;

  // n i.i.d. uniform points on D by rejection from the bounding box.
  std::vector<Point> sample_uniform(int n, RngStream& rng) const;

  // radial kind only
  double radial_radius(double theta) const;
  double radial_radius_deriv(double theta) const;
  BoundaryPoint radial_boundary_at(double theta) const;
  double radial_r0() const { return r0_; }
  const std::vector<double>& radial_cos() const { return cos_coef_; }
  const std::vector<double>& radial_sin() const { return sin_coef_; }

  // box kind accessors
  const Point& box_lo() const { return lo_; }
  const Point& box_hi() const { return hi_; }
  // ball kind accessors
  const Point& ball_center() const { return center_; }
  double ball_radius() const { return radius_; }

  // Boundary regularity exponent for correction terms: 1 for ball/radial
  // (smooth), and 1 for box with the Lipschitz-only caveat flag set.
  double holder_alpha() const { return 1.0; }
  bool lipschitz_only() const { return kind_ == DomainKind::box; }

  std::string describe() const;

 private:
  Domain() = default;

  DomainKind kind_ = DomainKind::whole_space;
  int dim_ = 1;
  Point lo_{}, hi_{};       // box
  Point center_{};          // ball
  double radius_ = 0.0;     // ball
  double r0_ = 0.0;         // radial
  std::vector<double> cos_coef_, sin_coef_;
  double radial_rmax_ = 0.0;
};

// Volume of the d-dimensional unit ball.
double unit_ball_volume(int d);

}  // namespace rbmc
