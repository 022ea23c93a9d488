#include "rbmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rbmc {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("Domain: dimension must be 1..3");
}
}  // namespace

double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::exp(std::lgamma(0.5 * d + 1.0));
}

Domain Domain::whole_space(int d) {
  check_dim(d);
  Domain dom;
  dom.kind_ = DomainKind::whole_space;
  dom.dim_ = d;
  return dom;
}

Domain Domain::box(const Point& lo, const Point& hi, int d) {
  check_dim(d);
  for (int i = 0; i < d; ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("Domain::box: lo < hi required per axis");
  Domain dom;
  dom.kind_ = DomainKind::box;
  dom.dim_ = d;
  dom.lo_ = lo;
  dom.hi_ = hi;
  return dom;
}

Domain Domain::ball(const Point& center, double radius, int d) {
  check_dim(d);
  if (!(radius > 0.0)) throw std::invalid_argument("Domain::ball: radius must be positive");
  Domain dom;
  dom.kind_ = DomainKind::ball;
  dom.dim_ = d;
  dom.center_ = center;
  dom.radius_ = radius;
  return dom;
}

Domain Domain::radial(double r0, std::vector<double> cos_coef, std::vector<double> sin_coef) {
  Domain dom;
  dom.kind_ = DomainKind::radial;
  dom.dim_ = 2;
  dom.r0_ = r0;
  dom.cos_coef_ = std::move(cos_coef);
  dom.sin_coef_ = std::move(sin_coef);
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double r = dom.radial_radius(2.0 * kPi * i / 4096.0);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  if (!(rmin > 0.0)) throw std::invalid_argument("Domain::radial: r(theta) must stay positive");
  dom.radial_rmax_ = rmax;
  return dom;
}

double Domain::radial_radius(double theta) const {
  double r = r0_;
  for (std::size_t k = 0; k < cos_coef_.size(); ++k)
    r += cos_coef_[k] * std::cos(double(k + 1) * theta);
  for (std::size_t k = 0; k < sin_coef_.size(); ++k)
    r += sin_coef_[k] * std::sin(double(k + 1) * theta);
  return r;
}

double Domain::radial_radius_deriv(double theta) const {
  double dr = 0.0;
  for (std::size_t k = 0; k < cos_coef_.size(); ++k)
    dr -= cos_coef_[k] * double(k + 1) * std::sin(double(k + 1) * theta);
  for (std::size_t k = 0; k < sin_coef_.size(); ++k)
    dr += sin_coef_[k] * double(k + 1) * std::cos(double(k + 1) * theta);
  return dr;
}

BoundaryPoint Domain::radial_boundary_at(double theta) const {
  const double r = radial_radius(theta);
  const double dr = radial_radius_deriv(theta);
  const double ct = std::cos(theta), st = std::sin(theta);
  BoundaryPoint bp;
  bp.location = make_point(r * ct, r * st);
  // tangent of theta -> (r cos, r sin); outward normal is the clockwise
  // rotation of the tangent for a counterclockwise curve
  const double tx = dr * ct - r * st;
  const double ty = dr * st + r * ct;
  const double tn = std::sqrt(tx * tx + ty * ty);
  bp.inward_normal = make_point(-ty / tn, tx / tn);
  return bp;
}

double Domain::diameter() const {
  switch (kind_) {
    case DomainKind::whole_space:
      return std::numeric_limits<double>::infinity();
    case DomainKind::box:
      return dist(lo_, hi_, dim_);
    case DomainKind::ball:
      return 2.0 * radius_;
    case DomainKind::radial:
      return 2.0 * radial_rmax_;
  }
  return 0.0;
}

double Domain::volume() const {
  switch (kind_) {
    case DomainKind::whole_space:
      return std::numeric_limits<double>::infinity();
    case DomainKind::box: {
      double v = 1.0;
      for (int i = 0; i < dim_; ++i) v *= hi_[i] - lo_[i];
      return v;
    }
    case DomainKind::ball:
      return unit_ball_volume(dim_) * std::pow(radius_, dim_);
    case DomainKind::radial: {
      // (1/2) int r(theta)^2 dtheta, exact for a trigonometric polynomial
      double v = 2.0 * kPi * r0_ * r0_;
      for (double c : cos_coef_) v += kPi * c * c;
      for (double s : sin_coef_) v += kPi * s * s;
      return 0.5 * v;
    }
  }
  return 0.0;
}

void Domain::bounding_box(Point& lo, Point& hi) const {
  switch (kind_) {
    case DomainKind::whole_space:
      throw std::logic_error("bounding_box: unbounded domain");
    case DomainKind::box:
      lo = lo_;
      hi = hi_;
      return;
    case DomainKind::ball:
      for (int i = 0; i < dim_; ++i) {
        lo[i] = center_[i] - radius_;
        hi[i] = center_[i] + radius_;
      }
      return;
    case DomainKind::radial:
      lo = make_point(-radial_rmax_, -radial_rmax_);
      hi = make_point(radial_rmax_, radial_rmax_);
      return;
  }
}

bool Domain::contains(const Point& x) const {
  switch (kind_) {
    case DomainKind::whole_space:
      return true;
    case DomainKind::box:
      for (int i = 0; i < dim_; ++i)
        if (!(x[i] > lo_[i] && x[i] < hi_[i])) return false;
      return true;
    case DomainKind::ball:
      return dist2(x, center_, dim_) < radius_ * radius_;
    case DomainKind::radial: {
      const double r2 = norm2(x, 2);
      if (r2 == 0.0) return true;
      const double rt = radial_radius(std::atan2(x[1], x[0]));
      return r2 < rt * rt;
    }
  }
  return false;
}

double Domain::dist_to_boundary(const Point& x) const {
  const double tol = kind_ == DomainKind::whole_space ? 0.0 : 1e-9 * diameter();
  switch (kind_) {
    case DomainKind::whole_space:
      return std::numeric_limits<double>::infinity();
    case DomainKind::box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) {
        if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol)
          throw std::invalid_argument("dist_to_boundary: point outside closure(D)");
        d = std::min(d, std::max(0.0, std::min(x[i] - lo_[i], hi_[i] - x[i])));
      }
      return d;
    }
    case DomainKind::ball: {
      const double r = dist(x, center_, dim_);
      if (r > radius_ + tol)
        throw std::invalid_argument("dist_to_boundary: point outside closure(D)");
      return std::max(0.0, radius_ - r);
    }
    case DomainKind::radial: {
      const BoundaryPoint bp = nearest_boundary_point(x);
      const double d = dist(x, bp.location, 2);
      if (!contains(x)) {
        const double rt = radial_radius(std::atan2(x[1], x[0]));
        if (norm(x, 2) > rt + tol)
          throw std::invalid_argument("dist_to_boundary: point outside closure(D)");
        return 0.0;
      }
      return d;
    }
  }
  return 0.0;
}

BoundaryPoint Domain::nearest_boundary_point(const Point& x) const {
  switch (kind_) {
    case DomainKind::whole_space:
      throw std::logic_error("nearest_boundary_point: empty boundary");
    case DomainKind::ball: {
      const Point v = sub(x, center_);
      const double r = norm(v, dim_);
      BoundaryPoint bp;
      if (r == 0.0) {
        // all boundary points are equidistant; fixed choice along e_1
        bp.location = center_;
        bp.location[0] += radius_;
        bp.inward_normal = make_point(-1.0);
        return bp;
      }
      bp.location = add(center_, scale(v, radius_ / r));
      bp.inward_normal = scale(v, -1.0 / r);
      return bp;
    }
    case DomainKind::box: {
      // distance is attained on a face; collect the minimizing face
      // projections and break ties lexicographically
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) {
        best = std::min(best, std::abs(x[i] - lo_[i]));
        best = std::min(best, std::abs(hi_[i] - x[i]));
      }
      bool found = false;
      BoundaryPoint bp;
      const double eps = 1e-14 * diameter();
      for (int i = 0; i < dim_; ++i) {
        for (int side = 0; side < 2; ++side) {
          const double face = side == 0 ? lo_[i] : hi_[i];
          if (std::abs(std::abs(x[i] - face) - best) > eps) continue;
          Point p = x;
          p[i] = face;
          for (int j = 0; j < dim_; ++j) p[j] = std::clamp(p[j], lo_[j], hi_[j]);
          if (!found || lex_less(p, bp.location, dim_)) {
            found = true;
            bp.location = p;
            bp.inward_normal = Point{};
            bp.inward_normal[i] = side == 0 ? 1.0 : -1.0;
          }
        }
      }
      return bp;
    }
    case DomainKind::radial: {
      // coarse scan over theta, then golden-section refinement around every
      // near-optimal bracket; ties resolved toward the lexicographically
      // smallest boundary location
      constexpr int kGrid = 2048;
      std::array<double, kGrid> d2;
      for (int i = 0; i < kGrid; ++i) {
        const double th = 2.0 * kPi * i / kGrid;
        const double r = radial_radius(th);
        const Point p = make_point(r * std::cos(th), r * std::sin(th));
        d2[i] = dist2(x, p, 2);
      }
      double best = *std::min_element(d2.begin(), d2.end());
      const double slack = 1e-6 * diameter() * diameter() + 4.0 * best;
      bool found = false;
      double best_dist = std::numeric_limits<double>::infinity();
      BoundaryPoint bp;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int i = 0; i < kGrid; ++i) {
        const int il = (i + kGrid - 1) % kGrid, ir = (i + 1) % kGrid;
        if (d2[i] > d2[il] || d2[i] > d2[ir]) continue;  // keep local minima
        if (d2[i] > slack) continue;
        double a = 2.0 * kPi * (i - 1) / kGrid;
        double b = 2.0 * kPi * (i + 1) / kGrid;
        auto f = [&](double th) {
          const double r = radial_radius(th);
          const Point p = make_point(r * std::cos(th), r * std::sin(th));
          return dist2(x, p, 2);
        };
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        double f1 = f(c1), f2 = f(c2);
        for (int it = 0; it < 80; ++it) {
          if (f1 < f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = f(c1);
          } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = f(c2);
          }
        }
        const double th = 0.5 * (a + b);
        const BoundaryPoint cand = radial_boundary_at(th);
        const double dd = dist(x, cand.location, 2);
        const double tie = 1e-12 * diameter();
        if (!found || dd < best_dist - tie ||
            (std::abs(dd - best_dist) <= tie && lex_less(cand.location, bp.location, 2))) {
          found = true;
          best_dist = dd;
          bp = cand;
        }
      }
      if (!found) throw std::logic_error("nearest_boundary_point: radial scan failed");
      return bp;
    }
  }
  throw std::logic_error("nearest_boundary_point: unreachable");
}

std::vector<Point> Domain::sample_uniform(int n, RngStream& rng) const {
  if (!bounded()) throw std::invalid_argument("sample_uniform: domain must be bounded");
  if (n < 0) throw std::invalid_argument("sample_uniform: n must be >= 0");
  Point lo{}, hi{};
  bounding_box(lo, hi);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Point p{};
    for (int i = 0; i < dim_; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * rng.u01();
    if (contains(p)) out.push_back(p);
  }
  return out;
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case DomainKind::whole_space:
      os << "whole-space d=" << dim_;
      break;
    case DomainKind::box:
      os << "box d=" << dim_ << " [";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << lo_[i];
      os << "]..[";
      for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << hi_[i];
      os << "]";
      break;
    case DomainKind::ball:
      os << "ball d=" << dim_ << " r=" << radius_;
      break;
    case DomainKind::radial:
      os << "radial d=2 r0=" << r0_;
      break;
  }
  return os.str();
}

}  // namespace rbmc
