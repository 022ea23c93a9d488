#include "rbmc/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace rbmc {

namespace {

// pull a point that escaped the closed ball back onto the sphere; the loop
// guards against the final multiply rounding outward
void project_to_ball(Point& x, const Point& c, double radius, int d) {
  for (int guard = 0; guard < 8; ++guard) {
    if (dist2(x, c, d) <= radius * radius) return;
    const double f = radius / dist(x, c, d) * (guard == 0 ? 1.0 : 1.0 - 4e-16);
    for (int i = 0; i < d; ++i) x[i] = c[i] + (x[i] - c[i]) * f;
  }
}

double mirror_fold(double u, double lo, double hi) {
  const double L = hi - lo;
  double v = std::fmod(u - lo, 2.0 * L);
  if (v < 0.0) v += 2.0 * L;
  v = v <= L ? v : 2.0 * L - v;
  return lo + std::min(v, L);
}

}  // namespace

std::vector<Point> simulate_bm(const Point& x0, int dim, double horizon, double dt,
                               RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_bm: dt > 0 required");
  if (!(dt <= horizon)) throw std::invalid_argument("simulate_bm: dt <= horizon required");
  std::vector<Point> path;
  path.push_back(x0);
  double t = 0.0;
  Point x = x0;
  while (t < horizon) {
    const double step = std::min(dt, horizon - t);
    const double sd = std::sqrt(step);
    for (int i = 0; i < dim; ++i) x[i] += sd * rng.normal();
    t += step;
    path.push_back(x);
  }
  return path;
}

std::vector<Point> simulate_rbm(const RbmConfig& cfg, const Point& x0, RngStream& rng) {
  const Domain& dom = cfg.domain;
  const int d = dom.dim();
  if (dom.kind() != DomainKind::ball && dom.kind() != DomainKind::box)
    throw std::invalid_argument("simulate_rbm: ball or box domains only");
  if (!(cfg.dt > 0.0) || !(cfg.dt <= cfg.horizon))
    throw std::invalid_argument("simulate_rbm: need 0 < dt <= horizon");
  {
    // x0 in closure(D)
    if (dom.kind() == DomainKind::ball) {
      if (dist(x0, dom.ball_center(), d) > dom.ball_radius() * (1.0 + 1e-12))
        throw std::invalid_argument("simulate_rbm: x0 outside closure(D)");
    } else {
      for (int i = 0; i < d; ++i)
        if (x0[i] < dom.box_lo()[i] - 1e-12 || x0[i] > dom.box_hi()[i] + 1e-12)
          throw std::invalid_argument("simulate_rbm: x0 outside closure(D)");
    }
  }
  const double diam = dom.diameter();
  std::vector<Point> path;
  path.push_back(x0);
  Point x = x0;
  double t = 0.0;
  while (t < cfg.horizon) {
    const double step = std::min(cfg.dt, cfg.horizon - t);
    const double sd = std::sqrt(step);
    Point y = x;
    double move2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double g = sd * rng.normal();
      y[i] += g;
      move2 += g * g;
    }
    if (move2 > diam * diam)
      throw std::runtime_error("simulate_rbm: Euler step exceeds domain diameter (dt too large)");
    if (dom.kind() == DomainKind::ball) {
      project_to_ball(y, dom.ball_center(), dom.ball_radius(), d);
    } else {
      for (int i = 0; i < d; ++i) y[i] = mirror_fold(y[i], dom.box_lo()[i], dom.box_hi()[i]);
    }
    x = y;
    t += step;
    path.push_back(x);
  }
  return path;
}

std::vector<Point> rbm_terminal_points(const RbmConfig& cfg, const Point& x0, int replicas,
                                       const RngStream& rng) {
  std::vector<Point> out(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    RngStream rs(rng.seed(), substream("rbm-replica", rng.stream() ^ static_cast<std::uint64_t>(r)));
    const auto path = simulate_rbm(cfg, x0, rs);
    out[static_cast<std::size_t>(r)] = path.back();
  }
  return out;
}

}  // namespace rbmc
