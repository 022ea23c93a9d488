#pragma once

#include <vector>

#include "rbmc/geometry.hpp"
#include "rbmc/point.hpp"
#include "rbmc/rng.hpp"

namespace rbmc {

// Reflected Euler scheme for the Skorohod problem on a ball (projection to
// the nearest boundary point) or a box (coordinatewise mirror reflection).
struct RbmConfig {
  Domain domain = Domain::ball(Point{}, 1.0, 2);
  double dt = 1e-4;
  double horizon = 1.0;
};

// Brownian path sampled on the dt-grid including t=0 and t=horizon.
std::vector<Point> simulate_bm(const Point& x0, int dim, double horizon, double dt,
                               RngStream& rng);

// Reflected path; every point lies in closure(D). Throws if a raw Euler step
// exceeds the domain diameter (dt too large).
std::vector<Point> simulate_rbm(const RbmConfig& cfg, const Point& x0, RngStream& rng);

// Terminal points of independent replicas (substream per replica).
std::vector<Point> rbm_terminal_points(const RbmConfig& cfg, const Point& x0, int replicas,
                                       const RngStream& rng);

}  // namespace rbmc
