#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmc/geometry.hpp"
#include "rbmc/point.hpp"

namespace rbmc {

// Scale schedule for the refinement study. Any rule keeps the three limit
// conditions: cell size / a_n -> 0, a_n / b_n -> 0, b_n -> 0.
struct ScaleSpec {
  std::string rule = "power";  // "power" | "loglog" | "explicit"
  double p_a = 0.375;          // a_n = k_a (log n / n)^p_a         (power)
  double p_b = 0.25;           // b_n = k_b (log n / n)^p_b         (power)
  double k_a = 0.0;            // 0: calibrate from the partition
  double k_b = 0.0;            // 0: derive from b_over_a
  double calibrate_ratio = 0.5;        // target eps/rho as a fraction of c1
  std::string calibrate_level = "coarsest";  // or "finest"
  double b_over_a = 2.0;               // b/a at the calibration level
  std::vector<double> explicit_a, explicit_b;
};

struct SimulationSpec {
  double horizon = 1.0;
  int replicas = 2000;
  std::vector<double> marginal_times = {0.1, 0.5};
  bool start_set = false;
  Point start{};
  double stationarity_time = 0.0;  // 0: skip the long-horizon comparison
};

struct DiagnosticsSpec {
  bool consistency = true;
  bool assert_consistency_decay = true;  // gate the multi-level decay checks
  bool trackers = true;
  bool marginal_compare = true;
  bool stationarity = true;
  bool hausdorff = true;
  int permutations = 200;
  int hausdorff_pairs = 200;
};

struct RunConfig {
  Domain domain = Domain::ball(Point{}, 1.0, 2);
  bool has_window = false;
  Point window_lo{}, window_hi{};

  std::string partition_kind = "voronoi";  // "voronoi" | "lattice"
  std::vector<int> levels;
  int mc_per_cell = 200;
  std::uint64_t seed = 1;

  ScaleSpec scales;
  SimulationSpec simulation;
  double reference_dt = 1e-4;
  DiagnosticsSpec diagnostics;
  std::string output_dir = "out";

  Point start_point() const;  // configured start or the domain center

  static RunConfig from_json_text(const std::string& text, const std::string& origin = "<config>");
  static RunConfig from_file(const std::string& path);
  std::string to_json_text() const;  // canonical (sorted keys, 2-space indent)
  std::uint64_t config_hash() const;
};

}  // namespace rbmc
