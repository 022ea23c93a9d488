#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbmc/chain.hpp"
#include "rbmc/config.hpp"
#include "rbmc/diagnostics.hpp"
#include "rbmc/generator.hpp"
#include "rbmc/partition.hpp"
#include "rbmc/reference.hpp"

namespace rbmc::pipeline {

struct StageOptions {
  std::string out_dir;  // empty: use the config's output directory
  std::optional<std::uint64_t> seed_override;
  std::vector<int> level_filter;  // empty: all configured levels
};

std::uint64_t effective_seed(const RunConfig& cfg, const StageOptions& opt);
std::string resolved_out_dir(const RunConfig& cfg, const StageOptions& opt);
std::vector<int> selected_levels(const RunConfig& cfg, const StageOptions& opt);

// '#'-prefixed metadata lines every output file starts with
std::string meta_header(const RunConfig& cfg, std::uint64_t seed);

// deterministic sites for a voronoi level
std::vector<Point> level_sites(const RunConfig& cfg, std::uint64_t seed, int n);

// build one level's partition (no scales assigned yet)
Partition build_level_partition(const RunConfig& cfg, std::uint64_t seed, int n);

struct ScaleTable {
  std::vector<int> levels;
  std::vector<double> a, b;
  double k_a = 0.0, k_b = 0.0;
  double c1 = 0.0;
  int calibration_level = 0;
  double calibration_radius = 0.0;  // max cell-radius bound there
};

// resolves the scale rule against the configured levels; the partitions map
// must contain the calibration level when constants are auto-calibrated
ScaleTable resolve_scales(const RunConfig& cfg, const std::map<int, Partition>& parts);

// stage runners; each writes deterministic files under the out dir
void run_partition(const RunConfig& cfg, const StageOptions& opt);
void run_generator(const RunConfig& cfg, const StageOptions& opt);
void run_simulate(const RunConfig& cfg, const StageOptions& opt);
void run_diagnose(const RunConfig& cfg, const StageOptions& opt);

struct StudyLevelRow {
  int n = 0;
  double a_n = 0.0, b_n = 0.0;
  GeneratorReport report;
  std::vector<double> sup_consistency;        // per test function
  std::vector<double> fitted_const_interior;  // per test function
  TrackerLevel tracker;
  std::vector<double> marginal_energy;  // per configured marginal time
};

struct StudyOutcome {
  std::vector<StudyLevelRow> rows;
  std::vector<std::string> test_function_names;
  TrackerReport trackers;
  std::vector<PermutationTest> finest_marginal_tests;  // per marginal time
  PermutationTest stationarity_test;
  bool stationarity_ran = false;
  HausdorffCheck hausdorff;
  ScaleTable scales;
  std::vector<std::string> failures;
  bool pass = false;
};

// end-to-end multi-level run with every configured diagnostic and the
// validity / decay assertions evaluated; also writes all stage files
StudyOutcome run_study(const RunConfig& cfg, const StageOptions& opt);

}  // namespace rbmc::pipeline
