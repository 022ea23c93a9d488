#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmc/generator.hpp"
#include "rbmc/partition.hpp"
#include "rbmc/rng.hpp"

namespace rbmc {

struct TrajectoryEvent {
  double time = 0.0;
  int cell = 0;
};

// Piecewise-constant path of the chain: state is start_cell on [0, t_1) and
// events[k].cell on [t_k, t_{k+1}).
struct Trajectory {
  int start_cell = 0;
  std::vector<TrajectoryEvent> events;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool reached_absorbing = false;

  int cell_at(double t) const;
};

// Jump-rate/jump-target tables derived from a generator: leave cell xi at
// rate (1/q) sum_{eta != xi} w(xi,eta), land on eta with probability
// proportional to w(xi,eta).
class ChainSampler {
 public:
  explicit ChainSampler(const GeneratorTable& gen);

  const GeneratorTable& generator() const { return *gen_; }

  // 1/seconds; throws on invalid cells. Zero for absorbing cells.
  double jump_rate(int cell) const;
  bool cell_valid(int cell) const { return valid_[static_cast<std::size_t>(cell)]; }

  // probabilities over neighbors != self, aligned with jump_targets(cell)
  std::vector<double> jump_probabilities(int cell) const;
  const std::vector<int>& jump_targets(int cell) const;

  Trajectory simulate(int start, double horizon, RngStream& rng) const;

  // Y_t of `replicas` independent trajectories: the centroid of the occupied
  // cell at time t. Replica r uses the substream derived from (rng, r), so
  // the result is independent of scheduling.
  std::vector<Point> marginal_positions(const Partition& part, int start, double t,
                                        int replicas, const RngStream& rng) const;

 private:
  const GeneratorTable* gen_;
  std::vector<std::vector<int>> targets_;      // neighbors minus self
  std::vector<std::vector<double>> cum_;       // cumulative weights
  std::vector<double> rate_;
  std::vector<bool> valid_;
};

void save_trajectories_csv(const std::string& path, const std::string& meta,
                           const Partition& part, const std::vector<Trajectory>& trajectories);

void save_points_csv(const std::string& path, const std::string& meta, int dim,
                     const std::vector<Point>& pts, double time_label);

}  // namespace rbmc
