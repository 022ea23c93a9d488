#include "rbmc/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rbmc {

int Trajectory::cell_at(double t) const {
  if (t < 0.0 || t > horizon) throw std::invalid_argument("Trajectory::cell_at: t outside [0,horizon]");
  int cell = start_cell;
  for (const TrajectoryEvent& e : events) {
    if (e.time > t) break;
    cell = e.cell;
  }
  return cell;
}

ChainSampler::ChainSampler(const GeneratorTable& gen) : gen_(&gen) {
  const std::size_t n = gen.cells.size();
  targets_.resize(n);
  cum_.resize(n);
  rate_.assign(n, 0.0);
  valid_.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const CellGenerator& g = gen.cells[k];
    valid_[k] = g.valid();
    if (!valid_[k]) continue;
    double total = 0.0;
    auto& tg = targets_[k];
    auto& cm = cum_[k];
    for (std::size_t j = 0; j < g.neighbors.size(); ++j) {
      if (g.neighbors[j] == g.cell_id) continue;
      if (g.weights[j] < 0.0)
        throw std::runtime_error("ChainSampler: negative jump weight (corrector invalidity)");
      if (g.weights[j] == 0.0) continue;
      total += g.weights[j];
      tg.push_back(g.neighbors[j]);
      cm.push_back(total);
    }
    rate_[k] = total / g.q;
  }
}

double ChainSampler::jump_rate(int cell) const {
  if (!valid_[static_cast<std::size_t>(cell)])
    throw std::runtime_error("jump_rate: invalid cell");
  return rate_[static_cast<std::size_t>(cell)];
}

std::vector<double> ChainSampler::jump_probabilities(int cell) const {
  const auto& cm = cum_[static_cast<std::size_t>(cell)];
  if (!valid_[static_cast<std::size_t>(cell)] || cm.empty())
    throw std::runtime_error("jump_probabilities: invalid or absorbing cell");
  std::vector<double> p(cm.size());
  const double total = cm.back();
  double prev = 0.0;
  for (std::size_t j = 0; j < cm.size(); ++j) {
    p[j] = (cm[j] - prev) / total;
    prev = cm[j];
  }
  return p;
}

const std::vector<int>& ChainSampler::jump_targets(int cell) const {
  return targets_[static_cast<std::size_t>(cell)];
}

Trajectory ChainSampler::simulate(int start, double horizon, RngStream& rng) const {
  if (horizon < 0.0) throw std::invalid_argument("simulate: horizon >= 0 required");
  Trajectory tr;
  tr.start_cell = start;
  tr.horizon = horizon;
  tr.seed = rng.seed();
  tr.stream = rng.stream();
  int cell = start;
  double t = 0.0;
  for (;;) {
    // invalid cells freeze the path (possible at window edges or on very
    // coarse builds); flagged rather than fatal so diagnostics still run
    if (!valid_[static_cast<std::size_t>(cell)] ||
        rate_[static_cast<std::size_t>(cell)] <= 0.0) {
      tr.reached_absorbing = true;
      break;
    }
    const double rate = rate_[static_cast<std::size_t>(cell)];
    t += rng.exponential(rate);
    if (t > horizon) break;
    const auto& cm = cum_[static_cast<std::size_t>(cell)];
    const double u = rng.u01() * cm.back();
    const std::size_t j = static_cast<std::size_t>(
        std::lower_bound(cm.begin(), cm.end(), u) - cm.begin());
    cell = targets_[static_cast<std::size_t>(cell)][std::min(j, cm.size() - 1)];
    tr.events.push_back({t, cell});
  }
  return tr;
}

std::vector<Point> ChainSampler::marginal_positions(const Partition& part, int start, double t,
                                                    int replicas, const RngStream& rng) const {
  std::vector<Point> out(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    RngStream rs(rng.seed(), substream("chain-replica", rng.stream() ^ static_cast<std::uint64_t>(r)));
    const Trajectory tr = simulate(start, t, rs);
    const int cell = tr.events.empty() ? start : tr.events.back().cell;
    out[static_cast<std::size_t>(r)] = part.cells[static_cast<std::size_t>(cell)].centroid;
  }
  return out;
}

void save_trajectories_csv(const std::string& path, const std::string& meta,
                           const Partition& part, const std::vector<Trajectory>& trajectories) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_trajectories_csv: cannot open " + path);
  const int d = part.dim();
  os << meta << "replica,time,cell_id";
  for (int i = 0; i < d; ++i) os << ",x" << i + 1;
  os << "\n";
  char buf[64];
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const Trajectory& tr = trajectories[r];
    auto row = [&](double time, int cell) {
      os << r << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", time);
      os << buf << ',' << cell;
      const Point& p = part.cells[static_cast<std::size_t>(cell)].centroid;
      for (int i = 0; i < d; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", p[i]);
        os << ',' << buf;
      }
      os << "\n";
    };
    row(0.0, tr.start_cell);
    for (const TrajectoryEvent& e : tr.events) row(e.time, e.cell);
  }
}

void save_points_csv(const std::string& path, const std::string& meta, int dim,
                     const std::vector<Point>& pts, double time_label) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_points_csv: cannot open " + path);
  os << meta << "replica,time";
  for (int i = 0; i < dim; ++i) os << ",x" << i + 1;
  os << "\n";
  char buf[64];
  for (std::size_t r = 0; r < pts.size(); ++r) {
    os << r << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", time_label);
    os << buf;
    for (int i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", pts[r][i]);
      os << ',' << buf;
    }
    os << "\n";
  }
}

}  // namespace rbmc
