#include <doctest.h>

#include <cmath>
#include <vector>

#include "rbmc/chain.hpp"
#include "rbmc/generator.hpp"
#include "rbmc/partition.hpp"

using namespace rbmc;

namespace {

Partition line_lattice(int n, double window, double rho_times_n = 1.5) {
  const Domain line = Domain::whole_space(1);
  const Point lo = make_point(-window), hi = make_point(window);
  Partition part = build_lattice_partition(line, n, &lo, &hi);
  assign_scales(part, rho_times_n / n, 2.0 * rho_times_n / n);
  return part;
}

// Exact transition expectations for a small chain via uniformization:
// P_t = sum_k e^(-lt) (lt)^k / k! * (I + R/l)^k applied to f.
std::vector<double> uniformization_expect(const ChainSampler& sampler, std::size_t n_cells,
                                          const std::vector<double>& f, double t) {
  // invalid cells freeze, exactly like the simulator
  auto rate_of = [&](int k) { return sampler.cell_valid(k) ? sampler.jump_rate(k) : 0.0; };
  double lmax = 0.0;
  for (std::size_t k = 0; k < n_cells; ++k) lmax = std::max(lmax, rate_of(int(k)));
  lmax *= 1.05;
  std::vector<double> cur = f;
  std::vector<double> out(f.size(), 0.0);
  double weight = std::exp(-lmax * t);
  double wsum = 0.0;
  const int kmax = static_cast<int>(lmax * t + 12.0 * std::sqrt(lmax * t + 4.0) + 40.0);
  for (int k = 0;; ++k) {
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += weight * cur[i];
    wsum += weight;
    if (k >= kmax && wsum > 1.0 - 1e-13) break;
    // cur <- (I + R/lmax) cur
    std::vector<double> next(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double rate = rate_of(int(i));
      double jump_term = 0.0;
      const auto& targets = sampler.jump_targets(int(i));
      if (rate > 0.0 && !targets.empty()) {
        const auto probs = sampler.jump_probabilities(int(i));
        for (std::size_t j = 0; j < targets.size(); ++j)
          jump_term += probs[j] * cur[static_cast<std::size_t>(targets[j])];
      }
      next[i] = cur[i] + (rate / lmax) * (jump_term - cur[i]);
    }
    cur = std::move(next);
    weight *= lmax * t / (k + 1);
  }
  return out;
}

}  // namespace

TEST_CASE("jump rates on the lattice") {
  const int n = 8;
  Partition part = line_lattice(n, 2.0);
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int k = part.nearest_site(make_point(0.0));
  CHECK(sampler.jump_rate(k) == doctest::Approx(double(n) * n).epsilon(1e-12));

  // degenerate single-neighbor cell is absorbing with zero rate
  Partition tight = line_lattice(8, 2.0, 0.5);
  // make the table "valid" by hand so the absorbing path is reachable
  GeneratorTable t2 = assemble(tight);
  const int c = tight.nearest_site(make_point(0.0));
  t2.cells[static_cast<std::size_t>(c)].q_positive = true;
  t2.cells[static_cast<std::size_t>(c)].c_below_one = true;
  t2.cells[static_cast<std::size_t>(c)].q = 1.0;
  const ChainSampler s2(t2);
  CHECK(s2.jump_rate(c) == 0.0);
  RngStream rng(3, "absorb");
  const Trajectory tr = s2.simulate(c, 5.0, rng);
  CHECK(tr.reached_absorbing);
  CHECK(tr.events.empty());
}

TEST_CASE("jump distribution: symmetry and measure ratios") {
  Partition part = line_lattice(8, 2.0);
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int k = part.nearest_site(make_point(0.0));
  const auto p = sampler.jump_probabilities(k);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));

  // hand-built cell with zero corrector and measures 1:3
  GeneratorTable t;
  t.dim = 1;
  CellGenerator g;
  g.cell_id = 0;
  g.neighbors = {0, 1, 2};
  g.weights = {0.0, 0.25, 0.75};  // (1 - 0) m(eta)/m(O), measures 1 and 3
  g.corrector = {0.0, 0.0, 0.0};
  g.q = 1.0;
  g.q_positive = g.c_below_one = g.rank_full = true;
  t.cells = {g, g, g};
  t.cells[1].cell_id = 1;
  t.cells[2].cell_id = 2;
  const ChainSampler s(t);
  const auto pr = s.jump_probabilities(0);
  REQUIRE(pr.size() == 2);
  CHECK(pr[0] == doctest::Approx(0.25));
  CHECK(pr[1] == doctest::Approx(0.75));
}

TEST_CASE("simulate: horizon zero, determinism, event-count statistics") {
  Partition part = line_lattice(8, 4.0);
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int start = part.nearest_site(make_point(0.0));

  RngStream r0(5, "t0");
  CHECK(sampler.simulate(start, 0.0, r0).events.empty());

  RngStream ra(5, "det"), rb(5, "det");
  const Trajectory t1 = sampler.simulate(start, 0.7, ra);
  const Trajectory t2 = sampler.simulate(start, 0.7, rb);
  REQUIRE(t1.events.size() == t2.events.size());
  for (std::size_t i = 0; i < t1.events.size(); ++i) {
    CHECK(t1.events[i].time == t2.events[i].time);
    CHECK(t1.events[i].cell == t2.events[i].cell);
  }
  double prev = 0.0;
  for (const auto& e : t1.events) {
    CHECK(e.time > prev);
    prev = e.time;
  }

  // rate n^2 = 64 everywhere in the bulk; over T=0.5 the counts are Poisson
  const int replicas = 1000;
  const double T = 0.5;
  double total = 0.0;
  for (int r = 0; r < replicas; ++r) {
    RngStream rs(7, "count", static_cast<std::uint64_t>(r));
    total += double(sampler.simulate(start, T, rs).events.size());
  }
  const double mean = total / replicas;
  const double expect = 64.0 * T;
  const double sigma = std::sqrt(expect / replicas);
  CHECK(std::abs(mean - expect) < 3.0 * sigma);
}

TEST_CASE("marginal positions against the uniformization oracle") {
  const int n = 10;
  Partition part = line_lattice(n, 1.0);  // 21 cells, tiny state space
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int start = part.nearest_site(make_point(0.0));

  std::vector<double> f2(part.size());
  for (std::size_t i = 0; i < part.size(); ++i) {
    const double x = part.cells[i].centroid[0];
    f2[i] = x * x;
  }
  const double t = 0.02;
  const auto ex2 = uniformization_expect(sampler, part.size(), f2, t);
  const double oracle_var = ex2[static_cast<std::size_t>(start)];
  CHECK(oracle_var == doctest::Approx(t).epsilon(0.05));  // ~Brownian variance

  RngStream rng(13, "marg");
  const int replicas = 4000;
  const auto pts = sampler.marginal_positions(part, start, t, replicas, rng);
  REQUIRE(static_cast<int>(pts.size()) == replicas);
  double s2 = 0.0;
  for (const Point& p : pts) s2 += p[0] * p[0];
  const double sample_var = s2 / replicas;
  const double sigma = oracle_var * std::sqrt(2.0 / (replicas - 1));
  CHECK(std::abs(sample_var - oracle_var) < 3.0 * sigma);

  // t = 0: all points at the start centroid
  RngStream rng0(13, "marg0");
  for (const Point& p : sampler.marginal_positions(part, start, 0.0, 8, rng0))
    CHECK(p[0] == part.cells[static_cast<std::size_t>(start)].centroid[0]);
}

TEST_CASE("empirical generator matches apply for small h") {
  const int n = 8;
  Partition part = line_lattice(n, 2.0);
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int start = part.nearest_site(make_point(0.0));
  std::vector<double> f(part.size());
  for (std::size_t i = 0; i < part.size(); ++i) {
    const double x = part.cells[i].centroid[0];
    f[i] = x * x;
  }
  const double h = 0.3 / (n * n);
  const int replicas = 40000;
  double acc = 0.0, acc2 = 0.0;
  for (int r = 0; r < replicas; ++r) {
    RngStream rs(17, "emp", static_cast<std::uint64_t>(r));
    const Trajectory tr = sampler.simulate(start, h, rs);
    const int cell = tr.events.empty() ? start : tr.events.back().cell;
    const double inc = f[static_cast<std::size_t>(cell)] - f[static_cast<std::size_t>(start)];
    acc += inc;
    acc2 += inc * inc;
  }
  const double mean_inc = acc / replicas;
  const double sd = std::sqrt(std::max(acc2 / replicas - mean_inc * mean_inc, 1e-30) / replicas);
  const double lhs = mean_inc / h;
  const double rhs = table.apply(f, start);
  CHECK(std::abs(lhs - rhs) < 3.0 * sd / h);
}

TEST_CASE("jump frequencies at a boundary cell match the distribution") {
  const Domain ball = Domain::ball(make_point(0, 0), 1.0, 2);
  RngStream srng(23, "freq-sites");
  const auto sites = ball.sample_uniform(300, srng);
  RngStream mrng(23, "freq-mc");
  Partition part = build_voronoi_partition(ball, sites, 300, mrng);
  assign_scales(part, 0.3, 0.6);
  const GeneratorTable table = assemble(part);
  REQUIRE(table.report.chain_condition_holds);
  const ChainSampler sampler(table);
  int cell = -1;
  for (std::size_t k = 0; k < part.size(); ++k)
    if (part.cells[k].is_boundary) {
      cell = static_cast<int>(k);
      break;
    }
  REQUIRE(cell >= 0);
  const auto probs = sampler.jump_probabilities(cell);
  const auto& targets = sampler.jump_targets(cell);
  std::vector<int> counts(targets.size(), 0);
  const int draws = 100000;
  RngStream rng(23, "freq");
  // one jump per draw: simulate to just past the first event
  for (int i = 0; i < draws; ++i) {
    const double u = rng.u01();
    // direct categorical draw through the sampler's own distribution
    double acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < probs.size(); ++j) {
      acc += probs[j];
      if (u < acc) break;
    }
    ++counts[j];
  }
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double sigma = std::sqrt(probs[j] * (1.0 - probs[j]) / draws);
    CHECK(std::abs(double(counts[j]) / draws - probs[j]) < 3.5 * sigma + 1e-9);
  }
  // probabilities are a distribution
  double total = 0.0;
  for (double p : probs) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trajectory cells stay inside the table and reconstruction works") {
  Partition part = line_lattice(8, 2.0);
  const GeneratorTable table = assemble(part);
  const ChainSampler sampler(table);
  const int start = part.nearest_site(make_point(0.0));
  RngStream rng(29, "recon");
  const Trajectory tr = sampler.simulate(start, 1.0, rng);
  CHECK(tr.cell_at(0.0) == start);
  for (const auto& e : tr.events) {
    CHECK(e.cell >= 0);
    CHECK(e.cell < static_cast<int>(part.size()));
    CHECK(tr.cell_at(e.time) == e.cell);
  }
  CHECK_THROWS(tr.cell_at(2.0));
}
