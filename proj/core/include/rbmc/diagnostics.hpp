#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbmc/generator.hpp"
#include "rbmc/linalg.hpp"
#include "rbmc/partition.hpp"

namespace rbmc {

// A C^2 function with vanishing normal derivative on the boundary, given
// with analytic gradient, Hessian, and Laplacian.
struct NeumannTestFunction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<void(const Point&, linalg::Matrix&)> hessian;
  std::function<double(const Point&)> laplacian;
  double hessian_norm_bound = 0.0;
  std::string description;
};

// Three members of the class per domain kind: radial polynomials on balls
// (plus one angular harmonic in d=2), cosine products on boxes, compactly
// supported bump products for whole-space windows.
std::vector<NeumannTestFunction> test_functions(const Domain& dom,
                                                const Point* window_lo = nullptr,
                                                const Point* window_hi = nullptr);

// Largest boundary-normal gradient of f over a deterministic grid of
// boundary points (the class invariant; ~0 for correctly built functions).
double max_normal_derivative(const Domain& dom, const NeumannTestFunction& f, int grid = 256);

struct ConsistencyReport {
  std::vector<int> cell_ids;
  std::vector<double> error;          // |L(pi f)(xi) - (Delta f / 2)(centroid)|
  double sup_interior = 0.0;
  double sup_boundary = 0.0;
  double sup_all = 0.0;
  // smallest constants making the two-sided bound shapes hold cellwise
  double fitted_const_interior = 0.0;
  double fitted_const_boundary = 0.0;
  int n_evaluated = 0;
  int n_skipped_invalid = 0;
  int n_skipped_margin = 0;
};

ConsistencyReport consistency_error(const GeneratorTable& gen, const Partition& part,
                                    const NeumannTestFunction& f);

struct HalfBallCheck {
  Point first_moment{};     // mean(y)/r over the upper half ball
  Point first_sigma{};
  Point first_expected{};   // beta_d e_d
  linalg::Matrix second_moment;    // mean(y x y)
  linalg::Matrix second_sigma;
  linalg::Matrix second_expected;  // r^2/(d+2) I
  double max_first_z = 0.0;    // max |err| / sigma, componentwise
  double max_second_z = 0.0;
};

HalfBallCheck halfball_moment_check(int d, double r, std::uint64_t samples, RngStream& rng);

struct SymdiffCheck {
  double measure = 0.0;  // m(B_D(x,r) symdiff B_+(x,r)) estimate
  double sigma = 0.0;
  double ratio = 0.0;    // measure / r^(d+alpha)
};

SymdiffCheck boundary_symdiff_check(const Domain& dom, const Point& x, double r,
                                    std::uint64_t samples, RngStream& rng);

struct TwoSampleResult {
  double energy = 0.0;
  double ks = 0.0;  // populated in d=1 only
};

TwoSampleResult two_sample_distance(const std::vector<Point>& a, const std::vector<Point>& b,
                                    int d);

struct PermutationTest {
  double statistic = 0.0;
  double p_value = 1.0;
  double null_q95 = 0.0;
  bool rejects_at_5pct = false;
};

// Energy-distance permutation test; distribution-free two-sample check.
PermutationTest energy_permutation_test(const std::vector<Point>& a,
                                        const std::vector<Point>& b, int d, int permutations,
                                        RngStream& rng);

// Continuous moments of O_xi from pooled cell geometry (exact for lattice
// cells, sample sums otherwise). sigma_qt is the MC standard error of qt.
void tilde_moments(const Partition& part, const CellGenerator& g, linalg::Matrix& second,
                   double& qt, double& sigma_qt);

struct TrackerLevel {
  int n = 0;
  // max over cells of |q - qt| / ((eps + 2 rho) eps)
  double qtilde_ratio = 0.0;
  // the same with 3 sigma MC slack subtracted from |q - qt|; the cellwise
  // inequality demands <= 1
  double qtilde_ratio_slack = 0.0;
  // interior: max |q - rho^2/(d+2)| / (eps rho)
  double qrho_ratio = 0.0;
  // interior: max |Qt/q - I| / (eps/rho)
  double qq_ratio = 0.0;
  // min over valid cells of lambda_min(Q) / rho^2 (spectral floor)
  double qmin_ratio = 0.0;
};

struct TrackerReport {
  std::vector<TrackerLevel> levels;
  bool cellwise_qtilde_ok = true;  // every level's slack ratio <= 1
  bool growth_ok = true;           // no tracker grows beyond 2x its first level
};

struct LevelInput {
  const Partition* part = nullptr;
  const GeneratorTable* gen = nullptr;
};

TrackerReport bound_trackers(const std::vector<LevelInput>& levels);

struct HausdorffCheck {
  int pairs = 0;
  int violations = 0;
  double max_excess = 0.0;  // max of |d_H - |centroid-z|| - eps over pairs
};

// |d_H(xi, z) - |centroid - z|| <= eps(xi) on random (cell, point) pairs,
// d_H evaluated from the stored cell points.
HausdorffCheck hausdorff_check(const Partition& part, int pairs, RngStream& rng);

}  // namespace rbmc
