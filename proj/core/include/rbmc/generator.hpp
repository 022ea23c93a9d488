#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmc/linalg.hpp"
#include "rbmc/partition.hpp"

namespace rbmc {

// Everything the corrected generator knows about one cell. The neighbor list
// always contains the cell itself (its centroid sits in its own rho-ball);
// that entry carries zero rate and is skipped by jump distributions.
struct CellGenerator {
  int cell_id = 0;
  std::vector<int> neighbors;      // sorted cell ids
  std::vector<double> weights;     // (1 - c(xi,eta)) m(eta)/m(O_xi)
  std::vector<double> corrector;   // c(xi,eta)
  Point drift{};                   // b(xi)
  linalg::Matrix second_moment;    // Q(xi), d x d
  double q = 0.0;                  // trace(Q)/d, the time scale (length^2)
  double mass_o = 0.0;             // m(O_xi)
  Point anchor{};                  // centroid (interior) or boundary point
  bool q_positive = false;
  bool c_below_one = false;
  bool rank_full = false;

  bool valid() const { return q_positive && c_below_one; }
  double max_abs_corrector() const;
};

struct GeneratorReport {
  double max_eps_rho_interior = 0.0;
  double max_eps_rho_boundary = 0.0;
  double max_abs_c = 0.0;
  double min_q = 0.0;
  double min_q_rho2 = 0.0;
  double c1 = 0.0;          // admissible eps/rho bound, interior
  double c2 = 0.0;          // admissible eps/rho bound, boundary (needs r_d)
  bool c2_usable = false;
  double r_d = 1.0;         // inscribed-ball ratio; 1 when no boundary cells
  int n_boundary = 0;
  int n_rank_deficient = 0;
  int n_invalid = 0;
  // constants fitted against the corrector bounds: max |c| rho/eps over
  // interior cells, max |c| / (eps/rho + rho^alpha) over boundary cells
  double fitted_corrector_const_interior = 0.0;
  double fitted_corrector_const_boundary = 0.0;
  // the generator defines a chain iff every q is positive and every
  // corrector is below one in modulus; the margin variant ignores cells cut
  // off by a whole-space window edge
  bool chain_condition_holds = false;
  double max_abs_c_margin = 0.0;
  double min_q_margin = 0.0;
  bool chain_condition_margin = false;
  bool interior_ratio_ok = false;  // max_eps_rho_interior <= c1
  bool boundary_ratio_ok = false;  // max_eps_rho_boundary <= c2 (when usable)
};

struct GeneratorTable {
  int dim = 1;
  LevelParams level;
  std::vector<CellGenerator> cells;
  GeneratorReport report;

  // (1/q) sum_eta (f(eta) - f(xi)) w(xi,eta); throws on invalid cells
  double apply(const std::vector<double>& f_by_cell, int cell) const;

  void save_edges_csv(const std::string& path, const std::string& meta) const;
  void save_cells_csv(const std::string& path, const std::string& meta) const;
};

// Half-ball first-moment constant: mean of the inward coordinate over a unit
// half-ball, 2 / ((d+1) B(1/2,(d+1)/2)).
double beta_d(int d);

// Polynomials whose smallest positive roots bound the admissible eps/rho.
double a1_value(int d, double t);
double a2_value(int d, double r_d, double t);

// Smallest positive roots by bisection (1e-12); thresholds are 0.99x the
// root so admissibility is strict.
double a1_root(int d);
double a2_root(int d, double r_d);  // throws if no positive sign change
double threshold_c1(int d);
double threshold_c2(int d, double r_d);

// All cells whose centroid lies strictly inside B(anchor, rho(cell)).
// Throws if empty (scales violate the partition contract).
std::vector<int> neighbor_set(const Partition& part, int cell);

// Largest-inscribed-ball estimate: max over boundary cells of rho / r where
// r is the biggest ball around trial centers anchor + s rho nu that avoids
// all non-neighbor cells and stays in D; inflated 10%. Returns 1 when the
// partition has no boundary cells.
double estimate_r_d(const Partition& part);

struct AssembleOptions {
  double rank_tol = 1e-12;
};

CellGenerator assemble_cell(const Partition& part, int cell, double beta, double rank_tol);

// Per-spec single-quantity views of the assembly (used by tests and tools).
Point drift_b(const Partition& part, int cell);
void second_moment_q(const Partition& part, int cell, linalg::Matrix& q_out, double& q_scalar);
std::vector<double> corrector_c(const Partition& part, int cell, double rank_tol = 1e-12);

GeneratorTable assemble(const Partition& part, const AssembleOptions& opt = {});

}  // namespace rbmc
