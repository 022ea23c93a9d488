#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbmc/geometry.hpp"
#include "rbmc/linalg.hpp"
#include "rbmc/point.hpp"
#include "rbmc/rng.hpp"

namespace rbmc {

// One partition element. Lattice cells carry their exact clipped box;
// Voronoi cells are represented by the Monte-Carlo sample cloud that was
// assigned to them (stored centrally in the Partition).
struct Cell {
  int id = 0;
  Point site{};          // Voronoi site or lattice center
  Point centroid{};      // center of gravity (exact for boxes, MC otherwise)
  double measure = 0.0;
  double radius_bound = 0.0;  // >= sup over the cell of |y - centroid|
  bool is_boundary = false;
  std::optional<BoundaryPoint> boundary_anchor;  // set iff is_boundary

  bool exact_box = false;
  Point box_lo{}, box_hi{};

  std::uint32_t quad_begin = 0;  // slice into Partition::quad_points
  std::uint32_t quad_count = 0;
};

struct LevelParams {
  int n = 0;
  double a_n = 0.0;
  double b_n = 0.0;
};

// Uniform bucket grid over cell centroids (and sites); answers the two ball
// queries partition construction and generator assembly need.
class CentroidIndex {
 public:
  CentroidIndex() = default;
  CentroidIndex(std::vector<Point> pts, int dim, const Point& lo, const Point& hi);

  // indices of points with |p - x| < r (strict)
  void in_ball(const Point& x, double r, std::vector<int>& out) const;
  // index of the point nearest to x
  int nearest(const Point& x) const;

 private:
  std::size_t bucket_of(const Point& p) const;
  int dim_ = 1;
  Point lo_{}, hi_{};
  int nbins_[kMaxDim] = {1, 1, 1};
  double inv_h_[kMaxDim] = {1.0, 1.0, 1.0};
  std::vector<std::vector<int>> buckets_;
  std::vector<Point> pts_;  // owned; the index stays valid when the Partition moves
};

class Partition {
 public:
  Domain domain = Domain::whole_space(1);
  std::vector<Cell> cells;
  std::vector<double> delta;  // boundary-detection scale per cell
  std::vector<double> rho;    // neighbor-ball radius per cell
  LevelParams level_params;

  // whole-space runs restrict everything to a window
  bool has_window = false;
  Point window_lo{}, window_hi{};

  std::vector<Point> quad_points;
  std::vector<double> quad_weights;

  // combined 1-sigma Monte-Carlo uncertainty of a single cell measure of
  // relative mass p (zero for exact lattice builds)
  double measure_sigma(double mass_fraction) const;
  std::uint64_t mc_total_samples = 0;  // 0 for exact builds

  int dim() const { return domain.dim(); }
  std::size_t size() const { return cells.size(); }

  // anchor point: centroid for interior cells, nearest boundary point for
  // boundary cells
  Point anchor_of(int cell) const;

  std::span<const Point> cell_points(int cell) const;
  std::span<const double> cell_point_weights(int cell) const;

  // cells whose centroid lies strictly inside B(x, r)
  std::vector<int> centroids_in_ball(const Point& x, double r) const;
  // superset of the cells intersecting B(x, r): centroid within r + radius_bound
  std::vector<int> cells_touching_ball(const Point& x, double r) const;
  // Voronoi assignment of an arbitrary point (nearest site)
  int nearest_site(const Point& x) const;

  // largest cell-radius bound among the cells meeting B(anchor, rho);
  // requires scales assigned
  double epsilon(int cell) const;
  const std::vector<double>& epsilons() const { return eps_; }
  void recompute_epsilons();

  // whole-space margin rule: diagnostics are restricted to cells whose
  // (rho+eps)-ball stays inside the window
  bool margin_ok(int cell) const;

  double total_measure() const;
  double max_radius_bound() const;

  // First and second moments of the cell about `anchor`:
  //   mass += m(cell), first += int (y-a), second += int (y-a)(y-a)^T.
  // Exact for box cells, sample sums otherwise.
  void accumulate_cell_moments(int cell, const Point& anchor, double& mass,
                               Point& first, linalg::Matrix& second) const;

  void rebuild_index();
  const CentroidIndex& centroid_index() const { return centroid_index_; }

  void save(const std::string& cells_csv, const std::string& quad_bin,
            const std::string& meta_header) const;
  static Partition load(const Domain& dom, const std::string& cells_csv,
                        const std::string& quad_bin);

 private:
  CentroidIndex centroid_index_;
  CentroidIndex site_index_;
  std::vector<double> eps_;
  friend Partition build_lattice_partition(const Domain&, int, const Point*, const Point*);
  friend Partition build_voronoi_partition(const Domain&, const std::vector<Point>&, int,
                                           RngStream&);
};

// Cubic lattice cells of side 1/n clipped to the domain (box) or to the
// window (whole space). Exact measures and centroids.
Partition build_lattice_partition(const Domain& dom, int n, const Point* window_lo = nullptr,
                                  const Point* window_hi = nullptr);

// Voronoi cells of the given sites; cell geometry estimated from
// mc_per_cell * #sites uniform samples of D assigned to nearest sites.
Partition build_voronoi_partition(const Domain& dom, const std::vector<Point>& sites,
                                  int mc_per_cell, RngStream& rng);

// Sets is_boundary via dist_to_boundary(centroid) < delta (or centroid
// outside D) and attaches the nearest boundary point. Requires delta.
void classify_boundary(Partition& part);

// delta := a_n everywhere; rho := a_n on interior cells, b_n on boundary
// cells; records level parameters and refreshes epsilons. Requires 0 < a_n < b_n.
void assign_scales(Partition& part, double a_n, double b_n);

}  // namespace rbmc
