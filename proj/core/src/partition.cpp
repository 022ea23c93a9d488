#include "rbmc/partition.hpp"

#include "rbmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rbmc {

namespace {

void minmax_points(const std::vector<Point>& pts, int dim, Point& lo, Point& hi) {
  lo.fill(0.0);
  hi.fill(0.0);
  if (pts.empty()) return;
  lo = hi = pts[0];
  for (const Point& p : pts)
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
}

}  // namespace

CentroidIndex::CentroidIndex(std::vector<Point> pts, int dim, const Point& lo, const Point& hi)
    : dim_(dim), lo_(lo), hi_(hi), pts_(std::move(pts)) {
  const int target = std::max(1, static_cast<int>(std::floor(
                                     std::pow(double(std::max<std::size_t>(pts_.size(), 1)),
                                              1.0 / dim))));
  std::size_t total = 1;
  for (int i = 0; i < dim_; ++i) {
    const double ext = std::max(hi_[i] - lo_[i], 1e-300);
    nbins_[i] = std::clamp(target, 1, 512);
    inv_h_[i] = nbins_[i] / ext;
    total *= static_cast<std::size_t>(nbins_[i]);
  }
  buckets_.assign(total, {});
  for (std::size_t k = 0; k < pts_.size(); ++k)
    buckets_[bucket_of(pts_[k])].push_back(static_cast<int>(k));
}

std::size_t CentroidIndex::bucket_of(const Point& p) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    int b = static_cast<int>((p[i] - lo_[i]) * inv_h_[i]);
    b = std::clamp(b, 0, nbins_[i] - 1);
    idx = idx * static_cast<std::size_t>(nbins_[i]) + static_cast<std::size_t>(b);
  }
  return idx;
}

void CentroidIndex::in_ball(const Point& x, double r, std::vector<int>& out) const {
  out.clear();
  const auto& pts = pts_;
  int blo[kMaxDim] = {0, 0, 0}, bhi[kMaxDim] = {0, 0, 0};
  for (int i = 0; i < dim_; ++i) {
    blo[i] = std::clamp(static_cast<int>((x[i] - r - lo_[i]) * inv_h_[i]), 0, nbins_[i] - 1);
    bhi[i] = std::clamp(static_cast<int>((x[i] + r - lo_[i]) * inv_h_[i]), 0, nbins_[i] - 1);
  }
  const double r2 = r * r;
  int b[kMaxDim] = {blo[0], blo[1], blo[2]};
  for (;;) {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i)
      idx = idx * static_cast<std::size_t>(nbins_[i]) + static_cast<std::size_t>(b[i]);
    for (int k : buckets_[idx])
      if (dist2(pts[static_cast<std::size_t>(k)], x, dim_) < r2) out.push_back(k);
    int axis = dim_ - 1;
    while (axis >= 0) {
      if (++b[axis] <= bhi[axis]) break;
      b[axis] = blo[axis];
      --axis;
    }
    if (axis < 0) break;
  }
}

int CentroidIndex::nearest(const Point& x) const {
  const auto& pts = pts_;
  if (pts.empty()) return -1;
  int bc[kMaxDim] = {0, 0, 0};
  for (int i = 0; i < dim_; ++i)
    bc[i] = std::clamp(static_cast<int>((x[i] - lo_[i]) * inv_h_[i]), 0, nbins_[i] - 1);
  int best = -1;
  double best2 = std::numeric_limits<double>::infinity();
  const int max_ring = *std::max_element(nbins_, nbins_ + dim_);
  for (int ring = 0; ring <= max_ring; ++ring) {
    // once a candidate is known, stop as soon as the ring cannot improve it
    if (best >= 0) {
      double ring_min = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) {
        const double h = 1.0 / inv_h_[i];
        ring_min = std::min(ring_min, (ring - 1) * h);
      }
      if (ring_min > 0.0 && ring_min * ring_min > best2) break;
    }
    int blo[kMaxDim] = {0, 0, 0}, bhi[kMaxDim] = {0, 0, 0};
    bool any = false;
    for (int i = 0; i < dim_; ++i) {
      blo[i] = std::clamp(bc[i] - ring, 0, nbins_[i] - 1);
      bhi[i] = std::clamp(bc[i] + ring, 0, nbins_[i] - 1);
    }
    int b[kMaxDim] = {blo[0], blo[1], blo[2]};
    for (;;) {
      bool on_shell = ring == 0;
      for (int i = 0; i < dim_ && !on_shell; ++i)
        if (b[i] == bc[i] - ring || b[i] == bc[i] + ring) on_shell = true;
      if (on_shell) {
        any = true;
        std::size_t idx = 0;
        for (int i = 0; i < dim_; ++i)
          idx = idx * static_cast<std::size_t>(nbins_[i]) + static_cast<std::size_t>(b[i]);
        for (int k : buckets_[idx]) {
          const double d2 = dist2(pts[static_cast<std::size_t>(k)], x, dim_);
          if (d2 < best2 || (d2 == best2 && k < best)) {
            best2 = d2;
            best = k;
          }
        }
      }
      int axis = dim_ - 1;
      while (axis >= 0) {
        if (++b[axis] <= bhi[axis]) break;
        b[axis] = blo[axis];
        --axis;
      }
      if (axis < 0) break;
    }
    if (!any && best >= 0) break;
  }
  return best;
}

double Partition::measure_sigma(double mass_fraction) const {
  if (mc_total_samples == 0) return 0.0;
  const double p = std::clamp(mass_fraction, 0.0, 1.0);
  return domain.volume() * std::sqrt(p * (1.0 - p) / double(mc_total_samples));
}

Point Partition::anchor_of(int cell) const {
  const Cell& c = cells[static_cast<std::size_t>(cell)];
  return c.is_boundary && c.boundary_anchor ? c.boundary_anchor->location : c.centroid;
}

std::span<const Point> Partition::cell_points(int cell) const {
  const Cell& c = cells[static_cast<std::size_t>(cell)];
  return {quad_points.data() + c.quad_begin, c.quad_count};
}

std::span<const double> Partition::cell_point_weights(int cell) const {
  const Cell& c = cells[static_cast<std::size_t>(cell)];
  return {quad_weights.data() + c.quad_begin, c.quad_count};
}

std::vector<int> Partition::centroids_in_ball(const Point& x, double r) const {
  std::vector<int> out;
  centroid_index_.in_ball(x, r, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Partition::cells_touching_ball(const Point& x, double r) const {
  const double pad = max_radius_bound();
  std::vector<int> raw;
  centroid_index_.in_ball(x, r + pad, raw);
  std::vector<int> out;
  out.reserve(raw.size());
  for (int k : raw) {
    const Cell& c = cells[static_cast<std::size_t>(k)];
    if (dist(c.centroid, x, dim()) < r + c.radius_bound) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Partition::nearest_site(const Point& x) const { return site_index_.nearest(x); }

double Partition::epsilon(int cell) const {
  if (eps_.empty()) throw std::logic_error("epsilon: scales not assigned");
  return eps_[static_cast<std::size_t>(cell)];
}

void Partition::recompute_epsilons() {
  if (rho.size() != cells.size()) throw std::logic_error("recompute_epsilons: rho unassigned");
  eps_.assign(cells.size(), 0.0);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto touching = cells_touching_ball(anchor_of(static_cast<int>(k)), rho[k]);
    double e = 0.0;
    for (int j : touching) e = std::max(e, cells[static_cast<std::size_t>(j)].radius_bound);
    eps_[k] = e;
  }
}

bool Partition::margin_ok(int cell) const {
  if (!has_window) return true;
  const Point a = anchor_of(cell);
  const double pad = rho[static_cast<std::size_t>(cell)] +
                     (eps_.empty() ? 0.0 : eps_[static_cast<std::size_t>(cell)]);
  for (int i = 0; i < dim(); ++i)
    if (a[i] - pad < window_lo[i] || a[i] + pad > window_hi[i]) return false;
  return true;
}

double Partition::total_measure() const {
  double s = 0.0;
  for (const Cell& c : cells) s += c.measure;
  return s;
}

double Partition::max_radius_bound() const {
  double r = 0.0;
  for (const Cell& c : cells) r = std::max(r, c.radius_bound);
  return r;
}

void Partition::accumulate_cell_moments(int cell, const Point& a, double& mass, Point& first,
                                        linalg::Matrix& second) const {
  const Cell& c = cells[static_cast<std::size_t>(cell)];
  const int d = dim();
  if (c.exact_box) {
    const double m = c.measure;
    Point v = sub(c.centroid, a);
    mass += m;
    for (int i = 0; i < d; ++i) first[i] += m * v[i];
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) second.at(i, j) += m * v[i] * v[j];
      const double li = c.box_hi[i] - c.box_lo[i];
      second.at(i, i) += m * li * li / 12.0;
    }
    return;
  }
  const auto pts = cell_points(cell);
  const auto w = cell_point_weights(cell);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Point v = sub(pts[k], a);
    mass += w[k];
    for (int i = 0; i < d; ++i) first[i] += w[k] * v[i];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) second.at(i, j) += w[k] * v[i] * v[j];
  }
}

void Partition::rebuild_index() {
  const int d = dim();
  std::vector<Point> centroid_pts(cells.size());
  std::vector<Point> site_pts(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    centroid_pts[k] = cells[k].centroid;
    site_pts[k] = cells[k].site;
  }
  Point lo{}, hi{};
  minmax_points(centroid_pts, d, lo, hi);
  centroid_index_ = CentroidIndex(std::move(centroid_pts), d, lo, hi);
  minmax_points(site_pts, d, lo, hi);
  site_index_ = CentroidIndex(std::move(site_pts), d, lo, hi);
}

// ---------------------------------------------------------------------------
// builders

Partition build_lattice_partition(const Domain& dom, int n, const Point* window_lo,
                                  const Point* window_hi) {
  if (n < 1) throw std::invalid_argument("build_lattice_partition: n >= 1 required");
  const int d = dom.dim();
  Point lo{}, hi{};
  if (dom.kind() == DomainKind::box) {
    lo = dom.box_lo();
    hi = dom.box_hi();
  } else if (dom.kind() == DomainKind::whole_space) {
    if (!window_lo || !window_hi)
      throw std::invalid_argument("build_lattice_partition: whole-space runs need a window");
    lo = *window_lo;
    hi = *window_hi;
  } else {
    throw std::invalid_argument("build_lattice_partition: box or whole-space domains only");
  }

  const double h = 1.0 / n;
  int kmin[kMaxDim] = {0, 0, 0}, kmax[kMaxDim] = {0, 0, 0};
  for (int i = 0; i < d; ++i) {
    kmin[i] = static_cast<int>(std::ceil(lo[i] * n - 0.5 - 1e-9));
    kmax[i] = static_cast<int>(std::floor(hi[i] * n + 0.5 + 1e-9));
  }

  Partition part;
  part.domain = dom;
  part.level_params.n = n;
  if (dom.kind() == DomainKind::whole_space) {
    part.has_window = true;
    part.window_lo = lo;
    part.window_hi = hi;
  }

  int k[kMaxDim] = {kmin[0], kmin[1], kmin[2]};
  for (;;) {
    Point clo{}, chi{};
    double measure = 1.0;
    bool empty = false;
    for (int i = 0; i < d; ++i) {
      const double c = k[i] * h;
      clo[i] = std::max(c - 0.5 * h, lo[i]);
      chi[i] = std::min(c + 0.5 * h, hi[i]);
      const double len = chi[i] - clo[i];
      if (len <= 1e-12 * h) {
        empty = true;
        break;
      }
      measure *= len;
    }
    if (!empty) {
      Cell cell;
      cell.id = static_cast<int>(part.cells.size());
      for (int i = 0; i < d; ++i) cell.site[i] = k[i] * h;
      cell.exact_box = true;
      cell.box_lo = clo;
      cell.box_hi = chi;
      cell.measure = measure;
      cell.centroid = scale(add(clo, chi), 0.5);
      cell.radius_bound = 0.5 * dist(clo, chi, d);
      part.cells.push_back(cell);
    }
    int axis = d - 1;
    while (axis >= 0) {
      if (++k[axis] <= kmax[axis]) break;
      k[axis] = kmin[axis];
      --axis;
    }
    if (axis < 0) break;
  }
  if (part.cells.empty()) throw std::logic_error("build_lattice_partition: empty window");

  // point sets for cover/Hausdorff queries: corners, face centers, centroid
  for (Cell& c : part.cells) {
    c.quad_begin = static_cast<std::uint32_t>(part.quad_points.size());
    std::vector<Point> pts;
    const int corners = 1 << d;
    for (int mask = 0; mask < corners; ++mask) {
      Point p = c.centroid;
      for (int i = 0; i < d; ++i) p[i] = (mask >> i) & 1 ? c.box_hi[i] : c.box_lo[i];
      pts.push_back(p);
    }
    for (int i = 0; i < d; ++i)
      for (int side = 0; side < 2; ++side) {
        Point p = c.centroid;
        p[i] = side ? c.box_hi[i] : c.box_lo[i];
        pts.push_back(p);
      }
    pts.push_back(c.centroid);
    c.quad_count = static_cast<std::uint32_t>(pts.size());
    for (const Point& p : pts) {
      part.quad_points.push_back(p);
      part.quad_weights.push_back(c.measure / double(pts.size()));
    }
  }

  part.rebuild_index();
  return part;
}

Partition build_voronoi_partition(const Domain& dom, const std::vector<Point>& sites,
                                  int mc_per_cell, RngStream& rng) {
  if (!dom.bounded()) throw std::invalid_argument("build_voronoi_partition: bounded domain required");
  if (sites.empty()) throw std::invalid_argument("build_voronoi_partition: no sites");
  if (mc_per_cell < 1) throw std::invalid_argument("build_voronoi_partition: mc_per_cell >= 1");
  const int d = dom.dim();

  Partition part;
  part.domain = dom;
  part.level_params.n = static_cast<int>(sites.size());
  part.cells.resize(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    part.cells[k].id = static_cast<int>(k);
    part.cells[k].site = sites[k];
    if (!dom.contains(sites[k]))
      throw std::invalid_argument("build_voronoi_partition: site outside D");
  }
  part.rebuild_index();

  // duplicate-site detection via nearest-other-site spacing
  std::vector<double> half_spacing(sites.size(), 0.0);
  {
    Point slo{}, shi{};
    minmax_points(sites, d, slo, shi);
    const CentroidIndex site_idx(sites, d, slo, shi);
    std::vector<int> near;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      double r = 4.0 * dom.diameter() / std::pow(double(sites.size()), 1.0 / d);
      while (true) {
        site_idx.in_ball(sites[k], r, near);
        for (int j : near)
          if (static_cast<std::size_t>(j) != k)
            best = std::min(best, dist(sites[static_cast<std::size_t>(j)], sites[k], d));
        if (std::isfinite(best) || r > 4.0 * dom.diameter()) break;
        r *= 2.0;
      }
      if (!(best > 1e-14 * dom.diameter()))
        throw std::invalid_argument("build_voronoi_partition: duplicate sites");
      half_spacing[k] = 0.5 * best;
    }
  }

  const std::uint64_t total = std::uint64_t(mc_per_cell) * sites.size();
  part.mc_total_samples = total;

  // fixed-size batches, each with its own substream; batch results are merged
  // in batch order so the output is independent of scheduling
  const std::uint64_t batch = 1 << 16;
  const std::uint64_t nbatches = (total + batch - 1) / batch;
  std::vector<Point> samples;
  samples.reserve(total);
  std::vector<int> owner(total);
  for (std::uint64_t bi = 0; bi < nbatches; ++bi) {
    RngStream bs(rng.seed(), substream("voronoi-mc", rng.stream() ^ bi));
    const std::uint64_t lo = bi * batch;
    const std::uint64_t hi = std::min(total, lo + batch);
    auto pts = dom.sample_uniform(static_cast<int>(hi - lo), bs);
    for (auto& p : pts) samples.push_back(p);
  }
  parallel_for(total, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      owner[i] = part.nearest_site(samples[i]);
  });

  std::vector<std::uint32_t> counts(sites.size(), 0);
  for (std::uint64_t i = 0; i < total; ++i) ++counts[static_cast<std::size_t>(owner[i])];
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (counts[k] == 0)
      throw std::runtime_error(
          "build_voronoi_partition: a cell received zero MC samples (mc_per_cell too small)");

  std::vector<std::uint32_t> offset(sites.size() + 1, 0);
  for (std::size_t k = 0; k < sites.size(); ++k) offset[k + 1] = offset[k] + counts[k];
  part.quad_points.resize(total);
  part.quad_weights.resize(total);
  {
    std::vector<std::uint32_t> cursor(offset.begin(), offset.end() - 1);
    for (std::uint64_t i = 0; i < total; ++i)
      part.quad_points[cursor[static_cast<std::size_t>(owner[i])]++] = samples[i];
  }

  const double vol = dom.volume();
  for (std::size_t k = 0; k < sites.size(); ++k) {
    Cell& c = part.cells[k];
    c.quad_begin = offset[k];
    c.quad_count = counts[k];
    c.measure = vol * double(counts[k]) / double(total);
    Point s{};
    for (std::uint32_t i = offset[k]; i < offset[k + 1]; ++i) s = add(s, part.quad_points[i]);
    c.centroid = scale(s, 1.0 / double(counts[k]));
    double r2max = 0.0;
    for (std::uint32_t i = offset[k]; i < offset[k + 1]; ++i)
      r2max = std::max(r2max, dist2(part.quad_points[i], c.centroid, d));
    // sup over the true cell can exceed the sample max; inflate
    c.radius_bound = std::sqrt(r2max) *
                     (1.0 + 2.0 * half_spacing[k] / std::sqrt(double(counts[k])));
    const double w = c.measure / double(counts[k]);
    for (std::uint32_t i = offset[k]; i < offset[k + 1]; ++i) part.quad_weights[i] = w;
  }

  part.rebuild_index();
  return part;
}

void classify_boundary(Partition& part) {
  if (part.delta.size() != part.cells.size())
    throw std::logic_error("classify_boundary: delta unassigned");
  const Domain& dom = part.domain;
  for (std::size_t k = 0; k < part.cells.size(); ++k) {
    Cell& c = part.cells[k];
    if (!dom.bounded()) {
      c.is_boundary = false;
      c.boundary_anchor.reset();
      continue;
    }
    bool boundary;
    if (!dom.contains(c.centroid)) {
      boundary = true;
    } else {
      boundary = dom.dist_to_boundary(c.centroid) < part.delta[k];
    }
    c.is_boundary = boundary;
    if (boundary)
      c.boundary_anchor = dom.nearest_boundary_point(c.centroid);
    else
      c.boundary_anchor.reset();
  }
}

void assign_scales(Partition& part, double a_n, double b_n) {
  if (!(a_n > 0.0) || !(a_n < b_n))
    throw std::invalid_argument("assign_scales: need 0 < a_n < b_n");
  part.delta.assign(part.cells.size(), a_n);
  classify_boundary(part);
  part.rho.resize(part.cells.size());
  for (std::size_t k = 0; k < part.cells.size(); ++k)
    part.rho[k] = part.cells[k].is_boundary ? b_n : a_n;
  part.level_params.a_n = a_n;
  part.level_params.b_n = b_n;
  part.recompute_epsilons();
}

// ---------------------------------------------------------------------------
// serialization

void Partition::save(const std::string& cells_csv, const std::string& quad_bin,
                     const std::string& meta_header) const {
  const int d = dim();
  std::ofstream os(cells_csv);
  if (!os) throw std::runtime_error("Partition::save: cannot open " + cells_csv);
  os << meta_header;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  os << "# level n=" << level_params.n << " a_n=";
  put(level_params.a_n);
  os << " b_n=";
  put(level_params.b_n);
  os << " mc_total=" << mc_total_samples << "\n";
  if (has_window) {
    os << "# window";
    for (int i = 0; i < d; ++i) {
      os << ' ';
      put(window_lo[i]);
    }
    for (int i = 0; i < d; ++i) {
      os << ' ';
      put(window_hi[i]);
    }
    os << "\n";
  }
  os << "id";
  for (int i = 0; i < d; ++i) os << ",site" << i;
  for (int i = 0; i < d; ++i) os << ",centroid" << i;
  os << ",measure,radius_bound,is_boundary";
  for (int i = 0; i < d; ++i) os << ",anchor" << i;
  for (int i = 0; i < d; ++i) os << ",normal" << i;
  os << ",delta,rho,exact_box";
  for (int i = 0; i < d; ++i) os << ",box_lo" << i;
  for (int i = 0; i < d; ++i) os << ",box_hi" << i;
  os << ",quad_count\n";
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell& c = cells[k];
    os << c.id;
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(c.site[i]);
    }
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(c.centroid[i]);
    }
    os << ',';
    put(c.measure);
    os << ',';
    put(c.radius_bound);
    os << ',' << (c.is_boundary ? 1 : 0);
    const Point aloc = c.boundary_anchor ? c.boundary_anchor->location : Point{};
    const Point anrm = c.boundary_anchor ? c.boundary_anchor->inward_normal : Point{};
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(aloc[i]);
    }
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(anrm[i]);
    }
    os << ',';
    put(delta.empty() ? 0.0 : delta[k]);
    os << ',';
    put(rho.empty() ? 0.0 : rho[k]);
    os << ',' << (c.exact_box ? 1 : 0);
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(c.box_lo[i]);
    }
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(c.box_hi[i]);
    }
    os << ',' << c.quad_count << "\n";
  }

  std::ofstream ob(quad_bin, std::ios::binary);
  if (!ob) throw std::runtime_error("Partition::save: cannot open " + quad_bin);
  const char magic[8] = {'R', 'B', 'M', 'Q', '0', '1', 0, 0};
  ob.write(magic, 8);
  const std::uint64_t npts = quad_points.size();
  const std::uint64_t dd = static_cast<std::uint64_t>(d);
  ob.write(reinterpret_cast<const char*>(&dd), 8);
  ob.write(reinterpret_cast<const char*>(&npts), 8);
  for (const Point& p : quad_points)
    ob.write(reinterpret_cast<const char*>(p.data()), sizeof(double) * static_cast<std::size_t>(d));
  ob.write(reinterpret_cast<const char*>(quad_weights.data()),
           static_cast<std::streamsize>(sizeof(double) * quad_weights.size()));
}

Partition Partition::load(const Domain& dom, const std::string& cells_csv,
                          const std::string& quad_bin) {
  std::ifstream is(cells_csv);
  if (!is) throw std::runtime_error("Partition::load: missing " + cells_csv);
  Partition part;
  part.domain = dom;
  const int d = dom.dim();
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tag;
      ls >> tag;
      if (tag == "level") {
        std::string kv;
        while (ls >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = kv.substr(0, eq);
          const std::string val = kv.substr(eq + 1);
          if (key == "n") part.level_params.n = std::stoi(val);
          if (key == "a_n") part.level_params.a_n = std::stod(val);
          if (key == "b_n") part.level_params.b_n = std::stod(val);
          if (key == "mc_total") part.mc_total_samples = std::stoull(val);
        }
      } else if (tag == "window") {
        part.has_window = true;
        for (int i = 0; i < d; ++i) ls >> part.window_lo[i];
        for (int i = 0; i < d; ++i) ls >> part.window_hi[i];
      }
      continue;
    }
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tok;
    auto next = [&]() -> double {
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("Partition::load: short row");
      return std::stod(tok);
    };
    Cell c;
    c.id = static_cast<int>(next());
    for (int i = 0; i < d; ++i) c.site[i] = next();
    for (int i = 0; i < d; ++i) c.centroid[i] = next();
    c.measure = next();
    c.radius_bound = next();
    c.is_boundary = next() != 0.0;
    BoundaryPoint bp;
    for (int i = 0; i < d; ++i) bp.location[i] = next();
    for (int i = 0; i < d; ++i) bp.inward_normal[i] = next();
    if (c.is_boundary) c.boundary_anchor = bp;
    const double delta_v = next();
    const double rho_v = next();
    c.exact_box = next() != 0.0;
    for (int i = 0; i < d; ++i) c.box_lo[i] = next();
    for (int i = 0; i < d; ++i) c.box_hi[i] = next();
    c.quad_count = static_cast<std::uint32_t>(next());
    part.cells.push_back(c);
    part.delta.push_back(delta_v);
    part.rho.push_back(rho_v);
  }

  std::ifstream ib(quad_bin, std::ios::binary);
  if (!ib) throw std::runtime_error("Partition::load: missing " + quad_bin);
  char magic[8];
  ib.read(magic, 8);
  if (std::memcmp(magic, "RBMQ01", 6) != 0)
    throw std::runtime_error("Partition::load: bad quadrature file");
  std::uint64_t dd = 0, npts = 0;
  ib.read(reinterpret_cast<char*>(&dd), 8);
  ib.read(reinterpret_cast<char*>(&npts), 8);
  if (static_cast<int>(dd) != d) throw std::runtime_error("Partition::load: dimension mismatch");
  part.quad_points.resize(npts);
  for (auto& p : part.quad_points) {
    p.fill(0.0);
    ib.read(reinterpret_cast<char*>(p.data()), sizeof(double) * static_cast<std::size_t>(d));
  }
  part.quad_weights.resize(npts);
  ib.read(reinterpret_cast<char*>(part.quad_weights.data()),
          static_cast<std::streamsize>(sizeof(double) * npts));
  if (!ib) throw std::runtime_error("Partition::load: truncated quadrature file");

  std::uint32_t begin = 0;
  for (Cell& c : part.cells) {
    c.quad_begin = begin;
    begin += c.quad_count;
  }
  if (begin != part.quad_points.size())
    throw std::runtime_error("Partition::load: quadrature length mismatch");

  part.rebuild_index();
  if (part.level_params.a_n > 0.0) part.recompute_epsilons();
  return part;
}

}  // namespace rbmc
