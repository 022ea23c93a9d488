#include "rbmc/generator.hpp"

#include "rbmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace rbmc {

double CellGenerator::max_abs_corrector() const {
  double m = 0.0;
  for (double c : corrector) m = std::max(m, std::abs(c));
  return m;
}

double beta_d(int d) {
  if (d < 1) throw std::invalid_argument("beta_d: d >= 1 required");
  // B(1/2,(d+1)/2) via log-gamma
  const double lb = std::lgamma(0.5) + std::lgamma(0.5 * (d + 1)) - std::lgamma(0.5 * d + 1.0);
  return 2.0 / ((d + 1) * std::exp(lb));
}

double a1_value(int d, double t) {
  return std::pow(1.0 - t, d + 2) / ((d + 2) * std::pow(1.0 + t, d)) - t * t;
}

double a2_value(int d, double r_d, double t) {
  return std::pow(r_d, -(d + 2)) / ((d + 2) * std::pow(1.0 + t, d)) - t * t - 2.0 * t;
}

namespace {
double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo > 0.0) == (fm > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace

double a1_root(int d) {
  return bisect_root([d](double t) { return a1_value(d, t); }, 1e-12, 1.0);
}

double a2_root(int d, double r_d) {
  if (!(r_d > 1.0)) throw std::invalid_argument("a2_root: r_d > 1 required");
  const double lo = 1e-18;
  if (!(a2_value(d, r_d, lo) > 0.0))
    throw std::runtime_error(
        "a2_root: no positive sign change (r_d too large; enlarge rho or skip boundary "
        "correction)");
  return bisect_root([&](double t) { return a2_value(d, r_d, t); }, lo, 1.0);
}

double threshold_c1(int d) { return 0.99 * a1_root(d); }
double threshold_c2(int d, double r_d) { return 0.99 * a2_root(d, r_d); }

std::vector<int> neighbor_set(const Partition& part, int cell) {
  const auto out = part.centroids_in_ball(part.anchor_of(cell), part.rho[static_cast<std::size_t>(cell)]);
  if (out.empty())
    throw std::runtime_error("neighbor_set: empty neighbor set (rho below cell scale)");
  return out;
}

double estimate_r_d(const Partition& part) {
  const Domain& dom = part.domain;
  const int d = part.dim();
  double worst = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < part.cells.size(); ++k) {
    const Cell& c = part.cells[k];
    if (!c.is_boundary) continue;
    any = true;
    const double rho = part.rho[k];
    const Point xhat = c.boundary_anchor->location;
    const Point nu = c.boundary_anchor->inward_normal;
    const auto neigh = part.centroids_in_ball(xhat, rho);
    double best_r = 0.0;
    for (double s : {0.3, 0.4, 0.5}) {
      const Point e = add(xhat, scale(nu, s * rho));
      if (!dom.contains(e)) continue;
      double r = dom.dist_to_boundary(e);
      // shrink until the ball avoids every cell outside the neighbor set
      const auto candidates = part.cells_touching_ball(e, std::min(r, rho));
      for (int j : candidates) {
        if (std::binary_search(neigh.begin(), neigh.end(), j)) continue;
        for (const Point& p : part.cell_points(j)) r = std::min(r, dist(p, e, d));
      }
      best_r = std::max(best_r, r);
    }
    if (!(best_r > 0.0))
      throw std::runtime_error("estimate_r_d: no inscribed ball found (degenerate partition)");
    worst = std::max(worst, rho / best_r);
  }
  if (!any) return 1.0;
  return std::max(1.1 * worst, 1.0 + 1e-9);
}

CellGenerator assemble_cell(const Partition& part, int cell, double beta, double rank_tol) {
  const int d = part.dim();
  const Cell& c = part.cells[static_cast<std::size_t>(cell)];
  CellGenerator g;
  g.cell_id = cell;
  g.anchor = part.anchor_of(cell);
  g.neighbors = neighbor_set(part, cell);
  const int n = static_cast<int>(g.neighbors.size());

  g.mass_o = 0.0;
  for (int j : g.neighbors) g.mass_o += part.cells[static_cast<std::size_t>(j)].measure;

  // b(xi): mean neighbor displacement from the anchor; boundary cells get the
  // half-ball correction -beta rho nu
  g.drift = Point{};
  for (int j : g.neighbors) {
    const Cell& nb = part.cells[static_cast<std::size_t>(j)];
    const double w = nb.measure / g.mass_o;
    for (int i = 0; i < d; ++i) g.drift[i] += (nb.centroid[i] - g.anchor[i]) * w;
  }
  if (c.is_boundary) {
    const double rho = part.rho[static_cast<std::size_t>(cell)];
    for (int i = 0; i < d; ++i)
      g.drift[i] -= beta * rho * c.boundary_anchor->inward_normal[i];
  }

  // A: d x n with columns (centroid_j - anchor) m_j / m(O)
  linalg::Matrix a(d, n);
  for (int jj = 0; jj < n; ++jj) {
    const Cell& nb = part.cells[static_cast<std::size_t>(g.neighbors[static_cast<std::size_t>(jj)])];
    const double w = nb.measure / g.mass_o;
    for (int i = 0; i < d; ++i) a.at(i, jj) = (nb.centroid[i] - g.anchor[i]) * w;
  }

  // c = A^+ b through the SVD
  const linalg::Svd sv = linalg::svd(a);
  const double cutoff = sv.sigma.empty() ? 0.0 : rank_tol * sv.sigma[0];
  int rank = 0;
  g.corrector.assign(static_cast<std::size_t>(n), 0.0);
  for (std::size_t j = 0; j < sv.sigma.size(); ++j) {
    if (sv.sigma[j] <= cutoff || sv.sigma[j] == 0.0) continue;
    ++rank;
    double proj = 0.0;
    for (int i = 0; i < d; ++i) proj += sv.u.at(i, static_cast<int>(j)) * g.drift[i];
    proj /= sv.sigma[j];
    for (int i = 0; i < n; ++i) g.corrector[static_cast<std::size_t>(i)] += sv.v.at(i, static_cast<int>(j)) * proj;
  }
  g.rank_full = rank == d;

  g.second_moment = linalg::Matrix(d, d);
  for (int j : g.neighbors) {
    const Cell& nb = part.cells[static_cast<std::size_t>(j)];
    const double w = nb.measure / g.mass_o;
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l)
        g.second_moment.at(i, l) += (nb.centroid[i] - g.anchor[i]) * (nb.centroid[l] - g.anchor[l]) * w;
  }
  g.q = linalg::trace(g.second_moment) / d;

  g.weights.resize(static_cast<std::size_t>(n));
  for (int jj = 0; jj < n; ++jj) {
    const Cell& nb = part.cells[static_cast<std::size_t>(g.neighbors[static_cast<std::size_t>(jj)])];
    g.weights[static_cast<std::size_t>(jj)] =
        (1.0 - g.corrector[static_cast<std::size_t>(jj)]) * nb.measure / g.mass_o;
  }

  g.q_positive = g.q > 0.0;
  g.c_below_one = g.max_abs_corrector() < 1.0;
  return g;
}

Point drift_b(const Partition& part, int cell) {
  return assemble_cell(part, cell, beta_d(part.dim()), 1e-12).drift;
}

void second_moment_q(const Partition& part, int cell, linalg::Matrix& q_out, double& q_scalar) {
  const CellGenerator g = assemble_cell(part, cell, beta_d(part.dim()), 1e-12);
  q_out = g.second_moment;
  q_scalar = g.q;
}

std::vector<double> corrector_c(const Partition& part, int cell, double rank_tol) {
  return assemble_cell(part, cell, beta_d(part.dim()), rank_tol).corrector;
}

GeneratorTable assemble(const Partition& part, const AssembleOptions& opt) {
  if (part.rho.size() != part.cells.size())
    throw std::logic_error("assemble: scales not assigned");
  const int d = part.dim();
  const double beta = beta_d(d);

  GeneratorTable table;
  table.dim = d;
  table.level = part.level_params;
  table.cells.reserve(part.cells.size());

  GeneratorReport rep;
  rep.min_q = std::numeric_limits<double>::infinity();
  rep.min_q_rho2 = std::numeric_limits<double>::infinity();
  rep.min_q_margin = std::numeric_limits<double>::infinity();
  rep.c1 = threshold_c1(d);

  std::vector<CellGenerator> assembled(part.cells.size());
  parallel_for(part.cells.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k)
      assembled[k] = assemble_cell(part, static_cast<int>(k), beta, opt.rank_tol);
  });
  for (std::size_t k = 0; k < part.cells.size(); ++k) {
    CellGenerator g = std::move(assembled[k]);
    const double rho = part.rho[k];
    const double eps = part.epsilon(static_cast<int>(k));
    const double ratio = eps / rho;
    const bool boundary = part.cells[k].is_boundary;
    const double maxc = g.max_abs_corrector();

    if (boundary) {
      ++rep.n_boundary;
      rep.max_eps_rho_boundary = std::max(rep.max_eps_rho_boundary, ratio);
    } else {
      rep.max_eps_rho_interior = std::max(rep.max_eps_rho_interior, ratio);
    }
    rep.max_abs_c = std::max(rep.max_abs_c, maxc);
    rep.min_q = std::min(rep.min_q, g.q);
    rep.min_q_rho2 = std::min(rep.min_q_rho2, g.q / (rho * rho));
    if (part.margin_ok(static_cast<int>(k))) {
      rep.max_abs_c_margin = std::max(rep.max_abs_c_margin, maxc);
      rep.min_q_margin = std::min(rep.min_q_margin, g.q);
    }
    if (!g.rank_full) ++rep.n_rank_deficient;
    if (!g.valid()) ++rep.n_invalid;
    if (g.rank_full && g.valid()) {
      if (boundary) {
        const double denom = ratio + std::pow(rho, part.domain.holder_alpha());
        if (denom > 0.0)
          rep.fitted_corrector_const_boundary =
              std::max(rep.fitted_corrector_const_boundary, maxc / denom);
      } else if (eps > 0.0) {
        rep.fitted_corrector_const_interior =
            std::max(rep.fitted_corrector_const_interior, maxc * rho / eps);
      }
    }
    table.cells.push_back(std::move(g));
  }

  if (rep.n_boundary > 0) {
    rep.r_d = estimate_r_d(part);
    try {
      rep.c2 = threshold_c2(d, rep.r_d);
      rep.c2_usable = true;
    } catch (const std::runtime_error&) {
      rep.c2 = 0.0;
      rep.c2_usable = false;
    }
  }

  rep.chain_condition_holds = rep.min_q > 0.0 && rep.max_abs_c < 1.0;
  rep.chain_condition_margin = rep.min_q_margin > 0.0 && rep.max_abs_c_margin < 1.0;
  rep.interior_ratio_ok = rep.max_eps_rho_interior <= rep.c1;
  rep.boundary_ratio_ok = rep.n_boundary == 0 || (rep.c2_usable && rep.max_eps_rho_boundary <= rep.c2);
  table.report = rep;
  return table;
}

double GeneratorTable::apply(const std::vector<double>& f_by_cell, int cell) const {
  const CellGenerator& g = cells[static_cast<std::size_t>(cell)];
  if (!g.valid()) throw std::runtime_error("GeneratorTable::apply: invalid cell");
  const double fx = f_by_cell[static_cast<std::size_t>(cell)];
  double s = 0.0;
  for (std::size_t j = 0; j < g.neighbors.size(); ++j)
    s += (f_by_cell[static_cast<std::size_t>(g.neighbors[j])] - fx) * g.weights[j];
  return s / g.q;
}

void GeneratorTable::save_edges_csv(const std::string& path, const std::string& meta) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_edges_csv: cannot open " + path);
  os << meta << "from,to,weight\n";
  char buf[64];
  for (const CellGenerator& g : cells)
    for (std::size_t j = 0; j < g.neighbors.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", g.weights[j]);
      os << g.cell_id << ',' << g.neighbors[j] << ',' << buf << "\n";
    }
}

void GeneratorTable::save_cells_csv(const std::string& path, const std::string& meta) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_cells_csv: cannot open " + path);
  os << meta << "cell,q,drift_norm,max_abs_c,n_neighbors,q_positive,c_below_one,rank_full\n";
  char buf[64];
  for (const CellGenerator& g : cells) {
    double bn = 0.0;
    for (int i = 0; i < dim; ++i) bn += g.drift[i] * g.drift[i];
    os << g.cell_id << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", g.q);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", std::sqrt(bn));
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", g.max_abs_corrector());
    os << buf << ',' << g.neighbors.size() << ',' << (g.q_positive ? 1 : 0) << ','
       << (g.c_below_one ? 1 : 0) << ',' << (g.rank_full ? 1 : 0) << "\n";
  }
}

}  // namespace rbmc
