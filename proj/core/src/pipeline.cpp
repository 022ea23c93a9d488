#include "rbmc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rbmc::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string level_file(const std::string& dir, const std::string& stem, int n,
                       const std::string& ext) {
  return dir + "/" + stem + "_n" + std::to_string(n) + ext;
}

double shape_a(const RunConfig& cfg, int n) {
  const double x = std::log(double(std::max(n, 2))) / double(n);
  if (cfg.scales.rule == "loglog")
    return std::pow(x, 1.0 / cfg.domain.dim()) * std::log(std::log(double(std::max(n, 3))));
  return std::pow(x, cfg.scales.p_a);
}

double shape_b(const RunConfig& cfg, int n) {
  const double x = std::log(double(std::max(n, 2))) / double(n);
  if (cfg.scales.rule == "loglog")
    return shape_a(cfg, n) * std::log(std::log(double(std::max(n, 3))));
  return std::pow(x, cfg.scales.p_b);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

}  // namespace

std::uint64_t effective_seed(const RunConfig& cfg, const StageOptions& opt) {
  return opt.seed_override ? *opt.seed_override : cfg.seed;
}

std::string resolved_out_dir(const RunConfig& cfg, const StageOptions& opt) {
  return opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
}

std::vector<int> selected_levels(const RunConfig& cfg, const StageOptions& opt) {
  if (opt.level_filter.empty()) return cfg.levels;
  std::vector<int> out;
  for (int n : cfg.levels)
    if (std::find(opt.level_filter.begin(), opt.level_filter.end(), n) != opt.level_filter.end())
      out.push_back(n);
  if (out.empty()) throw std::invalid_argument("level filter matches no configured level");
  return out;
}

std::string meta_header(const RunConfig& cfg, std::uint64_t seed) {
  std::ostringstream os;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(cfg.config_hash()));
  os << "# rbmchain v" << kVersion << "\n";
  os << "# config_hash=0x" << buf << "\n";
  os << "# seed=" << seed << "\n";
  os << "# rng=" << kRngName << "\n";
  return os.str();
}

std::vector<Point> level_sites(const RunConfig& cfg, std::uint64_t seed, int n) {
  RngStream rng(seed, substream("sites", static_cast<std::uint64_t>(n)));
  return cfg.domain.sample_uniform(n, rng);
}

Partition build_level_partition(const RunConfig& cfg, std::uint64_t seed, int n) {
  if (cfg.partition_kind == "lattice") {
    const Point* lo = cfg.has_window ? &cfg.window_lo : nullptr;
    const Point* hi = cfg.has_window ? &cfg.window_hi : nullptr;
    return build_lattice_partition(cfg.domain, n, lo, hi);
  }
  const auto sites = level_sites(cfg, seed, n);
  RngStream rng(seed, substream("voronoi", static_cast<std::uint64_t>(n)));
  return build_voronoi_partition(cfg.domain, sites, cfg.mc_per_cell, rng);
}

ScaleTable resolve_scales(const RunConfig& cfg, const std::map<int, Partition>& parts) {
  ScaleTable tab;
  tab.levels = cfg.levels;
  tab.c1 = threshold_c1(cfg.domain.dim());
  if (cfg.scales.rule == "explicit") {
    tab.a = cfg.scales.explicit_a;
    tab.b = cfg.scales.explicit_b;
    return tab;
  }
  tab.calibration_level =
      cfg.scales.calibrate_level == "finest" ? cfg.levels.back() : cfg.levels.front();
  double k_a = cfg.scales.k_a;
  double k_b = cfg.scales.k_b;
  if (k_a <= 0.0 || k_b <= 0.0) {
    const auto it = parts.find(tab.calibration_level);
    if (it == parts.end())
      throw std::logic_error("resolve_scales: calibration level partition not built");
    tab.calibration_radius = it->second.max_radius_bound();
    const double target = cfg.scales.calibrate_ratio * tab.c1;
    const double a_cal = tab.calibration_radius / target;
    if (k_a <= 0.0) k_a = a_cal / shape_a(cfg, tab.calibration_level);
    if (k_b <= 0.0)
      k_b = cfg.scales.b_over_a * k_a * shape_a(cfg, tab.calibration_level) /
            shape_b(cfg, tab.calibration_level);
  }
  tab.k_a = k_a;
  tab.k_b = k_b;
  for (int n : cfg.levels) {
    tab.a.push_back(k_a * shape_a(cfg, n));
    tab.b.push_back(k_b * shape_b(cfg, n));
  }
  return tab;
}

namespace {

struct BuiltLevel {
  int n = 0;
  double a = 0.0, b = 0.0;
  Partition part;
};

// builds + scales the requested levels (calibration may require building the
// calibration level even when filtered out)
std::vector<BuiltLevel> build_levels(const RunConfig& cfg, const StageOptions& opt,
                                     ScaleTable& scales_out) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const auto wanted = selected_levels(cfg, opt);
  std::map<int, Partition> parts;
  for (int n : wanted) parts.emplace(n, build_level_partition(cfg, seed, n));
  if (cfg.scales.rule != "explicit" && (cfg.scales.k_a <= 0.0 || cfg.scales.k_b <= 0.0)) {
    const int cal =
        cfg.scales.calibrate_level == "finest" ? cfg.levels.back() : cfg.levels.front();
    if (!parts.count(cal)) parts.emplace(cal, build_level_partition(cfg, seed, cal));
  }
  scales_out = resolve_scales(cfg, parts);
  std::vector<BuiltLevel> out;
  for (int n : wanted) {
    BuiltLevel bl;
    bl.n = n;
    const auto idx = static_cast<std::size_t>(
        std::find(cfg.levels.begin(), cfg.levels.end(), n) - cfg.levels.begin());
    bl.a = scales_out.a[idx];
    bl.b = scales_out.b[idx];
    bl.part = std::move(parts.at(n));
    assign_scales(bl.part, bl.a, bl.b);
    out.push_back(std::move(bl));
  }
  return out;
}

void write_scale_table(const std::string& path, const std::string& meta, const ScaleTable& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << meta << "# k_a=" << fmt(t.k_a) << " k_b=" << fmt(t.k_b) << " c1=" << fmt(t.c1)
     << " calibration_level=" << t.calibration_level << " calibration_radius="
     << fmt(t.calibration_radius) << "\n";
  os << "n,a_n,b_n\n";
  for (std::size_t i = 0; i < t.levels.size(); ++i)
    os << t.levels[i] << ',' << fmt(t.a[i]) << ',' << fmt(t.b[i]) << "\n";
}

void save_level_partition(const std::string& dir, const std::string& meta, const BuiltLevel& bl) {
  bl.part.save(level_file(dir, "cells", bl.n, ".csv"), level_file(dir, "quad", bl.n, ".bin"),
               meta);
}

Partition load_level_partition(const RunConfig& cfg, const std::string& dir, int n) {
  const std::string cells = level_file(dir, "cells", n, ".csv");
  const std::string quad = level_file(dir, "quad", n, ".bin");
  if (!fs::exists(cells) || !fs::exists(quad))
    throw std::runtime_error("missing prior-stage artifacts: run the partition stage first (" +
                             cells + ")");
  return Partition::load(cfg.domain, cells, quad);
}

void write_validity(const std::string& path, const std::string& meta,
                    const std::vector<std::pair<int, GeneratorReport>>& reports) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << meta
     << "n,max_eps_rho_interior,max_eps_rho_boundary,max_abs_c,min_q,min_q_rho2,c1,c2,c2_"
        "usable,r_d,n_boundary,n_rank_deficient,n_invalid,chain_condition,chain_condition_"
        "margin,interior_ratio_ok,boundary_ratio_ok,fitted_c_interior,fitted_c_boundary\n";
  for (const auto& [n, r] : reports) {
    os << n << ',' << fmt(r.max_eps_rho_interior) << ',' << fmt(r.max_eps_rho_boundary) << ','
       << fmt(r.max_abs_c) << ',' << fmt(r.min_q) << ',' << fmt(r.min_q_rho2) << ','
       << fmt(r.c1) << ',' << fmt(r.c2) << ',' << (r.c2_usable ? 1 : 0) << ',' << fmt(r.r_d)
       << ',' << r.n_boundary << ',' << r.n_rank_deficient << ',' << r.n_invalid << ','
       << (r.chain_condition_holds ? 1 : 0) << ',' << (r.chain_condition_margin ? 1 : 0) << ','
       << (r.interior_ratio_ok ? 1 : 0) << ',' << (r.boundary_ratio_ok ? 1 : 0) << ','
       << fmt(r.fitted_corrector_const_interior) << ','
       << fmt(r.fitted_corrector_const_boundary) << "\n";
  }
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

void run_partition(const RunConfig& cfg, const StageOptions& opt) {
  const std::string dir = resolved_out_dir(cfg, opt);
  ensure_dir(dir);
  const std::string meta = meta_header(cfg, effective_seed(cfg, opt));
  ScaleTable scales;
  const auto levels = build_levels(cfg, opt, scales);
  for (const BuiltLevel& bl : levels) save_level_partition(dir, meta, bl);
  write_scale_table(dir + "/scales.csv", meta, scales);
}

void run_generator(const RunConfig& cfg, const StageOptions& opt) {
  const std::string dir = resolved_out_dir(cfg, opt);
  ensure_dir(dir);
  std::string meta = meta_header(cfg, effective_seed(cfg, opt));
  if (cfg.domain.lipschitz_only())
    meta += "# heuristic: Lipschitz-only boundary (corner cells may fail validity)\n";
  std::vector<std::pair<int, GeneratorReport>> reports;
  for (int n : selected_levels(cfg, opt)) {
    Partition part = load_level_partition(cfg, dir, n);
    GeneratorTable gen = assemble(part);
    gen.save_edges_csv(level_file(dir, "generator_edges", n, ".csv"), meta);
    gen.save_cells_csv(level_file(dir, "generator_cells", n, ".csv"), meta);
    reports.emplace_back(n, gen.report);
  }
  write_validity(dir + "/validity.csv", meta, reports);
}

void run_simulate(const RunConfig& cfg, const StageOptions& opt) {
  const std::string dir = resolved_out_dir(cfg, opt);
  ensure_dir(dir);
  const std::uint64_t seed = effective_seed(cfg, opt);
  const std::string meta = meta_header(cfg, seed);
  if (!fs::exists(dir + "/validity.csv"))
    throw std::runtime_error("missing prior-stage artifacts: run the generator stage first");
  for (int n : selected_levels(cfg, opt)) {
    Partition part = load_level_partition(cfg, dir, n);
    GeneratorTable gen = assemble(part);
    ChainSampler sampler(gen);
    const Point start = cfg.start_point();
    const int start_cell = part.nearest_site(start);

    // a few full trajectories for inspection
    const int n_traj = std::min(cfg.simulation.replicas, 16);
    std::vector<Trajectory> trajs;
    for (int r = 0; r < n_traj; ++r) {
      RngStream rs(seed, substream("trajectory", (static_cast<std::uint64_t>(n) << 20) ^
                                                     static_cast<std::uint64_t>(r)));
      trajs.push_back(sampler.simulate(start_cell, cfg.simulation.horizon, rs));
    }
    save_trajectories_csv(level_file(dir, "trajectories", n, ".csv"), meta, part, trajs);

    for (double t : cfg.simulation.marginal_times) {
      RngStream rs(seed, substream("marginal", (static_cast<std::uint64_t>(n) << 20) ^
                                                   static_cast<std::uint64_t>(t * 1e6)));
      const auto pts =
          sampler.marginal_positions(part, start_cell, t, cfg.simulation.replicas, rs);
      save_points_csv(dir + "/marginal_n" + std::to_string(n) + "_t" + time_tag(t) + ".csv",
                      meta, part.dim(), pts, t);
    }
    if (cfg.simulation.stationarity_time > 0.0) {
      RngStream rs(seed, substream("stationarity", static_cast<std::uint64_t>(n)));
      const auto pts = sampler.marginal_positions(part, start_cell,
                                                  cfg.simulation.stationarity_time,
                                                  cfg.simulation.replicas, rs);
      save_points_csv(level_file(dir, "marginal_stationary", n, ".csv"), meta, part.dim(), pts,
                      cfg.simulation.stationarity_time);
    }
  }
}

namespace {

struct DiagRow {
  int level;
  std::string metric;
  double value;
  double bound;
  double sigma;
};

void write_diag_rows(const std::string& path, const std::string& meta,
                     const std::vector<DiagRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << meta << "level,metric,value,bound,sigma\n";
  for (const DiagRow& r : rows)
    os << r.level << ',' << r.metric << ',' << fmt(r.value) << ',' << fmt(r.bound) << ','
       << fmt(r.sigma) << "\n";
}

}  // namespace

void run_diagnose(const RunConfig& cfg, const StageOptions& opt) {
  const std::string dir = resolved_out_dir(cfg, opt);
  ensure_dir(dir);
  const std::uint64_t seed = effective_seed(cfg, opt);
  const std::string meta = meta_header(cfg, seed);
  std::vector<DiagRow> rows;
  std::ostringstream summary;

  std::vector<Partition> parts;
  std::vector<GeneratorTable> gens;
  for (int n : selected_levels(cfg, opt)) {
    parts.push_back(load_level_partition(cfg, dir, n));
    gens.push_back(assemble(parts.back()));
  }

  if (cfg.diagnostics.consistency) {
    const Point* wlo = cfg.has_window ? &cfg.window_lo : nullptr;
    const Point* whi = cfg.has_window ? &cfg.window_hi : nullptr;
    const auto fs_list = test_functions(cfg.domain, wlo, whi);
    for (std::size_t l = 0; l < parts.size(); ++l)
      for (const auto& f : fs_list) {
        const auto rep = consistency_error(gens[l], parts[l], f);
        rows.push_back({parts[l].level_params.n, "consistency_sup[" + f.description + "]",
                        rep.sup_all, 0.0, 0.0});
        rows.push_back({parts[l].level_params.n, "consistency_fitted_c[" + f.description + "]",
                        rep.fitted_const_interior, 0.0, 0.0});
        summary << "n=" << parts[l].level_params.n << "  " << f.description
                << ": sup e=" << rep.sup_all << " (interior " << rep.sup_interior
                << ", boundary " << rep.sup_boundary << ")\n";
      }
  }

  if (cfg.diagnostics.trackers) {
    std::vector<LevelInput> inputs;
    for (std::size_t l = 0; l < parts.size(); ++l) inputs.push_back({&parts[l], &gens[l]});
    const auto tr = bound_trackers(inputs);
    for (const auto& t : tr.levels) {
      rows.push_back({t.n, "tracker_qtilde", t.qtilde_ratio, 1.0, 0.0});
      rows.push_back({t.n, "tracker_qtilde_slack", t.qtilde_ratio_slack, 1.0, 0.0});
      rows.push_back({t.n, "tracker_qrho", t.qrho_ratio, 0.0, 0.0});
      rows.push_back({t.n, "tracker_qq", t.qq_ratio, 0.0, 0.0});
    }
    summary << "trackers cellwise_ok=" << tr.cellwise_qtilde_ok << " growth_ok=" << tr.growth_ok
            << "\n";
  }

  if (cfg.diagnostics.hausdorff) {
    for (std::size_t l = 0; l < parts.size(); ++l) {
      RngStream rng(seed, substream("hausdorff", static_cast<std::uint64_t>(l)));
      const auto hc = hausdorff_check(parts[l], cfg.diagnostics.hausdorff_pairs, rng);
      rows.push_back({parts[l].level_params.n, "hausdorff_violations", double(hc.violations),
                      0.0, 0.0});
      summary << "n=" << parts[l].level_params.n << "  hausdorff violations=" << hc.violations
              << " max_excess=" << hc.max_excess << "\n";
    }
  }

  if (cfg.diagnostics.marginal_compare && cfg.domain.bounded()) {
    for (std::size_t l = 0; l < parts.size(); ++l) {
      const int n = parts[l].level_params.n;
      for (double t : cfg.simulation.marginal_times) {
        const std::string mpath =
            dir + "/marginal_n" + std::to_string(n) + "_t" + time_tag(t) + ".csv";
        if (!fs::exists(mpath)) continue;
        // chain marginals from the simulate stage
        std::ifstream is(mpath);
        std::vector<Point> pts;
        std::string line;
        while (std::getline(is, line)) {
          if (line.empty() || line[0] == '#' || line.rfind("replica", 0) == 0) continue;
          std::istringstream ls(line);
          std::string tok;
          std::getline(ls, tok, ',');
          std::getline(ls, tok, ',');
          Point p{};
          for (int i = 0; i < parts[l].dim(); ++i) {
            std::getline(ls, tok, ',');
            p[i] = std::stod(tok);
          }
          pts.push_back(p);
        }
        RbmConfig rc{cfg.domain, cfg.reference_dt, t};
        RngStream rr(seed, substream("rbm-marginal", static_cast<std::uint64_t>(t * 1e6)));
        const auto ref = rbm_terminal_points(rc, cfg.start_point(),
                                             static_cast<int>(pts.size()), rr);
        const auto ts = two_sample_distance(pts, ref, cfg.domain.dim());
        rows.push_back({n, "marginal_energy_t" + time_tag(t), ts.energy, 0.0, 0.0});
        summary << "n=" << n << "  energy(t=" << t << ")=" << ts.energy << "\n";
      }
    }
  }

  write_diag_rows(dir + "/diagnostics.csv", meta, rows);
  std::ofstream os(dir + "/summary.txt");
  os << meta << summary.str();
}

StudyOutcome run_study(const RunConfig& cfg, const StageOptions& opt) {
  const std::string dir = resolved_out_dir(cfg, opt);
  ensure_dir(dir);
  const std::uint64_t seed = effective_seed(cfg, opt);
  std::string meta = meta_header(cfg, seed);
  if (cfg.domain.lipschitz_only())
    meta += "# heuristic: Lipschitz-only boundary (corner cells may fail validity)\n";

  StudyOutcome out;
  StageOptions all = opt;
  all.level_filter.clear();  // the study always runs every configured level

  ScaleTable scales;
  auto levels = build_levels(cfg, all, scales);
  out.scales = scales;
  for (const BuiltLevel& bl : levels) save_level_partition(dir, meta, bl);
  write_scale_table(dir + "/scales.csv", meta, scales);

  std::vector<GeneratorTable> gens;
  std::vector<std::pair<int, GeneratorReport>> reports;
  for (const BuiltLevel& bl : levels) {
    gens.push_back(assemble(bl.part));
    gens.back().save_edges_csv(level_file(dir, "generator_edges", bl.n, ".csv"), meta);
    gens.back().save_cells_csv(level_file(dir, "generator_cells", bl.n, ".csv"), meta);
    reports.emplace_back(bl.n, gens.back().report);
  }
  write_validity(dir + "/validity.csv", meta, reports);

  const Point* wlo = cfg.has_window ? &cfg.window_lo : nullptr;
  const Point* whi = cfg.has_window ? &cfg.window_hi : nullptr;
  std::vector<NeumannTestFunction> fs_list;
  if (cfg.diagnostics.consistency) {
    fs_list = test_functions(cfg.domain, wlo, whi);
    for (const auto& f : fs_list) out.test_function_names.push_back(f.description);
  }

  for (std::size_t l = 0; l < levels.size(); ++l) {
    StudyLevelRow row;
    row.n = levels[l].n;
    row.a_n = levels[l].a;
    row.b_n = levels[l].b;
    row.report = gens[l].report;
    for (const auto& f : fs_list) {
      const auto rep = consistency_error(gens[l], levels[l].part, f);
      row.sup_consistency.push_back(rep.sup_all);
      row.fitted_const_interior.push_back(rep.fitted_const_interior);
    }
    out.rows.push_back(std::move(row));
  }

  if (cfg.diagnostics.trackers) {
    std::vector<LevelInput> inputs;
    for (std::size_t l = 0; l < levels.size(); ++l)
      inputs.push_back({&levels[l].part, &gens[l]});
    out.trackers = bound_trackers(inputs);
    for (std::size_t l = 0; l < levels.size(); ++l)
      out.rows[l].tracker = out.trackers.levels[l];
  }

  // chain marginals against the reflected-Euler reference
  const bool compare = cfg.diagnostics.marginal_compare && cfg.domain.bounded() &&
                       (cfg.domain.kind() == DomainKind::ball ||
                        cfg.domain.kind() == DomainKind::box);
  std::map<double, std::vector<Point>> reference;
  if (compare) {
    for (double t : cfg.simulation.marginal_times) {
      RbmConfig rc{cfg.domain, cfg.reference_dt, t};
      RngStream rr(seed, substream("rbm-marginal", static_cast<std::uint64_t>(t * 1e6)));
      reference[t] =
          rbm_terminal_points(rc, cfg.start_point(), cfg.simulation.replicas, rr);
    }
  }

  for (std::size_t l = 0; l < levels.size(); ++l) {
    const int n = levels[l].n;
    const bool sim_ok = cfg.has_window ? gens[l].report.chain_condition_margin
                                       : gens[l].report.chain_condition_holds;
    if (!sim_ok) continue;  // reported as a failure below
    ChainSampler sampler(gens[l]);
    const Point start = cfg.start_point();
    const int start_cell = levels[l].part.nearest_site(start);
    for (double t : cfg.simulation.marginal_times) {
      RngStream rs(seed, substream("marginal", (static_cast<std::uint64_t>(n) << 20) ^
                                                   static_cast<std::uint64_t>(t * 1e6)));
      const auto pts = sampler.marginal_positions(levels[l].part, start_cell, t,
                                                  cfg.simulation.replicas, rs);
      save_points_csv(dir + "/marginal_n" + std::to_string(n) + "_t" + time_tag(t) + ".csv",
                      meta, cfg.domain.dim(), pts, t);
      if (compare) {
        const auto ts = two_sample_distance(pts, reference[t], cfg.domain.dim());
        out.rows[l].marginal_energy.push_back(ts.energy);
        if (l + 1 == levels.size()) {
          RngStream pr(seed, substream("perm", static_cast<std::uint64_t>(t * 1e6)));
          out.finest_marginal_tests.push_back(energy_permutation_test(
              pts, reference[t], cfg.domain.dim(), cfg.diagnostics.permutations, pr));
        }
      }
    }
  }

  if (cfg.diagnostics.stationarity && cfg.simulation.stationarity_time > 0.0 &&
      cfg.domain.bounded() && gens.back().report.chain_condition_holds) {
    const std::size_t l = levels.size() - 1;
    ChainSampler sampler(gens[l]);
    const int start_cell = levels[l].part.nearest_site(cfg.start_point());
    RngStream rs(seed, substream("stationarity", static_cast<std::uint64_t>(levels[l].n)));
    const auto pts = sampler.marginal_positions(levels[l].part, start_cell,
                                                cfg.simulation.stationarity_time,
                                                cfg.simulation.replicas, rs);
    save_points_csv(level_file(dir, "marginal_stationary", levels[l].n, ".csv"), meta,
                    cfg.domain.dim(), pts, cfg.simulation.stationarity_time);
    RngStream ur(seed, substream("uniform-reference"));
    const auto uni = cfg.domain.sample_uniform(cfg.simulation.replicas, ur);
    RngStream pr(seed, substream("perm-stationarity"));
    out.stationarity_test = energy_permutation_test(pts, uni, cfg.domain.dim(),
                                                    cfg.diagnostics.permutations, pr);
    out.stationarity_ran = true;
  }

  if (cfg.diagnostics.hausdorff) {
    RngStream rng(seed, substream("hausdorff", 0));
    out.hausdorff = hausdorff_check(levels.back().part, cfg.diagnostics.hausdorff_pairs, rng);
  }

  // ------ assertions ------
  auto fail = [&](const std::string& msg) { out.failures.push_back(msg); };

  const bool windowed = cfg.has_window;
  auto chain_ok = [windowed](const GeneratorReport& r) {
    return windowed ? r.chain_condition_margin : r.chain_condition_holds;
  };
  const GeneratorReport& finest = out.rows.back().report;
  if (!chain_ok(finest))
    fail("finest level: generator validity failed (q must stay positive and |c| < 1)");
  if (!(finest.min_q_rho2 > 0.0)) fail("finest level: min q/rho^2 is not positive");
  if (!finest.interior_ratio_ok)
    fail("finest level: interior eps/rho " + fmt(finest.max_eps_rho_interior) +
         " exceeds c1 " + fmt(finest.c1));
  for (std::size_t l = 0; l < out.rows.size(); ++l)
    if (!chain_ok(out.rows[l].report))
      fail("level " + std::to_string(out.rows[l].n) + ": generator validity failed");

  if (cfg.diagnostics.consistency && cfg.diagnostics.assert_consistency_decay &&
      out.rows.size() >= 2) {
    for (std::size_t f = 0; f < fs_list.size(); ++f) {
      const double first = out.rows.front().sup_consistency[f];
      const double last = out.rows.back().sup_consistency[f];
      if (!(first >= 1.5 * last))
        fail("consistency sup for '" + out.test_function_names[f] + "' decays " +
             fmt(first / std::max(last, 1e-300)) + "x < 1.5x");
      for (std::size_t l = 1; l < out.rows.size(); ++l)
        if (out.rows[l].sup_consistency[f] > 1.2 * out.rows[l - 1].sup_consistency[f])
          fail("consistency sup for '" + out.test_function_names[f] +
               "' increases by more than 20% at level " + std::to_string(out.rows[l].n));
      const double cfirst = out.rows.front().fitted_const_interior[f];
      for (const auto& row : out.rows)
        if (cfirst > 0.0 && row.fitted_const_interior[f] > 2.0 * cfirst) {
          fail("fitted interior constant for '" + out.test_function_names[f] +
               "' grows more than 2x across levels");
          break;
        }
    }
  }

  if (cfg.diagnostics.trackers) {
    if (!out.trackers.cellwise_qtilde_ok)
      fail("tracker |q-qtilde| <= (eps+2rho)eps violated cellwise beyond MC slack");
    if (!out.trackers.growth_ok) fail("a bound tracker grew more than 2x across levels");
    for (const auto& lvl : out.trackers.levels)
      if (!(lvl.qmin_ratio > 0.0))
        fail("spectral floor lambda_min(Q)/rho^2 not positive at level " + std::to_string(lvl.n));
  }

  // time-scale and corrector-constant stability across refinements
  if (out.rows.size() >= 2) {
    const auto& first = out.rows.front().report;
    for (const auto& row : out.rows) {
      if (!(row.report.min_q_rho2 > 0.0))
        fail("level " + std::to_string(row.n) + ": q/rho^2 floor not positive");
      if (first.fitted_corrector_const_interior > 0.0 &&
          row.report.fitted_corrector_const_interior >
              2.0 * first.fitted_corrector_const_interior)
        fail("interior corrector constant grows more than 2x across levels");
      if (first.fitted_corrector_const_boundary > 0.0 &&
          row.report.fitted_corrector_const_boundary >
              2.0 * first.fitted_corrector_const_boundary)
        fail("boundary corrector constant grows more than 2x across levels");
    }
  }

  if (compare && out.rows.size() >= 2) {
    for (std::size_t ti = 0; ti < cfg.simulation.marginal_times.size(); ++ti) {
      const double floor = out.finest_marginal_tests.size() > ti
                               ? out.finest_marginal_tests[ti].null_q95
                               : 0.0;
      for (std::size_t l = 1; l < out.rows.size(); ++l) {
        if (out.rows[l].marginal_energy.size() <= ti ||
            out.rows[l - 1].marginal_energy.size() <= ti)
          continue;  // level skipped for invalidity; reported separately
        const double prev = out.rows[l - 1].marginal_energy[ti];
        const double cur = out.rows[l].marginal_energy[ti];
        if (cur > prev + floor)
          fail("marginal energy distance at t=" + fmt(cfg.simulation.marginal_times[ti]) +
               " increases at level " + std::to_string(out.rows[l].n));
      }
    }
    if (!out.finest_marginal_tests.empty() &&
        out.finest_marginal_tests.back().rejects_at_5pct)
      fail("finest-level permutation test rejects chain-vs-reference equality at 5%");
  }

  if (out.stationarity_ran && out.stationarity_test.rejects_at_5pct)
    fail("finest-level long-horizon marginal fails the uniform-law permutation test at 5%");

  if (cfg.diagnostics.hausdorff && out.hausdorff.violations > 0)
    fail("Hausdorff inequality violated on " + std::to_string(out.hausdorff.violations) +
         " pairs");

  out.pass = out.failures.empty();

  // ------ study table ------
  std::ofstream os(dir + "/study_table.csv");
  os << meta << "n,a_n,b_n,max_eps_rho_interior,max_abs_c,min_q_rho2";
  for (const auto& name : out.test_function_names) os << ",sup_e[" << name << "]";
  for (double t : cfg.simulation.marginal_times) os << ",energy_t" << time_tag(t);
  os << "\n";
  for (const auto& row : out.rows) {
    os << row.n << ',' << fmt(row.a_n) << ',' << fmt(row.b_n) << ','
       << fmt(row.report.max_eps_rho_interior) << ',' << fmt(row.report.max_abs_c) << ','
       << fmt(row.report.min_q_rho2);
    for (double v : row.sup_consistency) os << ',' << fmt(v);
    for (double v : row.marginal_energy) os << ',' << fmt(v);
    if (row.marginal_energy.empty())
      for (std::size_t i = 0; i < cfg.simulation.marginal_times.size(); ++i) os << ",nan";
    os << "\n";
  }
  os << "# pass=" << (out.pass ? 1 : 0) << "\n";
  for (const auto& f : out.failures) os << "# FAIL " << f << "\n";

  return out;
}

}  // namespace rbmc::pipeline
