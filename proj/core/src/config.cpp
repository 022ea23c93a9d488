#include "rbmc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rbmc {

using nlohmann::json;

namespace {

Point json_point(const json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw std::invalid_argument(what + ": expected array of length " + std::to_string(d));
  Point p{};
  for (int i = 0; i < d; ++i) p[i] = j[static_cast<std::size_t>(i)].get<double>();
  return p;
}

json point_json(const Point& p, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(p[i]);
  return a;
}

Domain domain_from_json(const json& j, const std::string& origin) {
  if (!j.contains("kind")) throw std::invalid_argument(origin + ": domain.kind missing");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "whole-space") {
    return Domain::whole_space(j.at("dim").get<int>());
  }
  if (kind == "box") {
    const int d = static_cast<int>(j.at("lo").size());
    return Domain::box(json_point(j.at("lo"), d, "domain.lo"),
                       json_point(j.at("hi"), d, "domain.hi"), d);
  }
  if (kind == "ball") {
    const int d = static_cast<int>(j.at("center").size());
    return Domain::ball(json_point(j.at("center"), d, "domain.center"),
                        j.at("radius").get<double>(), d);
  }
  if (kind == "radial") {
    std::vector<double> cs, sn;
    if (j.contains("cos")) cs = j.at("cos").get<std::vector<double>>();
    if (j.contains("sin")) sn = j.at("sin").get<std::vector<double>>();
    return Domain::radial(j.at("r0").get<double>(), std::move(cs), std::move(sn));
  }
  throw std::invalid_argument(origin + ": unknown domain kind '" + kind + "'");
}

json domain_to_json(const Domain& dom) {
  json j;
  const int d = dom.dim();
  switch (dom.kind()) {
    case DomainKind::whole_space:
      j["kind"] = "whole-space";
      j["dim"] = d;
      break;
    case DomainKind::box:
      j["kind"] = "box";
      j["lo"] = point_json(dom.box_lo(), d);
      j["hi"] = point_json(dom.box_hi(), d);
      break;
    case DomainKind::ball:
      j["kind"] = "ball";
      j["center"] = point_json(dom.ball_center(), d);
      j["radius"] = dom.ball_radius();
      break;
    case DomainKind::radial:
      j["kind"] = "radial";
      j["r0"] = dom.radial_r0();
      if (!dom.radial_cos().empty()) j["cos"] = dom.radial_cos();
      if (!dom.radial_sin().empty()) j["sin"] = dom.radial_sin();
      break;
  }
  return j;
}

}  // namespace

Point RunConfig::start_point() const {
  if (simulation.start_set) return simulation.start;
  const int d = domain.dim();
  switch (domain.kind()) {
    case DomainKind::ball:
      return domain.ball_center();
    case DomainKind::box: {
      Point p{};
      for (int i = 0; i < d; ++i) p[i] = 0.5 * (domain.box_lo()[i] + domain.box_hi()[i]);
      return p;
    }
    case DomainKind::whole_space: {
      Point p{};
      if (has_window)
        for (int i = 0; i < d; ++i) p[i] = 0.5 * (window_lo[i] + window_hi[i]);
      return p;
    }
    case DomainKind::radial:
      return Point{};
  }
  return Point{};
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  RunConfig cfg;
  try {
    cfg.domain = domain_from_json(j.at("domain"), origin);
    const int d = cfg.domain.dim();
    if (j.contains("window")) {
      cfg.has_window = true;
      cfg.window_lo = json_point(j.at("window").at("lo"), d, "window.lo");
      cfg.window_hi = json_point(j.at("window").at("hi"), d, "window.hi");
    }
    const json& p = j.at("partition");
    cfg.partition_kind = p.at("kind").get<std::string>();
    if (cfg.partition_kind != "voronoi" && cfg.partition_kind != "lattice")
      throw std::invalid_argument("partition.kind must be 'voronoi' or 'lattice'");
    cfg.levels = p.at("levels").get<std::vector<int>>();
    if (cfg.levels.empty()) throw std::invalid_argument("partition.levels must be nonempty");
    for (std::size_t i = 1; i < cfg.levels.size(); ++i)
      if (cfg.levels[i] <= cfg.levels[i - 1])
        throw std::invalid_argument("partition.levels must be strictly increasing");
    if (p.contains("mc_per_cell")) cfg.mc_per_cell = p.at("mc_per_cell").get<int>();
    if (p.contains("seed")) cfg.seed = p.at("seed").get<std::uint64_t>();

    if (j.contains("scales")) {
      const json& s = j.at("scales");
      if (s.contains("rule")) cfg.scales.rule = s.at("rule").get<std::string>();
      if (cfg.scales.rule != "power" && cfg.scales.rule != "loglog" &&
          cfg.scales.rule != "explicit")
        throw std::invalid_argument("scales.rule must be 'power', 'loglog' or 'explicit'");
      if (s.contains("p_a")) cfg.scales.p_a = s.at("p_a").get<double>();
      if (s.contains("p_b")) cfg.scales.p_b = s.at("p_b").get<double>();
      if (s.contains("k_a")) cfg.scales.k_a = s.at("k_a").get<double>();
      if (s.contains("k_b")) cfg.scales.k_b = s.at("k_b").get<double>();
      if (s.contains("calibrate_ratio"))
        cfg.scales.calibrate_ratio = s.at("calibrate_ratio").get<double>();
      if (s.contains("calibrate_level"))
        cfg.scales.calibrate_level = s.at("calibrate_level").get<std::string>();
      if (s.contains("b_over_a")) cfg.scales.b_over_a = s.at("b_over_a").get<double>();
      if (s.contains("explicit_a"))
        cfg.scales.explicit_a = s.at("explicit_a").get<std::vector<double>>();
      if (s.contains("explicit_b"))
        cfg.scales.explicit_b = s.at("explicit_b").get<std::vector<double>>();
      if (cfg.scales.rule == "explicit" &&
          (cfg.scales.explicit_a.size() != cfg.levels.size() ||
           cfg.scales.explicit_b.size() != cfg.levels.size()))
        throw std::invalid_argument("explicit scale lists must match partition.levels");
    }

    if (j.contains("simulation")) {
      const json& s = j.at("simulation");
      if (s.contains("horizon")) cfg.simulation.horizon = s.at("horizon").get<double>();
      if (s.contains("replicas")) cfg.simulation.replicas = s.at("replicas").get<int>();
      if (s.contains("marginal_times"))
        cfg.simulation.marginal_times = s.at("marginal_times").get<std::vector<double>>();
      if (s.contains("start")) {
        cfg.simulation.start_set = true;
        cfg.simulation.start = json_point(s.at("start"), cfg.domain.dim(), "simulation.start");
      }
      if (s.contains("stationarity_time"))
        cfg.simulation.stationarity_time = s.at("stationarity_time").get<double>();
      for (double t : cfg.simulation.marginal_times)
        if (t > cfg.simulation.horizon)
          throw std::invalid_argument("simulation.marginal_times must be <= horizon");
    }

    if (j.contains("reference") && j.at("reference").contains("dt"))
      cfg.reference_dt = j.at("reference").at("dt").get<double>();

    if (j.contains("diagnostics")) {
      const json& s = j.at("diagnostics");
      if (s.contains("consistency")) cfg.diagnostics.consistency = s.at("consistency").get<bool>();
      if (s.contains("assert_consistency_decay"))
        cfg.diagnostics.assert_consistency_decay = s.at("assert_consistency_decay").get<bool>();
      if (s.contains("trackers")) cfg.diagnostics.trackers = s.at("trackers").get<bool>();
      if (s.contains("marginal_compare"))
        cfg.diagnostics.marginal_compare = s.at("marginal_compare").get<bool>();
      if (s.contains("stationarity"))
        cfg.diagnostics.stationarity = s.at("stationarity").get<bool>();
      if (s.contains("hausdorff")) cfg.diagnostics.hausdorff = s.at("hausdorff").get<bool>();
      if (s.contains("permutations")) cfg.diagnostics.permutations = s.at("permutations").get<int>();
      if (s.contains("hausdorff_pairs"))
        cfg.diagnostics.hausdorff_pairs = s.at("hausdorff_pairs").get<int>();
    }

    if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str(), path);
}

std::string RunConfig::to_json_text() const {
  json j;
  j["domain"] = domain_to_json(domain);
  const int d = domain.dim();
  if (has_window) {
    j["window"]["lo"] = point_json(window_lo, d);
    j["window"]["hi"] = point_json(window_hi, d);
  }
  j["partition"]["kind"] = partition_kind;
  j["partition"]["levels"] = levels;
  j["partition"]["mc_per_cell"] = mc_per_cell;
  j["partition"]["seed"] = seed;
  j["scales"]["rule"] = scales.rule;
  j["scales"]["p_a"] = scales.p_a;
  j["scales"]["p_b"] = scales.p_b;
  j["scales"]["k_a"] = scales.k_a;
  j["scales"]["k_b"] = scales.k_b;
  j["scales"]["calibrate_ratio"] = scales.calibrate_ratio;
  j["scales"]["calibrate_level"] = scales.calibrate_level;
  j["scales"]["b_over_a"] = scales.b_over_a;
  if (!scales.explicit_a.empty()) j["scales"]["explicit_a"] = scales.explicit_a;
  if (!scales.explicit_b.empty()) j["scales"]["explicit_b"] = scales.explicit_b;
  j["simulation"]["horizon"] = simulation.horizon;
  j["simulation"]["replicas"] = simulation.replicas;
  j["simulation"]["marginal_times"] = simulation.marginal_times;
  if (simulation.start_set) j["simulation"]["start"] = point_json(simulation.start, d);
  j["simulation"]["stationarity_time"] = simulation.stationarity_time;
  j["reference"]["dt"] = reference_dt;
  j["diagnostics"]["consistency"] = diagnostics.consistency;
  j["diagnostics"]["assert_consistency_decay"] = diagnostics.assert_consistency_decay;
  j["diagnostics"]["trackers"] = diagnostics.trackers;
  j["diagnostics"]["marginal_compare"] = diagnostics.marginal_compare;
  j["diagnostics"]["stationarity"] = diagnostics.stationarity;
  j["diagnostics"]["hausdorff"] = diagnostics.hausdorff;
  j["diagnostics"]["permutations"] = diagnostics.permutations;
  j["diagnostics"]["hausdorff_pairs"] = diagnostics.hausdorff_pairs;
  j["output"] = output_dir;
  return j.dump(2);
}

std::uint64_t RunConfig::config_hash() const {
  return detail::fnv1a64(to_json_text());
}

}  // namespace rbmc
