#include "ompn/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ompn/errors.hpp"
#include "ompn/geometry.hpp"
#include "ompn/om.hpp"

namespace ompn {

namespace {

using json = nlohmann::ordered_json;

json real_array(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(format_real(v));
  return out;
}

std::vector<double> parse_real_array(const json& node, const char* field) {
  if (!node.is_array()) {
    throw ValidationError(std::string("report: ") + field + " must be an array");
  }
  std::vector<double> out;
  for (const auto& item : node) {
    if (item.is_string()) out.push_back(parse_real(item.get<std::string>()));
    else out.push_back(item.get<double>());
  }
  return out;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / (1.0 + std::abs(b));
}

}  // namespace

RunReport make_report(const Instance& instance, const std::string& solver,
                      std::vector<std::pair<std::string, std::string>> params,
                      std::uint64_t seed, const Solution& solution) {
  RunReport report;
  report.instance_hash = content_hash(instance);
  report.solver = solver;
  report.params = std::move(params);
  report.seed = seed;
  report.objective = solution.objective;
  report.om_value = solution.alloc.om_value;
  report.setup_value = solution.alloc.setup_value;
  report.proof = solution.proof == ProofStatus::exact ? "exact" : "heuristic";
  report.open = solution.open;
  report.placements = solution.alloc.placement.locations;
  report.assignment = solution.alloc.assignment;
  report.distances = solution.alloc.costs;
  report.subsets_evaluated = solution.stats.subsets_evaluated;
  report.subsets_pruned = solution.stats.subsets_pruned;
  report.iterations = solution.stats.iterations;
  return report;
}

std::string report_to_json(const RunReport& report) {
  json root;
  root["format"] = "ompn-run";
  root["version"] = 1;
  root["instance_hash"] = report.instance_hash;
  root["solver"] = report.solver;
  json params = json::object();
  for (const auto& [key, value] : report.params) params[key] = value;
  root["params"] = std::move(params);
  root["seed"] = report.seed;
  root["objective"] = format_real(report.objective);
  root["om_value"] = format_real(report.om_value);
  root["setup_value"] = format_real(report.setup_value);
  root["proof"] = report.proof;
  root["open"] = report.open;
  json placements = json::array();
  for (const Point& point : report.placements) placements.push_back(real_array(point));
  root["placements"] = std::move(placements);
  root["assignment"] = report.assignment;
  root["distances"] = real_array(report.distances);
  json stats;
  stats["subsets_evaluated"] = report.subsets_evaluated;
  stats["subsets_pruned"] = report.subsets_pruned;
  stats["iterations"] = report.iterations;
  if (report.wall_time_ms.has_value()) {
    stats["wall_time_ms"] = format_real(*report.wall_time_ms);
  } else {
    stats["wall_time_ms"] = nullptr;
  }
  root["stats"] = std::move(stats);
  return root.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: invalid JSON: ") + e.what());
  }
  try {
    if (root.value("format", std::string()) != "ompn-run") {
      throw ValidationError("report: missing or wrong 'format' field "
                            "(expected \"ompn-run\")");
    }
    RunReport report;
    report.instance_hash = root.at("instance_hash").get<std::string>();
    report.solver = root.at("solver").get<std::string>();
    for (const auto& [key, value] : root.at("params").items()) {
      report.params.emplace_back(key, value.get<std::string>());
    }
    report.seed = root.at("seed").get<std::uint64_t>();
    const auto real_field = [&](const char* name) {
      const json& node = root.at(name);
      return node.is_string() ? parse_real(node.get<std::string>())
                              : node.get<double>();
    };
    report.objective = real_field("objective");
    report.om_value = real_field("om_value");
    report.setup_value = real_field("setup_value");
    report.proof = root.at("proof").get<std::string>();
    report.open = root.at("open").get<std::vector<int>>();
    for (const auto& node : root.at("placements")) {
      report.placements.push_back(parse_real_array(node, "placements"));
    }
    report.assignment = root.at("assignment").get<std::vector<int>>();
    report.distances = parse_real_array(root.at("distances"), "distances");
    const json& stats = root.at("stats");
    report.subsets_evaluated = stats.at("subsets_evaluated").get<std::int64_t>();
    report.subsets_pruned = stats.at("subsets_pruned").get<std::int64_t>();
    report.iterations = stats.at("iterations").get<std::int64_t>();
    const json& wall = stats.at("wall_time_ms");
    if (!wall.is_null()) {
      report.wall_time_ms = wall.is_string() ? parse_real(wall.get<std::string>())
                                             : wall.get<double>();
    }
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: malformed field: ") + e.what());
  }
}

void save_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << report_to_json(report);
  if (!out) throw IoError("error while writing '" + path + "'");
}

RunReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return report_from_json(buf.str());
}

std::vector<CheckResult> evaluate_report(const Instance& instance,
                                         const RunReport& report) {
  constexpr double kTol = 1e-9;
  std::vector<CheckResult> checks;
  const auto add = [&](std::string name, bool pass, std::string detail) {
    checks.push_back(CheckResult{std::move(name), pass,
                                 pass ? std::string() : std::move(detail)});
  };
  const int n = instance.n();

  add("instance_hash", report.instance_hash == content_hash(instance),
      "report was produced for a different instance (hash " +
          report.instance_hash + " vs " + content_hash(instance) + ")");

  // Shape of the open set.
  bool open_ok = static_cast<int>(report.open.size()) == instance.p;
  std::string open_detail =
      "expected " + std::to_string(instance.p) + " open sites, got " +
      std::to_string(report.open.size());
  if (open_ok) {
    for (std::size_t k = 0; k < report.open.size(); ++k) {
      const int j = report.open[k];
      if (j < 0 || j >= n) {
        open_ok = false;
        open_detail = "open site index " + std::to_string(j) + " out of range";
        break;
      }
      if (k > 0 && report.open[k - 1] >= j) {
        open_ok = false;
        open_detail = "open sites must be strictly increasing";
        break;
      }
    }
  }
  add("cardinality_p", open_ok, open_detail);

  const auto is_open = [&](int j) {
    for (int site : report.open)
      if (site == j) return true;
    return false;
  };

  // Assignment shape and targets.
  bool complete = static_cast<int>(report.assignment.size()) == n;
  std::string complete_detail = "expected " + std::to_string(n) +
                                " assignments, got " +
                                std::to_string(report.assignment.size());
  if (complete) {
    for (int i = 0; i < n; ++i) {
      const int j = report.assignment[static_cast<std::size_t>(i)];
      if (j < 0 || j >= n) {
        complete = false;
        complete_detail = "customer " + std::to_string(i) +
                          " assigned to out-of-range site " + std::to_string(j);
        break;
      }
    }
  }
  add("assignment_complete", complete, complete_detail);

  bool targets_open = complete && open_ok;
  std::string targets_detail = "prerequisite check failed";
  if (targets_open) {
    for (int i = 0; i < n; ++i) {
      const int j = report.assignment[static_cast<std::size_t>(i)];
      if (!is_open(j)) {
        targets_open = false;
        targets_detail = "customer " + std::to_string(i) +
                         " assigned to closed site " + std::to_string(j);
        break;
      }
    }
  }
  add("assignment_targets_open", targets_open, targets_detail);

  bool self_ok = complete && open_ok;
  std::string self_detail = "prerequisite check failed";
  if (self_ok) {
    for (int j : report.open) {
      if (report.assignment[static_cast<std::size_t>(j)] != j) {
        self_ok = false;
        self_detail = "open site " + std::to_string(j) +
                      " is not self-assigned";
        break;
      }
    }
  }
  add("self_assignment", self_ok, self_detail);

  // Placements inside their balls.
  bool placed = open_ok &&
                report.placements.size() == report.open.size();
  std::string placed_detail =
      open_ok ? "expected " + std::to_string(report.open.size()) +
                    " placements, got " + std::to_string(report.placements.size())
              : "prerequisite check failed";
  if (placed) {
    for (std::size_t k = 0; k < report.open.size(); ++k) {
      const Point& loc = report.placements[k];
      if (static_cast<int>(loc.size()) != instance.dim) {
        placed = false;
        placed_detail = "placement " + std::to_string(k) +
                        " has wrong dimension";
        break;
      }
      const Neighborhood ball = instance.neighborhood(report.open[k]);
      if (!contains(ball, loc, kTol)) {
        Point offset(loc.size());
        for (std::size_t c = 0; c < loc.size(); ++c)
          offset[c] = loc[c] - ball.center[c];
        placed = false;
        placed_detail = "placement for site " + std::to_string(report.open[k]) +
                        " lies outside its ball (norm " +
                        format_real(norm_value(ball.norm, offset)) +
                        " > radius " + format_real(ball.radius) + ")";
        break;
      }
    }
  }
  add("placement_in_neighborhood", placed, placed_detail);

  // Recompute per-customer costs from geometry.
  bool dist_ok = placed && targets_open && self_ok &&
                 static_cast<int>(report.distances.size()) == n;
  std::string dist_detail =
      (placed && targets_open && self_ok)
          ? "expected " + std::to_string(n) + " distances, got " +
                std::to_string(report.distances.size())
          : "prerequisite check failed";
  std::vector<double> recomputed(static_cast<std::size_t>(n), 0.0);
  if (dist_ok) {
    const auto slot_of = [&](int site) {
      for (std::size_t k = 0; k < report.open.size(); ++k)
        if (report.open[k] == site) return k;
      return report.open.size();
    };
    for (int i = 0; i < n && dist_ok; ++i) {
      const int j = report.assignment[static_cast<std::size_t>(i)];
      double value = 0.0;
      if (j != i) {
        const Point& loc = report.placements[slot_of(j)];
        Point offset(loc.size());
        for (std::size_t c = 0; c < loc.size(); ++c)
          offset[c] = instance.sites[static_cast<std::size_t>(i)][c] - loc[c];
        value = norm_value(instance.distance_norm, offset);
      }
      recomputed[static_cast<std::size_t>(i)] = value;
      if (relative_gap(report.distances[static_cast<std::size_t>(i)], value) > kTol) {
        dist_ok = false;
        dist_detail = "customer " + std::to_string(i) + ": reported cost " +
                      format_real(report.distances[static_cast<std::size_t>(i)]) +
                      ", recomputed " + format_real(value);
      }
    }
  }
  add("distances_match", dist_ok, dist_detail);

  bool obj_ok = dist_ok;
  std::string obj_detail = "prerequisite check failed";
  if (obj_ok) {
    double setup = 0.0;
    for (int j : report.open) setup += instance.setup_costs[static_cast<std::size_t>(j)];
    const double om = evaluate_om(instance.lambda, recomputed);
    const double value = om + setup;
    if (relative_gap(report.objective, value) > kTol) {
      obj_ok = false;
      obj_detail = "reported objective " + format_real(report.objective) +
                   ", recomputed " + format_real(value) + " (om " +
                   format_real(om) + " + setup " + format_real(setup) + ")";
    }
  }
  add("objective_matches", obj_ok, obj_detail);

  return checks;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  for (const CheckResult& check : checks) {
    if (!check.pass) return false;
  }
  return true;
}

}  // namespace ompn
