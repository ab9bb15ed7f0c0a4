#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ompn/exact.hpp"
#include "ompn/instance.hpp"

namespace ompn {

/// Machine-readable record of one solver run.  Serialized as JSON with a
/// stable field order; timing is optional so that rerunning with the same
/// seed can produce byte-identical files.
struct RunReport {
  std::string instance_hash;
  std::string solver;  ///< "exact", "h0", "h1", or "h2"
  std::vector<std::pair<std::string, std::string>> params;  ///< echo of knobs
  std::uint64_t seed = 0;

  double objective = 0.0;
  double om_value = 0.0;
  double setup_value = 0.0;
  std::string proof;  ///< "exact" or "heuristic"

  std::vector<int> open;                  ///< chosen sites, ascending
  std::vector<Point> placements;          ///< one location per open site
  std::vector<int> assignment;            ///< serving site per customer
  std::vector<double> distances;          ///< realized cost per customer

  std::int64_t subsets_evaluated = 0;
  std::int64_t subsets_pruned = 0;
  std::int64_t iterations = 0;
  std::optional<double> wall_time_ms;  ///< absent unless timing was requested

  bool operator==(const RunReport&) const = default;
};

/// Builds a report from a solver result; params are echoed verbatim.
RunReport make_report(const Instance& instance, const std::string& solver,
                      std::vector<std::pair<std::string, std::string>> params,
                      std::uint64_t seed, const Solution& solution);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

/// One named feasibility/consistency check of a reported solution.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  ///< empty when passing
};

/// Recomputes everything checkable about a report against its instance:
/// cardinality, assignment completeness and openness, self-service of open
/// sites, placement containment in the balls, and agreement of the reported
/// per-customer costs and objective with values recomputed from geometry
/// (relative tolerance 1e-9).  The instance hash must match.
std::vector<CheckResult> evaluate_report(const Instance& instance,
                                         const RunReport& report);

/// True iff every check passes.
bool all_pass(const std::vector<CheckResult>& checks);

}  // namespace ompn
