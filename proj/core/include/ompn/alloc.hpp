#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ompn/instance.hpp"

namespace ompn {

/// Tuning knobs for the continuous placement subproblem.
struct AllocParams {
  int starts = 20;           ///< multistart count (start 0 = ball centers)
  double tol = 1e-6;         ///< objective-improvement convergence threshold
  int max_iters = 5000;      ///< subgradient iterations per placement solve
  int improve_window = 200;  ///< stop when no improvement over this many iters
  int max_rounds = 50;       ///< assignment/placement alternation cap
  double step_scale = 0.0;   ///< initial step size; 0 = auto from geometry
  std::int64_t enum_cap = 1000000;  ///< assignment-enumeration work cap
  std::uint64_t seed = 1;
};

/// Customer-to-facility map; entry i is an open site index (i itself when
/// site i is open).
using Assignment = std::vector<int>;

/// Chosen locations for the open facilities, parallel to the sorted open-site
/// list J.
struct Placement {
  std::vector<int> open;             ///< sorted site indices
  std::vector<Point> locations;      ///< locations[k] lies in ball open[k]
  int slot(int site) const;          ///< index into open/locations, -1 if closed
};

/// Result of evaluating one open set J: placements, assignment, per-customer
/// costs (zero for open sites), and the objective split.
struct AllocResult {
  Placement placement;
  Assignment assignment;
  std::vector<double> costs;  ///< per customer; costs[j] == 0 for j in J
  double om_value = 0.0;
  double setup_value = 0.0;
  double total = 0.0;
  bool converged = false;
  int rounds = 0;
};

/// Per-customer candidate-facility fixing derived from the bounds matrix:
/// an entry is `forced` when interval dominance proves the customer must use
/// that facility, `excluded` when it never can in an optimal assignment.
enum class FixState : unsigned char { open_choice, excluded, forced };

struct FixingTable {
  std::vector<int> open;              ///< sorted site indices (the J used)
  std::vector<FixState> state;        ///< n x |J|, row-major by customer
  FixState at(int customer, int slot) const {
    return state[static_cast<std::size_t>(customer) * open.size() +
                 static_cast<std::size_t>(slot)];
  }
};

/// Dominance-based fixing for open set J.  Never cuts all optimal solutions:
/// an exclusion requires another facility whose worst case beats this one's
/// best case; a force requires every rival's best case to lose.
FixingTable fix_assignments(const std::vector<int>& J, const Instance& instance,
                            const BoundsMatrix& bounds);

/// Closest-open-facility assignment for fixed locations.  Open sites assign
/// to themselves (cost zero); ties go to the lowest open site index.  When a
/// fixing table is given, forced/excluded candidates are honored.
Assignment assign_closest(const Placement& placement, const Instance& instance,
                          const FixingTable* fixing = nullptr);

/// Costs realized by (placement, assignment): zero for self-assigned open
/// sites, distance to the assigned facility's location otherwise.
std::vector<double> realized_costs(const Placement& placement,
                                   const Assignment& assignment,
                                   const Instance& instance);

/// Minimizes the ordered-median objective over facility locations for a fixed
/// assignment, by projected subgradient descent with diminishing steps
/// (step_scale / sqrt(t)) and best-iterate tracking.  Returns the locations
/// and the achieved OM value (setup costs excluded).
std::pair<Placement, double> optimize_placement(const std::vector<int>& J,
                                                const Assignment& assignment,
                                                const Instance& instance,
                                                const AllocParams& params,
                                                const Placement* warm_start,
                                                bool* converged);

/// Multistart alternation of assign_closest and optimize_placement for a
/// fixed open set.  Deterministic for fixed (J, params): start 0 places
/// facilities at ball centers, further starts draw uniform points from each
/// ball with a per-start seed derived from params.seed and J.
AllocResult evaluate_open_set(const std::vector<int>& J, const Instance& instance,
                              const AllocParams& params,
                              const FixingTable* fixing = nullptr);

/// Exhaustive version: enumerates every assignment of closed sites to open
/// ones (|J|^(n-p) combinations) and optimizes placements for each.  Throws
/// CapacityError when the combination count exceeds params.enum_cap.
AllocResult evaluate_open_set_exact(const std::vector<int>& J,
                                    const Instance& instance,
                                    const AllocParams& params);

/// |J|^(n-p) as a double (may be +inf for huge cases), for cap checks.
double assignment_combinations(int open_count, int closed_count);

}  // namespace ompn
