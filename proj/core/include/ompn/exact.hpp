#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ompn/alloc.hpp"
#include "ompn/instance.hpp"

namespace ompn {

/// Whether a reported objective is a proven optimum or a heuristic value.
enum class ProofStatus { exact, heuristic };

struct SolveStats {
  std::int64_t subsets_evaluated = 0;
  std::int64_t subsets_pruned = 0;
  std::int64_t iterations = 0;  ///< improvement steps (heuristic solvers)
};

/// A complete answer: open set, placements, assignment, objective split.
struct Solution {
  std::vector<int> open;  ///< sorted site indices, |open| == p
  AllocResult alloc;
  double objective = 0.0;  ///< alloc.total == om + setup
  ProofStatus proof = ProofStatus::heuristic;
  SolveStats stats;
};

struct ExactParams {
  std::int64_t subset_cap = 10000000;  ///< max size-p subsets to consider
  bool prune = true;                   ///< use interval lower bounds
  bool seed_incumbent = true;          ///< warm-start UB from the blend seed
  AllocParams alloc;
};

/// Valid lower bound on the best objective attainable with open set J: the
/// OM value of the per-customer best-case costs (zero for open sites) plus
/// the setup costs of J.
double open_set_lower_bound(const std::vector<int>& J, const Instance& instance,
                            const BoundsMatrix& bounds);

/// Exhaustive search over all size-p subsets with interval pruning.  Work is
/// split into fixed-size chunks processed in waves; the incumbent is frozen
/// per wave and merged in subset order, so results are byte-identical for
/// every thread count.  Throws CapacityError when C(n, p) exceeds subset_cap.
/// proof == exact unless some surviving subset had to fall back from
/// exhaustive assignment enumeration to the multistart heuristic.
Solution solve_exact(const Instance& instance, const ExactParams& params = {});

/// How the fixed-location (matrix) solver should search.
enum class MatrixSearch { exhaustive, swap };

/// Ordered-median p-median on a precomputed cost matrix (row = customer,
/// column = candidate site; diagonal must be the self-assignment cost, zero
/// in this toolkit).  Customers use their cheapest open column.  exhaustive
/// enumerates all C(n, p) subsets (CapacityError above `cap`); swap runs a
/// deterministic greedy-add start followed by first-improvement swaps.
std::pair<std::vector<int>, double> solve_domp_matrix(
    const std::vector<double>& costs, int n, int p,
    const LambdaVector& lambda, const std::vector<double>& setup,
    MatrixSearch search, std::int64_t cap = 10000000,
    const std::vector<int>* banned = nullptr);

/// Rank cutoffs implied by an upper bound: in any solution with objective
/// <= ub, a customer served by another site cannot occupy sorted positions
/// >= max_position[i] (position 0 = largest cost).  If it did, the positions
/// above it would each cost at least its best-case off-site cost, and the
/// leading weights alone would push the objective past ub.  max_position[i]
/// == n means no restriction; max_position[i] == 0 means customer i cannot
/// be served by any other site at all (it must be open and self-served to
/// beat ub) — flagged as a contradiction and reported, never silently fixed.
struct PositionTable {
  std::vector<int> max_position;
  std::vector<bool> contradiction;
};

PositionTable position_elimination(const Instance& instance,
                                   const BoundsMatrix& bounds, double ub);

namespace detail {
/// Shared seeding recipe: solve the fixed-location problem on a blend of the
/// cost brackets (theta * lo + (1 - theta) * hi), then run the continuous
/// evaluation on the winning open set.
Solution blend_seed(const Instance& instance, const BoundsMatrix& bounds,
                    double theta, const AllocParams& alloc,
                    std::int64_t matrix_cap);
}  // namespace detail

}  // namespace ompn
