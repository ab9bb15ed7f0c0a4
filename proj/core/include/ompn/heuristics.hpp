#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ompn/exact.hpp"
#include "ompn/instance.hpp"

namespace ompn {

struct HeuristicParams {
  /// Blend factor for the seeding matrix: theta * best-case cost +
  /// (1 - theta) * worst-case cost.
  double theta = 0.5;
  /// Swap search: maximum number of candidate-set evaluations.
  int max_iterations = 200;
  /// Swap search: stop after this many consecutive sweeps with no accepted
  /// move (relevant mostly for the randomized variant).
  int max_stale_sweeps = 2;
  /// Swap search: pick the leaving site at random instead of cycling.
  bool randomized = false;
  /// Two-phase search: stop a phase when the fixed-matrix objective and the
  /// continuous evaluation agree to this absolute tolerance.
  double phase_tol = 1e-3;
  /// Two-phase search: cap on matrix-solve/evaluation rounds per phase.
  int max_phase_rounds = 50;
  /// Fixed-matrix subproblems switch from exhaustive enumeration to the swap
  /// search above this subset count.
  std::int64_t matrix_cap = 1000000;
  std::uint64_t seed = 1;
  AllocParams alloc;
};

/// Seed solution: solves the fixed-location problem on the blend of the cost
/// brackets and evaluates the winning open set continuously.
Solution initial_solution(const Instance& instance,
                          const HeuristicParams& params = {});

/// Evaluates every single-site replacement J u {i} \ {leaving} for i outside
/// J (candidates in parallel, each evaluation single-threaded and seeded by
/// the candidate set, so results are thread-count invariant) and returns the
/// best candidate set with its evaluation — or (J, current) when no candidate
/// improves on `current`.
std::pair<std::vector<int>, AllocResult> best_replacement(
    const std::vector<int>& J, int leaving, const Instance& instance,
    const BoundsMatrix& bounds, const HeuristicParams& params,
    const AllocResult& current);

/// Swap search: starts from initial_solution and repeatedly applies
/// best_replacement, cycling over leaving sites (or drawing them at random),
/// until the iteration budget or stall limit is hit.  max_iterations == 0
/// returns the seed unchanged.
Solution swap_search(const Instance& instance, const HeuristicParams& params = {});

/// Two-phase search: alternates the fixed-matrix solve on realized-location
/// distances with continuous evaluation until the two objectives agree
/// (phase 1), then repeats the phase once per phase-1 site with that site
/// banned from the matrix solve (phase 2), returning the best evaluation
/// seen anywhere.
Solution two_phase_search(const Instance& instance,
                          const HeuristicParams& params = {});

}  // namespace ompn
