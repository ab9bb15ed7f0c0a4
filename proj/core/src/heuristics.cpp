#include "ompn/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ompn/errors.hpp"
#include "ompn/om.hpp"
#include "ompn/parallel.hpp"
#include "ompn/rng.hpp"

namespace ompn {

namespace {

std::uint64_t open_set_fingerprint(const std::vector<int>& open) {
  std::uint64_t h = 0x6f70656e5f736574ULL;
  for (int j : open) h = mix_seed(h, static_cast<std::uint64_t>(j));
  return h;
}

MatrixSearch matrix_mode(const Instance& instance, std::int64_t cap) {
  // Mirror of the seeding rule: exhaustive while C(n, p) fits the cap.
  double combos = 1.0;
  for (int i = 1; i <= instance.p; ++i) {
    combos *= static_cast<double>(instance.n() - instance.p + i) /
              static_cast<double>(i);
    if (combos > static_cast<double>(cap) * 2.0) break;
  }
  return combos <= static_cast<double>(cap) ? MatrixSearch::exhaustive
                                            : MatrixSearch::swap;
}

}  // namespace

Solution initial_solution(const Instance& instance, const HeuristicParams& params) {
  instance.validate();
  if (!(params.theta >= 0.0 && params.theta <= 1.0)) {
    throw ValidationError("theta: must be in [0, 1], got " +
                          std::to_string(params.theta));
  }
  const BoundsMatrix bounds = compute_bounds(instance);
  AllocParams alloc = params.alloc;
  alloc.seed = params.seed;
  return detail::blend_seed(instance, bounds, params.theta, alloc,
                            params.matrix_cap);
}

std::pair<std::vector<int>, AllocResult> best_replacement(
    const std::vector<int>& J, int leaving, const Instance& instance,
    const BoundsMatrix& bounds, const HeuristicParams& params,
    const AllocResult& current) {
  std::vector<bool> in_set(static_cast<std::size_t>(instance.n()), false);
  for (int j : J) in_set[static_cast<std::size_t>(j)] = true;
  if (leaving < 0 || leaving >= instance.n() ||
      !in_set[static_cast<std::size_t>(leaving)]) {
    throw ValidationError("leaving: site " + std::to_string(leaving) +
                          " is not in the open set");
  }
  std::vector<int> base;
  for (int j : J)
    if (j != leaving) base.push_back(j);

  std::vector<int> candidates;
  for (int c = 0; c < instance.n(); ++c)
    if (!in_set[static_cast<std::size_t>(c)]) candidates.push_back(c);

  struct Entry {
    bool filled = false;
    std::vector<int> open;
    AllocResult alloc;
  };
  std::vector<Entry> entries(candidates.size());

  parallel_for(0, candidates.size(), 1, [&](std::size_t idx) {
    std::vector<int> trial = base;
    trial.push_back(candidates[idx]);
    std::sort(trial.begin(), trial.end());
    const FixingTable fixing = fix_assignments(trial, instance, bounds);
    AllocParams alloc = params.alloc;
    alloc.seed = mix_seed(params.seed, open_set_fingerprint(trial));
    Entry& e = entries[idx];
    e.alloc = evaluate_open_set(trial, instance, alloc, &fixing);
    e.open = std::move(trial);
    e.filled = true;
  });

  const Entry* best = nullptr;
  for (const Entry& e : entries) {
    if (best == nullptr || e.alloc.total < best->alloc.total) best = &e;
  }
  if (best != nullptr && best->alloc.total < current.total) {
    return {best->open, best->alloc};
  }
  return {J, current};
}

Solution swap_search(const Instance& instance, const HeuristicParams& params) {
  Solution sol = initial_solution(instance, params);
  const BoundsMatrix bounds = compute_bounds(instance);
  Rng rng(mix_seed(params.seed, 0x73776170ULL));

  int iterations = 0;
  int stale_sweeps = 0;
  const int stale_limit = std::max(1, params.max_stale_sweeps);

  while (iterations < params.max_iterations && stale_sweeps < stale_limit) {
    bool improved = false;
    if (params.randomized) {
      const std::size_t pick =
          static_cast<std::size_t>(rng.below(sol.open.size()));
      const int leaving = sol.open[pick];
      ++iterations;
      auto [next_open, next_alloc] =
          best_replacement(sol.open, leaving, instance, bounds, params, sol.alloc);
      if (next_alloc.total < sol.objective - 1e-12) {
        sol.open = next_open;
        sol.alloc = next_alloc;
        sol.objective = next_alloc.total;
        improved = true;
      }
    } else {
      // One full sweep over the current open set, restarting on acceptance.
      const std::vector<int> snapshot = sol.open;
      for (int leaving : snapshot) {
        if (iterations >= params.max_iterations) break;
        ++iterations;
        auto [next_open, next_alloc] = best_replacement(
            sol.open, leaving, instance, bounds, params, sol.alloc);
        if (next_alloc.total < sol.objective - 1e-12) {
          sol.open = next_open;
          sol.alloc = next_alloc;
          sol.objective = next_alloc.total;
          improved = true;
          break;
        }
      }
    }
    stale_sweeps = improved ? 0 : stale_sweeps + 1;
    sol.stats.iterations = iterations;
  }
  sol.stats.iterations = iterations;
  sol.proof = ProofStatus::heuristic;
  return sol;
}

namespace {

struct PhaseOutcome {
  Solution best;
  std::vector<int> matrix_open;  ///< open set of the final matrix solve
};

PhaseOutcome run_phase(const Instance& instance, const BoundsMatrix& bounds,
                       const HeuristicParams& params,
                       const std::vector<int>& banned,
                       std::int64_t* evaluations) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::size_t d = static_cast<std::size_t>(instance.dim);
  (void)bounds;

  // Realized locations, one per candidate site; sites never opened so far
  // stay at their ball centers.
  std::vector<Point> locations = instance.sites;
  std::vector<double> matrix(n * n, 0.0);
  Point diff(d);

  const MatrixSearch mode = matrix_mode(instance, params.matrix_cap);

  PhaseOutcome out;
  out.best.objective = std::numeric_limits<double>::infinity();
  out.best.alloc.total = std::numeric_limits<double>::infinity();
  out.best.proof = ProofStatus::heuristic;

  for (int round = 0; round < params.max_phase_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (std::size_t k = 0; k < d; ++k)
          diff[k] = instance.sites[i][k] - locations[j][k];
        matrix[i * n + j] = norm_value(instance.distance_norm, diff);
      }
    }
    auto [J, matrix_value] =
        solve_domp_matrix(matrix, instance.n(), instance.p, instance.lambda,
                        instance.setup_costs, mode, params.matrix_cap,
                        banned.empty() ? nullptr : &banned);

    AllocParams alloc = params.alloc;
    alloc.seed = mix_seed(params.seed, open_set_fingerprint(J));
    AllocResult result = evaluate_open_set(J, instance, alloc);
    ++(*evaluations);

    if (result.total < out.best.alloc.total) {
      out.best.open = J;
      out.best.alloc = result;
      out.best.objective = result.total;
      out.matrix_open = J;
    }
    for (std::size_t s = 0; s < result.placement.open.size(); ++s) {
      locations[static_cast<std::size_t>(result.placement.open[s])] =
          result.placement.locations[s];
    }
    if (std::abs(matrix_value - result.total) <= params.phase_tol) break;
  }
  return out;
}

}  // namespace

Solution two_phase_search(const Instance& instance, const HeuristicParams& params) {
  instance.validate();
  const BoundsMatrix bounds = compute_bounds(instance);
  std::int64_t evaluations = 0;

  PhaseOutcome first = run_phase(instance, bounds, params, {}, &evaluations);
  Solution best = first.best;

  // Banning each phase-1 site forces the matrix solve into a different basin;
  // keep whatever the continuous evaluation likes best.
  for (int banned_site : first.best.open) {
    PhaseOutcome retry =
        run_phase(instance, bounds, params, {banned_site}, &evaluations);
    if (retry.best.alloc.total < best.alloc.total) {
      best = retry.best;
      best.objective = retry.best.alloc.total;
    }
  }
  best.stats.iterations = evaluations;
  best.proof = ProofStatus::heuristic;
  return best;
}

}  // namespace ompn
