#include "ompn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ompn/errors.hpp"
#include "ompn/om.hpp"
#include "ompn/parallel.hpp"

namespace ompn {

namespace {

constexpr std::int64_t kSeedMatrixCap = 1000000;
// Enumeration is processed in fixed-size chunks grouped into fixed-size
// waves; the incumbent is frozen per wave.  Both constants are independent
// of the thread budget, which is what makes results thread-count invariant.
constexpr std::size_t kChunkSubsets = 256;
constexpr std::size_t kWaveChunks = 32;

/// C(n, k) saturated at `cap` (returns cap + 1 when the count exceeds it).
std::int64_t binomial_capped(int n, int k, std::int64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n - k + i) / i is always integral at this point.
    const double projected = static_cast<double>(result) *
                             static_cast<double>(n - k + i) /
                             static_cast<double>(i);
    if (projected > static_cast<double>(cap) * 2.0 + 16.0) return cap + 1;
    result = result * (n - k + i) / i;
    if (result > cap) return cap + 1;
  }
  return result;
}

/// Lexicographic unranking of the `rank`-th size-p subset of {0..n-1}.
/// Safe because callers only use it when C(n, p) fits the subset cap.
std::vector<int> unrank_subset(int n, int p, std::int64_t rank) {
  std::vector<int> subset(static_cast<std::size_t>(p));
  int site = 0;
  for (int slot = 0; slot < p; ++slot) {
    for (;;) {
      const std::int64_t below =
          binomial_capped(n - site - 1, p - slot - 1,
                          std::numeric_limits<std::int64_t>::max() / 4);
      if (rank < below) break;
      rank -= below;
      ++site;
    }
    subset[static_cast<std::size_t>(slot)] = site++;
  }
  return subset;
}

/// Advances `subset` to the next size-p subset of {0..n-1} in lexicographic
/// order; returns false when already at the last one.
bool next_subset(std::vector<int>& subset, int n) {
  const int p = static_cast<int>(subset.size());
  for (int i = p - 1; i >= 0; --i) {
    if (subset[static_cast<std::size_t>(i)] < n - p + i) {
      ++subset[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < p; ++j)
        subset[static_cast<std::size_t>(j)] =
            subset[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double open_set_lower_bound(const std::vector<int>& J, const Instance& instance,
                            const BoundsMatrix& bounds) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  std::vector<double> floor_costs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = std::numeric_limits<double>::infinity();
    for (int j : J) lo = std::min(lo, bounds.lo(i, static_cast<std::size_t>(j)));
    floor_costs[i] = lo;
  }
  double setup = 0.0;
  for (int j : J) setup += instance.setup_costs[static_cast<std::size_t>(j)];
  return evaluate_om(instance.lambda, floor_costs) + setup;
}

std::pair<std::vector<int>, double> solve_domp_matrix(
    const std::vector<double>& costs, int n, int p, const LambdaVector& lambda,
    const std::vector<double>& setup, MatrixSearch search, std::int64_t cap,
    const std::vector<int>* banned) {
  if (n < 1) throw ValidationError("n: must be >= 1, got " + std::to_string(n));
  if (costs.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw ValidationError("costs: expected " + std::to_string(n * n) +
                          " entries, got " + std::to_string(costs.size()));
  }
  if (lambda.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("lambda: has " + std::to_string(lambda.size()) +
                          " weights, expected n = " + std::to_string(n));
  }
  if (setup.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("setup: expected " + std::to_string(n) +
                          " entries, got " + std::to_string(setup.size()));
  }
  std::vector<bool> allowed(static_cast<std::size_t>(n), true);
  if (banned != nullptr) {
    for (int j : *banned) {
      if (j >= 0 && j < n) allowed[static_cast<std::size_t>(j)] = false;
    }
  }
  std::vector<int> candidates;
  for (int j = 0; j < n; ++j)
    if (allowed[static_cast<std::size_t>(j)]) candidates.push_back(j);
  const int a = static_cast<int>(candidates.size());
  if (p < 1 || p > a) {
    throw ValidationError("p: must be in [1, " + std::to_string(a) +
                          "] candidate sites, got " + std::to_string(p));
  }

  std::vector<double> best_costs(static_cast<std::size_t>(n));
  auto score = [&](const std::vector<int>& J) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      double lo = std::numeric_limits<double>::infinity();
      for (int j : J)
        lo = std::min(lo, costs[i * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(j)]);
      best_costs[i] = lo;
    }
    double total = evaluate_om(lambda, best_costs);
    for (int j : J) total += setup[static_cast<std::size_t>(j)];
    return total;
  };

  if (search == MatrixSearch::exhaustive) {
    const std::int64_t count = binomial_capped(a, p, cap);
    if (count > cap) {
      throw CapacityError("matrix solve would enumerate more than " +
                          std::to_string(cap) + " subsets");
    }
    std::vector<int> index(static_cast<std::size_t>(p));
    std::iota(index.begin(), index.end(), 0);
    std::vector<int> best_set;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> J(static_cast<std::size_t>(p));
    for (;;) {
      for (int s = 0; s < p; ++s)
        J[static_cast<std::size_t>(s)] =
            candidates[static_cast<std::size_t>(index[static_cast<std::size_t>(s)])];
      const double value = score(J);
      if (value < best) {
        best = value;
        best_set = J;
      }
      if (!next_subset(index, a)) break;
    }
    return {best_set, best};
  }

  // Greedy construction: repeatedly add the candidate that minimizes the
  // partial objective, then first-improvement swap sweeps.
  std::vector<int> J;
  std::vector<bool> in_set(static_cast<std::size_t>(n), false);
  for (int step = 0; step < p; ++step) {
    int pick = -1;
    double pick_value = std::numeric_limits<double>::infinity();
    for (int c : candidates) {
      if (in_set[static_cast<std::size_t>(c)]) continue;
      J.push_back(c);
      const double value = score(J);
      J.pop_back();
      if (value < pick_value) {
        pick_value = value;
        pick = c;
      }
    }
    J.push_back(pick);
    in_set[static_cast<std::size_t>(pick)] = true;
  }
  std::sort(J.begin(), J.end());
  double current = score(J);

  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t out = 0; out < J.size() && !improved; ++out) {
      for (int c : candidates) {
        if (in_set[static_cast<std::size_t>(c)]) continue;
        const int removed = J[out];
        J[out] = c;
        const double value = score(J);
        if (value < current - 1e-12) {
          in_set[static_cast<std::size_t>(removed)] = false;
          in_set[static_cast<std::size_t>(c)] = true;
          std::sort(J.begin(), J.end());
          current = value;
          improved = true;
          break;
        }
        J[out] = removed;
      }
    }
  }
  return {J, current};
}

PositionTable position_elimination(const Instance& instance,
                                   const BoundsMatrix& bounds, double ub) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::vector<double>& lambda = instance.lambda.weights();
  std::vector<double> prefix(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += lambda[k];
    prefix[k] = acc;
  }
  PositionTable table;
  table.max_position.assign(n, static_cast<int>(n));
  table.contradiction.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double off_site_floor = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off_site_floor = std::min(off_site_floor, bounds.lo(i, j));
    }
    if (n == 1) off_site_floor = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      // Occupying 0-based position k costs at least prefix[k] * floor: the
      // k+1 sorted positions above and including it each cost >= the floor.
      if (prefix[k] * off_site_floor > ub) {
        table.max_position[i] = static_cast<int>(k);
        break;
      }
    }
    if (table.max_position[i] == 0) table.contradiction[i] = true;
  }
  return table;
}

namespace detail {

Solution blend_seed(const Instance& instance, const BoundsMatrix& bounds,
                    double theta, const AllocParams& alloc,
                    std::int64_t matrix_cap) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  std::vector<double> blend(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      blend[i * n + j] = theta * bounds.lo(i, j) + (1.0 - theta) * bounds.hi(i, j);
    }
  }
  const MatrixSearch search =
      binomial_capped(instance.n(), instance.p, matrix_cap) <= matrix_cap
          ? MatrixSearch::exhaustive
          : MatrixSearch::swap;
  auto [J, matrix_value] =
      solve_domp_matrix(blend, instance.n(), instance.p, instance.lambda,
                      instance.setup_costs, search, matrix_cap);
  (void)matrix_value;
  Solution out;
  out.open = J;
  out.alloc = evaluate_open_set(J, instance, alloc);
  out.objective = out.alloc.total;
  out.proof = ProofStatus::heuristic;
  return out;
}

}  // namespace detail

Solution solve_exact(const Instance& instance, const ExactParams& params) {
  instance.validate();
  const int n = instance.n();
  const int p = instance.p;
  const std::int64_t total = binomial_capped(n, p, params.subset_cap);
  if (total > params.subset_cap) {
    throw CapacityError(
        "exact search over C(" + std::to_string(n) + ", " + std::to_string(p) +
        ") subsets exceeds the cap of " + std::to_string(params.subset_cap) +
        "; raise the cap or use a heuristic solver");
  }

  const BoundsMatrix bounds = compute_bounds(instance);

  Solution incumbent;
  double ub = std::numeric_limits<double>::infinity();
  if (params.seed_incumbent) {
    incumbent = detail::blend_seed(instance, bounds, 0.5, params.alloc,
                                   kSeedMatrixCap);
    ub = incumbent.objective;
  }

  const bool exhaustive_alloc =
      assignment_combinations(p, n - p) <=
      static_cast<double>(params.alloc.enum_cap);

  struct ChunkOutcome {
    double value = std::numeric_limits<double>::infinity();
    Solution solution;
    std::int64_t evaluated = 0;
    std::int64_t pruned = 0;
    bool multistart_used = false;
  };

  // Pruning against a heuristic incumbent keeps exactness: a pruned subset
  // provably cannot beat the frozen bound, so only survivors evaluated with
  // the multistart fallback (rather than assignment enumeration) downgrade
  // the proof.
  SolveStats stats;
  bool multistart_used = false;
  const std::size_t subsets = static_cast<std::size_t>(total);
  const std::size_t chunk_count =
      (subsets + kChunkSubsets - 1) / kChunkSubsets;
  const std::size_t wave_count =
      (chunk_count + kWaveChunks - 1) / kWaveChunks;

  for (std::size_t wave = 0; wave < wave_count; ++wave) {
    const std::size_t chunk_begin = wave * kWaveChunks;
    const std::size_t chunk_end =
        std::min(chunk_count, chunk_begin + kWaveChunks);
    const double frozen_ub = ub;
    std::vector<ChunkOutcome> outcomes(chunk_end - chunk_begin);

    parallel_for(chunk_begin, chunk_end, 1, [&](std::size_t chunk) {
      ChunkOutcome& out = outcomes[chunk - chunk_begin];
      const std::size_t first = chunk * kChunkSubsets;
      const std::size_t last = std::min(subsets, first + kChunkSubsets);
      std::vector<int> J =
          unrank_subset(n, p, static_cast<std::int64_t>(first));
      for (std::size_t idx = first; idx < last; ++idx) {
        const double lb = open_set_lower_bound(J, instance, bounds);
        if (params.prune && lb >= frozen_ub) {
          ++out.pruned;
        } else {
          ++out.evaluated;
          AllocResult alloc;
          if (exhaustive_alloc) {
            alloc = evaluate_open_set_exact(J, instance, params.alloc);
          } else {
            const FixingTable fixing = fix_assignments(J, instance, bounds);
            alloc = evaluate_open_set(J, instance, params.alloc, &fixing);
            out.multistart_used = true;
          }
          if (alloc.total < out.value) {
            out.value = alloc.total;
            out.solution.open = J;
            out.solution.alloc = std::move(alloc);
            out.solution.objective = out.value;
          }
        }
        if (idx + 1 < last) next_subset(J, n);
      }
    });

    // Merge in chunk order so the earliest-lexicographic winner is kept on
    // ties, independent of scheduling.
    for (ChunkOutcome& out : outcomes) {
      stats.subsets_evaluated += out.evaluated;
      stats.subsets_pruned += out.pruned;
      multistart_used = multistart_used || out.multistart_used;
      if (out.value < ub) {
        ub = out.value;
        incumbent = std::move(out.solution);
      }
    }
  }

  incumbent.stats = stats;
  incumbent.objective = incumbent.alloc.total;
  incumbent.proof =
      multistart_used ? ProofStatus::heuristic : ProofStatus::exact;
  if (incumbent.open.empty()) {
    throw ValidationError("exact search finished without any candidate; "
                          "this indicates an invalid instance");
  }
  return incumbent;
}

}  // namespace ompn
