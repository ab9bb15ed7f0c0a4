#include "ompn/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ompn/errors.hpp"
#include "ompn/om.hpp"
#include "ompn/rng.hpp"

namespace ompn {

namespace {

std::vector<int> sorted_unique_open_set(const std::vector<int>& J,
                                        const Instance& instance) {
  if (J.empty()) throw ValidationError("J: open set must not be empty");
  std::vector<int> open = J;
  std::sort(open.begin(), open.end());
  for (std::size_t k = 0; k < open.size(); ++k) {
    if (open[k] < 0 || open[k] >= instance.n()) {
      throw ValidationError("J: site index " + std::to_string(open[k]) +
                            " out of range [0, " + std::to_string(instance.n()) +
                            ")");
    }
    if (k > 0 && open[k] == open[k - 1]) {
      throw ValidationError("J: duplicate site index " + std::to_string(open[k]));
    }
  }
  return open;
}

double auto_step_scale(const Instance& instance) {
  double max_radius = 0.0;
  for (double r : instance.radii) max_radius = std::max(max_radius, r);
  double max_pair = 0.0;
  const std::size_t n = instance.sites.size();
  Point diff(static_cast<std::size_t>(instance.dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < diff.size(); ++k)
        diff[k] = instance.sites[i][k] - instance.sites[j][k];
      max_pair = std::max(max_pair, norm_value(instance.distance_norm, diff));
    }
  }
  return max_radius + max_pair;
}

double setup_sum(const std::vector<int>& open, const Instance& instance) {
  double total = 0.0;
  for (int j : open) total += instance.setup_costs[static_cast<std::size_t>(j)];
  return total;
}

Point uniform_in_ball(const Neighborhood& ball, Rng& rng) {
  const std::size_t d = ball.center.size();
  if (ball.radius == 0.0) return ball.center;
  Point u(d);
  for (;;) {
    for (std::size_t k = 0; k < d; ++k) u[k] = rng.uniform(-1.0, 1.0);
    if (norm_value(ball.norm, u) <= 1.0) break;
  }
  Point out(d);
  for (std::size_t k = 0; k < d; ++k)
    out[k] = ball.center[k] + ball.radius * u[k];
  return out;
}

std::uint64_t open_set_fingerprint(const std::vector<int>& open) {
  std::uint64_t h = 0x6f70656e5f736574ULL;
  for (int j : open) h = mix_seed(h, static_cast<std::uint64_t>(j));
  return h;
}

}  // namespace

int Placement::slot(int site) const {
  const auto it = std::lower_bound(open.begin(), open.end(), site);
  if (it == open.end() || *it != site) return -1;
  return static_cast<int>(it - open.begin());
}

double assignment_combinations(int open_count, int closed_count) {
  return std::pow(static_cast<double>(open_count),
                  static_cast<double>(closed_count));
}

FixingTable fix_assignments(const std::vector<int>& J, const Instance& instance,
                            const BoundsMatrix& bounds) {
  const std::vector<int> open = sorted_unique_open_set(J, instance);
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::size_t m = open.size();
  FixingTable table;
  table.open = open;
  table.state.assign(n * m, FixState::open_choice);

  for (std::size_t i = 0; i < n; ++i) {
    int viable = 0;
    int last_viable = -1;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t j = static_cast<std::size_t>(open[s]);
      bool excluded = false;
      bool forced = true;
      for (std::size_t t = 0; t < m; ++t) {
        if (t == s) continue;
        const std::size_t k = static_cast<std::size_t>(open[t]);
        if (bounds.hi(i, k) < bounds.lo(i, j)) excluded = true;
        if (!(bounds.lo(i, k) > bounds.hi(i, j))) forced = false;
      }
      if (m == 1) forced = true;
      if (excluded) {
        table.state[i * m + s] = FixState::excluded;
      } else {
        ++viable;
        last_viable = static_cast<int>(s);
        if (forced) table.state[i * m + s] = FixState::forced;
      }
    }
    // A customer always has at least one viable candidate (a strict
    // interval-dominance cycle is impossible).
    if (viable == 1) {
      table.state[i * m + static_cast<std::size_t>(last_viable)] = FixState::forced;
    }
    // When one candidate is forced, every other candidate is out.
    for (std::size_t s = 0; s < m; ++s) {
      if (table.state[i * m + s] != FixState::forced) continue;
      for (std::size_t t = 0; t < m; ++t) {
        if (t != s) table.state[i * m + t] = FixState::excluded;
      }
      break;
    }
  }
  return table;
}

Assignment assign_closest(const Placement& placement, const Instance& instance,
                          const FixingTable* fixing) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::size_t m = placement.open.size();
  Assignment out(n, -1);
  Point diff(static_cast<std::size_t>(instance.dim));
  for (std::size_t i = 0; i < n; ++i) {
    const int self_slot = placement.slot(static_cast<int>(i));
    if (self_slot >= 0) {
      out[i] = static_cast<int>(i);
      continue;
    }
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < m; ++s) {
      if (fixing != nullptr) {
        const FixState st = fixing->at(static_cast<int>(i), static_cast<int>(s));
        if (st == FixState::excluded) continue;
        if (st == FixState::forced) {
          best = placement.open[s];
          break;
        }
      }
      for (std::size_t k = 0; k < diff.size(); ++k)
        diff[k] = instance.sites[i][k] - placement.locations[s][k];
      const double dist = norm_value(instance.distance_norm, diff);
      if (dist < best_dist) {
        best_dist = dist;
        best = placement.open[s];
      }
    }
    out[i] = best;
  }
  return out;
}

std::vector<double> realized_costs(const Placement& placement,
                                   const Assignment& assignment,
                                   const Instance& instance) {
  const std::size_t n = static_cast<std::size_t>(instance.n());
  std::vector<double> costs(n, 0.0);
  Point diff(static_cast<std::size_t>(instance.dim));
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment[i] == static_cast<int>(i)) continue;
    const int s = placement.slot(assignment[i]);
    if (s < 0) {
      throw ValidationError("assignment[" + std::to_string(i) +
                            "] targets closed site " +
                            std::to_string(assignment[i]));
    }
    for (std::size_t k = 0; k < diff.size(); ++k)
      diff[k] = instance.sites[i][k] -
                placement.locations[static_cast<std::size_t>(s)][k];
    costs[i] = norm_value(instance.distance_norm, diff);
  }
  return costs;
}

std::pair<Placement, double> optimize_placement(const std::vector<int>& J,
                                                const Assignment& assignment,
                                                const Instance& instance,
                                                const AllocParams& params,
                                                const Placement* warm_start,
                                                bool* converged) {
  const std::vector<int> open = sorted_unique_open_set(J, instance);
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::size_t m = open.size();
  const std::size_t d = static_cast<std::size_t>(instance.dim);
  const std::vector<double>& lambda = instance.lambda.weights();

  Placement current;
  current.open = open;
  if (warm_start != nullptr && warm_start->open == open) {
    current.locations = warm_start->locations;
  } else {
    current.locations.reserve(m);
    for (int j : open) current.locations.push_back(instance.sites[static_cast<std::size_t>(j)]);
  }

  // Precompute, per facility slot, which customers it serves (self excluded:
  // their cost is identically zero and exerts no pull).
  std::vector<std::vector<int>> served(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment[i] == static_cast<int>(i)) continue;
    const int s = current.slot(assignment[i]);
    if (s < 0) {
      throw ValidationError("assignment[" + std::to_string(i) +
                            "] targets closed site " +
                            std::to_string(assignment[i]));
    }
    served[static_cast<std::size_t>(s)].push_back(static_cast<int>(i));
  }

  const double step0 =
      params.step_scale > 0.0 ? params.step_scale : auto_step_scale(instance);

  std::vector<double> costs(n, 0.0);
  std::vector<std::size_t> order(n);
  std::vector<Point> grad(m, Point(d, 0.0));
  Point diff(d);

  auto compute_costs = [&]() {
    for (std::size_t s = 0; s < m; ++s) {
      for (int i : served[s]) {
        for (std::size_t k = 0; k < d; ++k)
          diff[k] = instance.sites[static_cast<std::size_t>(i)][k] -
                    current.locations[s][k];
        costs[static_cast<std::size_t>(i)] =
            norm_value(instance.distance_norm, diff);
      }
    }
  };
  auto om_of_costs = [&]() {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (costs[a] != costs[b]) return costs[a] > costs[b];
      return a < b;
    });
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += lambda[k] * costs[order[k]];
    return total;
  };

  compute_costs();
  double best_value = om_of_costs();
  Placement best = current;
  bool stalled = false;
  int since_improvement = 0;

  for (int t = 1; t <= params.max_iters; ++t) {
    // Subgradient of the OM objective in the locations: customer at sorted
    // rank k contributes weight lambda_k pulling its facility toward it.
    for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = lambda[k];
      if (w == 0.0) continue;
      const std::size_t i = order[k];
      if (assignment[i] == static_cast<int>(i)) continue;
      const int s = current.slot(assignment[i]);
      for (std::size_t c = 0; c < d; ++c)
        diff[c] = instance.sites[i][c] -
                  current.locations[static_cast<std::size_t>(s)][c];
      const Point sg = norm_subgradient(instance.distance_norm, diff);
      for (std::size_t c = 0; c < d; ++c) {
        const double pull = -w * sg[c];
        if (pull != 0.0) any = true;
        grad[static_cast<std::size_t>(s)][c] += pull;
      }
    }
    if (!any) {
      // Zero subgradient: the current locations are optimal for this
      // assignment.
      if (converged != nullptr) *converged = true;
      stalled = true;
      break;
    }
    const double alpha = step0 / std::sqrt(static_cast<double>(t));
    for (std::size_t s = 0; s < m; ++s) {
      Point moved(d);
      for (std::size_t c = 0; c < d; ++c)
        moved[c] = current.locations[s][c] - alpha * grad[s][c];
      current.locations[s] = project_to_ball(
          moved, instance.neighborhood(current.open[s]));
    }
    compute_costs();
    const double value = om_of_costs();
    if (value < best_value - params.tol) {
      best_value = value;
      best = current;
      since_improvement = 0;
    } else {
      if (value < best_value) {
        best_value = value;
        best = current;
      }
      ++since_improvement;
      if (since_improvement >= params.improve_window) {
        stalled = true;
        if (converged != nullptr) *converged = true;
        break;
      }
    }
  }
  if (converged != nullptr && !stalled) *converged = false;
  return {std::move(best), best_value};
}

namespace {

/// Placement solve followed by warm-started refinement passes with
/// successively smaller initial steps; keeps the best value seen.
std::pair<Placement, double> optimize_placement_refined(
    const std::vector<int>& J, const Assignment& assignment,
    const Instance& instance, const AllocParams& params,
    const Placement* warm_start, double step0, bool* converged) {
  AllocParams local = params;
  local.step_scale = step0;
  auto result = optimize_placement(J, assignment, instance, local, warm_start,
                                   converged);
  for (double divisor : {16.0, 256.0}) {
    AllocParams fine = params;
    fine.step_scale = step0 / divisor;
    bool fine_converged = false;
    auto refined = optimize_placement(J, assignment, instance, fine,
                                      &result.first, &fine_converged);
    if (refined.second < result.second) result = std::move(refined);
  }
  return result;
}

/// Cold refinement pass followed by a warm-started descent over successively
/// finer step scales.  The coarse ladder alone can stall a few 1e-5 above the
/// conditional optimum; the fine rungs close that residual so the enumerated
/// value is never the looser of the two evaluation paths.
std::pair<Placement, double> optimize_placement_stalled(
    const std::vector<int>& J, const Assignment& assignment,
    const Instance& instance, const AllocParams& params, double step0,
    bool* converged) {
  auto result = optimize_placement_refined(J, assignment, instance, params,
                                           nullptr, step0, converged);
  for (int round = 0; round < params.max_rounds; ++round) {
    const double before = result.second;
    for (double divisor : {16.0, 256.0, 4096.0, 65536.0, 1048576.0}) {
      AllocParams fine = params;
      fine.step_scale = step0 / divisor;
      bool fine_converged = false;
      auto refined = optimize_placement(J, assignment, instance, fine,
                                        &result.first, &fine_converged);
      if (refined.second < result.second) result = std::move(refined);
    }
    if (result.second >= before - 1e-12 * (1.0 + std::abs(before))) break;
  }
  return result;
}

AllocResult finish_result(const std::vector<int>& open, Placement placement,
                          Assignment assignment, const Instance& instance,
                          bool converged, int rounds) {
  AllocResult out;
  out.placement = std::move(placement);
  out.assignment = std::move(assignment);
  out.costs = realized_costs(out.placement, out.assignment, instance);
  out.om_value = evaluate_om(instance.lambda, out.costs);
  out.setup_value = setup_sum(open, instance);
  out.total = out.om_value + out.setup_value;
  out.converged = converged;
  out.rounds = rounds;
  return out;
}

}  // namespace

AllocResult evaluate_open_set(const std::vector<int>& J, const Instance& instance,
                              const AllocParams& params,
                              const FixingTable* fixing) {
  const std::vector<int> open = sorted_unique_open_set(J, instance);
  const double step0 =
      params.step_scale > 0.0 ? params.step_scale : auto_step_scale(instance);
  const std::uint64_t jhash = open_set_fingerprint(open);
  const int starts = std::max(1, params.starts);

  AllocResult best;
  best.total = std::numeric_limits<double>::infinity();

  for (int s = 0; s < starts; ++s) {
    Placement placement;
    placement.open = open;
    if (s == 0) {
      for (int j : open)
        placement.locations.push_back(instance.sites[static_cast<std::size_t>(j)]);
    } else {
      Rng rng(mix_seed(mix_seed(params.seed, jhash),
                       static_cast<std::uint64_t>(s)));
      for (int j : open)
        placement.locations.push_back(uniform_in_ball(instance.neighborhood(j), rng));
    }

    Assignment assignment = assign_closest(placement, instance, fixing);
    bool stabilized = false;
    bool solve_converged = false;
    int rounds = 0;
    for (; rounds < params.max_rounds; ++rounds) {
      auto solved = optimize_placement_refined(open, assignment, instance,
                                               params, &placement, step0,
                                               &solve_converged);
      placement = std::move(solved.first);
      Assignment next = assign_closest(placement, instance, fixing);
      if (next == assignment) {
        stabilized = true;
        break;
      }
      assignment = std::move(next);
    }

    AllocResult candidate = finish_result(open, std::move(placement),
                                          std::move(assignment), instance,
                                          stabilized && solve_converged,
                                          rounds + 1);
    if (candidate.total < best.total) best = std::move(candidate);
  }
  return best;
}

AllocResult evaluate_open_set_exact(const std::vector<int>& J,
                                    const Instance& instance,
                                    const AllocParams& params) {
  const std::vector<int> open = sorted_unique_open_set(J, instance);
  const std::size_t n = static_cast<std::size_t>(instance.n());
  const std::size_t m = open.size();
  std::vector<int> closed;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(open.begin(), open.end(), static_cast<int>(i)) == open.end())
      closed.push_back(static_cast<int>(i));
  }
  const double combos =
      assignment_combinations(static_cast<int>(m), static_cast<int>(closed.size()));
  if (combos > static_cast<double>(params.enum_cap)) {
    throw CapacityError("assignment enumeration needs " + format_real(combos) +
                        " combinations; cap is " +
                        std::to_string(params.enum_cap));
  }
  const double step0 =
      params.step_scale > 0.0 ? params.step_scale : auto_step_scale(instance);

  Assignment assignment(n);
  for (int j : open) assignment[static_cast<std::size_t>(j)] = j;
  const std::int64_t total = static_cast<std::int64_t>(combos);
  auto fill_assignment = [&](std::int64_t index) {
    for (std::size_t c = 0; c < closed.size(); ++c) {
      assignment[static_cast<std::size_t>(closed[c])] =
          open[static_cast<std::size_t>(index % static_cast<std::int64_t>(m))];
      index /= static_cast<std::int64_t>(m);
    }
  };

  // Quick pass: one cold refinement per assignment to bracket the optimum.
  std::vector<double> quick(static_cast<std::size_t>(total));
  double best_quick = std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < total; ++idx) {
    fill_assignment(idx);
    bool conv = false;
    auto solved = optimize_placement_refined(open, assignment, instance, params,
                                             nullptr, step0, &conv);
    quick[static_cast<std::size_t>(idx)] = solved.second;
    if (solved.second < best_quick) best_quick = solved.second;
  }

  // Polish pass: stall every assignment whose quick value is competitive.
  // The margin dwarfs the observed cold-pass error, so the winner's deep
  // polish cannot be beaten by an assignment that was skipped here.
  const double margin = 0.02 * (1.0 + std::abs(best_quick));
  AllocResult best;
  best.total = std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < total; ++idx) {
    if (quick[static_cast<std::size_t>(idx)] > best_quick + margin) continue;
    fill_assignment(idx);
    bool conv = false;
    auto solved = optimize_placement_stalled(open, assignment, instance, params,
                                             step0, &conv);
    const double value = solved.second + setup_sum(open, instance);
    if (value < best.total) {
      best = finish_result(open, std::move(solved.first), assignment, instance,
                           conv, 1);
    }
  }
  return best;
}

}  // namespace ompn
