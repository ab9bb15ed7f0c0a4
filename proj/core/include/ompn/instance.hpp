#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ompn/geometry.hpp"
#include "ompn/om.hpp"

namespace ompn {

/// One problem instance: n customer sites, a placement ball per site, the
/// number p of facilities to open, per-site opening costs, and the
/// ordered-median weight vector.  Every site is simultaneously a customer and
/// a candidate facility location; a customer assigned to its own open
/// facility incurs cost zero.
struct Instance {
  std::string name;  ///< informational only; not part of the content hash
  int dim = 2;
  int p = 1;
  NormSpec distance_norm = NormSpec::euclidean();  ///< customer-to-facility
  NormSpec ball_norm = NormSpec::euclidean();      ///< placement regions
  std::vector<Point> sites;
  std::vector<double> radii;
  std::vector<double> setup_costs;
  LambdaVector lambda = LambdaVector::make(LambdaPreset::median, 1);

  int n() const { return static_cast<int>(sites.size()); }
  Neighborhood neighborhood(int j) const {
    return Neighborhood{sites[static_cast<std::size_t>(j)],
                        radii[static_cast<std::size_t>(j)], ball_norm};
  }
  std::vector<Neighborhood> neighborhoods() const;

  /// Throws ValidationError naming the offending field when any invariant is
  /// violated (p out of range, negative radius, ragged coordinates, ...).
  void validate() const;

  bool operator==(const Instance&) const = default;
};

/// Assignment-cost brackets for all site/ball pairs of the instance.
BoundsMatrix compute_bounds(const Instance& instance);

/// Canonical JSON serialization.  All reals are written as shortest
/// round-trip decimal strings, and field order is fixed, so equal instances
/// always produce byte-identical text.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

/// FNV-1a hash of the canonical content (name excluded), as "0x..." hex.
std::string content_hash(const Instance& instance);

/// Scenario radius ranges for the random generator, 1-based id in [1, 4]:
/// scenario s draws radii uniformly from [5(s-1), 5s].
struct ScenarioRange {
  double lo, hi;
};
ScenarioRange scenario_range(int scenario);

/// Random instance: sites uniform in [0, 100]^dim, radii from the scenario
/// range, setup costs equal to the radii, Euclidean distance and ball norms.
/// Identical arguments always produce the identical instance.
Instance make_random_instance(int n, int dim, int scenario, int p,
                              const LambdaVector& lambda, std::uint64_t seed);

/// The bundled 49-site benchmark set.  `scale` in {1, 2, 3} multiplies the
/// base radii; setup costs equal the scaled radii.
Instance builtin_us49(int scale, int p, const LambdaVector& lambda);

/// Small 5-site Euclidean instance used in documentation and tests
/// (p = 2, median weights).  When setup_from_radius is true (default and the
/// convention used throughout), opening costs equal the radii; otherwise they
/// are zero.
Instance builtin_example5(bool setup_from_radius = true);

/// Formats a double as the shortest decimal string that parses back to the
/// exact same value; parse_real is its inverse.  Shared by all file formats.
std::string format_real(double value);
double parse_real(const std::string& text);

}  // namespace ompn
