#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ompn/instance.hpp"

namespace ompn::model {

/// The five exportable encodings of the problem.  Interface ids (CLI flags,
/// file metadata) are the short strings returned by formulation_id.
enum class Formulation {
  rank_assignment,   ///< "3I": three-index rank-assignment binaries w_i_j_k
  sorted_assignment, ///< "2I": two-index sorting binaries s_i_k
  ksum_telescope,    ///< "OT": telescoped sums of k largest costs
  sorted_dual,       ///< "BEP": dual variables of the sorting subproblem
  block_milp,        ///< "MILP_block": pure MILP via polyhedral unit balls
};

std::string formulation_id(Formulation f);
Formulation parse_formulation(const std::string& id);

struct Variable {
  std::string name;
  bool integral = false;  ///< true: binary in {0,1}
  double lb = 0.0;
  double ub = 0.0;
  bool operator==(const Variable&) const = default;
};

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
  bool operator==(const Term&) const = default;
};

enum class RowSense { le, ge, eq };

struct LinearRow {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::le;
  double rhs = 0.0;
  bool operator==(const LinearRow&) const = default;
};

/// An affine expression constant + sum(coef * var).
struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;
  bool operator==(const Affine&) const = default;
};

/// Second-order cone row: || vec ||_2 <= bound.
struct ConeRow {
  std::string name;
  std::vector<Affine> vec;
  Affine bound;
  bool operator==(const ConeRow&) const = default;
};

/// A solver-agnostic minimization model.  Construction helpers keep names
/// unique; canonical form (variables, rows, and terms sorted by name) is
/// established by the builders and preserved by serialization round trips.
struct Model {
  std::vector<Variable> variables;
  std::vector<LinearRow> linear;
  std::vector<ConeRow> cones;
  std::vector<Term> objective;
  double objective_constant = 0.0;
  std::vector<std::pair<std::string, std::string>> meta;

  std::size_t add_variable(std::string name, bool integral, double lb, double ub);
  const std::string* find_meta(const std::string& key) const;
  void set_meta(const std::string& key, std::string value);

  bool operator==(const Model&) const = default;
};

struct ExportOptions {
  /// Add the valid equalities tying self-rank binaries to opening binaries
  /// at build time (rank-based formulations only).
  bool strengthen = false;
  /// Extreme points of the dual unit ball of the distance norm, for
  /// block_milp with a block norm other than 1/inf.
  std::vector<Point> distance_dual_points;
  /// Same for the placement-ball norm.
  std::vector<Point> placement_dual_points;
};

/// Builds the requested encoding of the instance.  Throws ValidationError
/// for unsupported norm/formulation combinations (block_milp needs
/// polyhedral norms; see ExportOptions for custom block norms).
Model build_model(const Instance& instance, Formulation formulation,
                  const ExportOptions& options = {});

/// Sum of the trailing weights lambda_k + ... + lambda_{n-1} (0-based k).
double tail_weight(const LambdaVector& lambda, std::size_t k);

/// Bound-driven tightening: with a finite upper bound, adds the valid
/// equalities (if missing) and zeroes the upper bounds of rank-assignment
/// binaries whose use would already push the objective past the bound (rank
/// cutoffs from position_elimination; customers flagged contradictory are
/// recorded in metadata, never silently repaired).  A non-finite bound
/// returns the model unchanged.  `use_tail_rule` switches the cutoff
/// threshold to the trailing-weight variant; it is off by default because
/// that variant can cut optimal solutions (see README).
Model strengthen_model(Model model, const Instance& instance,
                       const BoundsMatrix& bounds, double ub,
                       bool use_tail_rule = false);

enum class TextFormat { conic, lp };

/// Deterministic text serialization; the lp format accepts only models
/// without cone rows.  Models with an empty objective are rejected.
std::string model_to_text(const Model& model, TextFormat format);
Model model_from_text(const std::string& text, TextFormat format);

void save_model(const Model& model, const std::string& path, TextFormat format);
Model load_model(const std::string& path, TextFormat format);

}  // namespace ompn::model
