#include "ompn/model_export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ompn/errors.hpp"
#include "ompn/exact.hpp"

namespace ompn::model {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string pad_index(int value, int width) {
  std::string digits = std::to_string(value);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return digits;
}

}  // namespace

std::string formulation_id(Formulation f) {
  switch (f) {
    case Formulation::rank_assignment: return "3I";
    case Formulation::sorted_assignment: return "2I";
    case Formulation::ksum_telescope: return "OT";
    case Formulation::sorted_dual: return "BEP";
    case Formulation::block_milp: return "MILP_block";
  }
  throw ValidationError("formulation: unknown enum value");
}

Formulation parse_formulation(const std::string& id) {
  if (id == "3I") return Formulation::rank_assignment;
  if (id == "2I") return Formulation::sorted_assignment;
  if (id == "OT") return Formulation::ksum_telescope;
  if (id == "BEP") return Formulation::sorted_dual;
  if (id == "MILP_block") return Formulation::block_milp;
  throw ValidationError("formulation: unknown id '" + id +
                        "' (expected 3I, 2I, OT, BEP, or MILP_block)");
}

std::size_t Model::add_variable(std::string name, bool integral, double lb,
                                double ub) {
  variables.push_back(Variable{std::move(name), integral, lb, ub});
  return variables.size() - 1;
}

const std::string* Model::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Model::set_meta(const std::string& key, std::string value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(key, std::move(value));
}

namespace {

void sort_terms(std::vector<Term>& terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
}

/// Sorts variables and rows by name and remaps all indices; establishes the
/// canonical form that serialization preserves.
void canonicalize(Model& model) {
  std::vector<std::size_t> order(model.variables.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return model.variables[a].name < model.variables[b].name;
  });
  std::vector<std::size_t> remap(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) remap[order[pos]] = pos;

  std::vector<Variable> sorted_vars(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    sorted_vars[pos] = std::move(model.variables[order[pos]]);
  model.variables = std::move(sorted_vars);

  auto remap_terms = [&](std::vector<Term>& terms) {
    for (Term& t : terms) t.var = remap[t.var];
    sort_terms(terms);
  };
  for (LinearRow& row : model.linear) remap_terms(row.terms);
  for (ConeRow& row : model.cones) {
    for (Affine& a : row.vec) remap_terms(a.terms);
    remap_terms(row.bound.terms);
  }
  remap_terms(model.objective);

  std::sort(model.linear.begin(), model.linear.end(),
            [](const LinearRow& a, const LinearRow& b) { return a.name < b.name; });
  std::sort(model.cones.begin(), model.cones.end(),
            [](const ConeRow& a, const ConeRow& b) { return a.name < b.name; });
}

void check_unique_names(const Model& model) {
  std::map<std::string, int> seen;
  for (const Variable& v : model.variables) {
    if (++seen[v.name] > 1) {
      throw ValidationError("model: duplicate variable name '" + v.name + "'");
    }
  }
  seen.clear();
  for (const LinearRow& r : model.linear) ++seen[r.name];
  for (const ConeRow& r : model.cones) ++seen[r.name];
  for (const auto& [name, count] : seen) {
    if (count > 1) {
      throw ValidationError("model: duplicate row name '" + name + "'");
    }
  }
}

/// Extreme points of the dual unit ball for a polyhedral norm: the dual of
/// l1 is the max-norm box (sign vectors), the dual of the max norm is the
/// cross-polytope (signed unit vectors).
std::vector<Point> dual_ball_points(const NormSpec& norm, int dim) {
  std::vector<Point> points;
  if (norm.is_infinity()) {
    for (int c = 0; c < dim; ++c) {
      for (double sign : {1.0, -1.0}) {
        Point e(static_cast<std::size_t>(dim), 0.0);
        e[static_cast<std::size_t>(c)] = sign;
        points.push_back(std::move(e));
      }
    }
    return points;
  }
  if (norm.exponent() == 1.0) {
    const int total = 1 << dim;
    for (int mask = 0; mask < total; ++mask) {
      Point e(static_cast<std::size_t>(dim));
      for (int c = 0; c < dim; ++c)
        e[static_cast<std::size_t>(c)] = (mask >> c) & 1 ? 1.0 : -1.0;
      points.push_back(std::move(e));
    }
    return points;
  }
  return {};
}

/// Incremental model builder with name helpers tied to one instance.
struct Builder {
  const Instance& instance;
  const BoundsMatrix& bounds;
  Model model;
  int width;

  Builder(const Instance& inst, const BoundsMatrix& b)
      : instance(inst), bounds(b),
        width(static_cast<int>(std::to_string(inst.n()).size())) {}

  std::string idx(int i) const { return pad_index(i + 1, width); }

  std::size_t var(const std::string& name, bool integral, double lb, double ub) {
    return model.add_variable(name, integral, lb, ub);
  }

  void row(std::string name, std::vector<Term> terms, RowSense sense,
           double rhs) {
    model.linear.push_back(LinearRow{std::move(name), std::move(terms), sense, rhs});
  }

  /// Emits rows enforcing ||vec||_norm <= bound.  SOC for the Euclidean
  /// norm, support-function rows for polyhedral norms, and the quadratic
  /// tower for other rational exponents.
  void norm_bound(const std::string& base, const std::vector<Affine>& vec,
                  const Affine& bound, const NormSpec& norm) {
    if (!norm.is_infinity() && norm.exponent() == 2.0) {
      model.cones.push_back(ConeRow{base, vec, bound});
      return;
    }
    const std::vector<Point> points =
        dual_ball_points(norm, static_cast<int>(vec.size()));
    if (!points.empty()) {
      emit_support_rows(base, vec, bound, points);
      return;
    }
    emit_tower(base, vec, bound, norm);
  }

  /// bound - sum_c e_c * vec_c >= 0 for each extreme point e.
  void emit_support_rows(const std::string& base, const std::vector<Affine>& vec,
                         const Affine& bound, const std::vector<Point>& points) {
    int counter = 0;
    for (const Point& e : points) {
      ++counter;
      std::map<std::size_t, double> coefs;
      double constant = bound.constant;
      for (const Term& t : bound.terms) coefs[t.var] += t.coef;
      for (std::size_t c = 0; c < vec.size(); ++c) {
        constant -= e[c] * vec[c].constant;
        for (const Term& t : vec[c].terms) coefs[t.var] -= e[c] * t.coef;
      }
      std::vector<Term> terms;
      for (const auto& [v, coef] : coefs) {
        if (coef != 0.0) terms.push_back(Term{v, coef});
      }
      row(base + "_e" + std::to_string(counter), std::move(terms), RowSense::ge,
          -constant);
    }
  }

  /// Rational exponent tau = r/s > 1: per coordinate, an absolute-value
  /// variable m_c and a share q_c with m_c^tau <= q_c * bound^(tau-1), the
  /// power inequality encoded as a balanced tree of rotated quadratic cones
  /// over 2^ceil(log2 r) factors; finally sum_c q_c <= bound.
  void emit_tower(const std::string& base, const std::vector<Affine>& vec,
                  const Affine& bound, const NormSpec& norm) {
    const auto r = norm.numerator();
    const auto s = norm.denominator();
    std::size_t leaves = 1;
    while (leaves < static_cast<std::size_t>(r)) leaves *= 2;

    std::vector<Term> share_sum;
    for (std::size_t c = 0; c < vec.size(); ++c) {
      const std::string tag = base + "_c" + std::to_string(c + 1);
      const std::size_t m = var(tag + "_abs", false, 0.0, kInf);
      // m >= vec_c and m >= -vec_c.
      for (int sign : {1, -1}) {
        std::map<std::size_t, double> coefs;
        coefs[m] += 1.0;
        for (const Term& t : vec[c].terms) coefs[t.var] -= sign * t.coef;
        std::vector<Term> terms;
        for (const auto& [v, coef] : coefs)
          if (coef != 0.0) terms.push_back(Term{v, coef});
        row(tag + (sign > 0 ? "_abs_pos" : "_abs_neg"), std::move(terms),
            RowSense::ge, sign * vec[c].constant);
      }
      const std::size_t q = var(tag + "_share", false, 0.0, kInf);
      share_sum.push_back(Term{q, 1.0});

      std::vector<Affine> level;
      for (std::int64_t k = 0; k < s; ++k) level.push_back(Affine{{Term{q, 1.0}}, 0.0});
      for (std::int64_t k = 0; k < r - s; ++k) level.push_back(bound);
      for (std::size_t k = leaves; k > static_cast<std::size_t>(r); --k)
        level.push_back(Affine{{Term{m, 1.0}}, 0.0});

      int node = 0;
      while (level.size() > 1) {
        std::vector<Affine> next;
        for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
          ++node;
          const std::size_t g =
              var(tag + "_gm" + std::to_string(node), false, 0.0, kInf);
          // g^2 <= x*y as norm2[2g, x - y] <= x + y.
          Affine two_g{{Term{g, 2.0}}, 0.0};
          Affine x_minus_y = level[k];
          Affine x_plus_y = level[k];
          for (const Term& t : level[k + 1].terms) {
            x_minus_y.terms.push_back(Term{t.var, -t.coef});
            x_plus_y.terms.push_back(t);
          }
          x_minus_y.constant -= level[k + 1].constant;
          x_plus_y.constant += level[k + 1].constant;
          model.cones.push_back(ConeRow{tag + "_cone" + std::to_string(node),
                                        {two_g, x_minus_y}, x_plus_y});
          next.push_back(Affine{{Term{g, 1.0}}, 0.0});
        }
        level = std::move(next);
      }
      // m <= root of the tree.
      std::vector<Term> terms = level[0].terms;
      terms.push_back(Term{m, -1.0});
      row(tag + "_root", std::move(terms), RowSense::ge, -level[0].constant);
    }
    // sum of shares <= bound.
    std::map<std::size_t, double> coefs;
    for (const Term& t : share_sum) coefs[t.var] += t.coef;
    for (const Term& t : bound.terms) coefs[t.var] -= t.coef;
    std::vector<Term> terms;
    for (const auto& [v, coef] : coefs)
      if (coef != 0.0) terms.push_back(Term{v, coef});
    row(base + "_shares", std::move(terms), RowSense::le, bound.constant);
  }
};

}  // namespace

double tail_weight(const LambdaVector& lambda, std::size_t k) {
  if (k >= lambda.size()) {
    throw ValidationError("tail_weight: position " + std::to_string(k) +
                          " out of range");
  }
  double total = 0.0;
  for (std::size_t l = k; l < lambda.size(); ++l) total += lambda[l];
  return total;
}

namespace {

struct CommonBlocks {
  std::vector<std::size_t> x;        // n*n, row-major
  std::vector<std::size_t> loc;      // n*d
  std::vector<std::size_t> dvar;     // n*n, row-major; diagonal unused
};

/// Assignment binaries with cardinality and coupling rows, facility
/// coordinates bounded by their balls, pairwise distance variables, and the
/// distance/ball geometry rows.  `polyhedral_only` switches the geometry to
/// support-function rows (block MILP mode).
CommonBlocks build_common(Builder& b, const ExportOptions& options,
                          bool polyhedral_only) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const int d = inst.dim;
  CommonBlocks blocks;
  blocks.x.resize(static_cast<std::size_t>(n) * n);
  blocks.loc.resize(static_cast<std::size_t>(n) * d);
  blocks.dvar.assign(static_cast<std::size_t>(n) * n, 0);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      blocks.x[static_cast<std::size_t>(i) * n + j] =
          b.var("x_" + b.idx(i) + "_" + b.idx(j), true, 0.0, 1.0);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < d; ++c) {
      const double center = inst.sites[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      const double r = inst.radii[static_cast<std::size_t>(j)];
      blocks.loc[static_cast<std::size_t>(j) * d + c] =
          b.var("loc_" + b.idx(j) + "_" + std::to_string(c + 1), false,
                center - r, center + r);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      blocks.dvar[static_cast<std::size_t>(i) * n + j] =
          b.var("d_" + b.idx(i) + "_" + b.idx(j), false, 0.0, kInf);
    }
  }

  // Every customer is assigned somewhere; p facilities open; assignment only
  // to open sites.
  for (int i = 0; i < n; ++i) {
    std::vector<Term> terms;
    for (int j = 0; j < n; ++j)
      terms.push_back(Term{blocks.x[static_cast<std::size_t>(i) * n + j], 1.0});
    b.row("assign_" + b.idx(i), std::move(terms), RowSense::eq, 1.0);
  }
  {
    std::vector<Term> terms;
    for (int j = 0; j < n; ++j)
      terms.push_back(Term{blocks.x[static_cast<std::size_t>(j) * n + j], 1.0});
    b.row("card", std::move(terms), RowSense::eq, static_cast<double>(inst.p));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      b.row("link_" + b.idx(i) + "_" + b.idx(j),
            {Term{blocks.x[static_cast<std::size_t>(i) * n + j], 1.0},
             Term{blocks.x[static_cast<std::size_t>(j) * n + j], -1.0}},
            RowSense::le, 0.0);
    }
  }

  // Geometry.  Ball rows: ||loc_j - a_j||_tau <= r_j.
  for (int j = 0; j < n; ++j) {
    std::vector<Affine> vec;
    for (int c = 0; c < d; ++c) {
      vec.push_back(Affine{
          {Term{blocks.loc[static_cast<std::size_t>(j) * d + c], 1.0}},
          -inst.sites[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)]});
    }
    const Affine bound{{}, inst.radii[static_cast<std::size_t>(j)]};
    if (polyhedral_only) {
      std::vector<Point> points = options.placement_dual_points;
      if (points.empty()) points = dual_ball_points(inst.ball_norm, d);
      if (points.empty()) {
        throw ValidationError("MILP_block requires polyhedral norms (1, inf, "
                              "or explicit dual points); ball norm is " +
                              inst.ball_norm.to_string());
      }
      b.emit_support_rows("ball_" + b.idx(j), vec, bound, points);
    } else {
      b.norm_bound("ball_" + b.idx(j), vec, bound, inst.ball_norm);
    }
  }
  // Distance rows: d_ij >= ||a_i - loc_j||_nu, i != j.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<Affine> vec;
      for (int c = 0; c < d; ++c) {
        vec.push_back(Affine{
            {Term{blocks.loc[static_cast<std::size_t>(j) * d + c], -1.0}},
            inst.sites[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]});
      }
      const Affine bound{
          {Term{blocks.dvar[static_cast<std::size_t>(i) * n + j], 1.0}}, 0.0};
      const std::string base = "dist_" + b.idx(i) + "_" + b.idx(j);
      if (polyhedral_only) {
        std::vector<Point> points = options.distance_dual_points;
        if (points.empty()) points = dual_ball_points(inst.distance_norm, d);
        if (points.empty()) {
          throw ValidationError("MILP_block requires polyhedral norms (1, inf, "
                                "or explicit dual points); distance norm is " +
                                inst.distance_norm.to_string());
        }
        b.emit_support_rows(base, vec, bound, points);
      } else {
        b.norm_bound(base, vec, bound, inst.distance_norm);
      }
    }
  }
  return blocks;
}

/// Rank-assignment machinery shared by the 3I and block-MILP encodings:
/// binaries w_i_j_k (customer i uses site j at sorted rank k) with their
/// rank/assignment/coupling rows, slack variables theta_i_j_k with big-M
/// value rows, and the rank-ordering rows.
struct RankBlocks {
  std::vector<std::size_t> w;      // n*n*n
  std::vector<std::size_t> theta;  // n*n*n
};

RankBlocks build_rank_machinery(Builder& b, const CommonBlocks& common,
                                bool add_valid_equalities) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  RankBlocks blocks;
  const std::size_t nn = static_cast<std::size_t>(n);
  blocks.w.resize(nn * nn * nn);
  blocks.theta.resize(nn * nn * nn);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const std::string suffix =
            "_" + b.idx(i) + "_" + b.idx(j) + "_" + b.idx(k);
        const std::size_t at = (static_cast<std::size_t>(i) * nn + j) * nn + k;
        blocks.w[at] = b.var("w" + suffix, true, 0.0, 1.0);
        blocks.theta[at] = b.var("theta" + suffix, false, 0.0, kInf);
      }
    }
  }

  // Each customer occupies exactly one (site, rank); each rank is used once.
  for (int i = 0; i < n; ++i) {
    std::vector<Term> terms;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        terms.push_back(Term{blocks.w[(static_cast<std::size_t>(i) * nn + j) * nn + k], 1.0});
    b.row("wassign_" + b.idx(i), std::move(terms), RowSense::eq, 1.0);
  }
  for (int k = 0; k < n; ++k) {
    std::vector<Term> terms;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        terms.push_back(Term{blocks.w[(static_cast<std::size_t>(i) * nn + j) * nn + k], 1.0});
    b.row("wrank_" + b.idx(k), std::move(terms), RowSense::eq, 1.0);
  }
  // Using site j requires it open.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<Term> terms;
      for (int k = 0; k < n; ++k)
        terms.push_back(Term{blocks.w[(static_cast<std::size_t>(i) * nn + j) * nn + k], 1.0});
      terms.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], -1.0});
      b.row("wopen_" + b.idx(i) + "_" + b.idx(j), std::move(terms), RowSense::le,
            0.0);
    }
  }
  // Value rows: theta_ijk >= d_ij - Dhat_ij (1 - w_ijk); the self pair has
  // zero cost and zero big-M, leaving theta_iik >= 0.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double big_m = b.bounds.hi(static_cast<std::size_t>(i),
                                       static_cast<std::size_t>(j));
      for (int k = 0; k < n; ++k) {
        const std::size_t at = (static_cast<std::size_t>(i) * nn + j) * nn + k;
        std::vector<Term> terms{Term{blocks.theta[at], 1.0}};
        if (i != j)
          terms.push_back(Term{common.dvar[static_cast<std::size_t>(i) * nn + j], -1.0});
        if (big_m != 0.0) terms.push_back(Term{blocks.w[at], -big_m});
        b.row("value_" + b.idx(i) + "_" + b.idx(j) + "_" + b.idx(k),
              std::move(terms), RowSense::ge, -big_m);
      }
    }
  }
  // Rank ordering: total slack at rank k-1 dominates rank k.
  for (int k = 1; k < n; ++k) {
    std::vector<Term> terms;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        terms.push_back(Term{blocks.theta[(static_cast<std::size_t>(i) * nn + j) * nn + k - 1], 1.0});
        terms.push_back(Term{blocks.theta[(static_cast<std::size_t>(i) * nn + j) * nn + k], -1.0});
      }
    }
    b.row("order_" + b.idx(k), std::move(terms), RowSense::ge, 0.0);
  }
  if (add_valid_equalities) {
    for (int j = 0; j < n; ++j) {
      std::vector<Term> terms;
      for (int k = 0; k < n; ++k)
        terms.push_back(Term{blocks.w[(static_cast<std::size_t>(j) * nn + j) * nn + k], 1.0});
      terms.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], -1.0});
      b.row("valid_" + b.idx(j), std::move(terms), RowSense::eq, 0.0);
    }
  }
  return blocks;
}

void rank_objective(Builder& b, const CommonBlocks& common,
                    const RankBlocks& rank) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const std::size_t nn = static_cast<std::size_t>(n);
  for (int k = 0; k < n; ++k) {
    const double w = inst.lambda[static_cast<std::size_t>(k)];
    if (w == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        b.model.objective.push_back(
            Term{rank.theta[(static_cast<std::size_t>(i) * nn + j) * nn + k], w});
  }
  for (int j = 0; j < n; ++j) {
    const double f = inst.setup_costs[static_cast<std::size_t>(j)];
    if (f != 0.0)
      b.model.objective.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], f});
  }
}

void build_sorted_assignment(Builder& b, const CommonBlocks& common) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const std::size_t nn = static_cast<std::size_t>(n);

  std::vector<std::size_t> s(nn * nn), xi(nn), theta(nn * nn);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      s[static_cast<std::size_t>(i) * nn + k] =
          b.var("s_" + b.idx(i) + "_" + b.idx(k), true, 0.0, 1.0);
  for (int k = 0; k < n; ++k)
    xi[static_cast<std::size_t>(k)] = b.var("xi_" + b.idx(k), false, -kInf, kInf);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      theta[static_cast<std::size_t>(i) * nn + j] =
          b.var("theta_" + b.idx(i) + "_" + b.idx(j), false, 0.0, kInf);

  for (int i = 0; i < n; ++i) {
    std::vector<Term> terms;
    for (int k = 0; k < n; ++k)
      terms.push_back(Term{s[static_cast<std::size_t>(i) * nn + k], 1.0});
    b.row("sassign_" + b.idx(i), std::move(terms), RowSense::eq, 1.0);
  }
  for (int k = 0; k < n; ++k) {
    std::vector<Term> terms;
    for (int i = 0; i < n; ++i)
      terms.push_back(Term{s[static_cast<std::size_t>(i) * nn + k], 1.0});
    b.row("srank_" + b.idx(k), std::move(terms), RowSense::eq, 1.0);
  }
  // Sorted values never increase with rank.
  for (int k = 1; k < n; ++k) {
    b.row("xiorder_" + b.idx(k),
          {Term{xi[static_cast<std::size_t>(k - 1)], 1.0},
           Term{xi[static_cast<std::size_t>(k)], -1.0}},
          RowSense::ge, 0.0);
  }
  // Total sorted value equals total slack.
  {
    std::vector<Term> terms;
    for (int k = 0; k < n; ++k)
      terms.push_back(Term{xi[static_cast<std::size_t>(k)], 1.0});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        terms.push_back(Term{theta[static_cast<std::size_t>(i) * nn + j], -1.0});
    b.row("xibalance", std::move(terms), RowSense::eq, 0.0);
  }
  // xi_k >= theta_ij - Dhat_ij (1 - s_ik).
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double big_m = b.bounds.hi(static_cast<std::size_t>(i),
                                       static_cast<std::size_t>(j));
      for (int k = 0; k < n; ++k) {
        std::vector<Term> terms{Term{xi[static_cast<std::size_t>(k)], 1.0},
                                Term{theta[static_cast<std::size_t>(i) * nn + j], -1.0}};
        if (big_m != 0.0)
          terms.push_back(Term{s[static_cast<std::size_t>(i) * nn + k], -big_m});
        b.row("sort_" + b.idx(i) + "_" + b.idx(j) + "_" + b.idx(k),
              std::move(terms), RowSense::ge, -big_m);
      }
    }
  }
  // theta_ij >= d_ij - Dhat_ij (1 - x_ij).
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double big_m = b.bounds.hi(static_cast<std::size_t>(i),
                                       static_cast<std::size_t>(j));
      std::vector<Term> terms{Term{theta[static_cast<std::size_t>(i) * nn + j], 1.0}};
      if (i != j)
        terms.push_back(Term{common.dvar[static_cast<std::size_t>(i) * nn + j], -1.0});
      if (big_m != 0.0)
        terms.push_back(Term{common.x[static_cast<std::size_t>(i) * nn + j], -big_m});
      b.row("value_" + b.idx(i) + "_" + b.idx(j), std::move(terms), RowSense::ge,
            -big_m);
    }
  }
  for (int k = 0; k < n; ++k) {
    const double w = inst.lambda[static_cast<std::size_t>(k)];
    if (w != 0.0)
      b.model.objective.push_back(Term{xi[static_cast<std::size_t>(k)], w});
  }
  for (int j = 0; j < n; ++j) {
    const double f = inst.setup_costs[static_cast<std::size_t>(j)];
    if (f != 0.0)
      b.model.objective.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], f});
  }
}

/// Realized per-customer cost variables with their big-M rows, shared by the
/// telescoped and dual encodings.
std::vector<std::size_t> build_cost_variables(Builder& b,
                                              const CommonBlocks& common) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<std::size_t> dist(nn);
  for (int i = 0; i < n; ++i)
    dist[static_cast<std::size_t>(i)] = b.var("cost_" + b.idx(i), false, 0.0, kInf);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double big_m = b.bounds.hi(static_cast<std::size_t>(i),
                                       static_cast<std::size_t>(j));
      std::vector<Term> terms{Term{dist[static_cast<std::size_t>(i)], 1.0}};
      if (i != j)
        terms.push_back(Term{common.dvar[static_cast<std::size_t>(i) * nn + j], -1.0});
      if (big_m != 0.0)
        terms.push_back(Term{common.x[static_cast<std::size_t>(i) * nn + j], -big_m});
      b.row("dvalue_" + b.idx(i) + "_" + b.idx(j), std::move(terms), RowSense::ge,
            -big_m);
    }
  }
  return dist;
}

void build_ksum_telescope(Builder& b, const CommonBlocks& common) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::vector<std::size_t> dist = build_cost_variables(b, common);
  const std::vector<double> delta = telescoping_weights(inst.lambda);

  std::vector<std::size_t> t(nn), z(nn * nn);
  for (int k = 0; k < n; ++k)
    t[static_cast<std::size_t>(k)] = b.var("t_" + b.idx(k), false, -kInf, kInf);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      z[static_cast<std::size_t>(i) * nn + k] =
          b.var("z_" + b.idx(i) + "_" + b.idx(k), false, 0.0, kInf);

  // z_ik >= cost_i - t_k: the excess over the k-th threshold.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      b.row("shift_" + b.idx(i) + "_" + b.idx(k),
            {Term{z[static_cast<std::size_t>(i) * nn + k], 1.0},
             Term{dist[static_cast<std::size_t>(i)], -1.0},
             Term{t[static_cast<std::size_t>(k)], 1.0}},
            RowSense::ge, 0.0);
    }
  }
  // Telescoped objective: sum_k delta_k ((k+1) t_k + sum_i z_ik) + setup.
  for (int k = 0; k < n; ++k) {
    const double w = delta[static_cast<std::size_t>(k)];
    if (w == 0.0) continue;
    b.model.objective.push_back(
        Term{t[static_cast<std::size_t>(k)], w * static_cast<double>(k + 1)});
    for (int i = 0; i < n; ++i)
      b.model.objective.push_back(Term{z[static_cast<std::size_t>(i) * nn + k], w});
  }
  for (int j = 0; j < n; ++j) {
    const double f = inst.setup_costs[static_cast<std::size_t>(j)];
    if (f != 0.0)
      b.model.objective.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], f});
  }
}

void build_sorted_dual(Builder& b, const CommonBlocks& common) {
  const Instance& inst = b.instance;
  const int n = inst.n();
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::vector<std::size_t> dist = build_cost_variables(b, common);

  std::vector<std::size_t> u(nn), v(nn);
  for (int i = 0; i < n; ++i)
    u[static_cast<std::size_t>(i)] = b.var("u_" + b.idx(i), false, -kInf, kInf);
  for (int k = 0; k < n; ++k)
    v[static_cast<std::size_t>(k)] = b.var("v_" + b.idx(k), false, -kInf, kInf);

  // Dual feasibility of the sorting assignment: u_i + v_k >= lambda_k cost_i.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      std::vector<Term> terms{Term{u[static_cast<std::size_t>(i)], 1.0},
                              Term{v[static_cast<std::size_t>(k)], 1.0}};
      const double w = inst.lambda[static_cast<std::size_t>(k)];
      if (w != 0.0) terms.push_back(Term{dist[static_cast<std::size_t>(i)], -w});
      b.row("ord_" + b.idx(i) + "_" + b.idx(k), std::move(terms), RowSense::ge,
            0.0);
    }
  }
  for (int i = 0; i < n; ++i)
    b.model.objective.push_back(Term{u[static_cast<std::size_t>(i)], 1.0});
  for (int k = 0; k < n; ++k)
    b.model.objective.push_back(Term{v[static_cast<std::size_t>(k)], 1.0});
  for (int j = 0; j < n; ++j) {
    const double f = inst.setup_costs[static_cast<std::size_t>(j)];
    if (f != 0.0)
      b.model.objective.push_back(Term{common.x[static_cast<std::size_t>(j) * nn + j], f});
  }
}

}  // namespace

Model build_model(const Instance& instance, Formulation formulation,
                  const ExportOptions& options) {
  instance.validate();
  const BoundsMatrix bounds = compute_bounds(instance);
  Builder b(instance, bounds);

  const bool polyhedral = formulation == Formulation::block_milp;
  const CommonBlocks common = build_common(b, options, polyhedral);

  switch (formulation) {
    case Formulation::rank_assignment:
    case Formulation::block_milp: {
      const RankBlocks rank =
          build_rank_machinery(b, common, options.strengthen);
      rank_objective(b, common, rank);
      break;
    }
    case Formulation::sorted_assignment:
      build_sorted_assignment(b, common);
      break;
    case Formulation::ksum_telescope:
      build_ksum_telescope(b, common);
      break;
    case Formulation::sorted_dual:
      build_sorted_dual(b, common);
      break;
  }

  b.model.set_meta("formulation", formulation_id(formulation));
  b.model.set_meta("n", std::to_string(instance.n()));
  b.model.set_meta("p", std::to_string(instance.p));
  b.model.set_meta("instance", content_hash(instance));
  b.model.set_meta("strengthened", options.strengthen ? "1" : "0");

  canonicalize(b.model);
  check_unique_names(b.model);
  return b.model;
}

Model strengthen_model(Model model, const Instance& instance,
                       const BoundsMatrix& bounds, double ub,
                       bool use_tail_rule) {
  if (!std::isfinite(ub)) return model;

  const int n = instance.n();
  const int width = static_cast<int>(std::to_string(n).size());
  std::map<std::string, std::size_t> by_name;
  for (std::size_t v = 0; v < model.variables.size(); ++v)
    by_name[model.variables[v].name] = v;

  const auto find_var = [&](const std::string& name) -> std::size_t {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ValidationError("strengthen: variable '" + name +
                            "' missing from model");
    }
    return it->second;
  };
  // Only rank-assignment machinery can be strengthened.
  if (by_name.find("w_" + pad_index(1, width) + "_" + pad_index(1, width) +
                   "_" + pad_index(1, width)) == by_name.end()) {
    return model;
  }

  // Valid equalities: a site serves itself at some rank exactly when open.
  bool have_valid = false;
  for (const LinearRow& row : model.linear) {
    if (row.name == "valid_" + pad_index(1, width)) {
      have_valid = true;
      break;
    }
  }
  if (!have_valid) {
    for (int j = 0; j < n; ++j) {
      std::vector<Term> terms;
      for (int k = 0; k < n; ++k) {
        terms.push_back(Term{find_var("w_" + pad_index(j + 1, width) + "_" +
                                      pad_index(j + 1, width) + "_" +
                                      pad_index(k + 1, width)),
                             1.0});
      }
      terms.push_back(Term{find_var("x_" + pad_index(j + 1, width) + "_" +
                                    pad_index(j + 1, width)),
                           -1.0});
      sort_terms(terms);
      model.linear.push_back(LinearRow{"valid_" + pad_index(j + 1, width),
                                       std::move(terms), RowSense::eq, 0.0});
    }
  }

  // Rank cutoffs.
  std::vector<int> cutoff(static_cast<std::size_t>(n), n);
  std::vector<int> contradictions;
  if (use_tail_rule) {
    // Trailing-weight variant: ranks whose tail weight turns the worst-case
    // cost floor into a bound violation.  Kept optional; see header.
    for (int i = 0; i < n; ++i) {
      double worst_floor = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j != i)
          worst_floor = std::min(worst_floor, bounds.hi(static_cast<std::size_t>(i),
                                                        static_cast<std::size_t>(j)));
      }
      for (int k = 0; k < n; ++k) {
        if (worst_floor * tail_weight(instance.lambda, static_cast<std::size_t>(k)) > ub) {
          cutoff[static_cast<std::size_t>(i)] = k;
          break;
        }
      }
      if (cutoff[static_cast<std::size_t>(i)] == 0) contradictions.push_back(i);
    }
  } else {
    const PositionTable table = position_elimination(instance, bounds, ub);
    for (int i = 0; i < n; ++i) {
      cutoff[static_cast<std::size_t>(i)] = table.max_position[static_cast<std::size_t>(i)];
      if (table.contradiction[static_cast<std::size_t>(i)]) contradictions.push_back(i);
    }
  }

  std::int64_t fixed = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = cutoff[static_cast<std::size_t>(i)]; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;  // self-service is never rank-restricted
        Variable& w = model.variables[find_var(
            "w_" + pad_index(i + 1, width) + "_" + pad_index(j + 1, width) +
            "_" + pad_index(k + 1, width))];
        if (w.ub != 0.0) {
          w.ub = 0.0;
          ++fixed;
        }
      }
    }
  }

  model.set_meta("strengthened", "1");
  model.set_meta("ub", format_real(ub));
  model.set_meta("fixed_w", std::to_string(fixed));
  if (!contradictions.empty()) {
    std::string list;
    for (int i : contradictions) {
      if (!list.empty()) list += " ";
      list += std::to_string(i + 1);
    }
    model.set_meta("position_contradictions", list);
  }
  canonicalize(model);
  return model;
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

namespace {

std::string sense_text(RowSense sense) {
  switch (sense) {
    case RowSense::le: return "le";
    case RowSense::ge: return "ge";
    case RowSense::eq: return "eq";
  }
  throw ValidationError("model: unknown row sense");
}

RowSense parse_sense(const std::string& text) {
  if (text == "le") return RowSense::le;
  if (text == "ge") return RowSense::ge;
  if (text == "eq") return RowSense::eq;
  throw ValidationError("model: unknown row sense '" + text + "'");
}

std::string affine_text(const Affine& a, const Model& model) {
  std::string out;
  for (const Term& t : a.terms) {
    if (!out.empty()) out += " + ";
    out += format_real(t.coef) + "*" + model.variables[t.var].name;
  }
  if (a.constant != 0.0 || a.terms.empty()) {
    if (!out.empty()) out += " + ";
    out += format_real(a.constant);
  }
  return out;
}

void validate_for_output(const Model& model) {
  if (model.objective.empty()) {
    throw ValidationError("model: objective has no terms");
  }
  const std::size_t nvars = model.variables.size();
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const Term& t : terms) {
      if (t.var >= nvars) {
        throw ValidationError("model: " + where + " references variable #" +
                              std::to_string(t.var) + " beyond the " +
                              std::to_string(nvars) + " declared");
      }
    }
  };
  for (const LinearRow& row : model.linear) check_terms(row.terms, row.name);
  for (const ConeRow& row : model.cones) {
    for (const Affine& a : row.vec) check_terms(a.terms, row.name);
    check_terms(row.bound.terms, row.name);
  }
  check_terms(model.objective, "objective");
}

std::string to_conic_text(const Model& model) {
  std::ostringstream out;
  out << "VARIABLES " << model.variables.size() << "\n";
  for (const Variable& v : model.variables) {
    out << v.name << " " << (v.integral ? "bin" : "con") << " "
        << format_real(v.lb) << " " << format_real(v.ub) << "\n";
  }
  out << "LINEAR " << model.linear.size() << "\n";
  for (const LinearRow& row : model.linear) {
    out << row.name << " " << sense_text(row.sense) << " "
        << format_real(row.rhs) << " " << row.terms.size();
    for (const Term& t : row.terms)
      out << " " << format_real(t.coef) << " " << model.variables[t.var].name;
    out << "\n";
  }
  out << "SOC " << model.cones.size() << "\n";
  for (const ConeRow& row : model.cones) {
    out << row.name << " norm2 [ ";
    for (std::size_t k = 0; k < row.vec.size(); ++k) {
      if (k > 0) out << " , ";
      out << affine_text(row.vec[k], model);
    }
    out << " ] <= " << affine_text(row.bound, model) << "\n";
  }
  out << "OBJECTIVE " << model.objective.size() << " "
      << format_real(model.objective_constant) << "\n";
  if (!model.objective.empty()) {
    for (std::size_t k = 0; k < model.objective.size(); ++k) {
      if (k > 0) out << " ";
      out << format_real(model.objective[k].coef) << " "
          << model.variables[model.objective[k].var].name;
    }
    out << "\n";
  }
  out << "META " << model.meta.size() << "\n";
  for (const auto& [key, value] : model.meta) out << key << " " << value << "\n";
  return out.str();
}

std::string lp_term_text(double coef, const std::string& name, bool first) {
  std::string out;
  if (coef < 0.0) {
    out += first ? "-" : "- ";
    out += format_real(-coef);
  } else {
    if (!first) out += "+ ";
    out += format_real(coef);
  }
  out += " " + name;
  return out;
}

std::string to_lp_text(const Model& model) {
  if (!model.cones.empty()) {
    throw ValidationError("model: lp output supports only cone-free models "
                          "(use the conic format)");
  }
  std::ostringstream out;
  for (const auto& [key, value] : model.meta)
    out << "\\META " << key << " " << value << "\n";
  out << "Minimize\n obj:";
  for (std::size_t k = 0; k < model.objective.size(); ++k) {
    out << " " << lp_term_text(model.objective[k].coef,
                               model.variables[model.objective[k].var].name,
                               k == 0);
  }
  if (model.objective_constant != 0.0) {
    out << " " << (model.objective_constant < 0.0 ? "- " : "+ ")
        << format_real(std::abs(model.objective_constant));
  }
  out << "\nSubject To\n";
  for (const LinearRow& row : model.linear) {
    out << " " << row.name << ":";
    for (std::size_t k = 0; k < row.terms.size(); ++k) {
      out << " " << lp_term_text(row.terms[k].coef,
                                 model.variables[row.terms[k].var].name, k == 0);
    }
    switch (row.sense) {
      case RowSense::le: out << " <= "; break;
      case RowSense::ge: out << " >= "; break;
      case RowSense::eq: out << " = "; break;
    }
    out << format_real(row.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const Variable& v : model.variables) {
    if (v.integral) continue;  // binaries live in their own section
    const bool lb_inf = std::isinf(v.lb) && v.lb < 0.0;
    const bool ub_inf = std::isinf(v.ub) && v.ub > 0.0;
    if (lb_inf && ub_inf) {
      out << " " << v.name << " free\n";
    } else if (lb_inf) {
      out << " " << v.name << " <= " << format_real(v.ub) << "\n";
    } else if (ub_inf) {
      out << " " << v.name << " >= " << format_real(v.lb) << "\n";
    } else {
      out << " " << format_real(v.lb) << " <= " << v.name << " <= "
          << format_real(v.ub) << "\n";
    }
  }
  out << "Binaries\n";
  int on_line = 0;
  for (const Variable& v : model.variables) {
    if (!v.integral) continue;
    if (on_line == 0) out << " ";
    out << v.name;
    if (++on_line == 8) {
      out << "\n";
      on_line = 0;
    } else {
      out << " ";
    }
  }
  if (on_line != 0) out << "\n";
  out << "End\n";
  return out.str();
}

/// Whitespace tokenizer with line tracking for error messages.
struct Reader {
  std::vector<std::string> lines;
  std::size_t at = 0;

  explicit Reader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  bool done() const { return at >= lines.size(); }
  const std::string& peek() const {
    if (done()) throw ValidationError("model: unexpected end of file");
    return lines[at];
  }
  std::string next() {
    std::string line = peek();
    ++at;
    return line;
  }
};

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

std::size_t lookup_var(const std::map<std::string, std::size_t>& by_name,
                       const std::string& name) {
  const auto it = by_name.find(name);
  if (it == by_name.end()) {
    throw ValidationError("model: row references undeclared variable '" +
                          name + "'");
  }
  return it->second;
}

Affine parse_affine(const std::string& text,
                    const std::map<std::string, std::size_t>& by_name) {
  Affine out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t stop = text.find(" + ", pos);
    const std::string token =
        text.substr(pos, stop == std::string::npos ? stop : stop - pos);
    pos = stop == std::string::npos ? text.size() : stop + 3;
    const std::size_t star = token.find('*');
    if (star == std::string::npos) {
      out.constant += parse_real(token);
    } else {
      out.terms.push_back(Term{lookup_var(by_name, token.substr(star + 1)),
                               parse_real(token.substr(0, star))});
    }
  }
  return out;
}

Model from_conic_text(const std::string& text) {
  Reader reader(text);
  Model model;
  std::map<std::string, std::size_t> by_name;

  auto expect_section = [&](const char* name) -> std::size_t {
    const std::vector<std::string> tokens = split_tokens(reader.next());
    if (tokens.size() != 2 || tokens[0] != name) {
      throw ValidationError(std::string("model: expected section header '") +
                            name + " <count>'");
    }
    return static_cast<std::size_t>(std::stoull(tokens[1]));
  };

  const std::size_t nvars = expect_section("VARIABLES");
  for (std::size_t k = 0; k < nvars; ++k) {
    const std::vector<std::string> tokens = split_tokens(reader.next());
    if (tokens.size() != 4) {
      throw ValidationError("model: malformed variable line");
    }
    if (tokens[1] != "bin" && tokens[1] != "con") {
      throw ValidationError("model: variable kind must be bin or con, got '" +
                            tokens[1] + "'");
    }
    by_name[tokens[0]] = model.variables.size();
    model.add_variable(tokens[0], tokens[1] == "bin", parse_real(tokens[2]),
                       parse_real(tokens[3]));
  }
  if (by_name.size() != model.variables.size()) {
    throw ValidationError("model: duplicate variable name in file");
  }

  const std::size_t nlinear = expect_section("LINEAR");
  for (std::size_t k = 0; k < nlinear; ++k) {
    const std::vector<std::string> tokens = split_tokens(reader.next());
    if (tokens.size() < 4) throw ValidationError("model: malformed linear row");
    LinearRow row;
    row.name = tokens[0];
    row.sense = parse_sense(tokens[1]);
    row.rhs = parse_real(tokens[2]);
    const std::size_t nterms = static_cast<std::size_t>(std::stoull(tokens[3]));
    if (tokens.size() != 4 + 2 * nterms) {
      throw ValidationError("model: linear row '" + row.name +
                            "' has a wrong term count");
    }
    for (std::size_t t = 0; t < nterms; ++t) {
      row.terms.push_back(Term{lookup_var(by_name, tokens[5 + 2 * t]),
                               parse_real(tokens[4 + 2 * t])});
    }
    model.linear.push_back(std::move(row));
  }

  const std::size_t ncones = expect_section("SOC");
  for (std::size_t k = 0; k < ncones; ++k) {
    const std::string line = reader.next();
    ConeRow row;
    const std::size_t name_end = line.find(' ');
    row.name = line.substr(0, name_end);
    const std::size_t open = line.find("norm2 [ ");
    const std::size_t close = line.rfind(" ] <= ");
    if (open == std::string::npos || close == std::string::npos) {
      throw ValidationError("model: malformed cone row '" + row.name + "'");
    }
    const std::string inner = line.substr(open + 8, close - open - 8);
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = inner.find(" , ", pos);
      const std::string piece =
          inner.substr(pos, comma == std::string::npos ? comma : comma - pos);
      row.vec.push_back(parse_affine(piece, by_name));
      if (comma == std::string::npos) break;
      pos = comma + 3;
    }
    row.bound = parse_affine(line.substr(close + 6), by_name);
    model.cones.push_back(std::move(row));
  }

  {
    const std::vector<std::string> tokens = split_tokens(reader.next());
    if (tokens.size() != 3 || tokens[0] != "OBJECTIVE") {
      throw ValidationError("model: expected 'OBJECTIVE <count> <constant>'");
    }
    const std::size_t nterms = static_cast<std::size_t>(std::stoull(tokens[1]));
    model.objective_constant = parse_real(tokens[2]);
    if (nterms > 0) {
      const std::vector<std::string> parts = split_tokens(reader.next());
      if (parts.size() != 2 * nterms) {
        throw ValidationError("model: objective has a wrong term count");
      }
      for (std::size_t t = 0; t < nterms; ++t) {
        model.objective.push_back(Term{lookup_var(by_name, parts[2 * t + 1]),
                                       parse_real(parts[2 * t])});
      }
    }
  }

  const std::size_t nmeta = expect_section("META");
  for (std::size_t k = 0; k < nmeta; ++k) {
    const std::string line = reader.next();
    const std::size_t space = line.find(' ');
    if (space == std::string::npos) {
      throw ValidationError("model: malformed meta line '" + line + "'");
    }
    model.meta.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  validate_for_output(model);
  return model;
}

/// Parses a run of "[+-] coef name" LP tokens starting at `pos`; stops at a
/// sense token or end.  Returns the terms and an optional bare constant.
std::size_t parse_lp_terms(const std::vector<std::string>& tokens,
                           std::size_t pos,
                           const std::map<std::string, std::size_t>& by_name,
                           std::vector<Term>& terms, double& constant) {
  double sign = 1.0;
  while (pos < tokens.size()) {
    const std::string& tok = tokens[pos];
    if (tok == "<=" || tok == ">=" || tok == "=") break;
    if (tok == "+") {
      sign = 1.0;
      ++pos;
      continue;
    }
    if (tok == "-") {
      sign = -1.0;
      ++pos;
      continue;
    }
    // A signed number, optionally followed by a variable name.
    double value = 0.0;
    std::string body = tok;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      if (body[0] == '-') sign = -sign;
      body = body.substr(1);
    }
    value = parse_real(body);
    if (pos + 1 < tokens.size() && by_name.count(tokens[pos + 1]) > 0) {
      terms.push_back(Term{by_name.at(tokens[pos + 1]), sign * value});
      pos += 2;
    } else {
      constant += sign * value;
      ++pos;
    }
    sign = 1.0;
  }
  return pos;
}

Model from_lp_text(const std::string& text) {
  Reader reader(text);
  Model model;
  std::map<std::string, std::size_t> by_name;

  // First pass: collect metadata comments and variable names (from Bounds
  // and Binaries) so rows can be resolved on the second pass.
  std::vector<std::string> lines = reader.lines;
  enum class Section { none, objective, rows, bounds, binaries };
  Section section = Section::none;
  std::vector<std::pair<std::string, std::string>> meta;
  struct BoundLine {
    std::string name;
    double lb, ub;
  };
  std::vector<BoundLine> bound_lines;
  std::vector<std::string> binary_names;
  std::vector<std::string> row_lines;
  std::string objective_text;

  for (const std::string& raw : lines) {
    if (raw.rfind("\\META ", 0) == 0) {
      const std::string rest = raw.substr(6);
      const std::size_t space = rest.find(' ');
      if (space == std::string::npos) {
        throw ValidationError("model: malformed meta comment '" + raw + "'");
      }
      meta.emplace_back(rest.substr(0, space), rest.substr(space + 1));
      continue;
    }
    if (!raw.empty() && raw[0] == '\\') continue;
    const std::vector<std::string> tokens = split_tokens(raw);
    if (tokens.empty()) continue;
    if (tokens[0] == "Minimize") { section = Section::objective; continue; }
    if (tokens[0] == "Subject" ) { section = Section::rows; continue; }
    if (tokens[0] == "Bounds") { section = Section::bounds; continue; }
    if (tokens[0] == "Binaries") { section = Section::binaries; continue; }
    if (tokens[0] == "End") break;
    switch (section) {
      case Section::objective:
        objective_text += " " + raw;
        break;
      case Section::rows:
        row_lines.push_back(raw);
        break;
      case Section::bounds: {
        if (tokens.size() == 2 && tokens[1] == "free") {
          bound_lines.push_back(BoundLine{tokens[0], -kInf, kInf});
        } else if (tokens.size() == 3 && tokens[1] == ">=") {
          bound_lines.push_back(BoundLine{tokens[0], parse_real(tokens[2]), kInf});
        } else if (tokens.size() == 3 && tokens[1] == "<=") {
          bound_lines.push_back(BoundLine{tokens[0], -kInf, parse_real(tokens[2])});
        } else if (tokens.size() == 5 && tokens[1] == "<=" && tokens[3] == "<=") {
          bound_lines.push_back(
              BoundLine{tokens[2], parse_real(tokens[0]), parse_real(tokens[4])});
        } else {
          throw ValidationError("model: malformed bounds line '" + raw + "'");
        }
        break;
      }
      case Section::binaries:
        for (const std::string& name : tokens) binary_names.push_back(name);
        break;
      case Section::none:
        throw ValidationError("model: content before Minimize section");
    }
  }

  for (const BoundLine& bl : bound_lines) {
    by_name[bl.name] = model.variables.size();
    model.add_variable(bl.name, false, bl.lb, bl.ub);
  }
  for (const std::string& name : binary_names) {
    if (by_name.count(name) > 0) {
      throw ValidationError("model: variable '" + name +
                            "' listed in both Bounds and Binaries");
    }
    by_name[name] = model.variables.size();
    model.add_variable(name, true, 0.0, 1.0);
  }

  {
    std::vector<std::string> tokens = split_tokens(objective_text);
    if (tokens.empty() || tokens[0] != "obj:") {
      throw ValidationError("model: objective must start with 'obj:'");
    }
    tokens.erase(tokens.begin());
    double constant = 0.0;
    parse_lp_terms(tokens, 0, by_name, model.objective, constant);
    model.objective_constant = constant;
  }

  for (const std::string& raw : row_lines) {
    std::vector<std::string> tokens = split_tokens(raw);
    if (tokens.empty() || tokens[0].back() != ':') {
      throw ValidationError("model: row line missing 'name:' prefix: '" + raw +
                            "'");
    }
    LinearRow row;
    row.name = tokens[0].substr(0, tokens[0].size() - 1);
    tokens.erase(tokens.begin());
    double constant = 0.0;
    const std::size_t pos =
        parse_lp_terms(tokens, 0, by_name, row.terms, constant);
    if (pos + 2 != tokens.size()) {
      throw ValidationError("model: malformed row '" + row.name + "'");
    }
    if (tokens[pos] == "<=") row.sense = RowSense::le;
    else if (tokens[pos] == ">=") row.sense = RowSense::ge;
    else if (tokens[pos] == "=") row.sense = RowSense::eq;
    else throw ValidationError("model: unknown sense '" + tokens[pos] + "'");
    row.rhs = parse_real(tokens[pos + 1]) - constant;
    model.linear.push_back(std::move(row));
  }

  model.meta = std::move(meta);
  // Variables were collected Bounds-first; restore canonical name order.
  canonicalize(model);
  validate_for_output(model);
  return model;
}

}  // namespace

std::string model_to_text(const Model& model, TextFormat format) {
  validate_for_output(model);
  return format == TextFormat::conic ? to_conic_text(model) : to_lp_text(model);
}

Model model_from_text(const std::string& text, TextFormat format) {
  return format == TextFormat::conic ? from_conic_text(text) : from_lp_text(text);
}

void save_model(const Model& model, const std::string& path, TextFormat format) {
  const std::string text = model_to_text(model, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("error while writing '" + path + "'");
}

Model load_model(const std::string& path, TextFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return model_from_text(buf.str(), format);
}

}  // namespace ompn::model
