// ompn: command-line driver for the ordered-median location toolkit.
//
// Subcommands: generate, solve, export, evaluate, bench, info.
// Exit codes: 0 success, 2 usage/validation error, 3 capacity limit, 4 I/O.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ompn/errors.hpp"
#include "ompn/exact.hpp"
#include "ompn/heuristics.hpp"
#include "ompn/instance.hpp"
#include "ompn/model_export.hpp"
#include "ompn/parallel.hpp"
#include "ompn/report.hpp"

namespace {

using namespace ompn;

constexpr const char* kVersion = "1.0.0";

LambdaPreset parse_preset(const std::string& name) {
  if (name == "median") return LambdaPreset::median;
  if (name == "center") return LambdaPreset::center;
  if (name == "kcentrum") return LambdaPreset::kcentrum;
  if (name == "centdian") return LambdaPreset::centdian;
  throw ValidationError("lambda: unknown preset '" + name +
                        "' (expected median, center, kcentrum, or centdian)");
}

LambdaVector make_lambda(const std::string& name, std::size_t n, int k,
                         double alpha) {
  const LambdaPreset preset = parse_preset(name);
  LambdaParams params;
  if (preset == LambdaPreset::kcentrum) {
    if (k <= 0) {
      throw ValidationError("lambda: kcentrum requires --k >= 1");
    }
    params.k = k;
  }
  params.alpha = alpha;
  return LambdaVector::make(preset, n, params);
}

std::uint64_t default_seed() {
  const char* env = std::getenv("OMPN_SEED");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0') {
    throw ValidationError(std::string("OMPN_SEED: not an unsigned integer: '") +
                          env + "'");
  }
  return static_cast<std::uint64_t>(value);
}

std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

double run_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (int v : values) {
    if (!out.empty()) out += " ";
    out += std::to_string(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  int n = 10;
  int dim = 2;
  int scenario = 1;
  int p = 2;
  std::string lambda = "median";
  int k = 0;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string builtin;
  int scale = 1;
  bool zero_setup = false;
  std::string out;
};

int cmd_generate(const GenerateArgs& args) {
  const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
  Instance instance;
  if (args.builtin == "us49") {
    instance = builtin_us49(args.scale, args.p,
                            make_lambda(args.lambda, 49, args.k, args.alpha));
  } else if (args.builtin == "example5") {
    instance = builtin_example5(!args.zero_setup);
  } else if (args.builtin.empty()) {
    instance = make_random_instance(
        args.n, args.dim, args.scenario, args.p,
        make_lambda(args.lambda, static_cast<std::size_t>(args.n), args.k,
                    args.alpha),
        seed);
  } else {
    throw ValidationError("generate: unknown --builtin '" + args.builtin +
                          "' (expected us49 or example5)");
  }
  instance.validate();
  save_instance(instance, args.out);
  std::cout << "wrote " << args.out << " (n=" << instance.n()
            << ", p=" << instance.p << ", hash=" << content_hash(instance)
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string in;
  std::string solver = "exact";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int starts = 20;
  int it_max = 200;
  double theta = 0.5;
  bool randomized = false;
  std::int64_t subset_cap = 10000000;
  std::int64_t enum_cap = 1000000;
  std::int64_t matrix_cap = 1000000;
  bool no_prune = false;
  bool no_incumbent = false;
  bool emit_timing = false;
  std::string out;
};

Solution dispatch_solver(const Instance& instance, const SolveArgs& args,
                         std::uint64_t seed,
                         std::vector<std::pair<std::string, std::string>>& echo) {
  const auto flag = [&](const std::string& key, const std::string& value) {
    echo.emplace_back(key, value);
  };
  if (args.solver == "exact") {
    ExactParams params;
    params.subset_cap = args.subset_cap;
    params.prune = !args.no_prune;
    params.seed_incumbent = !args.no_incumbent;
    params.alloc.starts = args.starts;
    params.alloc.enum_cap = args.enum_cap;
    params.alloc.seed = seed;
    flag("subset_cap", std::to_string(params.subset_cap));
    flag("prune", params.prune ? "1" : "0");
    flag("seed_incumbent", params.seed_incumbent ? "1" : "0");
    flag("starts", std::to_string(params.alloc.starts));
    flag("enum_cap", std::to_string(params.alloc.enum_cap));
    return solve_exact(instance, params);
  }
  HeuristicParams params;
  params.theta = args.theta;
  params.max_iterations = args.it_max;
  params.randomized = args.randomized;
  params.matrix_cap = args.matrix_cap;
  params.seed = seed;
  params.alloc.starts = args.starts;
  params.alloc.enum_cap = args.enum_cap;
  params.alloc.seed = seed;
  flag("theta", format_real(params.theta));
  flag("starts", std::to_string(params.alloc.starts));
  if (args.solver == "h0") {
    return initial_solution(instance, params);
  }
  if (args.solver == "h1") {
    flag("it_max", std::to_string(params.max_iterations));
    flag("randomized", params.randomized ? "1" : "0");
    return swap_search(instance, params);
  }
  if (args.solver == "h2") {
    flag("matrix_cap", std::to_string(params.matrix_cap));
    return two_phase_search(instance, params);
  }
  throw ValidationError("solve: unknown solver '" + args.solver +
                        "' (expected exact, h0, h1, or h2)");
}

int cmd_solve(const SolveArgs& args) {
  const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
  const Instance instance = load_instance(args.in);
  std::vector<std::pair<std::string, std::string>> echo;
  const auto start = std::chrono::steady_clock::now();
  Solution solution;
  try {
    solution = dispatch_solver(instance, args, seed, echo);
  } catch (const CapacityError& e) {
    throw CapacityError(std::string(e.what()) +
                        " (try --solver h1 or --solver h2)");
  }
  const double elapsed = run_ms(start);

  RunReport report = make_report(instance, args.solver, std::move(echo), seed,
                                 solution);
  if (args.emit_timing) report.wall_time_ms = elapsed;
  if (!args.out.empty()) save_report(report, args.out);

  std::cout << "instance " << (instance.name.empty() ? args.in : instance.name)
            << "  n=" << instance.n() << " p=" << instance.p << "\n"
            << "solver " << args.solver << " seed " << seed << "\n"
            << "objective " << format_real(solution.objective) << " (om "
            << format_real(solution.alloc.om_value) << " + setup "
            << format_real(solution.alloc.setup_value) << ", "
            << report.proof << ")\n"
            << "open sites " << join_ints(solution.open) << "\n";
  if (args.solver == "exact") {
    std::cout << "subsets evaluated " << solution.stats.subsets_evaluated
              << ", pruned " << solution.stats.subsets_pruned << "\n";
  } else {
    std::cout << "improvement steps " << solution.stats.iterations << "\n";
  }
  if (args.emit_timing) {
    std::cout << "wall time " << format_real(elapsed) << " ms\n";
  }
  if (!args.out.empty()) std::cout << "report " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string in;
  std::string formulation;
  std::string format = "conic";
  bool strengthen = false;
  std::string ub_from;
  bool use_tail_rule = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

int cmd_export(const ExportArgs& args) {
  const Instance instance = load_instance(args.in);
  const model::Formulation formulation = model::parse_formulation(args.formulation);
  model::TextFormat format;
  if (args.format == "conic") {
    format = model::TextFormat::conic;
  } else if (args.format == "lp") {
    format = model::TextFormat::lp;
  } else {
    throw ValidationError("export: unknown --format '" + args.format +
                          "' (expected conic or lp)");
  }
  if (format == model::TextFormat::lp &&
      formulation != model::Formulation::block_milp) {
    throw ValidationError("export: the lp format is only available for "
                          "MILP_block (other formulations contain cone rows)");
  }

  model::ExportOptions options;
  options.strengthen = args.strengthen || !args.ub_from.empty();
  model::Model m = model::build_model(instance, formulation, options);

  if (!args.ub_from.empty()) {
    const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
    double ub = 0.0;
    std::string source;
    if (args.ub_from == "h0" || args.ub_from == "h1" || args.ub_from == "h2") {
      HeuristicParams params;
      params.seed = seed;
      params.alloc.seed = seed;
      Solution sol;
      if (args.ub_from == "h0") sol = initial_solution(instance, params);
      else if (args.ub_from == "h1") sol = swap_search(instance, params);
      else sol = two_phase_search(instance, params);
      ub = sol.objective;
      source = args.ub_from + " seed " + std::to_string(seed);
    } else {
      ub = parse_real(args.ub_from);
      source = "flag";
    }
    const BoundsMatrix bounds = compute_bounds(instance);
    m = model::strengthen_model(std::move(m), instance, bounds, ub,
                                args.use_tail_rule);
    m.set_meta("ub_source", source);
  }

  model::save_model(m, args.out, format);
  std::cout << "wrote " << args.out << " (" << args.formulation << ", "
            << m.variables.size() << " variables, " << m.linear.size()
            << " linear rows, " << m.cones.size() << " cone rows)\n";
  if (const std::string* ub = m.find_meta("ub")) {
    std::cout << "strengthened with ub " << *ub << "\n";
  }
  if (const std::string* bad = m.find_meta("position_contradictions")) {
    std::cout << "warning: upper bound contradicts customers " << *bad
              << " (bound too small or instance infeasible)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string in;
  std::string solution;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const Instance instance = load_instance(args.in);
  const RunReport report = load_report(args.solution);
  const std::vector<CheckResult> checks = evaluate_report(instance, report);
  bool ok = true;
  for (const CheckResult& check : checks) {
    if (check.pass) {
      std::cout << "PASS " << check.name << "\n";
    } else {
      ok = false;
      std::cout << "FAIL " << check.name << ": " << check.detail << "\n";
    }
  }
  std::cout << (ok ? "verdict: pass" : "verdict: fail") << "\n";
  return ok ? 0 : 2;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string suite = "us49-quick";
  std::string out_csv;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool emit_timing = false;
  bool timestamp = false;
};

struct BenchCell {
  std::string label;
  LambdaVector lambda;
};

int cmd_bench(const BenchArgs& args) {
  if (args.suite != "us49-quick") {
    throw ValidationError("bench: unknown suite '" + args.suite +
                          "' (available: us49-quick)");
  }
  const std::uint64_t seed = args.seed_given ? args.seed : default_seed();

  std::vector<BenchCell> cells;
  cells.push_back({"median", LambdaVector::make(LambdaPreset::median, 49)});
  cells.push_back({"center", LambdaVector::make(LambdaPreset::center, 49)});
  {
    LambdaParams params;
    params.k = 25;
    cells.push_back(
        {"kcentrum25", LambdaVector::make(LambdaPreset::kcentrum, 49, params)});
  }
  {
    LambdaParams params;
    params.alpha = 0.5;
    cells.push_back(
        {"centdian05", LambdaVector::make(LambdaPreset::centdian, 49, params)});
  }

  std::ostringstream csv;
  if (args.timestamp) csv << "# generated " << iso8601_now() << "\n";
  csv << "suite,instance,scale,p,lambda,exact_obj,exact_time_ms,"
         "h0_obj,h0_gap,h0_time_ms,h1_obj,h1_gap,h1_time_ms,"
         "h2_obj,h2_gap,h2_time_ms\n";

  for (const BenchCell& cell : cells) {
    const Instance instance = builtin_us49(1, 2, cell.lambda);

    const auto timed = [&](auto&& fn) {
      const auto start = std::chrono::steady_clock::now();
      Solution sol = fn();
      return std::make_pair(std::move(sol), run_ms(start));
    };
    HeuristicParams hp;
    hp.seed = seed;
    hp.alloc.seed = seed;
    ExactParams ep;
    ep.alloc.seed = seed;

    const auto [h0, t0] = timed([&] { return initial_solution(instance, hp); });
    const auto [h1, t1] = timed([&] { return swap_search(instance, hp); });
    const auto [h2, t2] = timed([&] { return two_phase_search(instance, hp); });
    const auto [ex, tx] = timed([&] { return solve_exact(instance, ep); });

    const auto gap = [&](double value) {
      std::ostringstream out;
      out.setf(std::ios::fixed);
      out.precision(6);
      out << (value - ex.objective) / ex.objective;
      return out.str();
    };
    const auto ms = [&](double value) {
      if (!args.emit_timing) return std::string();
      std::ostringstream out;
      out.setf(std::ios::fixed);
      out.precision(1);
      out << value;
      return out.str();
    };
    csv << args.suite << ",us49,1,2," << cell.label << ","
        << format_real(ex.objective) << "," << ms(tx) << ","
        << format_real(h0.objective) << "," << gap(h0.objective) << ","
        << ms(t0) << "," << format_real(h1.objective) << ","
        << gap(h1.objective) << "," << ms(t1) << ","
        << format_real(h2.objective) << "," << gap(h2.objective) << ","
        << ms(t2) << "\n";
  }

  if (args.out_csv.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(args.out_csv, std::ios::binary);
    if (!out) throw IoError("cannot open '" + args.out_csv + "' for writing");
    out << csv.str();
    if (!out) throw IoError("error while writing '" + args.out_csv + "'");
    std::cout << "wrote " << args.out_csv << " (4 rows)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

struct InfoArgs {
  std::string in;
};

int cmd_info(const InfoArgs& args) {
  if (args.in.empty()) {
    std::cout << "ompn " << kVersion << "\n"
              << "solvers: exact, h0 (seed), h1 (swap), h2 (two-phase)\n"
              << "formulations: 3I, 2I, OT, BEP, MILP_block\n"
              << "lambda presets: median, center, kcentrum (--k), "
                 "centdian (--alpha)\n"
              << "file formats: .ompn.json instances, .run.json reports, "
                 ".conic.txt/.lp.txt models, .csv tables\n";
    return 0;
  }
  const Instance instance = load_instance(args.in);
  instance.validate();
  std::cout << "name " << (instance.name.empty() ? "(unnamed)" : instance.name)
            << "\n"
            << "n " << instance.n() << ", dim " << instance.dim << ", p "
            << instance.p << "\n"
            << "distance norm " << instance.distance_norm.to_string()
            << ", ball norm " << instance.ball_norm.to_string() << "\n"
            << "lambda " << instance.lambda.preset_name();
  if (instance.lambda.preset_name() == "kcentrum") {
    std::cout << " (k=" << instance.lambda.preset_params().k << ")";
  }
  if (instance.lambda.preset_name() == "centdian") {
    std::cout << " (alpha=" << format_real(instance.lambda.preset_params().alpha)
              << ")";
  }
  std::cout << "\nhash " << content_hash(instance) << "\n";
  double rmin = instance.radii[0], rmax = instance.radii[0];
  for (double r : instance.radii) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  std::cout << "radii in [" << format_real(rmin) << ", " << format_real(rmax)
            << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordered-median location with site neighborhoods"};
  app.require_subcommand(1);
  // Subcommands hand unmatched options (--threads) back to the parent.
  app.fallthrough(true);
  int threads = 0;
  app.add_option("--threads", threads,
                 "cap on worker threads (0 = all hardware threads)");

  GenerateArgs gen;
  CLI::App* cgen = app.add_subcommand("generate", "write an instance file");
  cgen->add_option("--n", gen.n, "number of sites");
  cgen->add_option("--dim", gen.dim, "space dimension");
  cgen->add_option("--scenario", gen.scenario, "radius scenario 1-4");
  cgen->add_option("--p", gen.p, "facilities to open");
  cgen->add_option("--lambda", gen.lambda,
                   "weight preset: median, center, kcentrum, centdian");
  cgen->add_option("--k", gen.k, "kcentrum: leading ones");
  cgen->add_option("--alpha", gen.alpha,
                   "centdian blend (trailing weights are 1-alpha)");
  CLI::Option* gseed = cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--builtin", gen.builtin, "bundled set: us49 or example5");
  cgen->add_option("--scale", gen.scale, "us49 radius scale 1-3");
  cgen->add_flag("--zero-setup", gen.zero_setup,
                 "example5: zero opening costs instead of radius-priced ones");
  cgen->add_option("--out", gen.out, "output .ompn.json path")->required();

  SolveArgs sol;
  CLI::App* csol = app.add_subcommand("solve", "run a solver on an instance");
  csol->add_option("--in", sol.in, "instance file")->required();
  csol->add_option("--solver", sol.solver, "exact, h0, h1, or h2")->required();
  CLI::Option* sseed = csol->add_option("--seed", sol.seed, "solver seed");
  csol->add_option("--starts", sol.starts, "multistart count per open set");
  csol->add_option("--it-max", sol.it_max, "h1: improvement step budget");
  csol->add_option("--theta", sol.theta, "seed blend of cost brackets [0,1]");
  csol->add_flag("--randomized", sol.randomized,
                 "h1: random leaving site instead of sweeping");
  csol->add_option("--subset-cap", sol.subset_cap, "exact: max open sets");
  csol->add_option("--enum-cap", sol.enum_cap,
                   "max enumerated assignments per open set");
  csol->add_option("--matrix-cap", sol.matrix_cap,
                   "h2: max subsets for the matrix subproblem");
  csol->add_flag("--no-prune", sol.no_prune, "exact: disable pruning");
  csol->add_flag("--no-incumbent", sol.no_incumbent,
                 "exact: start without a heuristic upper bound");
  csol->add_flag("--emit-timing", sol.emit_timing,
                 "record wall time in the report (breaks byte determinism)");
  csol->add_option("--out", sol.out, "write a .run.json report");

  ExportArgs exp;
  CLI::App* cexp = app.add_subcommand("export", "write a solver model file");
  cexp->add_option("--in", exp.in, "instance file")->required();
  cexp->add_option("--formulation", exp.formulation,
                   "3I, 2I, OT, BEP, or MILP_block")
      ->required();
  cexp->add_option("--format", exp.format, "conic (default) or lp");
  cexp->add_flag("--strengthen", exp.strengthen,
                 "add self-rank/opening equalities");
  cexp->add_option("--ub-from", exp.ub_from,
                   "tighten with a bound from h0/h1/h2 or a number");
  cexp->add_flag("--use-tail-rule", exp.use_tail_rule,
                 "use the trailing-weight rank cutoff (can cut optima)");
  CLI::Option* eseed = cexp->add_option("--seed", exp.seed, "heuristic seed");
  cexp->add_option("--out", exp.out, "output model path")->required();

  EvaluateArgs eva;
  CLI::App* ceva = app.add_subcommand("evaluate", "check a report file");
  ceva->add_option("--in", eva.in, "instance file")->required();
  ceva->add_option("--solution", eva.solution, ".run.json report")->required();

  BenchArgs ben;
  CLI::App* cben = app.add_subcommand("bench", "run a benchmark suite");
  cben->add_option("--suite", ben.suite, "suite name (us49-quick)");
  cben->add_option("--out-csv", ben.out_csv, "CSV output path");
  CLI::Option* bseed = cben->add_option("--seed", ben.seed, "solver seed");
  cben->add_flag("--emit-timing", ben.emit_timing,
                 "fill the time columns (breaks byte determinism)");
  cben->add_flag("--timestamp", ben.timestamp,
                 "prepend an ISO-8601 generation comment");

  InfoArgs inf;
  CLI::App* cinf = app.add_subcommand("info", "describe the tool or a file");
  cinf->add_option("--in", inf.in, "instance file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  gen.seed_given = gseed->count() > 0;
  sol.seed_given = sseed->count() > 0;
  exp.seed_given = eseed->count() > 0;
  ben.seed_given = bseed->count() > 0;

  try {
    if (threads > 0) set_max_threads(threads);
    if (cgen->parsed()) return cmd_generate(gen);
    if (csol->parsed()) return cmd_solve(sol);
    if (cexp->parsed()) return cmd_export(exp);
    if (ceva->parsed()) return cmd_evaluate(eva);
    if (cben->parsed()) return cmd_bench(ben);
    if (cinf->parsed()) return cmd_info(inf);
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
