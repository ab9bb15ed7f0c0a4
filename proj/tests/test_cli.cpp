#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ompn/heuristics.hpp"
#include "ompn/instance.hpp"
#include "ompn/model_export.hpp"
#include "ompn/report.hpp"
#include "test_support.hpp"

using namespace ompn;
using testsup::contains;
using testsup::count_lines_starting_with;
using testsup::read_file;
using testsup::run_cli;
using testsup::run_command;
using testsup::scratch_file;

namespace {

/// Shared 8-site instance written through the CLI once per process.
const std::string& small_instance_path() {
  static const std::string path = [] {
    const std::string out = scratch_file("cli_small.ompn.json");
    const auto r = run_cli("generate --n 8 --p 2 --seed 77 --out " + out);
    REQUIRE(r.exit_code == 0);
    return out;
  }();
  return path;
}

std::string us49_path() { return testsup::data_dir() + "/us49.ompn.json"; }
std::string ex35_path() {
  return testsup::data_dir() + "/example_3_5.ompn.json";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("info describes the toolkit") {
  const auto r = run_cli("info");
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "solvers: exact, h0 (seed), h1 (swap), h2 (two-phase)"));
  CHECK(contains(r.output, "formulations: 3I, 2I, OT, BEP, MILP_block"));
  CHECK(contains(r.output, ".ompn.json instances"));
}

TEST_CASE("usage errors exit with code 2, help with 0") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(contains(run_cli("--help").output, "Usage"));
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("solve --solver exact").exit_code == 2);  // missing --in
  CHECK(run_cli("generate --n 5").exit_code == 2);        // missing --out
}

TEST_CASE("generate is deterministic and seed-sensitive") {
  const std::string a = scratch_file("cli_gen_a.ompn.json");
  const std::string b = scratch_file("cli_gen_b.ompn.json");
  const std::string c = scratch_file("cli_gen_c.ompn.json");

  const auto ra = run_cli("generate --n 8 --p 2 --seed 77 --out " + a);
  CHECK(ra.exit_code == 0);
  CHECK(contains(ra.output, "wrote " + a));
  CHECK(contains(ra.output, "n=8, p=2, hash="));

  CHECK(run_cli("generate --n 8 --p 2 --seed 77 --out " + b).exit_code == 0);
  CHECK(read_file(a) == read_file(b));

  CHECK(run_cli("generate --n 8 --p 2 --seed 78 --out " + c).exit_code == 0);
  CHECK(read_file(a) != read_file(c));

  const auto info = run_cli("info --in " + a);
  CHECK(info.exit_code == 0);
  CHECK(contains(info.output, "n 8, dim 2, p 2"));
  CHECK(contains(info.output, "lambda median"));
  CHECK(contains(info.output, "distance norm 2, ball norm 2"));
  CHECK(contains(info.output, "radii in ["));
}

TEST_CASE("generate rejects bad arguments with exit code 2") {
  const std::string out = scratch_file("cli_gen_bad.ompn.json");
  auto r = run_cli("generate --scenario 9 --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "scenario: must be in [1, 4]"));

  r = run_cli("generate --lambda kcentrum --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "kcentrum requires --k"));

  r = run_cli("generate --lambda frog --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "expected median, center, kcentrum, or centdian"));

  r = run_cli("generate --builtin atlantis --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "expected us49 or example5"));
}

TEST_CASE("bundled data files match the builtin generators byte for byte") {
  const std::string us = scratch_file("cli_us49.ompn.json");
  const std::string ex = scratch_file("cli_ex35.ompn.json");
  CHECK(run_cli("generate --builtin us49 --lambda center --out " + us)
            .exit_code == 0);
  CHECK(read_file(us) == read_file(us49_path()));
  CHECK(run_cli("generate --builtin example5 --out " + ex).exit_code == 0);
  CHECK(read_file(ex) == read_file(ex35_path()));

  const auto info = run_cli("info --in " + us49_path());
  CHECK(info.exit_code == 0);
  CHECK(contains(info.output, "name us49-s1"));
  CHECK(contains(info.output, "n 49, dim 2, p 2"));
  CHECK(contains(info.output, "lambda center"));
}

TEST_CASE("solve writes a report that evaluate accepts") {
  const std::string& in = small_instance_path();
  const std::string report_path = scratch_file("cli_exact.run.json");

  const auto r = run_cli("solve --in " + in + " --solver exact --seed 5 --out " +
                         report_path);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "solver exact seed 5"));
  CHECK(contains(r.output, "objective "));
  CHECK(contains(r.output, ", exact)"));
  CHECK(contains(r.output, "subsets evaluated"));
  CHECK(contains(r.output, "open sites "));
  CHECK(contains(r.output, "report " + report_path));

  const RunReport report = load_report(report_path);
  CHECK(report.solver == "exact");
  CHECK(report.proof == "exact");
  CHECK(report.open.size() == 2);
  CHECK_FALSE(report.wall_time_ms.has_value());

  const auto check = run_cli("evaluate --in " + in + " --solution " + report_path);
  CHECK(check.exit_code == 0);
  CHECK(count_lines_starting_with(check.output, "PASS ") == 8);
  CHECK(count_lines_starting_with(check.output, "FAIL ") == 0);
  CHECK(contains(check.output, "verdict: pass"));
}

TEST_CASE("heuristic solves report improvement steps") {
  const std::string& in = small_instance_path();
  for (const std::string solver : {"h0", "h1", "h2"}) {
    CAPTURE(solver);
    const auto r = run_cli("solve --in " + in + " --solver " + solver +
                           " --seed 5");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "solver " + solver + " seed 5"));
    CHECK(contains(r.output, "improvement steps"));
    CHECK(contains(r.output, ", heuristic)"));
  }
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
  const std::string& in = small_instance_path();
  const std::string a = scratch_file("cli_rep_a.run.json");
  const std::string b = scratch_file("cli_rep_b.run.json");

  for (const std::string solver : {"exact", "h2"}) {
    CAPTURE(solver);
    CHECK(run_cli("solve --in " + in + " --solver " + solver +
                  " --seed 9 --threads 1 --out " + a)
              .exit_code == 0);
    CHECK(run_cli("solve --in " + in + " --solver " + solver +
                  " --seed 9 --threads 2 --out " + b)
              .exit_code == 0);
    CHECK(read_file(a) == read_file(b));
  }

  const auto timed = run_cli("solve --in " + in +
                             " --solver h0 --seed 9 --emit-timing --out " + a);
  CHECK(timed.exit_code == 0);
  CHECK(contains(timed.output, "wall time "));
  CHECK(contains(read_file(a), "\"wall_time_ms\": \""));
}

TEST_CASE("seed comes from the flag, then the environment, then 1") {
  const std::string& in = small_instance_path();
  const std::string base = testsup::cli_path() + " solve --in " + in +
                           " --solver h0";

  auto r = run_command("env -u OMPN_SEED " + base);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "solver h0 seed 1"));

  r = run_command("env OMPN_SEED=123 " + base);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "solver h0 seed 123"));

  r = run_command("env OMPN_SEED=123 " + base + " --seed 9");
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "solver h0 seed 9"));

  r = run_command("env OMPN_SEED=frog " + base);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "OMPN_SEED: not an unsigned integer"));
}

TEST_CASE("solver failures map to documented exit codes") {
  const std::string& in = small_instance_path();

  auto r = run_cli("solve --in " + in + " --solver h9");
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "expected exact, h0, h1, or h2"));

  r = run_cli("solve --in " + scratch_file("no_such.ompn.json") +
              " --solver exact");
  CHECK(r.exit_code == 4);
  CHECK(contains(r.output, "cannot open"));

  r = run_cli("solve --in " + us49_path() +
              " --solver exact --subset-cap 100");
  CHECK(r.exit_code == 3);
  CHECK(contains(r.output, "exceeds the cap"));
  CHECK(contains(r.output, "(try --solver h1 or --solver h2)"));
}

TEST_CASE("export writes conic models that parse back") {
  const std::string out = scratch_file("cli_bep.conic.txt");
  const auto r = run_cli("export --in " + ex35_path() +
                         " --formulation BEP --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "wrote " + out));
  CHECK(contains(r.output, "(BEP, "));

  const model::Model m = model::load_model(out, model::TextFormat::conic);
  const std::string* formulation = m.find_meta("formulation");
  REQUIRE(formulation != nullptr);
  CHECK(*formulation == "BEP");
  std::size_t ord_rows = 0;
  for (const auto& row : m.linear)
    if (row.name.rfind("ord_", 0) == 0) ++ord_rows;
  CHECK(ord_rows == 25);  // n^2 sorting-network rows for n = 5
}

TEST_CASE("export strengthens with a heuristic upper bound") {
  const std::string& in = small_instance_path();
  const std::string out = scratch_file("cli_3i_strong.conic.txt");
  const auto r = run_cli("export --in " + in +
                         " --formulation 3I --strengthen --ub-from h0 "
                         "--seed 55 --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "strengthened with ub "));

  const model::Model m = model::load_model(out, model::TextFormat::conic);
  const std::string* strengthened = m.find_meta("strengthened");
  REQUIRE(strengthened != nullptr);
  CHECK(*strengthened == "1");
  const std::string* source = m.find_meta("ub_source");
  REQUIRE(source != nullptr);
  CHECK(*source == "h0 seed 55");

  HeuristicParams params;
  params.seed = 55;
  params.alloc.seed = 55;
  const Solution h0 = initial_solution(load_instance(in), params);
  const std::string* ub = m.find_meta("ub");
  REQUIRE(ub != nullptr);
  CHECK(*ub == format_real(h0.objective));
}

TEST_CASE("export enforces format and norm constraints") {
  const std::string out = scratch_file("cli_bad_model.txt");

  auto r = run_cli("export --in " + ex35_path() +
                   " --formulation BEP --format lp --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "only available for MILP_block"));

  r = run_cli("export --in " + ex35_path() +
              " --formulation MILP_block --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "requires polyhedral norms"));

  r = run_cli("export --in " + ex35_path() + " --formulation 7Z --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "expected 3I, 2I, OT, BEP, or MILP_block"));

  r = run_cli("export --in " + ex35_path() +
              " --formulation BEP --format yaml --out " + out);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "expected conic or lp"));
}

TEST_CASE("export writes lp text for the polyhedral block formulation") {
  Instance poly = load_instance(small_instance_path());
  poly.distance_norm = NormSpec::one();
  poly.ball_norm = NormSpec::infinity();
  const std::string in = scratch_file("cli_poly.ompn.json");
  save_instance(poly, in);

  const std::string out = scratch_file("cli_block.lp.txt");
  const auto r = run_cli("export --in " + in +
                         " --formulation MILP_block --format lp --out " + out);
  CHECK(r.exit_code == 0);

  const std::string text = read_file(out);
  CHECK(contains(text, "Minimize"));
  CHECK(contains(text, "Subject To"));

  const model::Model parsed = model::load_model(out, model::TextFormat::lp);
  const model::Model direct =
      model::build_model(poly, model::Formulation::block_milp, {});
  CHECK(parsed.variables.size() == direct.variables.size());
  CHECK(parsed.linear.size() == direct.linear.size());
  CHECK(parsed.cones.empty());
}

TEST_CASE("evaluate flags a tampered report and exits 2") {
  const std::string& in = small_instance_path();
  const std::string good = scratch_file("cli_tamper_good.run.json");
  CHECK(run_cli("solve --in " + in + " --solver exact --seed 5 --out " + good)
            .exit_code == 0);

  RunReport report = load_report(good);
  report.objective += 0.5;
  const std::string bad = scratch_file("cli_tamper_bad.run.json");
  save_report(report, bad);

  const auto r = run_cli("evaluate --in " + in + " --solution " + bad);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "FAIL objective_matches"));
  CHECK(contains(r.output, "verdict: fail"));
}

TEST_CASE("bench rejects unknown suites") {
  const auto r = run_cli("bench --suite nope");
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "available: us49-quick"));
}

}  // TEST_SUITE("cli")

TEST_SUITE("cli_bench") {

TEST_CASE("quick benchmark suite is deterministic and internally consistent") {
  const std::string csv_path = scratch_file("cli_bench.csv");

  // First run streams to stdout with a timestamp comment; second writes a file.
  const auto first =
      run_cli("bench --suite us49-quick --seed 1 --timestamp");
  REQUIRE(first.exit_code == 0);
  REQUIRE(first.output.rfind("# generated 20", 0) == 0);
  const std::string body = first.output.substr(first.output.find('\n') + 1);

  const auto second = run_cli("bench --suite us49-quick --seed 1 --out-csv " +
                              csv_path);
  REQUIRE(second.exit_code == 0);
  CHECK(contains(second.output, "(4 rows)"));
  CHECK(read_file(csv_path) == body);

  std::istringstream in(body);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header ==
        "suite,instance,scale,p,lambda,exact_obj,exact_time_ms,"
        "h0_obj,h0_gap,h0_time_ms,h1_obj,h1_gap,h1_time_ms,"
        "h2_obj,h2_gap,h2_time_ms");

  const std::vector<std::string> labels = {"median", "center", "kcentrum25",
                                           "centdian05"};
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    REQUIRE(rows < labels.size());
    const std::vector<std::string> f = split_csv(line);
    REQUIRE(f.size() == 16);
    CHECK(f[0] == "us49-quick");
    CHECK(f[1] == "us49");
    CHECK(f[2] == "1");
    CHECK(f[3] == "2");
    CHECK(f[4] == labels[rows]);
    CHECK(f[6].empty());   // timing opt-in was off
    CHECK(f[9].empty());
    CHECK(f[12].empty());
    CHECK(f[15].empty());

    const double exact = std::stod(f[5]);
    const double h0 = std::stod(f[7]);
    const double h1 = std::stod(f[10]);
    const double h2 = std::stod(f[13]);
    CAPTURE(labels[rows]);
    CHECK(exact > 0.0);
    CHECK(h0 >= exact - 1e-9);
    CHECK(h1 >= exact - 1e-9);
    CHECK(h2 >= exact - 1e-9);
    CHECK(h1 <= h0 + 1e-9);  // the swap search starts from the seed solution
    CHECK(std::stod(f[8]) >= -1e-6);
    CHECK(std::stod(f[11]) >= -1e-6);
    CHECK(std::stod(f[14]) >= -1e-6);
    if (labels[rows] == "center") {
      CHECK(testsup::close_rel(exact, 18.027899, 1e-5));
    }
    ++rows;
  }
  CHECK(rows == 4);
}

}  // TEST_SUITE("cli_bench")
