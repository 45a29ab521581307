#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trackopt/experiments.hpp"

using namespace trackopt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(static_cast<bool>(in), "missing file: ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario short_paper_scenario() {
  Scenario s = preset_scenario("paper_sec4");
  s.horizon = 5.0;
  return s;
}

const std::string kOut = "exp_test_out";

}  // namespace

TEST_CASE("preset scenarios match their shipped config files") {
  for (const std::string name : {"paper_sec4", "static_quadratic"}) {
    const std::string shipped = slurp(std::string(TRACKOPT_SOURCE_DIR) + "/configs/" + name + ".cfg");
    CHECK(shipped == preset_config_text(name));
  }
  CHECK_THROWS(preset_scenario("nonsense"));
}

TEST_CASE("paper preset resolves the documented parameters") {
  const Scenario s = preset_scenario("paper_sec4");
  CHECK(s.name == "paper_sec4");
  CHECK(s.graph.family == "ring");
  CHECK(s.graph.n_agents == 5);
  CHECK(s.costs.a == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(s.costs.b == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(s.costs.omega == 0.05);
  CHECK(s.delta_t == 0.1);
  CHECK(s.delta_c_auto);  // resolved to 0.9 delta_bar at run time
  CHECK(s.horizon == 50.0);
  CHECK(s.k_bar == 10);
}

TEST_CASE("schema violations carry the field path and line") {
  const char* negative_dt =
      "[graph]\nfamily = ring\nn_agents = 3\n"
      "[costs]\nfamily = quadratic_sinusoidal\na = 1,1,1\nb = 0,0,0\n"
      "[run]\ndelta_t = -0.1\n";
  CHECK_THROWS_WITH_AS(parse_scenario(negative_dt, "cfg"), doctest::Contains("delta_t"),
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario("[graph]\nfamily = ring\nn_agents = 3\nbogus = 1\n"
                                      "[costs]\nfamily = quadratic_sinusoidal\na = 1,1,1\nb = 0,0,0\n",
                                      "cfg"),
                       doctest::Contains("cfg:4"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario("[graph]\nn_agents = 3\n[costs]\na = 1,1,oops\nb = 0,0,0\n", "cfg"),
                       doctest::Contains("[costs].a"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(parse_scenario("key_without_section = 1\n", "cfg"),
                       doctest::Contains("cfg:1"), std::invalid_argument);

  // Declared bounds are all-or-nothing.
  CHECK_THROWS_WITH_AS(parse_scenario("[graph]\nfamily = ring\nn_agents = 3\n"
                                      "[costs]\nfamily = quadratic_sinusoidal\na = 1,1,1\nb = 0,0,0\n"
                                      "[bounds]\nm = 1\n",
                                      "cfg"),
                       doctest::Contains("[bounds].l"), std::invalid_argument);
}

TEST_CASE("explicit graphs and vector costs parse") {
  const char* text =
      "[graph]\nfamily = explicit\nn_agents = 3\nedges = 0-1, 1-2:2.5\n"
      "[costs]\nfamily = quadratic_vector\ndimension = 2\nomega = 0.1\nb = 1, 1, 1\n"
      "a_1 = 2,0,0,2\na_2 = 3,1,1,3\na_3 = 4,0,0,1\n"
      "c1_1 = 1,0\nc1_2 = 0,1\nc1_3 = 1,1\n"
      "[run]\nhorizon = 1\n";
  const Scenario s = parse_scenario(text, "cfg");
  CHECK(s.graph.edges.size() == 2);
  CHECK(s.graph.edges[1].weight == 2.5);
  CHECK(s.costs.dimension == 2);
  const Problem p = build_problem(s);
  CHECK(p.dimension == 2);
  CHECK(p.n_agents() == 3);
  CHECK(p.graph.adjacency()(1, 2) == 2.5);
}

TEST_CASE("resolved config text reparses to the same text") {
  const Scenario s = preset_scenario("paper_sec4");
  const std::string text = resolved_config_text(s);
  const Scenario back = parse_scenario(text, "resolved");
  CHECK(resolved_config_text(back) == text);
}

TEST_CASE("run_scenario writes self-consistent artifacts") {
  const Scenario s = short_paper_scenario();
  const std::string dir = kOut + "/run_a";
  std::filesystem::remove_all(dir);
  const RunResult r = run_scenario(s, dir);

  CHECK(r.resolved.delta_c_auto == false);
  CHECK(r.resolved.delta_c == doctest::Approx(0.9 * r.report.delta_bar).epsilon(1e-12));

  // Files exist and the CSVs parse back losslessly at 17 significant digits.
  const TimeSeries run_back = read_run_csv(dir + "/run.csv", 5, 1);
  REQUIRE(run_back.times.size() == r.series.times.size());
  for (std::size_t k = 0; k < run_back.times.size(); ++k) {
    CHECK(run_back.times[k] == r.series.times[k]);
    CHECK(run_back.states[k] == r.series.states[k]);
    CHECK(run_back.psis[k] == r.series.psis[k]);
    CHECK(run_back.x_star[k] == r.series.x_star[k]);
  }
  const TimeSeries cons_back = read_consensus_csv(dir + "/consensus.csv", 5, 1);
  REQUIRE(cons_back.consensus_steps.size() == r.series.consensus_steps.size());
  for (std::size_t k = 0; k < cons_back.consensus_steps.size(); ++k) {
    CHECK(cons_back.consensus_p[k] == r.series.consensus_p[k]);
    CHECK(cons_back.consensus_err[k] == r.series.consensus_err[k]);
  }

  const StabilityReport parsed = parse_stability_report(slurp(dir + "/stability_report.txt"));
  CHECK(parsed.delta_bar == r.report.delta_bar);
  CHECK(parsed.phi_used == r.report.phi_used);
}

TEST_CASE("reruns are bitwise identical and the embedded config reproduces them") {
  const Scenario s = short_paper_scenario();
  const std::string dir_a = kOut + "/repro_a";
  const std::string dir_b = kOut + "/repro_b";
  const std::string dir_c = kOut + "/repro_c";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  std::filesystem::remove_all(dir_c);

  run_scenario(s, dir_a);
  run_scenario(s, dir_b);
  for (const char* f : {"run.csv", "consensus.csv", "stability_report.txt", "summary.txt"})
    CHECK(slurp(dir_a + "/" + f) == slurp(dir_b + "/" + f));

  // Re-run from the config embedded in the summary.
  const std::string embedded = extract_embedded_config(slurp(dir_a + "/summary.txt"));
  const Scenario again = parse_scenario(embedded, "embedded");
  CHECK_FALSE(again.delta_c_auto);  // resolved numerically in the summary
  run_scenario(again, dir_c);
  for (const char* f : {"run.csv", "consensus.csv", "stability_report.txt", "summary.txt"})
    CHECK(slurp(dir_a + "/" + f) == slurp(dir_c + "/" + f));
}

TEST_CASE("a single-value sweep matches the direct run") {
  Scenario s = short_paper_scenario();
  const std::string dir = kOut + "/sweep_single";
  std::filesystem::remove_all(dir);

  SweepSpec spec{s, "k_bar", {10}};
  const auto rows = run_sweep(spec, dir);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok);

  const RunResult direct = run_scenario(s, kOut + "/sweep_single_direct");
  CHECK(rows[0].e_bar == direct.metrics.e_bar);
  CHECK(rows[0].max_e == direct.metrics.max_e);
  CHECK(slurp(dir + "/k_bar_10/run.csv") == slurp(kOut + "/sweep_single_direct/run.csv"));
}

TEST_CASE("sweep failures are isolated and reported") {
  Scenario s = short_paper_scenario();
  const std::string dir = kOut + "/sweep_fail";
  std::filesystem::remove_all(dir);

  // 5.0 is far beyond delta_bar ~ 0.17 and blows up to non-finite values.
  SweepSpec spec{s, "delta_c", {0.05, 5.0}};
  const auto rows = run_sweep(spec, dir);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK(rows[0].admissible);
  CHECK_FALSE(rows[1].ok);
  CHECK(!rows[1].error.empty());

  const std::string table = slurp(dir + "/comparison.csv");
  CHECK(table.find("error") != std::string::npos);

  CHECK_THROWS(run_sweep(SweepSpec{s, "nonsense", {1.0}}, ""));
  // Invalid per-value parameters are isolated into their row, not thrown.
  const auto bad_kbar = run_sweep(SweepSpec{s, "k_bar", {0.5}}, "");
  REQUIRE(bad_kbar.size() == 1);
  CHECK_FALSE(bad_kbar.front().ok);
  CHECK(bad_kbar.front().error.find("integer") != std::string::npos);
}

TEST_CASE("k_bar sweep produces the comparison table with nonincreasing e_bar") {
  const std::string dir = kOut + "/sweep_kbar";
  std::filesystem::remove_all(dir);
  SweepSpec spec{preset_scenario("paper_sec4"), "k_bar", {1, 2, 5, 10}};
  const auto rows = run_sweep(spec, dir);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i].ok);
    CHECK(rows[i].e_bar >= rows[i + 1].e_bar);
  }
  const std::string table = slurp(dir + "/comparison.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);  // header + 4 rows
}

TEST_CASE("vector costs run end to end in two dimensions") {
  const char* text =
      "[scenario]\nname = vec2\n"
      "[graph]\nfamily = complete\nn_agents = 3\n"
      "[costs]\nfamily = quadratic_vector\ndimension = 2\nomega = 0.05\nb = 0, 0, 0\n"
      "a_1 = 2,0,0,2\na_2 = 3,0.5,0.5,3\na_3 = 4,0,0,1\n"
      "c0_1 = 1,0\nc0_2 = 0,-1\nc0_3 = -1,1\n"
      "[run]\nhorizon = 50\nk_bar = 10\n"
      "[init]\nx0 = ones\n";
  const Scenario s = parse_scenario(text, "vec2");
  const std::string dir = kOut + "/vec2";
  std::filesystem::remove_all(dir);
  const RunResult r = run_scenario(s, dir);

  // Static vector costs: every agent converges to the shared optimum.
  CHECK(r.metrics.e.back() <= 1e-4);
  CHECK(r.metrics.disagreement.back() <= 1e-4);
  CHECK(r.bound_check.all_pass);

  // Column naming switches to the agent_dimension scheme for n > 1.
  const std::string header = slurp(dir + "/run.csv").substr(0, 200);
  CHECK(header.find("x_1_1") != std::string::npos);
  CHECK(header.find("x_star_2") != std::string::npos);
  CHECK(header.find("psi_3_2") != std::string::npos);

  const TimeSeries back = read_run_csv(dir + "/run.csv", 3, 2);
  CHECK(back.states.back() == r.series.states.back());
}

TEST_CASE("stability report of the zero-linear-term static preset") {
  Scenario s = preset_scenario("static_quadratic");
  s.bounds.region_halfwidth = 0.0;  // sample exactly at the optimum
  const StabilityReport r = stability_report(s);
  CHECK(r.c_d == 0.0);
  CHECK(r.c_bar == 0.0);
  CHECK(r.bounds_evaluable);
  CHECK(r.eps_bar == 0.0);
  CHECK(r.delta_bar > 0.0);
}

TEST_CASE("compare writes the central baseline next to the distributed run") {
  Scenario s = short_paper_scenario();
  const std::string dir = kOut + "/compare";
  std::filesystem::remove_all(dir);
  const CompareResult c = compare_central(s, dir);
  CHECK(c.e_bar_central > 0.0);
  CHECK(c.e_bar_distributed > 0.0);
  CHECK(std::filesystem::exists(dir + "/central.csv"));
  CHECK(std::filesystem::exists(dir + "/compare_summary.txt"));
  const std::string sum = slurp(dir + "/compare_summary.txt");
  CHECK(sum.find("e_bar_central") != std::string::npos);
}

TEST_CASE("region_center length is validated against the cost dimension") {
  Scenario s = short_paper_scenario();
  s.bounds.region_center = {0.0, 1.0};  // dimension is 1
  CHECK_THROWS_WITH_AS(stability_report(s), doctest::Contains("region_center"),
                       std::invalid_argument);
}

TEST_CASE("init vectors resolve presets and broadcasts") {
  CHECK(resolve_init(InitSpec{"zeros", {}}, 3, "x") == Vector{0, 0, 0});
  CHECK(resolve_init(InitSpec{"ones", {}}, 2, "x") == Vector{1, 1});
  CHECK(resolve_init(InitSpec{"explicit", {2.5}}, 3, "x") == Vector{2.5, 2.5, 2.5});
  CHECK(resolve_init(InitSpec{"explicit", {1, 2, 3}}, 3, "x") == Vector{1, 2, 3});
  CHECK_THROWS(resolve_init(InitSpec{"explicit", {1, 2}}, 3, "x"));
}
