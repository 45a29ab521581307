#pragma once

// Scenario configuration (flat key = value sections), run/sweep/stability/
// compare entry points, and the CSV + report file outputs.

#include <optional>
#include <string>
#include <vector>

#include "trackopt/costs.hpp"
#include "trackopt/dynamics.hpp"
#include "trackopt/metrics.hpp"
#include "trackopt/stability.hpp"

namespace trackopt {

struct GraphSpec {
  std::string family = "ring";  // ring | path | complete | explicit
  int n_agents = 0;
  std::vector<Edge> edges;  // explicit family only
};

struct CostSpec {
  std::string family = "quadratic_sinusoidal";  // or quadratic_vector
  double omega = 0.0;
  // quadratic_sinusoidal: per-agent arrays
  std::vector<double> a, b, offset;
  // quadratic_vector: per-agent matrices and linear terms
  int dimension = 1;
  std::vector<Matrix> a_mats;
  std::vector<Vector> c0s, c1s;
  std::vector<double> b_mult;
};

struct InitSpec {
  std::string mode = "zeros";  // zeros | ones | explicit
  Vector values;               // explicit mode: N*n entries or one broadcast scalar
};

struct BoundsSpec {
  double region_halfwidth = 2.0;
  Vector region_center;  // empty = origin
  int samples = 200;
  std::optional<CostBounds> declared;
  double transient_fraction = 0.5;
};

struct Scenario {
  std::string name = "scenario";
  GraphSpec graph;
  CostSpec costs;
  double delta_t = 0.1;
  bool delta_c_auto = true;
  double delta_c = 0.0;
  long k_bar = 10;
  int substeps = 10;
  double horizon = 50.0;
  InitSpec x0{"ones", {}};
  InitSpec v0{"zeros", {}};
  InitSpec z0{"zeros", {}};
  BoundsSpec bounds;
};

/// Parse a config; schema violations report the field path and line number.
Scenario parse_scenario(const std::string& text, const std::string& origin);
Scenario load_scenario(const std::string& path);

/// Built-in presets: paper_sec4 | static_quadratic (same text as the files
/// shipped under configs/).
Scenario preset_scenario(const std::string& name);
std::string preset_config_text(const std::string& name);

Problem build_problem(const Scenario& s);
Vector resolve_init(const InitSpec& init, std::size_t length, const std::string& what);

/// Canonical serialization of a scenario; parsing it back yields an
/// equivalent scenario. Embedded in every run summary.
std::string resolved_config_text(const Scenario& s);

struct RunResult {
  Scenario resolved;  // delta_c numeric, init vectors explicit
  StabilityReport report;
  TimeSeries series;
  MetricSeries metrics;
  BoundCheck bound_check;
};

/// Full pipeline; writes run.csv, consensus.csv, stability_report.txt and
/// summary.txt under out_dir (created if needed). Empty out_dir skips file
/// output.
RunResult run_scenario(const Scenario& s, const std::string& out_dir);

/// Stability constants only (no simulation).
StabilityReport stability_report(const Scenario& s);
void write_stability_report(const Scenario& s, const std::string& out_dir);

struct SweepSpec {
  Scenario base;
  std::string param;  // k_bar | delta_c | delta_t | omega
  std::vector<double> values;
};

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  double e_bar = 0.0;
  double max_e = 0.0;
  double consensus_margin = 0.0;
  double gradient_margin = 0.0;
  bool admissible = true;  // resolved delta_c < delta_bar
  std::string error;
};

/// One run per value in its own subdirectory plus comparison.csv; per-run
/// failures are isolated and reported in their row.
std::vector<SweepRow> run_sweep(const SweepSpec& sw, const std::string& out_dir);

struct CompareResult {
  double e_bar_distributed = 0.0;
  double e_bar_central = 0.0;
  double final_e_distributed = 0.0;
  double final_e_central = 0.0;
};

/// Distributed run vs the centralized baseline started from the agent-mean
/// initial state; writes central.csv and compare_summary.txt as well.
CompareResult compare_central(const Scenario& s, const std::string& out_dir);

// Round-trip readers for the emitted CSV files (times/states/psis/x_star or
// the consensus columns, depending on the file).
TimeSeries read_run_csv(const std::string& path, int n_agents, int dimension);
TimeSeries read_consensus_csv(const std::string& path, int n_agents, int dimension);

/// Extract the config text embedded after the marker line in summary.txt.
std::string extract_embedded_config(const std::string& summary_text);

}  // namespace trackopt
