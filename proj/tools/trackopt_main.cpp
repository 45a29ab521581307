// trackopt command line: run scenarios, sweep parameters, print stability
// constants and compare against the centralized baseline.

#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trackopt/experiments.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  long seed = 0;  // reserved; runs are deterministic
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Scenario config file (key = value sections)");
  cmd->add_option("--preset", opts.preset, "Built-in scenario: paper_sec4 | static_quadratic");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--seed", opts.seed, "Reserved for future stochastic features; runs are deterministic");
}

trackopt::Scenario resolve_scenario(const CommonOpts& opts) {
  if (!opts.config_path.empty() && !opts.preset.empty())
    throw std::invalid_argument("give either --config or --preset, not both");
  if (!opts.config_path.empty()) return trackopt::load_scenario(opts.config_path);
  if (!opts.preset.empty()) return trackopt::preset_scenario(opts.preset);
  throw std::invalid_argument("a scenario is required: --config PATH or --preset NAME");
}

std::vector<double> parse_sweep_values(const std::string& text, std::string& param) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("--sweep expects PARAM=v1,v2,... (e.g. k_bar=1,2,5,10)");
  param = text.substr(0, eq);
  std::vector<double> values;
  std::string cur;
  const std::string list = text.substr(eq + 1);
  for (std::size_t i = 0; i <= list.size(); ++i) {
    if (i == list.size() || list[i] == ',') {
      if (!cur.empty()) {
        char* end = nullptr;
        const double v = std::strtod(cur.c_str(), &end);
        if (end == cur.c_str() || *end != '\0')
          throw std::invalid_argument("--sweep: '" + cur + "' is not a number");
        values.push_back(v);
        cur.clear();
      }
    } else if (!std::isspace(static_cast<unsigned char>(list[i]))) {
      cur.push_back(list[i]);
    }
  }
  if (values.empty()) throw std::invalid_argument("--sweep: no values given");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trackopt: distributed time-varying optimization simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, stab_opts, cmp_opts;
  std::string sweep_arg;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate one scenario and write CSV/report files");
  add_common(run_cmd, run_opts);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run one scenario per swept parameter value");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--sweep", sweep_arg, "PARAM=v1,v2,... with PARAM in k_bar|delta_c|delta_t|omega")
      ->required();

  CLI::App* stab_cmd = app.add_subcommand("stability", "Compute the stability report only");
  add_common(stab_cmd, stab_opts);

  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "Distributed run vs the centralized baseline on one scenario");
  add_common(cmp_cmd, cmp_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto result = trackopt::run_scenario(resolve_scenario(run_opts), run_opts.out_dir);
      std::printf("run %s: e_bar = %.6g, max_e = %.6g, bounds %s -> %s\n",
                  result.resolved.name.c_str(), result.metrics.e_bar, result.metrics.max_e,
                  result.bound_check.evaluable ? (result.bound_check.all_pass ? "pass" : "FAIL")
                                               : "not evaluable",
                  run_opts.out_dir.c_str());
    } else if (sweep_cmd->parsed()) {
      trackopt::SweepSpec spec;
      spec.base = resolve_scenario(sweep_opts);
      spec.values = parse_sweep_values(sweep_arg, spec.param);
      const auto rows = trackopt::run_sweep(spec, sweep_opts.out_dir);
      bool any_failed = false;
      for (const auto& row : rows) {
        if (row.ok)
          std::printf("%s = %g: e_bar = %.6g, max_e = %.6g%s\n", spec.param.c_str(), row.value,
                      row.e_bar, row.max_e, row.admissible ? "" : "  [delta_c >= delta_bar]");
        else {
          any_failed = true;
          std::printf("%s = %g: FAILED (%s)\n", spec.param.c_str(), row.value, row.error.c_str());
        }
      }
      std::printf("comparison table -> %s/comparison.csv\n", sweep_opts.out_dir.c_str());
      if (any_failed) return 3;
    } else if (stab_cmd->parsed()) {
      const auto scenario = resolve_scenario(stab_opts);
      trackopt::write_stability_report(scenario, stab_opts.out_dir);
      std::cout << trackopt::to_text(trackopt::stability_report(scenario));
    } else if (cmp_cmd->parsed()) {
      const auto result = trackopt::compare_central(resolve_scenario(cmp_opts), cmp_opts.out_dir);
      std::printf("e_bar distributed = %.6g, central = %.6g -> %s\n", result.e_bar_distributed,
                  result.e_bar_central, cmp_opts.out_dir.c_str());
    }
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "validation error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "runtime error: %s\n", ex.what());
    return 3;
  }
  return 0;
}
