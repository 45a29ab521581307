#pragma once

// Tracking-error and bound-verification metrics over simulated trajectories.

#include <string>
#include <vector>

#include "trackopt/costs.hpp"
#include "trackopt/dynamics.hpp"
#include "trackopt/stability.hpp"

namespace trackopt {

struct MetricSeries {
  std::vector<double> e;             // ||x(t) - 1 (x) x*(t)||
  std::vector<double> grad_norm;     // ||(1/N) sum grad f^i(x^i, t)||
  std::vector<double> disagreement;  // ||x - 1 (x) mean(x)||
  std::vector<double> consensus_err; // copied from the run's consensus log
  double e_bar = 0.0;                // time average of e over the horizon
  double max_e = 0.0;
};

/// Pointwise metrics for every sample of a run. Uses the series' recorded
/// x*(t) when present, the problem's optimum oracle otherwise.
MetricSeries tracking_error(const TimeSeries& ts, const Problem& p);

/// Trapezoidal time average of a uniformly sampled series over [0, horizon].
double average_error(const std::vector<double>& e, double dt_sample, double horizon);

struct BoundCheckItem {
  std::string name;
  bool evaluable = true;
  bool pass = false;
  double bound = 0.0;
  double worst = 0.0;
  double margin = 0.0;  // worst/bound; 0 when both vanish
};

struct BoundCheck {
  std::vector<BoundCheckItem> items;
  bool all_pass = false;
  bool evaluable = true;
};

/// Checks the consensus-error bound N C_bar (1+phi)/(1-phi^2) over every
/// recorded consensus step and the gradient bound C_nabla eps_bar for all
/// samples past transient_fraction * horizon. Not evaluable when the report
/// has phi >= 1.
BoundCheck check_bounds(const TimeSeries& ts, const MetricSeries& m, const StabilityReport& report,
                        double transient_fraction);

}  // namespace trackopt
