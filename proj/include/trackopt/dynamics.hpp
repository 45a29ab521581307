#pragma once

// Continuous-time tracking dynamics xdot = -psi - (L (x) I) x under the
// sampled switching signal psi, the two-timescale orchestration with the
// consensus estimator, and the centralized prediction-correction baseline.

#include <functional>
#include <vector>

#include "trackopt/consensus.hpp"
#include "trackopt/costs.hpp"
#include "trackopt/graph.hpp"

namespace trackopt {

struct TrackerState {
  Vector x;    // stacked N*n agent states
  Vector psi;  // stacked held descent estimates
  double t = 0.0;
  long interval = 0;
};

struct OrchestratorConfig {
  double delta_t = 0.1;  // switching period
  long k_bar = 1;        // consensus steps per period
  double delta_c = 0.0;  // consensus step size (resolved, positive)
  int substeps = 10;     // integrator steps per period
  double horizon = 0.0;  // total simulated time, multiple of delta_t

  void validate() const;
};

/// Simulation output sampled at integrator substep resolution plus the
/// consensus-chain log sampled per discrete step.
struct TimeSeries {
  int n_agents = 0;
  int dimension = 0;

  std::vector<double> times;
  std::vector<Vector> states;        // stacked per sample
  std::vector<Vector> psis;          // psi in force at each sample
  std::vector<Vector> x_star;        // optimum oracle per sample, dimension n
  std::vector<long> interval_index;  // which switching interval produced the sample

  std::vector<long> consensus_steps;
  std::vector<Vector> consensus_p;     // stacked p(k)
  std::vector<Vector> consensus_pbar;  // weighted average under the refs in force
  std::vector<double> consensus_err;   // ||p(k) - stacked pbar(k)||
};

/// Right-hand side -psi - (L (x) I_n) x.
Vector rhs(const Vector& x, const Vector& psi, const Graph& g);

/// Classical fixed-step 4th-order integration over one switching interval
/// with psi held constant. Aborts on non-finite state.
TrackerState integrate_interval(TrackerState ts, const Graph& g, double delta_t, int substeps);

using RefreshObserver = std::function<void(const ReferenceSet& refs, long interval)>;

/// The two-timescale loop. Per interval s: (1) psi <- p(s k_bar), computed
/// before the reference refresh; (2) refresh references from x(t_s), t_s;
/// (3) advance the consensus chain k_bar steps; (4) integrate the tracking
/// dynamics over [t_s, t_s + delta_t) with psi held.
TimeSeries orchestrate(const Problem& p, const OrchestratorConfig& cfg, const Vector& x0,
                       const Vector& v0, const Vector& z0, const RefreshObserver& on_refresh = {});

/// Centralized prediction-correction flow
/// xdot = -(sum H^i(x,t))^-1 sum (g^i + h^i)(x,t) on a single state of
/// dimension n, integrated with fixed-step RK4.
TimeSeries central_baseline(const Problem& p, const Vector& x0, double step, double horizon);

}  // namespace trackopt
