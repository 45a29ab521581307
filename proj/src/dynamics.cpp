#include "trackopt/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trackopt {

void OrchestratorConfig::validate() const {
  if (!(delta_t > 0.0)) throw std::invalid_argument("OrchestratorConfig: delta_t must be positive");
  if (k_bar < 1) throw std::invalid_argument("OrchestratorConfig: k_bar must be >= 1");
  if (!(delta_c > 0.0)) throw std::invalid_argument("OrchestratorConfig: delta_c must be positive");
  if (substeps < 1) throw std::invalid_argument("OrchestratorConfig: substeps must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("OrchestratorConfig: horizon must be positive");
  const double intervals = horizon / delta_t;
  if (std::fabs(intervals - std::round(intervals)) > 1e-9)
    throw std::invalid_argument("OrchestratorConfig: horizon must be a multiple of delta_t");
}

Vector rhs(const Vector& x, const Vector& psi, const Graph& g) {
  if (x.size() != psi.size()) throw std::invalid_argument("rhs: x and psi dimension mismatch");
  const int N = g.n_agents();
  if (x.size() % static_cast<std::size_t>(N) != 0)
    throw std::invalid_argument("rhs: state size is not a multiple of the agent count");
  const int n = static_cast<int>(x.size()) / N;
  Vector dx = apply_laplacian_stacked(g, x, n);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = -psi[i] - dx[i];
  return dx;
}

namespace {

void check_finite(const Vector& x, double t) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) {
      std::ostringstream msg;
      msg << "integration aborted: non-finite state entry " << i << " at t = " << t;
      throw std::runtime_error(msg.str());
    }
}

// One classical RK4 step of the autonomous tracking dynamics.
Vector rk4_step(const Vector& x, const Vector& psi, const Graph& g, double h) {
  const Vector k1 = rhs(x, psi, g);
  const Vector k2 = rhs(x + (0.5 * h) * k1, psi, g);
  const Vector k3 = rhs(x + (0.5 * h) * k2, psi, g);
  const Vector k4 = rhs(x + h * k3, psi, g);
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

TrackerState integrate_interval(TrackerState ts, const Graph& g, double delta_t, int substeps) {
  if (!(delta_t > 0.0) || substeps < 1)
    throw std::invalid_argument("integrate_interval: need delta_t > 0 and substeps >= 1");
  const double h = delta_t / substeps;
  for (int s = 0; s < substeps; ++s) {
    ts.x = rk4_step(ts.x, ts.psi, g, h);
    ts.t += h;
    check_finite(ts.x, ts.t);
  }
  return ts;
}

TimeSeries orchestrate(const Problem& p, const OrchestratorConfig& cfg, const Vector& x0,
                       const Vector& v0, const Vector& z0, const RefreshObserver& on_refresh) {
  cfg.validate();
  const int N = p.n_agents();
  const int n = p.dimension;
  const std::size_t stacked = static_cast<std::size_t>(N) * static_cast<std::size_t>(n);
  if (x0.size() != stacked || v0.size() != stacked || z0.size() != stacked)
    throw std::invalid_argument("orchestrate: x0, v0, z0 must have N*n entries");

  const long intervals = std::lround(cfg.horizon / cfg.delta_t);
  const double h = cfg.delta_t / cfg.substeps;
  const bool has_oracle = [&p] {
    for (const auto& c : p.costs)
      if (!c->quadratic_form(0.0)) return false;
    return true;
  }();

  TimeSeries out;
  out.n_agents = N;
  out.dimension = n;
  out.times.reserve(static_cast<std::size_t>(intervals * cfg.substeps + 1));

  Vector x = x0;
  ReferenceSet refs = make_references(p, x, 0.0);
  ConsensusState cons = make_consensus_state(v0, z0, refs);
  Vector psi = cons.p;

  auto record_sample = [&](double t, const Vector& state, const Vector& held_psi, long interval) {
    out.times.push_back(t);
    out.states.push_back(state);
    out.psis.push_back(held_psi);
    out.interval_index.push_back(interval);
    out.x_star.push_back(has_oracle ? optimal_trajectory(p, t) : numeric_optimum(p, t, 1e-10));
  };
  auto record_consensus = [&]() {
    const Vector pbar = weighted_average(refs);
    Vector stacked_err = cons.p;
    for (int i = 0; i < N; ++i)
      for (int d = 0; d < n; ++d)
        stacked_err[static_cast<std::size_t>(i * n + d)] -= pbar[static_cast<std::size_t>(d)];
    out.consensus_steps.push_back(cons.step);
    out.consensus_p.push_back(cons.p);
    out.consensus_pbar.push_back(pbar);
    out.consensus_err.push_back(norm2(stacked_err));
  };

  record_sample(0.0, x, psi, 0);
  record_consensus();

  for (long s = 0; s < intervals; ++s) {
    const double t_s = s * cfg.delta_t;

    psi = cons.p;  // psi(t) = p(s k_bar), sampled before the refresh
    refs = make_references(p, x, t_s);
    cons = resync_output(std::move(cons), refs);
    if (on_refresh) on_refresh(refs, s);

    for (long k = 0; k < cfg.k_bar; ++k) {
      cons = step(cons, refs, p.graph, cfg.delta_c);
      record_consensus();
    }

    for (int sub = 0; sub < cfg.substeps; ++sub) {
      x = rk4_step(x, psi, p.graph, h);
      const double t = t_s + (sub + 1) * h;
      check_finite(x, t);
      record_sample(t, x, psi, s);
    }
  }
  return out;
}

TimeSeries central_baseline(const Problem& p, const Vector& x0, double step, double horizon) {
  if (!(step > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("central_baseline: need step > 0 and horizon > 0");
  const int n = p.dimension;
  if (static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("central_baseline: x0 must have dimension n");

  const bool has_oracle = [&p] {
    for (const auto& c : p.costs)
      if (!c->quadratic_form(0.0)) return false;
    return true;
  }();

  // Flow of the averaged cost evaluated at a single shared state.
  auto flow = [&p, n](const Vector& x, double t) {
    Matrix h_sum(n, n);
    Vector g_sum(static_cast<std::size_t>(n), 0.0);
    for (const auto& c : p.costs) {
      const Derivatives d = derivatives(*c, x, t);
      h_sum = h_sum + d.hessian;
      for (int k = 0; k < n; ++k)
        g_sum[static_cast<std::size_t>(k)] += d.gradient[static_cast<std::size_t>(k)] + d.grad_time[static_cast<std::size_t>(k)];
    }
    return -1.0 * solve_linear(h_sum, g_sum);
  };

  TimeSeries out;
  out.n_agents = 1;
  out.dimension = n;

  const long steps = std::lround(horizon / step);
  Vector x = x0;
  double t = 0.0;
  auto record = [&](double tt, const Vector& state) {
    out.times.push_back(tt);
    out.states.push_back(state);
    out.interval_index.push_back(0);
    out.x_star.push_back(has_oracle ? optimal_trajectory(p, tt) : numeric_optimum(p, tt, 1e-10));
  };
  record(0.0, x);
  for (long k = 0; k < steps; ++k) {
    const Vector k1 = flow(x, t);
    const Vector k2 = flow(x + (0.5 * step) * k1, t + 0.5 * step);
    const Vector k3 = flow(x + (0.5 * step) * k2, t + 0.5 * step);
    const Vector k4 = flow(x + step * k3, t + step);
    for (int d = 0; d < n; ++d) {
      const std::size_t i = static_cast<std::size_t>(d);
      x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t = (k + 1) * step;
    check_finite(x, t);
    record(t, x);
  }
  return out;
}

}  // namespace trackopt
