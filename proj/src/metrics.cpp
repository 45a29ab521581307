#include "trackopt/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trackopt {

MetricSeries tracking_error(const TimeSeries& ts, const Problem& p) {
  const int N = ts.n_agents;
  const int n = ts.dimension;
  if (N < 1 || ts.times.empty()) throw std::invalid_argument("tracking_error: empty series");

  MetricSeries m;
  const std::size_t samples = ts.times.size();
  m.e.resize(samples);
  m.grad_norm.resize(samples);
  m.disagreement.resize(samples);
  m.consensus_err = ts.consensus_err;

  Vector xi(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = ts.times[s];
    const Vector& x = ts.states[s];
    const Vector star = s < ts.x_star.size() && !ts.x_star[s].empty() ? ts.x_star[s]
                                                                      : optimum_oracle(p, t);

    double err2 = 0.0;
    Vector mean(static_cast<std::size_t>(n), 0.0);
    Vector grad_sum(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < N; ++i) {
      for (int d = 0; d < n; ++d) {
        const double v = x[static_cast<std::size_t>(i * n + d)];
        const double diff = v - star[static_cast<std::size_t>(d)];
        err2 += diff * diff;
        mean[static_cast<std::size_t>(d)] += v / N;
        xi[static_cast<std::size_t>(d)] = v;
      }
      if (N == static_cast<int>(p.costs.size())) {
        const Vector g = p.costs[static_cast<std::size_t>(i)]->gradient(xi, t);
        for (int d = 0; d < n; ++d) grad_sum[static_cast<std::size_t>(d)] += g[static_cast<std::size_t>(d)];
      }
    }
    m.e[s] = std::sqrt(err2);
    m.grad_norm[s] = norm2(grad_sum) / N;

    double dis2 = 0.0;
    for (int i = 0; i < N; ++i)
      for (int d = 0; d < n; ++d) {
        const double diff = x[static_cast<std::size_t>(i * n + d)] - mean[static_cast<std::size_t>(d)];
        dis2 += diff * diff;
      }
    m.disagreement[s] = std::sqrt(dis2);
    m.max_e = std::max(m.max_e, m.e[s]);
  }

  const double horizon = ts.times.back() - ts.times.front();
  if (samples > 1 && horizon > 0.0)
    m.e_bar = average_error(m.e, horizon / static_cast<double>(samples - 1), horizon);
  else
    m.e_bar = m.e.front();
  return m;
}

double average_error(const std::vector<double>& e, double dt_sample, double horizon) {
  if (e.empty()) throw std::invalid_argument("average_error: empty series");
  if (!(dt_sample > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("average_error: need positive sample step and horizon");
  if (e.size() == 1) return e.front();
  double acc = 0.5 * (e.front() + e.back());
  for (std::size_t i = 1; i + 1 < e.size(); ++i) acc += e[i];
  return acc * dt_sample / horizon;
}

namespace {

BoundCheckItem make_item(const std::string& name, bool evaluable, double bound, double worst) {
  BoundCheckItem item;
  item.name = name;
  item.evaluable = evaluable;
  item.bound = bound;
  item.worst = worst;
  if (!evaluable) {
    item.pass = false;
    item.margin = std::numeric_limits<double>::quiet_NaN();
    return item;
  }
  item.pass = worst <= bound;
  if (bound > 0.0)
    item.margin = worst / bound;
  else
    item.margin = (worst == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  return item;
}

}  // namespace

BoundCheck check_bounds(const TimeSeries& ts, const MetricSeries& m, const StabilityReport& report,
                        double transient_fraction) {
  if (!(transient_fraction >= 0.0) || !(transient_fraction < 1.0))
    throw std::invalid_argument("check_bounds: transient_fraction must lie in [0, 1)");

  BoundCheck out;
  out.evaluable = report.bounds_evaluable;

  double worst_cons = 0.0;
  for (double v : m.consensus_err) worst_cons = std::max(worst_cons, v);
  out.items.push_back(
      make_item("consensus_error", out.evaluable, report.consensus_bound, worst_cons));

  double worst_grad = 0.0;
  const double t_min = ts.times.empty() ? 0.0 : transient_fraction * ts.times.back();
  for (std::size_t s = 0; s < ts.times.size(); ++s)
    if (ts.times[s] >= t_min && s < m.grad_norm.size())
      worst_grad = std::max(worst_grad, m.grad_norm[s]);
  out.items.push_back(
      make_item("gradient_norm", out.evaluable, report.gradient_bound, worst_grad));

  out.all_pass = out.evaluable;
  for (const auto& item : out.items) out.all_pass = out.all_pass && item.pass;
  return out;
}

}  // namespace trackopt
