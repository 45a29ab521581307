#include "trackopt/costs.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace trackopt {

namespace {

void check_dimension(const CostModel& c, const Vector& x) {
  if (static_cast<int>(x.size()) != c.dimension())
    throw std::invalid_argument("cost evaluation: state dimension mismatch");
}

}  // namespace

QuadraticSinusoidalCost::QuadraticSinusoidalCost(double curvature, double freq_multiplier,
                                                 double base_freq, double offset)
    : a_(curvature), b_(freq_multiplier), omega_(base_freq), offset_(offset) {
  if (!(a_ > 0.0)) throw std::invalid_argument("QuadraticSinusoidalCost: curvature must be positive");
  if (!std::isfinite(b_) || !std::isfinite(omega_) || !std::isfinite(offset_))
    throw std::invalid_argument("QuadraticSinusoidalCost: parameters must be finite");
}

double QuadraticSinusoidalCost::value(const Vector& x, double t) const {
  check_dimension(*this, x);
  return a_ * x[0] * x[0] + (offset_ + std::sin(b_ * omega_ * t)) * x[0];
}

Vector QuadraticSinusoidalCost::gradient(const Vector& x, double t) const {
  check_dimension(*this, x);
  return {2.0 * a_ * x[0] + offset_ + std::sin(b_ * omega_ * t)};
}

Matrix QuadraticSinusoidalCost::hessian(const Vector& x, double) const {
  check_dimension(*this, x);
  return Matrix(1, 1, {2.0 * a_});
}

Vector QuadraticSinusoidalCost::grad_time(const Vector& x, double t) const {
  check_dimension(*this, x);
  return {b_ * omega_ * std::cos(b_ * omega_ * t)};
}

std::optional<QuadraticForm> QuadraticSinusoidalCost::quadratic_form(double t) const {
  return QuadraticForm{Matrix(1, 1, {2.0 * a_}), {offset_ + std::sin(b_ * omega_ * t)}};
}

QuadraticVectorCost::QuadraticVectorCost(Matrix a, Vector lin_const, Vector lin_sin,
                                         double freq_multiplier, double base_freq)
    : a_(std::move(a)), c0_(std::move(lin_const)), c1_(std::move(lin_sin)),
      b_(freq_multiplier), omega_(base_freq) {
  const int n = a_.rows();
  if (n < 1 || a_.cols() != n) throw std::invalid_argument("QuadraticVectorCost: A must be square");
  if (static_cast<int>(c0_.size()) != n || static_cast<int>(c1_.size()) != n)
    throw std::invalid_argument("QuadraticVectorCost: linear term dimension mismatch");
  const SymmetricEigen e = eig_symmetric(a_);  // also rejects asymmetric A
  if (e.values.front() <= 0.0)
    throw std::invalid_argument("QuadraticVectorCost: A must be positive definite");
}

double QuadraticVectorCost::value(const Vector& x, double t) const {
  check_dimension(*this, x);
  const Vector ax = a_ * x;
  const double s = std::sin(b_ * omega_ * t);
  double v = 0.5 * dot(x, ax);
  for (std::size_t i = 0; i < x.size(); ++i) v += (c0_[i] + s * c1_[i]) * x[i];
  return v;
}

Vector QuadraticVectorCost::gradient(const Vector& x, double t) const {
  check_dimension(*this, x);
  Vector g = a_ * x;
  const double s = std::sin(b_ * omega_ * t);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += c0_[i] + s * c1_[i];
  return g;
}

Matrix QuadraticVectorCost::hessian(const Vector& x, double) const {
  check_dimension(*this, x);
  return a_;
}

Vector QuadraticVectorCost::grad_time(const Vector& x, double t) const {
  check_dimension(*this, x);
  return (b_ * omega_ * std::cos(b_ * omega_ * t)) * c1_;
}

std::optional<QuadraticForm> QuadraticVectorCost::quadratic_form(double t) const {
  const double s = std::sin(b_ * omega_ * t);
  Vector b(c0_.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = c0_[i] + s * c1_[i];
  return QuadraticForm{a_, std::move(b)};
}

Derivatives derivatives(const CostModel& c, const Vector& x, double t) {
  check_dimension(c, x);
  return Derivatives{c.gradient(x, t), c.hessian(x, t), c.grad_time(x, t)};
}

void CostBounds::validate() const {
  if (!(m > 0.0) || !(l >= m)) throw std::invalid_argument("CostBounds: need 0 < m <= l");
  if (c0 < 0.0 || c1 < 0.0) throw std::invalid_argument("CostBounds: C0, C1 must be nonnegative");
}

Problem::Problem(Graph graph_in, std::vector<std::shared_ptr<const CostModel>> costs_in)
    : graph(std::move(graph_in)), costs(std::move(costs_in)) {
  if (static_cast<int>(costs.size()) != graph.n_agents())
    throw std::invalid_argument("Problem: need one cost per agent");
  for (const auto& c : costs)
    if (!c) throw std::invalid_argument("Problem: null cost model");
  dimension = costs.front()->dimension();
  for (const auto& c : costs)
    if (c->dimension() != dimension)
      throw std::invalid_argument("Problem: all costs must share one dimension");
}

bool Problem::constant_hessians() const {
  for (const auto& c : costs)
    if (!c->constant_hessian()) return false;
  return true;
}

namespace {

Vector agent_block(const Vector& stacked, int agent, int n) {
  Vector x(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) x[static_cast<std::size_t>(d)] = stacked[static_cast<std::size_t>(agent * n + d)];
  return x;
}

}  // namespace

Vector descent_direction(const Problem& p, const Vector& stacked_states, double t) {
  const int n = p.dimension;
  const int N = p.n_agents();
  if (static_cast<int>(stacked_states.size()) != N * n)
    throw std::invalid_argument("descent_direction: stacked states must have N*n entries");

  Matrix h_sum(n, n);
  Vector rhs(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < N; ++i) {
    const Vector xi = agent_block(stacked_states, i, n);
    const Derivatives d = derivatives(*p.costs[static_cast<std::size_t>(i)], xi, t);
    h_sum = h_sum + d.hessian;
    for (int k = 0; k < n; ++k)
      rhs[static_cast<std::size_t>(k)] += d.gradient[static_cast<std::size_t>(k)] + d.grad_time[static_cast<std::size_t>(k)];
  }
  return solve_linear(h_sum, rhs);
}

Vector optimal_trajectory(const Problem& p, double t) {
  const int n = p.dimension;
  Matrix a_sum(n, n);
  Vector b_sum(static_cast<std::size_t>(n), 0.0);
  for (const auto& c : p.costs) {
    const auto form = c->quadratic_form(t);
    if (!form)
      throw std::runtime_error("optimal_trajectory: no closed form for this cost family; use numeric_optimum");
    a_sum = a_sum + form->a;
    for (int k = 0; k < n; ++k) b_sum[static_cast<std::size_t>(k)] += form->b[static_cast<std::size_t>(k)];
  }
  return solve_linear(a_sum, -1.0 * b_sum);
}

Vector numeric_optimum(const Problem& p, double t, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("numeric_optimum: tol must be positive");
  const int n = p.dimension;
  const int N = p.n_agents();
  Vector x(static_cast<std::size_t>(n), 0.0);
  for (int it = 0; it < 100; ++it) {
    Matrix h_sum(n, n);
    Vector g_sum(static_cast<std::size_t>(n), 0.0);
    for (const auto& c : p.costs) {
      const Vector g = c->gradient(x, t);
      h_sum = h_sum + c->hessian(x, t);
      for (int k = 0; k < n; ++k) g_sum[static_cast<std::size_t>(k)] += g[static_cast<std::size_t>(k)];
    }
    if (norm2(g_sum) / N <= tol) return x;
    x = x - solve_linear(h_sum, g_sum);
  }
  throw std::runtime_error("numeric_optimum: Newton iteration did not reach tolerance in 100 steps");
}

Vector optimum_oracle(const Problem& p, double t) {
  try {
    return optimal_trajectory(p, t);
  } catch (const std::runtime_error&) {
    return numeric_optimum(p, t, 1e-10);
  }
}

CostBounds estimate_bounds(const Problem& p, const Box& region, double t0, double t1, int samples) {
  const int n = p.dimension;
  if (static_cast<int>(region.lo.size()) != n || static_cast<int>(region.hi.size()) != n)
    throw std::invalid_argument("estimate_bounds: region dimension mismatch");
  for (int d = 0; d < n; ++d)
    if (!(region.lo[static_cast<std::size_t>(d)] <= region.hi[static_cast<std::size_t>(d)]))
      throw std::invalid_argument("estimate_bounds: region lo must not exceed hi");
  if (samples < 1) throw std::invalid_argument("estimate_bounds: need samples >= 1");
  if (!(t1 >= t0)) throw std::invalid_argument("estimate_bounds: need t1 >= t0");

  std::vector<Vector> points;
  std::vector<double> times;

  // Box corners on a time grid cover the extrema of quadratic families.
  const int time_grid = 17;
  if (n <= 8) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vector x(static_cast<std::size_t>(n));
      for (int d = 0; d < n; ++d)
        x[static_cast<std::size_t>(d)] =
            (mask >> d) & 1 ? region.hi[static_cast<std::size_t>(d)] : region.lo[static_cast<std::size_t>(d)];
      for (int k = 0; k < time_grid; ++k) {
        points.push_back(x);
        times.push_back(t0 + (t1 - t0) * k / (time_grid - 1));
      }
    }
  }
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Vector x(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      const double lo = region.lo[static_cast<std::size_t>(d)], hi = region.hi[static_cast<std::size_t>(d)];
      x[static_cast<std::size_t>(d)] = lo + (hi - lo) * unit(rng);
    }
    points.push_back(std::move(x));
    times.push_back(t0 + (t1 - t0) * unit(rng));
  }

  CostBounds b;
  b.m = std::numeric_limits<double>::infinity();
  b.l = 0.0;
  for (std::size_t s = 0; s < points.size(); ++s) {
    for (const auto& c : p.costs) {
      const Derivatives d = derivatives(*c, points[s], times[s]);
      const SymmetricEigen he = eig_symmetric(d.hessian);
      b.m = std::min(b.m, he.values.front());
      b.l = std::max(b.l, he.values.back());
      b.c0 = std::max(b.c0, norm2(d.gradient));
      b.c1 = std::max(b.c1, norm2(d.grad_time));
    }
  }
  b.c0 *= 1.1;
  b.c1 *= 1.1;
  b.provenance = CostBounds::Provenance::Sampled;
  b.validate();
  return b;
}

}  // namespace trackopt
