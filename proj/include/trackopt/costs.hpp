#pragma once

// Time-varying per-agent cost models with exact derivatives, derivative
// bound estimation over an operating region, the global Newton-like descent
// direction, and the analytic optimal trajectory for the quadratic families.

#include <memory>
#include <optional>
#include <vector>

#include "trackopt/graph.hpp"
#include "trackopt/linalg.hpp"

namespace trackopt {

/// f = 0.5 x^T a x + b^T x + const, the structure the closed-form optimum
/// oracle needs at a fixed time.
struct QuadraticForm {
  Matrix a;
  Vector b;
};

class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual int dimension() const = 0;
  virtual double value(const Vector& x, double t) const = 0;
  virtual Vector gradient(const Vector& x, double t) const = 0;
  virtual Matrix hessian(const Vector& x, double t) const = 0;
  /// Mixed derivative d/dt of the gradient.
  virtual Vector grad_time(const Vector& x, double t) const = 0;
  virtual bool constant_hessian() const { return false; }
  /// Present when the cost is quadratic in x at every fixed t.
  virtual std::optional<QuadraticForm> quadratic_form(double /*t*/) const { return std::nullopt; }
};

/// Scalar cost a x^2 + (offset + sin(b w t)) x. offset defaults to zero and
/// supplies a static linear term for time-invariant variants.
class QuadraticSinusoidalCost final : public CostModel {
 public:
  QuadraticSinusoidalCost(double curvature, double freq_multiplier, double base_freq,
                          double offset = 0.0);
  int dimension() const override { return 1; }
  double value(const Vector& x, double t) const override;
  Vector gradient(const Vector& x, double t) const override;
  Matrix hessian(const Vector& x, double t) const override;
  Vector grad_time(const Vector& x, double t) const override;
  bool constant_hessian() const override { return true; }
  std::optional<QuadraticForm> quadratic_form(double t) const override;

  double curvature() const { return a_; }
  double freq_multiplier() const { return b_; }
  double base_freq() const { return omega_; }
  double offset() const { return offset_; }

 private:
  double a_, b_, omega_, offset_;
};

/// Multivariate cost 0.5 x^T A x + (c0 + sin(b w t) c1)^T x with A symmetric
/// positive definite.
class QuadraticVectorCost final : public CostModel {
 public:
  QuadraticVectorCost(Matrix a, Vector lin_const, Vector lin_sin, double freq_multiplier,
                      double base_freq);
  int dimension() const override { return a_.rows(); }
  double value(const Vector& x, double t) const override;
  Vector gradient(const Vector& x, double t) const override;
  Matrix hessian(const Vector& x, double t) const override;
  Vector grad_time(const Vector& x, double t) const override;
  bool constant_hessian() const override { return true; }
  std::optional<QuadraticForm> quadratic_form(double t) const override;

 private:
  Matrix a_;
  Vector c0_, c1_;
  double b_, omega_;
};

struct Derivatives {
  Vector gradient;
  Matrix hessian;
  Vector grad_time;
};

/// All three derivative evaluations at (x, t), with dimension validation.
Derivatives derivatives(const CostModel& c, const Vector& x, double t);

struct CostBounds {
  double m = 0.0;   // strong convexity
  double l = 0.0;   // Lipschitz gradient
  double c0 = 0.0;  // max ||grad_x||
  double c1 = 0.0;  // max ||grad_xt||
  enum class Provenance { Declared, Sampled } provenance = Provenance::Declared;

  void validate() const;
  /// C_d = (C0 + C1)/m, the descent-direction bound.
  double c_d() const { return (c0 + c1) / m; }
};

struct Problem {
  Problem(Graph graph, std::vector<std::shared_ptr<const CostModel>> costs);

  Graph graph;
  std::vector<std::shared_ptr<const CostModel>> costs;
  int dimension = 1;

  int n_agents() const { return graph.n_agents(); }
  bool constant_hessians() const;
};

/// Newton-like global descent direction: solves
/// (sum_i H^i(x^i,t)) d = sum_i (g^i + h^i)(x^i, t) on stacked states.
Vector descent_direction(const Problem& p, const Vector& stacked_states, double t);

/// Closed-form minimizer of the average cost at time t; throws
/// "no closed form" when some cost lacks quadratic structure.
Vector optimal_trajectory(const Problem& p, double t);

/// Newton iteration on the static snapshot of the average cost; returns a
/// point whose average-cost gradient norm is <= tol.
Vector numeric_optimum(const Problem& p, double t, double tol);

/// Closed form when available, numeric fallback (tol 1e-10) otherwise.
Vector optimum_oracle(const Problem& p, double t);

struct Box {
  Vector lo;
  Vector hi;
};

/// Derivative bounds sampled over region x t_range: box corners, a uniform
/// time grid and seeded random interior points. First-derivative norms are
/// inflated by 10%; Hessian bounds are reported as sampled.
CostBounds estimate_bounds(const Problem& p, const Box& region, double t0, double t1, int samples);

}  // namespace trackopt
