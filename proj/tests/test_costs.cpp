#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "test_support.hpp"
#include "trackopt/costs.hpp"

using namespace trackopt;

namespace {

Problem sec4_problem() {
  std::vector<std::shared_ptr<const CostModel>> costs;
  for (int i = 1; i <= 5; ++i)
    costs.push_back(std::make_shared<QuadraticSinusoidalCost>(i, i, 0.05));
  return Problem(Graph::ring(5), std::move(costs));
}

// Central finite differences used as the independent derivative oracle.
double fd_gradient(const CostModel& c, double x, double t, double h) {
  return (c.value({x + h}, t) - c.value({x - h}, t)) / (2.0 * h);
}

}  // namespace

TEST_CASE("derivatives of the scalar family") {
  const QuadraticSinusoidalCost c(2.0, 2.0, 0.05);
  const Derivatives d = derivatives(c, {1.0}, 0.0);
  CHECK(d.gradient[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(d.hessian(0, 0) == 4.0);
  CHECK(d.grad_time[0] == doctest::Approx(0.1).epsilon(1e-15));

  const QuadraticSinusoidalCost any(3.0, 7.0, 0.2);
  CHECK(any.gradient({0.0}, 0.0)[0] == 0.0);  // sin(0) = 0 at the origin

  const QuadraticSinusoidalCost stat(1.0, 0.0, 0.05);
  CHECK(stat.gradient({3.0}, 17.0)[0] == doctest::Approx(6.0));
  CHECK(stat.hessian({3.0}, 17.0)(0, 0) == 2.0);
  CHECK(stat.grad_time({3.0}, 17.0)[0] == 0.0);
}

TEST_CASE("derivatives reject dimension mismatches") {
  const QuadraticSinusoidalCost c(1.0, 1.0, 0.05);
  CHECK_THROWS(derivatives(c, {1.0, 2.0}, 0.0));
  CHECK_THROWS(QuadraticSinusoidalCost(0.0, 1.0, 0.05));  // curvature must be positive
}

TEST_CASE("analytic derivatives match finite differences, scalar family") {
  std::mt19937 rng(211);
  std::uniform_real_distribution<double> xs(-3.0, 3.0), ts(0.0, 60.0), as(0.5, 5.0), bs(0.0, 5.0);
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const QuadraticSinusoidalCost c(as(rng), bs(rng), 0.05, xs(rng) * 0.1);
    const double x = xs(rng), t = ts(rng);
    const Derivatives d = derivatives(c, {x}, t);

    const double g_fd = fd_gradient(c, x, t, h);
    CHECK(std::fabs(g_fd - d.gradient[0]) <= 1e-6 * std::max(1.0, std::fabs(d.gradient[0])));

    const double h_fd = (c.gradient({x + h}, t)[0] - c.gradient({x - h}, t)[0]) / (2.0 * h);
    CHECK(std::fabs(h_fd - d.hessian(0, 0)) <= 1e-6 * std::max(1.0, std::fabs(d.hessian(0, 0))));

    const double gt_fd = (c.gradient({x}, t + h)[0] - c.gradient({x}, t - h)[0]) / (2.0 * h);
    CHECK(std::fabs(gt_fd - d.grad_time[0]) <= 1e-6 * std::max(1.0, std::fabs(d.grad_time[0])));
  }
}

TEST_CASE("analytic derivatives match finite differences, vector family") {
  std::mt19937 rng(223);
  std::uniform_real_distribution<double> xs(-2.0, 2.0), ts(0.0, 60.0);
  const int n = 3;
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix a = ttest::random_spd(rng, n, 1.0);
    Vector c0(n), c1(n);
    for (double& v : c0) v = xs(rng);
    for (double& v : c1) v = xs(rng);
    const QuadraticVectorCost c(a, c0, c1, 2.0, 0.05);

    Vector x(n);
    for (double& v : x) v = xs(rng);
    const double t = ts(rng);
    const Derivatives d = derivatives(c, x, t);

    for (int k = 0; k < n; ++k) {
      Vector xp = x, xm = x;
      xp[static_cast<std::size_t>(k)] += h;
      xm[static_cast<std::size_t>(k)] -= h;
      const double g_fd = (c.value(xp, t) - c.value(xm, t)) / (2.0 * h);
      CHECK(std::fabs(g_fd - d.gradient[static_cast<std::size_t>(k)]) <=
            1e-6 * std::max(1.0, std::fabs(d.gradient[static_cast<std::size_t>(k)])));

      const Vector gp = c.gradient(xp, t), gm = c.gradient(xm, t);
      for (int r = 0; r < n; ++r) {
        const double h_fd = (gp[static_cast<std::size_t>(r)] - gm[static_cast<std::size_t>(r)]) / (2.0 * h);
        CHECK(std::fabs(h_fd - d.hessian(r, k)) <= 1e-6 * std::max(1.0, std::fabs(d.hessian(r, k))));
      }
    }
    const Vector gtp = c.gradient(x, t + h), gtm = c.gradient(x, t - h);
    for (int k = 0; k < n; ++k) {
      const double gt_fd = (gtp[static_cast<std::size_t>(k)] - gtm[static_cast<std::size_t>(k)]) / (2.0 * h);
      CHECK(std::fabs(gt_fd - d.grad_time[static_cast<std::size_t>(k)]) <=
            1e-6 * std::max(1.0, std::fabs(d.grad_time[static_cast<std::size_t>(k)])));
    }
  }
}

TEST_CASE("descent_direction hand cases") {
  // Single quadratic agent: d = (2)^-1 * 2 = 1 at x = 1.
  Problem single(Graph::path(1), {std::make_shared<QuadraticSinusoidalCost>(1.0, 0.0, 0.05)});
  CHECK(descent_direction(single, {1.0}, 3.0)[0] == doctest::Approx(1.0).epsilon(1e-15));

  // Paper-style problem at the origin and t = 0: all gradients vanish but the
  // mixed derivatives give d = (sum 2i)^-1 sum i*omega = omega/2.
  const Problem p = sec4_problem();
  CHECK(descent_direction(p, Vector(5, 0.0), 0.0)[0] == doctest::Approx(0.025).epsilon(1e-14));

  // Scalar weighted ratio: H = (2,4,6), g+h = (1,2,3) -> 6/12.
  std::vector<std::shared_ptr<const CostModel>> costs;
  for (int i = 1; i <= 3; ++i) costs.push_back(std::make_shared<QuadraticSinusoidalCost>(i, 0.0, 0.05));
  Problem p3(Graph::complete(3), std::move(costs));
  CHECK(descent_direction(p3, {0.5, 0.5, 0.5}, 0.0)[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("descent_direction is bounded by C_d inside the sampled region") {
  const Problem p = sec4_problem();
  Box region{{-1.5}, {1.5}};
  const CostBounds b = estimate_bounds(p, region, 0.0, 60.0, 400);

  std::mt19937 rng(229);
  std::uniform_real_distribution<double> xs(-1.5, 1.5), ts(0.0, 60.0);
  for (int rep = 0; rep < 200; ++rep) {
    Vector states(5);
    for (double& v : states) v = xs(rng);
    const Vector d = descent_direction(p, states, ts(rng));
    CHECK(norm2(d) <= b.c_d() + 1e-12);
  }
}

TEST_CASE("optimal_trajectory closed forms") {
  const Problem p = sec4_problem();
  CHECK(std::fabs(optimal_trajectory(p, 0.0)[0]) <= 1e-15);

  for (double t : {3.7, 12.0, 41.5}) {
    double acc = 0.0;
    for (int i = 1; i <= 5; ++i) acc += std::sin(0.05 * i * t);
    CHECK(optimal_trajectory(p, t)[0] == doctest::Approx(-acc / 30.0).epsilon(1e-14));
  }

  Problem single(Graph::path(1), {std::make_shared<QuadraticSinusoidalCost>(1.0, 1.0, 0.05)});
  for (double t : {0.0, 5.0, 20.0})
    CHECK(optimal_trajectory(single, t)[0] == doctest::Approx(-0.5 * std::sin(0.05 * t)).epsilon(1e-14));
}

TEST_CASE("optimal trajectory is stationary for the average cost") {
  const Problem p = sec4_problem();
  for (int k = 0; k <= 20; ++k) {
    const double t = 2.5 * k;
    const Vector star = optimal_trajectory(p, t);
    double grad_sum = 0.0;
    for (const auto& c : p.costs) grad_sum += c->gradient(star, t)[0];
    CHECK(std::fabs(grad_sum / 5.0) <= 1e-12);
  }
}

TEST_CASE("numeric_optimum cross-validates the closed form") {
  const Problem p = sec4_problem();
  for (int k = 0; k < 100; ++k) {
    const double t = 0.5 * k;
    const Vector numeric = numeric_optimum(p, t, 1e-12);
    CHECK(std::fabs(numeric[0] - optimal_trajectory(p, t)[0]) <= 1e-9);
  }
}

TEST_CASE("numeric_optimum recovers a shifted static optimum") {
  // f^i = (x - c_i)^2 built from the vector family: 0.5 x^T (2) x - 2 c_i x.
  std::vector<std::shared_ptr<const CostModel>> costs;
  const Vector centers = {1.0, -2.0, 4.0};
  for (double c : centers)
    costs.push_back(std::make_shared<QuadraticVectorCost>(Matrix(1, 1, {2.0}), Vector{-2.0 * c},
                                                          Vector{0.0}, 0.0, 0.05));
  Problem p(Graph::complete(3), std::move(costs));
  const double mean = (1.0 - 2.0 + 4.0) / 3.0;
  CHECK(numeric_optimum(p, 7.0, 1e-12)[0] == doctest::Approx(mean).epsilon(1e-12));
  CHECK(optimal_trajectory(p, 7.0)[0] == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("estimate_bounds on the scalar family") {
  Problem one(Graph::path(1), {std::make_shared<QuadraticSinusoidalCost>(1.0, 1.0, 0.05)});
  const CostBounds b = estimate_bounds(one, Box{{-1.0}, {1.0}}, 0.0, 50.0, 100);
  CHECK(b.m == doctest::Approx(2.0).epsilon(1e-14));  // constant Hessian, no inflation
  CHECK(b.l == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b.c0 <= 3.0 * 1.1 + 1e-12);  // |2x + sin| <= 3 on the region
  CHECK(b.c0 > 0.0);
  CHECK(b.c1 <= 0.05 * 1.1 + 1e-12);  // |omega cos| <= omega
  CHECK(b.provenance == CostBounds::Provenance::Sampled);

  const Problem p = sec4_problem();
  const CostBounds bp = estimate_bounds(p, Box{{-2.0}, {2.0}}, 0.0, 50.0, 200);
  CHECK(bp.c1 <= 0.25 * 1.1 + 1e-12);  // max_i (b_i omega) = 0.25
  CHECK(bp.m == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(bp.l == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("problem construction is validated") {
  std::vector<std::shared_ptr<const CostModel>> two;
  two.push_back(std::make_shared<QuadraticSinusoidalCost>(1.0, 1.0, 0.05));
  two.push_back(std::make_shared<QuadraticSinusoidalCost>(2.0, 1.0, 0.05));
  CHECK_THROWS(Problem(Graph::ring(3), std::move(two)));  // count mismatch

  CHECK_THROWS(CostBounds{0.0, 1.0, 0.0, 0.0}.validate());
  CHECK_THROWS(CostBounds{2.0, 1.0, 0.0, 0.0}.validate());  // m > l
}
