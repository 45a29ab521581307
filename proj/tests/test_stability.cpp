#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "trackopt/stability.hpp"

using namespace trackopt;

namespace {

TransformedSystem synthetic(const Matrix& a_bar) {
  TransformedSystem ts;
  ts.a_bar = a_bar;
  ts.n_agents = (a_bar.rows() + 1) / 2;
  ts.dimension = 1;
  return ts;
}

std::vector<Matrix> scalar_hessians(const Vector& h) {
  std::vector<Matrix> out;
  for (double v : h) out.push_back(Matrix(1, 1, {v}));
  return out;
}

// Largest step with spectral radius of I + delta a_bar below one, located by
// bisection; the independent oracle for delta_bar.
double bisect_stability_boundary(const Matrix& a_bar, double upper) {
  auto stable = [&a_bar](double delta) {
    Matrix m = delta * a_bar;
    for (int i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
    return spectral_radius(m) < 1.0;
  };
  double lo = 0.0, hi = upper;
  while (stable(hi)) hi *= 2.0;  // ensure hi is past the boundary
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("build_abar block structure on the two-agent graph") {
  const LaplacianDecomposition d = decompose(Graph::complete(2));
  const double h = 2.0;
  const TransformedSystem ts = build_abar(d, scalar_hessians({h, h}), 1);
  REQUIRE(ts.a_bar.rows() == 3);

  // T diagonalizes the K2 Laplacian, so the top-left block is -diag(h, h+2).
  const Matrix expected(3, 3, {-h, 0, 0, 0, -(h + 2), -1, 0, 4, 0});
  CHECK(max_abs(ts.a_bar - expected) <= 1e-12);

  CHECK(ts.b_bar.rows() == 3);
  CHECK(ts.b_bar.cols() == 4);
}

TEST_CASE("build_abar dimension and definiteness guards") {
  const LaplacianDecomposition d = decompose(Graph::ring(3));
  CHECK_THROWS(build_abar(d, scalar_hessians({1, 2}), 1));         // wrong count
  CHECK_THROWS(build_abar(d, scalar_hessians({0, 0, 0}), 1));      // zero Hessians rejected
  CHECK_THROWS(build_abar(d, scalar_hessians({1, 2, -1}), 1));     // not positive definite

  const TransformedSystem ts = build_abar(d, scalar_hessians({1, 2, 3}), 1);
  CHECK(eig_general(ts.a_bar).size() == 5);  // (2N-1) n eigenvalues
}

TEST_CASE("delta_bar on synthetic spectra") {
  CHECK(delta_bar(synthetic(-1.0 * Matrix::identity(3))) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(delta_bar(synthetic(Matrix::diagonal({-1, -2}))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(delta_bar(synthetic(Matrix::diagonal({-1, 2}))),
                       doctest::Contains("Hurwitz"), std::runtime_error);
}

TEST_CASE("delta_bar matches the bisection oracle on the 5-ring problem") {
  const LaplacianDecomposition d = decompose(Graph::ring(5));
  const TransformedSystem ts = build_abar(d, scalar_hessians({2, 4, 6, 8, 10}), 1);
  const double db = delta_bar(ts);
  CHECK(db > 0.0);

  // Schur just below, not Schur just above.
  const PhiPair below = phi(ts, 0.99 * db);
  CHECK(below.rho < 1.0);
  const PhiPair above = phi(ts, 1.01 * db);
  CHECK(above.rho >= 1.0 - 1e-9);

  const double boundary = bisect_stability_boundary(ts.a_bar, db * 2.0);
  CHECK(std::fabs(boundary - db) <= 0.05 * db);
}

TEST_CASE("phi on normal and non-normal matrices") {
  const PhiPair identity_case = phi(synthetic(-1.0 * Matrix::identity(2)), 0.5);
  CHECK(identity_case.norm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(identity_case.rho == doctest::Approx(0.5).epsilon(1e-12));

  // Symmetric (normal): the two coincide.
  const PhiPair normal_case = phi(synthetic(Matrix(2, 2, {-2, 1, 1, -3})), 0.2);
  CHECK(normal_case.norm == doctest::Approx(normal_case.rho).epsilon(1e-10));

  // Non-normal Schur matrix with spectral norm above one.
  const PhiPair skew = phi(synthetic(Matrix(2, 2, {-1, 10, 0, -1})), 0.1);
  CHECK(skew.rho == doctest::Approx(0.9).epsilon(1e-12));
  const double expected_norm = std::sqrt((2.62 + std::sqrt(4.24)) / 2.0);
  CHECK(skew.norm == doctest::Approx(expected_norm).epsilon(1e-12));
  CHECK(skew.norm > 1.0);
}

TEST_CASE("bound_constants formula cases") {
  SUBCASE("static problem collapses to zero") {
    const BoundConstants c = bound_constants(CostBounds{1.0, 1.0, 0.0, 0.0}, 0.5);
    CHECK(c.c_d == 0.0);
    CHECK(c.c_bar == 0.0);
    CHECK(c.eps_bar == 0.0);
  }
  SUBCASE("worked example") {
    const BoundConstants c = bound_constants(CostBounds{2.0, 4.0, 1.0, 1.0}, 0.5);
    CHECK(c.c_d == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.c_bar == doctest::Approx(34.0).epsilon(1e-15));
    CHECK(c.eps_bar == doctest::Approx(70.0).epsilon(1e-15));
  }
  SUBCASE("c_bar is linear in C0 + C1 with l, m fixed") {
    const BoundConstants c1 = bound_constants(CostBounds{2.0, 4.0, 1.0, 1.0}, 0.3);
    const BoundConstants c2 = bound_constants(CostBounds{2.0, 4.0, 2.0, 2.0}, 0.3);
    CHECK(c2.c_bar == doctest::Approx(2.0 * c1.c_bar).epsilon(1e-14));
  }
  SUBCASE("phi >= 1 is rejected with guidance") {
    CHECK_THROWS_WITH_AS(bound_constants(CostBounds{1.0, 1.0, 1.0, 1.0}, 1.0),
                         doctest::Contains("reduce delta_c"), std::invalid_argument);
  }
  SUBCASE("eps_bar is nondecreasing in phi") {
    double last = 0.0;
    for (double p = 0.0; p < 1.0; p += 0.05) {
      const BoundConstants c = bound_constants(CostBounds{2.0, 4.0, 1.0, 1.0}, p);
      CHECK(c.eps_bar >= last);
      last = c.eps_bar;
    }
  }
}

TEST_CASE("c_nabla formula and feasibility") {
  const CostBounds b{1.0, 1.0, 1.0, 1.0};
  CHECK(c_nabla(b, 0.7, 1.0, 0.7) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c_nabla(b, 1.0, 2.0, 0.75) >= b.l / (2.0 - b.l * b.l / 2.0));

  CHECK_THROWS_WITH_AS(c_nabla(b, -1.0, 2.0, 0.5), doctest::Contains("alpha"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(c_nabla(b, 1.0, 2.0, -0.5), doctest::Contains("gamma"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(c_nabla(b, 1.0, 0.4, 0.5), doctest::Contains("beta"),
                       std::invalid_argument);

  // The formula blows up as the denominator closes.
  CHECK(c_nabla(b, 1.0, 0.500001, 0.5) > 1e5);
}

TEST_CASE("select_lyapunov_params is deterministic and feasible") {
  const CostBounds b{0.5, 1.0, 1.0, 1.0};
  const LyapunovParams p = select_lyapunov_params(b);
  CHECK(p.alpha == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.beta == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.gamma == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_NOTHROW(c_nabla(b, p.alpha, p.beta, p.gamma));

  for (double l : {0.5, 1.0, 3.0, 10.0, 40.0}) {
    const CostBounds bl{0.2, l, 1.0, 1.0};
    const LyapunovParams pl = select_lyapunov_params(bl);
    CHECK(pl.gamma < 2.0);
    CHECK_NOTHROW(c_nabla(bl, pl.alpha, pl.beta, pl.gamma));
  }
}

TEST_CASE("empirical Hurwitz and Schur checks on random problems") {
  std::mt19937 rng(401);
  std::uniform_real_distribution<double> hess(0.5, 6.0);
  int hurwitz_failures = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + rep % 6;
    const Graph g = ttest::random_connected_graph(rng, n);
    Vector h(static_cast<std::size_t>(n));
    for (double& v : h) v = hess(rng);
    const TransformedSystem ts = build_abar(decompose(g), scalar_hessians(h), 1);

    bool hurwitz = true;
    for (const auto& eig : eig_general(ts.a_bar)) hurwitz = hurwitz && eig.real() < 0.0;
    if (!hurwitz) {
      ++hurwitz_failures;  // logged, not asserted
      continue;
    }

    const double db = delta_bar(ts);
    for (int k = 1; k <= 20; ++k) {
      const double dc = db * k / 21.0;
      CHECK(phi(ts, dc).rho < 1.0);
    }
  }
  if (hurwitz_failures > 0)
    MESSAGE("Hurwitz premise failed on ", hurwitz_failures, " of 50 random instances");
}

TEST_CASE("stability report round-trips through its text form") {
  const LaplacianDecomposition d = decompose(Graph::ring(5));
  const TransformedSystem ts = build_abar(d, scalar_hessians({2, 4, 6, 8, 10}), 1);
  const CostBounds b{2.0, 10.0, 23.1, 0.275, CostBounds::Provenance::Sampled};
  const StabilityReport r = make_stability_report(ts, b, 0.9 * delta_bar(ts));

  CHECK(r.phi_norm_fallback);  // the 5-ring system is non-normal enough
  CHECK(r.bounds_evaluable);
  CHECK(r.phi_used == r.phi_rho);

  const StabilityReport back = parse_stability_report(to_text(r));
  CHECK(back.delta_bar == r.delta_bar);
  CHECK(back.delta_c == r.delta_c);
  CHECK(back.phi_norm == r.phi_norm);
  CHECK(back.phi_rho == r.phi_rho);
  CHECK(back.phi_used == r.phi_used);
  CHECK(back.c_d == r.c_d);
  CHECK(back.c_bar == r.c_bar);
  CHECK(back.eps_bar == r.eps_bar);
  CHECK(back.c_nabla == r.c_nabla);
  CHECK(back.alpha == r.alpha);
  CHECK(back.beta == r.beta);
  CHECK(back.gamma == r.gamma);
  CHECK(back.consensus_bound == r.consensus_bound);
  CHECK(back.gradient_bound == r.gradient_bound);
  CHECK(back.bounds_sampled == r.bounds_sampled);
  CHECK(back.feasibility_notes == r.feasibility_notes);
}

TEST_CASE("stability accumulator tracks extrema across refreshes") {
  const LaplacianDecomposition d = decompose(Graph::ring(3));
  StabilityAccumulator acc(d, 1, 0.05);
  acc.update(scalar_hessians({1, 1, 1}));
  acc.update(scalar_hessians({4, 4, 4}));
  const double db_small = delta_bar(build_abar(d, scalar_hessians({4, 4, 4}), 1));
  CHECK(acc.refreshes() == 2);
  CHECK(acc.min_delta_bar() == doctest::Approx(std::min(
      db_small, delta_bar(build_abar(d, scalar_hessians({1, 1, 1}), 1)))).epsilon(1e-12));
  CHECK(acc.max_phi_rho() < 1.0);
}
