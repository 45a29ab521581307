#pragma once

// Transformed-system assembly and the stability constants: the admissible
// step bound delta_bar and contraction factor phi of the consensus
// subsystem, plus the bound constants C_d, C_bar, eps_bar and C_nabla used
// by the runtime bound checkers.

#include <string>
#include <vector>

#include "trackopt/costs.hpp"
#include "trackopt/graph.hpp"
#include "trackopt/linalg.hpp"

namespace trackopt {

/// The transformed consensus system matrices. a_bar has size (2N-1)n with
/// block structure
///   [ -(T^T (x) I)(H + L (x) I)(T (x) I)   -[0; I_{n(N-1)}] ]
///   [ [0, L+ L+ (x) I]                      0               ]
/// and b_bar = [T^T 0; 0 R^T] (x) I.
struct TransformedSystem {
  Matrix a_bar;
  Matrix b_bar;
  int n_agents = 0;
  int dimension = 0;
};

TransformedSystem build_abar(const LaplacianDecomposition& d, const std::vector<Matrix>& hessians,
                             int dimension);

/// Lemma-style admissible step bound: min over eigenvalues gamma of a_bar of
/// -2 Re(gamma)/|gamma|^2. Requires a_bar Hurwitz; the offending eigenvalue
/// is reported otherwise.
double delta_bar(const TransformedSystem& ts);

struct PhiPair {
  double norm;  // spectral norm of I + delta_c a_bar
  double rho;   // spectral radius of the same matrix
};

PhiPair phi(const TransformedSystem& ts, double delta_c);

struct LyapunovParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Deterministic feasible choice: beta = 2 l^2, alpha = l^2, gamma = 3/4.
LyapunovParams select_lyapunov_params(const CostBounds& b);

struct BoundConstants {
  double c_d = 0.0;
  double c_bar = 0.0;    // 8 (C0 + C1) + 2 (1 + 2l) C_d
  double eps_bar = 0.0;  // 2 C_d + c_bar (1 + phi)/(1 - phi^2)
};

/// Requires phi < 1; throws with guidance to reduce delta_c otherwise.
BoundConstants bound_constants(const CostBounds& b, double phi_value);

/// C_nabla = (l + sqrt(l^2 + (alpha/gamma)(2 - l^2/beta))) / (2 - l^2/beta).
/// Rejects infeasible parameters, reporting which constraint fails.
double c_nabla(const CostBounds& b, double alpha, double beta, double gamma);

struct StabilityReport {
  double delta_bar = 0.0;
  double delta_c = 0.0;
  double phi_norm = 0.0;
  double phi_rho = 0.0;
  /// phi used by the bound formulas: the spectral norm when it is < 1,
  /// otherwise the spectral radius with phi_norm_fallback flagged.
  double phi_used = 0.0;
  bool phi_norm_fallback = false;
  bool bounds_evaluable = false;  // phi_used < 1

  double c_d = 0.0;
  double c_bar = 0.0;
  double eps_bar = 0.0;
  double c_nabla = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double consensus_bound = 0.0;  // N c_bar (1 + phi)/(1 - phi^2)
  double gradient_bound = 0.0;   // c_nabla * eps_bar

  double bounds_m = 0.0, bounds_l = 0.0, bounds_c0 = 0.0, bounds_c1 = 0.0;
  bool bounds_sampled = false;

  std::string feasibility_notes;
};

StabilityReport make_stability_report(const TransformedSystem& ts, const CostBounds& b,
                                      double delta_c);

std::string to_text(const StabilityReport& r);
StabilityReport parse_stability_report(const std::string& text);

/// Running extrema of delta_bar and phi across reference refreshes, for cost
/// families whose Hessians vary along the trajectory.
class StabilityAccumulator {
 public:
  StabilityAccumulator(const LaplacianDecomposition& d, int dimension, double delta_c);
  void update(const std::vector<Matrix>& hessians);
  double min_delta_bar() const { return min_delta_bar_; }
  double max_phi_norm() const { return max_phi_norm_; }
  double max_phi_rho() const { return max_phi_rho_; }
  long refreshes() const { return refreshes_; }

 private:
  const LaplacianDecomposition* decomp_;
  int dimension_;
  double delta_c_;
  double min_delta_bar_;
  double max_phi_norm_ = 0.0;
  double max_phi_rho_ = 0.0;
  long refreshes_ = 0;
};

}  // namespace trackopt
