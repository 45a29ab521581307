#pragma once

// Discrete-time weighted-average consensus estimator. Each agent carries
// auxiliary states v, z and the derived output p = z + (g + h); one
// synchronous step reads round-k values of neighbors only:
//
//   v^i+ = v^i + dc * sum_j a_ij (p^i - p^j)
//   z^i+ = z^i - dc * (H^i p^i - (g^i + h^i)
//                      + sum_j a_ij ((p^i + v^i) - (p^j + v^j)))
//
// With references held fixed, p converges to the weighted average
// (sum H^i)^-1 sum (g^i + h^i).

#include <vector>

#include "trackopt/costs.hpp"
#include "trackopt/graph.hpp"
#include "trackopt/linalg.hpp"

namespace trackopt {

/// Per-agent reference signals sampled at one instant: Hessians H^i and the
/// stacked g^i + h^i vectors.
struct ReferenceSet {
  std::vector<Matrix> hessians;  // N blocks, each n x n, symmetric positive definite
  Vector grad_stack;             // stacked g^i + h^i, N*n entries
  double sample_time = 0.0;
};

/// Build references from the problem's costs at (stacked states, t).
ReferenceSet make_references(const Problem& p, const Vector& stacked_states, double t);

struct ConsensusState {
  Vector v;
  Vector z;
  Vector p;  // derived: z + grad_stack of the current references
  long step = 0;
};

ConsensusState make_consensus_state(const Vector& v0, const Vector& z0, const ReferenceSet& refs);

/// Re-derive p = z + grad_stack after a reference refresh.
ConsensusState resync_output(ConsensusState s, const ReferenceSet& refs);

/// The tracked weighted average (sum H^i)^-1 sum (g^i + h^i), dimension n.
Vector weighted_average(const ReferenceSet& refs);

/// One synchronous round. All agents read round-k values; each agent's
/// update touches neighbor entries only.
ConsensusState step(const ConsensusState& s, const ReferenceSet& refs, const Graph& g,
                    double delta_c);

/// steps applications of `step` with references held constant.
ConsensusState run(ConsensusState s, const ReferenceSet& refs, const Graph& g, double delta_c,
                   long steps);

/// Transformed coordinates of the consensus analysis: e_transformed is the
/// blockwise T^T (p - pbar), q = T^T (L v - w) split into its first block q1
/// (conserved across steps) and the rest.
struct ConsensusDiagnostics {
  Vector pbar;
  Vector e_transformed;  // N*n entries
  Vector q1;             // n entries
  Vector q_rest;         // (N-1)*n entries
  Vector w;              // grad_stack - H * stacked pbar
};

ConsensusDiagnostics diagnostics(const ConsensusState& s, const ReferenceSet& refs,
                                 const LaplacianDecomposition& d);

}  // namespace trackopt
