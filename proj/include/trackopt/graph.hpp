#pragma once

// Undirected weighted graph model, its Laplacian, and the orthogonal
// decomposition used by the transformed consensus analysis: the unit
// consensus direction r = (1/sqrt(N)) 1, a deterministic orthonormal
// complement R, T = [r R], and the reduced Laplacian L+ = R^T L R.

#include <vector>

#include "trackopt/linalg.hpp"

namespace trackopt {

struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

class Graph {
 public:
  /// Validates symmetry, nonnegative weights, zero diagonal and connectivity
  /// (lambda_2 > 1e-10; a single node counts as connected).
  explicit Graph(Matrix adjacency);

  static Graph ring(int n);
  static Graph path(int n);
  static Graph complete(int n);
  static Graph from_edges(int n, const std::vector<Edge>& edges);

  int n_agents() const { return adj_.rows(); }
  const Matrix& adjacency() const { return adj_; }
  /// Neighbor indices of each node, ascending. Updates that iterate these
  /// lists touch only genuine neighbors, which is what the locality tests
  /// pin down.
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  double lambda2() const { return lambda2_; }

 private:
  Matrix adj_;
  std::vector<std::vector<int>> neighbors_;
  double lambda2_ = 0.0;
};

struct LaplacianDecomposition {
  Matrix laplacian;
  Vector lambda;  // ascending, lambda[0] ~ 0
  Vector r_vec;   // (1/sqrt(N)) 1_N
  Matrix r_mat;   // N x (N-1) orthonormal complement of r_vec
  Matrix t_mat;   // [r_vec r_mat]
  Matrix l_plus;  // R^T L R, positive definite for connected graphs
};

/// L = Diag(degrees) - A.
Matrix laplacian(const Graph& g);

LaplacianDecomposition decompose(const Graph& g);

/// Blockwise Laplacian action (L (x) I_n) s on a stacked vector of N blocks
/// of dimension n, computed as per-node neighbor sums.
Vector apply_laplacian_stacked(const Graph& g, const Vector& s, int n);

}  // namespace trackopt
