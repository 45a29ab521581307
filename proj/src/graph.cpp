#include "trackopt/graph.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace trackopt {

Graph::Graph(Matrix adjacency) : adj_(std::move(adjacency)) {
  const int n = adj_.rows();
  if (n < 1 || adj_.cols() != n) throw std::invalid_argument("Graph: adjacency must be square, N >= 1");
  for (int i = 0; i < n; ++i) {
    if (adj_(i, i) != 0.0) throw std::invalid_argument("Graph: adjacency diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      const double w = adj_(i, j);
      if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("Graph: weights must be finite and nonnegative");
      if (adj_(i, j) != adj_(j, i)) throw std::invalid_argument("Graph: adjacency must be symmetric");
    }
  }

  neighbors_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i && adj_(i, j) > 0.0) neighbors_[static_cast<std::size_t>(i)].push_back(j);

  if (n == 1) {
    lambda2_ = std::numeric_limits<double>::infinity();  // trivially connected
    return;
  }
  const SymmetricEigen e = eig_symmetric(laplacian(*this));
  lambda2_ = e.values[1];
  if (lambda2_ <= 1e-10) {
    std::ostringstream msg;
    msg << "Graph: not connected (lambda_2 = " << lambda2_ << " <= 1e-10)";
    throw std::invalid_argument(msg.str());
  }
}

Graph Graph::ring(int n) {
  if (n < 3) throw std::invalid_argument("Graph::ring: need n >= 3");
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 1.0;
    a((i + 1) % n, i) = 1.0;
  }
  return Graph(std::move(a));
}

Graph Graph::path(int n) {
  if (n < 1) throw std::invalid_argument("Graph::path: need n >= 1");
  Matrix a(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  return Graph(std::move(a));
}

Graph Graph::complete(int n) {
  if (n < 1) throw std::invalid_argument("Graph::complete: need n >= 1");
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) a(i, j) = 1.0;
  return Graph(std::move(a));
}

Graph Graph::from_edges(int n, const std::vector<Edge>& edges) {
  if (n < 1) throw std::invalid_argument("Graph::from_edges: need n >= 1");
  Matrix a(n, n);
  for (const Edge& e : edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n || e.i == e.j)
      throw std::invalid_argument("Graph::from_edges: edge endpoints out of range or self-loop");
    if (!(e.weight > 0.0)) throw std::invalid_argument("Graph::from_edges: edge weight must be positive");
    a(e.i, e.j) = e.weight;
    a(e.j, e.i) = e.weight;
  }
  return Graph(std::move(a));
}

Matrix laplacian(const Graph& g) {
  const int n = g.n_agents();
  const Matrix& a = g.adjacency();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    double degree = 0.0;
    for (int j = 0; j < n; ++j) {
      degree += a(i, j);
      l(i, j) = -a(i, j);
    }
    l(i, i) = degree;
  }
  return l;
}

LaplacianDecomposition decompose(const Graph& g) {
  const int n = g.n_agents();
  if (n > 1 && g.lambda2() <= 1e-10) {
    std::ostringstream msg;
    msg << "decompose: graph not connected (lambda_2 = " << g.lambda2() << ")";
    throw std::invalid_argument(msg.str());
  }

  LaplacianDecomposition d;
  d.laplacian = laplacian(g);
  d.r_vec.assign(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));

  if (n == 1) {
    d.lambda = {0.0};
    d.r_mat = Matrix(1, 0);
    d.t_mat = Matrix(1, 1, {1.0});
    d.l_plus = Matrix(0, 0);
    return d;
  }

  d.lambda = eig_symmetric(d.laplacian).values;

  // Deterministic orthonormal complement of r: the Householder reflector
  // that swaps e_1 and r maps e_2..e_N onto a basis of r-perp, and its
  // first column is r itself.
  Vector u(static_cast<std::size_t>(n), 0.0);
  u[0] = 1.0 - d.r_vec[0];
  for (int i = 1; i < n; ++i) u[static_cast<std::size_t>(i)] = -d.r_vec[static_cast<std::size_t>(i)];
  const double unorm = norm2(u);
  for (double& e : u) e /= unorm;

  d.t_mat = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d.t_mat(i, j) = (i == j ? 1.0 : 0.0) - 2.0 * u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)];

  d.r_mat = Matrix(n, n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - 1; ++j) d.r_mat(i, j) = d.t_mat(i, j + 1);

  d.l_plus = transpose(d.r_mat) * d.laplacian * d.r_mat;
  return d;
}

Vector apply_laplacian_stacked(const Graph& g, const Vector& s, int n) {
  const int agents = g.n_agents();
  if (n < 1 || static_cast<int>(s.size()) != agents * n)
    throw std::invalid_argument("apply_laplacian_stacked: stacked vector must have N*n entries");
  const Matrix& a = g.adjacency();
  Vector out(s.size(), 0.0);
  for (int i = 0; i < agents; ++i) {
    for (int j : g.neighbors()[static_cast<std::size_t>(i)]) {
      const double w = a(i, j);
      for (int d = 0; d < n; ++d) {
        const std::size_t ii = static_cast<std::size_t>(i * n + d);
        const std::size_t jj = static_cast<std::size_t>(j * n + d);
        out[ii] += w * (s[ii] - s[jj]);
      }
    }
  }
  return out;
}

}  // namespace trackopt
