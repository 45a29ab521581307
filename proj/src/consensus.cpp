#include "trackopt/consensus.hpp"

#include <cmath>
#include <stdexcept>

namespace trackopt {

namespace {

int block_dim(const ReferenceSet& refs) { return refs.hessians.empty() ? 0 : refs.hessians.front().rows(); }

void validate_refs(const ReferenceSet& refs) {
  if (refs.hessians.empty()) throw std::invalid_argument("ReferenceSet: no agents");
  const int n = block_dim(refs);
  for (const Matrix& h : refs.hessians) {
    if (h.rows() != n || h.cols() != n)
      throw std::invalid_argument("ReferenceSet: Hessian blocks must share one square size");
    const SymmetricEigen e = eig_symmetric(h);  // rejects asymmetric blocks
    if (e.values.front() <= 0.0)
      throw std::invalid_argument("ReferenceSet: Hessian blocks must be positive definite");
  }
  if (refs.grad_stack.size() != refs.hessians.size() * static_cast<std::size_t>(n))
    throw std::invalid_argument("ReferenceSet: grad_stack must have N*n entries");
}

void check_state(const ConsensusState& s, const ReferenceSet& refs) {
  if (s.v.size() != refs.grad_stack.size() || s.z.size() != refs.grad_stack.size() ||
      s.p.size() != refs.grad_stack.size())
    throw std::invalid_argument("ConsensusState: dimension mismatch with references");
}

}  // namespace

ReferenceSet make_references(const Problem& p, const Vector& stacked_states, double t) {
  const int n = p.dimension;
  const int N = p.n_agents();
  if (static_cast<int>(stacked_states.size()) != N * n)
    throw std::invalid_argument("make_references: stacked states must have N*n entries");

  ReferenceSet refs;
  refs.sample_time = t;
  refs.hessians.reserve(static_cast<std::size_t>(N));
  refs.grad_stack.resize(static_cast<std::size_t>(N * n));
  Vector xi(static_cast<std::size_t>(n));
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < n; ++d) xi[static_cast<std::size_t>(d)] = stacked_states[static_cast<std::size_t>(i * n + d)];
    const CostModel& c = *p.costs[static_cast<std::size_t>(i)];
    refs.hessians.push_back(c.hessian(xi, t));
    const Vector g = c.gradient(xi, t);
    const Vector h = c.grad_time(xi, t);
    for (int d = 0; d < n; ++d)
      refs.grad_stack[static_cast<std::size_t>(i * n + d)] = g[static_cast<std::size_t>(d)] + h[static_cast<std::size_t>(d)];
  }
  return refs;
}

ConsensusState make_consensus_state(const Vector& v0, const Vector& z0, const ReferenceSet& refs) {
  validate_refs(refs);
  if (v0.size() != refs.grad_stack.size() || z0.size() != refs.grad_stack.size())
    throw std::invalid_argument("make_consensus_state: initial vectors must have N*n entries");
  ConsensusState s;
  s.v = v0;
  s.z = z0;
  s.p = z0 + refs.grad_stack;
  s.step = 0;
  return s;
}

ConsensusState resync_output(ConsensusState s, const ReferenceSet& refs) {
  if (s.z.size() != refs.grad_stack.size())
    throw std::invalid_argument("resync_output: dimension mismatch");
  s.p = s.z + refs.grad_stack;
  return s;
}

Vector weighted_average(const ReferenceSet& refs) {
  validate_refs(refs);
  const int n = block_dim(refs);
  const int N = static_cast<int>(refs.hessians.size());
  Matrix h_sum(n, n);
  Vector rhs(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < N; ++i) {
    h_sum = h_sum + refs.hessians[static_cast<std::size_t>(i)];
    for (int d = 0; d < n; ++d)
      rhs[static_cast<std::size_t>(d)] += refs.grad_stack[static_cast<std::size_t>(i * n + d)];
  }
  return solve_linear(h_sum, rhs);
}

ConsensusState step(const ConsensusState& s, const ReferenceSet& refs, const Graph& g,
                    double delta_c) {
  if (!(delta_c > 0.0)) throw std::invalid_argument("consensus step: delta_c must be positive");
  check_state(s, refs);
  const int n = block_dim(refs);
  const int N = g.n_agents();
  if (static_cast<int>(refs.hessians.size()) != N)
    throw std::invalid_argument("consensus step: reference count does not match the graph");

  ConsensusState out;
  out.v.resize(s.v.size());
  out.z.resize(s.z.size());
  out.p.resize(s.p.size());
  out.step = s.step + 1;

  const Matrix& adj = g.adjacency();
  for (int i = 0; i < N; ++i) {
    const Matrix& hi = refs.hessians[static_cast<std::size_t>(i)];
    for (int d = 0; d < n; ++d) {
      const std::size_t ii = static_cast<std::size_t>(i * n + d);

      double lap_p = 0.0;   // sum_j a_ij (p^i - p^j), component d
      double lap_pv = 0.0;  // same action on p + v
      for (int j : g.neighbors()[static_cast<std::size_t>(i)]) {
        const std::size_t jj = static_cast<std::size_t>(j * n + d);
        const double w = adj(i, j);
        lap_p += w * (s.p[ii] - s.p[jj]);
        lap_pv += w * ((s.p[ii] + s.v[ii]) - (s.p[jj] + s.v[jj]));
      }

      double hp = 0.0;  // (H^i p^i) component d
      for (int e = 0; e < n; ++e) hp += hi(d, e) * s.p[static_cast<std::size_t>(i * n + e)];

      out.v[ii] = s.v[ii] + delta_c * lap_p;
      out.z[ii] = s.z[ii] - delta_c * (hp - refs.grad_stack[ii] + lap_pv);
      out.p[ii] = out.z[ii] + refs.grad_stack[ii];
    }
  }
  return out;
}

ConsensusState run(ConsensusState s, const ReferenceSet& refs, const Graph& g, double delta_c,
                   long steps) {
  if (steps < 1) throw std::invalid_argument("consensus run: need steps >= 1");
  for (long k = 0; k < steps; ++k) s = step(s, refs, g, delta_c);
  return s;
}

namespace {

// Blockwise transform (B^T (x) I_n) applied to a stacked vector: output
// block j is sum_i B(i, j) s_i.
Vector apply_transposed_blockwise(const Matrix& b, const Vector& s, int n) {
  Vector out(static_cast<std::size_t>(b.cols()) * static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < b.cols(); ++j)
    for (int i = 0; i < b.rows(); ++i) {
      const double w = b(i, j);
      if (w == 0.0) continue;
      for (int d = 0; d < n; ++d)
        out[static_cast<std::size_t>(j * n + d)] += w * s[static_cast<std::size_t>(i * n + d)];
    }
  return out;
}

}  // namespace

ConsensusDiagnostics diagnostics(const ConsensusState& s, const ReferenceSet& refs,
                                 const LaplacianDecomposition& d) {
  validate_refs(refs);
  check_state(s, refs);
  const int n = block_dim(refs);
  const int N = static_cast<int>(refs.hessians.size());
  if (d.t_mat.rows() != N) throw std::invalid_argument("diagnostics: decomposition does not match agent count");

  ConsensusDiagnostics out;
  out.pbar = weighted_average(refs);

  Vector p_err(s.p.size());
  out.w.resize(s.p.size());
  for (int i = 0; i < N; ++i) {
    const Matrix& hi = refs.hessians[static_cast<std::size_t>(i)];
    for (int dd = 0; dd < n; ++dd) {
      const std::size_t ii = static_cast<std::size_t>(i * n + dd);
      p_err[ii] = s.p[ii] - out.pbar[static_cast<std::size_t>(dd)];
      double hpbar = 0.0;
      for (int e = 0; e < n; ++e) hpbar += hi(dd, e) * out.pbar[static_cast<std::size_t>(e)];
      out.w[ii] = refs.grad_stack[ii] - hpbar;
    }
  }

  out.e_transformed = apply_transposed_blockwise(d.t_mat, p_err, n);

  Vector lv(s.v.size());
  {
    // L v - w, with the Laplacian acting blockwise.
    Vector tmp(s.v.size(), 0.0);
    const Matrix& lap = d.laplacian;
    for (int i = 0; i < N; ++i)
      for (int dd = 0; dd < n; ++dd) {
        double acc = 0.0;
        for (int j = 0; j < N; ++j) acc += lap(i, j) * s.v[static_cast<std::size_t>(j * n + dd)];
        tmp[static_cast<std::size_t>(i * n + dd)] = acc - out.w[static_cast<std::size_t>(i * n + dd)];
      }
    lv = std::move(tmp);
  }
  const Vector q = apply_transposed_blockwise(d.t_mat, lv, n);
  out.q1.assign(q.begin(), q.begin() + n);
  out.q_rest.assign(q.begin() + n, q.end());
  return out;
}

}  // namespace trackopt
