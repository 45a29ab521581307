#include "trackopt/stability.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trackopt {

TransformedSystem build_abar(const LaplacianDecomposition& d, const std::vector<Matrix>& hessians,
                             int dimension) {
  const int N = d.t_mat.rows();
  const int n = dimension;
  if (n < 1) throw std::invalid_argument("build_abar: dimension must be >= 1");
  if (static_cast<int>(hessians.size()) != N)
    throw std::invalid_argument("build_abar: need one Hessian block per agent");
  for (const Matrix& h : hessians) {
    if (h.rows() != n || h.cols() != n)
      throw std::invalid_argument("build_abar: Hessian blocks must be n x n");
    const SymmetricEigen e = eig_symmetric(h);  // rejects asymmetric blocks
    if (e.values.front() <= 0.0)
      throw std::invalid_argument("build_abar: Hessian blocks must be positive definite");
  }

  const int top = N * n;          // transformed consensus-error block
  const int bottom = (N - 1) * n; // q_{2:N} block
  const int size = top + bottom;  // (2N-1) n

  // H + L (x) I_n, with H block-diagonal.
  Matrix hl = kron(d.laplacian, Matrix::identity(n));
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) hl(i * n + a, i * n + b) += hessians[static_cast<std::size_t>(i)](a, b);

  const Matrix tn = kron(d.t_mat, Matrix::identity(n));
  const Matrix tl = transpose(tn) * hl * tn;

  TransformedSystem ts;
  ts.n_agents = N;
  ts.dimension = n;
  ts.a_bar = Matrix(size, size);
  for (int i = 0; i < top; ++i)
    for (int j = 0; j < top; ++j) ts.a_bar(i, j) = -tl(i, j);
  for (int i = 0; i < bottom; ++i) ts.a_bar(n + i, top + i) = -1.0;  // -[0; I] coupling
  if (bottom > 0) {
    const Matrix lp2 = kron(d.l_plus * d.l_plus, Matrix::identity(n));
    for (int i = 0; i < bottom; ++i)
      for (int j = 0; j < bottom; ++j) ts.a_bar(top + i, n + j) = lp2(i, j);
  }

  ts.b_bar = Matrix(size, 2 * top);
  const Matrix tt = kron(transpose(d.t_mat), Matrix::identity(n));
  for (int i = 0; i < top; ++i)
    for (int j = 0; j < top; ++j) ts.b_bar(i, j) = tt(i, j);
  if (bottom > 0) {
    const Matrix rt = kron(transpose(d.r_mat), Matrix::identity(n));
    for (int i = 0; i < bottom; ++i)
      for (int j = 0; j < top; ++j) ts.b_bar(top + i, top + j) = rt(i, j);
  }
  return ts;
}

double delta_bar(const TransformedSystem& ts) {
  const auto eigs = eig_general(ts.a_bar);
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& g : eigs) {
    if (!(g.real() < 0.0)) {
      std::ostringstream msg;
      msg << "delta_bar: a_bar is not Hurwitz (eigenvalue " << g.real() << (g.imag() < 0 ? " - " : " + ")
          << std::fabs(g.imag()) << "i has nonnegative real part)";
      throw std::runtime_error(msg.str());
    }
    bound = std::min(bound, -2.0 * g.real() / std::norm(g));
  }
  return bound;
}

PhiPair phi(const TransformedSystem& ts, double delta_c) {
  if (!(delta_c > 0.0)) throw std::invalid_argument("phi: delta_c must be positive");
  Matrix m = delta_c * ts.a_bar;
  for (int i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
  return PhiPair{spectral_norm(m), spectral_radius(m)};
}

LyapunovParams select_lyapunov_params(const CostBounds& b) {
  b.validate();
  LyapunovParams p;
  p.beta = 2.0 * b.l * b.l;
  p.alpha = b.l * b.l;
  p.gamma = 0.5 * (2.0 - b.l * b.l / (2.0 * p.alpha));  // = 3/4
  return p;
}

BoundConstants bound_constants(const CostBounds& b, double phi_value) {
  b.validate();
  if (!(phi_value < 1.0))
    throw std::invalid_argument(
        "bound_constants: phi >= 1, eps_bar is undefined; reduce delta_c to contract the consensus subsystem");
  if (!(phi_value >= 0.0)) throw std::invalid_argument("bound_constants: phi must be nonnegative");
  BoundConstants c;
  c.c_d = b.c_d();
  c.c_bar = 8.0 * (b.c0 + b.c1) + 2.0 * (1.0 + 2.0 * b.l) * c.c_d;
  c.eps_bar = 2.0 * c.c_d + c.c_bar * (1.0 + phi_value) / (1.0 - phi_value * phi_value);
  return c;
}

double c_nabla(const CostBounds& b, double alpha, double beta, double gamma) {
  b.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("c_nabla: constraint alpha > 0 fails");
  if (!(gamma > 0.0)) throw std::invalid_argument("c_nabla: constraint gamma > 0 fails");
  const double denom = 2.0 - b.l * b.l / beta;
  if (!(beta > 0.5 * b.l * b.l) || !(denom > 0.0))
    throw std::invalid_argument("c_nabla: constraint beta > l^2/2 fails (denominator not positive)");
  return (b.l + std::sqrt(b.l * b.l + (alpha / gamma) * denom)) / denom;
}

namespace {

std::string feasibility_notes(const CostBounds& b, const LyapunovParams& p) {
  std::ostringstream out;
  const double l2 = b.l * b.l;
  out << "beta > l^2: " << (p.beta > l2 ? "ok" : "VIOLATED") << "; ";
  out << "alpha > l^2/4: " << (p.alpha > 0.25 * l2 ? "ok" : "VIOLATED") << "; ";
  const double gamma_cap = 2.0 - l2 / (2.0 * p.alpha);
  out << "gamma in (0, 2 - l^2/(2 alpha)): "
      << (p.gamma > 0.0 && p.gamma < gamma_cap ? "ok" : "VIOLATED");
  return out.str();
}

}  // namespace

StabilityReport make_stability_report(const TransformedSystem& ts, const CostBounds& b,
                                      double delta_c) {
  b.validate();
  StabilityReport r;
  r.delta_bar = delta_bar(ts);
  r.delta_c = delta_c;
  const PhiPair pp = phi(ts, delta_c);
  r.phi_norm = pp.norm;
  r.phi_rho = pp.rho;
  r.phi_norm_fallback = !(pp.norm < 1.0);
  r.phi_used = r.phi_norm_fallback ? pp.rho : pp.norm;
  r.bounds_evaluable = r.phi_used < 1.0;

  const LyapunovParams lp = select_lyapunov_params(b);
  r.alpha = lp.alpha;
  r.beta = lp.beta;
  r.gamma = lp.gamma;
  r.c_nabla = c_nabla(b, lp.alpha, lp.beta, lp.gamma);

  if (r.bounds_evaluable) {
    const BoundConstants c = bound_constants(b, r.phi_used);
    r.c_d = c.c_d;
    r.c_bar = c.c_bar;
    r.eps_bar = c.eps_bar;
    r.consensus_bound =
        ts.n_agents * c.c_bar * (1.0 + r.phi_used) / (1.0 - r.phi_used * r.phi_used);
    r.gradient_bound = r.c_nabla * c.eps_bar;
  } else {
    r.c_d = b.c_d();
    r.c_bar = 8.0 * (b.c0 + b.c1) + 2.0 * (1.0 + 2.0 * b.l) * r.c_d;
    r.eps_bar = std::numeric_limits<double>::quiet_NaN();
    r.consensus_bound = std::numeric_limits<double>::quiet_NaN();
    r.gradient_bound = std::numeric_limits<double>::quiet_NaN();
  }

  r.bounds_m = b.m;
  r.bounds_l = b.l;
  r.bounds_c0 = b.c0;
  r.bounds_c1 = b.c1;
  r.bounds_sampled = b.provenance == CostBounds::Provenance::Sampled;
  r.feasibility_notes = feasibility_notes(b, lp);
  return r;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_text(const StabilityReport& r) {
  std::ostringstream out;
  out << "delta_bar = " << fmt17(r.delta_bar) << "\n";
  out << "delta_c = " << fmt17(r.delta_c) << "\n";
  out << "phi_norm = " << fmt17(r.phi_norm) << "\n";
  out << "phi_rho = " << fmt17(r.phi_rho) << "\n";
  out << "phi_used = " << fmt17(r.phi_used) << "\n";
  out << "phi_norm_fallback = " << (r.phi_norm_fallback ? "true" : "false") << "\n";
  out << "bounds_evaluable = " << (r.bounds_evaluable ? "true" : "false") << "\n";
  out << "c_d = " << fmt17(r.c_d) << "\n";
  out << "c_bar = " << fmt17(r.c_bar) << "\n";
  out << "eps_bar = " << fmt17(r.eps_bar) << "\n";
  out << "c_nabla = " << fmt17(r.c_nabla) << "\n";
  out << "alpha = " << fmt17(r.alpha) << "\n";
  out << "beta = " << fmt17(r.beta) << "\n";
  out << "gamma = " << fmt17(r.gamma) << "\n";
  out << "consensus_bound = " << fmt17(r.consensus_bound) << "\n";
  out << "gradient_bound = " << fmt17(r.gradient_bound) << "\n";
  out << "bounds_m = " << fmt17(r.bounds_m) << "\n";
  out << "bounds_l = " << fmt17(r.bounds_l) << "\n";
  out << "bounds_c0 = " << fmt17(r.bounds_c0) << "\n";
  out << "bounds_c1 = " << fmt17(r.bounds_c1) << "\n";
  out << "bounds_provenance = " << (r.bounds_sampled ? "sampled" : "declared") << "\n";
  out << "feasibility = " << r.feasibility_notes << "\n";
  return out.str();
}

StabilityReport parse_stability_report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      s = (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    kv[key] = value;
  }
  auto num = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("parse_stability_report: missing key " + key);
    return std::strtod(it->second.c_str(), nullptr);
  };
  auto flag = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("parse_stability_report: missing key " + key);
    return it->second == "true";
  };

  StabilityReport r;
  r.delta_bar = num("delta_bar");
  r.delta_c = num("delta_c");
  r.phi_norm = num("phi_norm");
  r.phi_rho = num("phi_rho");
  r.phi_used = num("phi_used");
  r.phi_norm_fallback = flag("phi_norm_fallback");
  r.bounds_evaluable = flag("bounds_evaluable");
  r.c_d = num("c_d");
  r.c_bar = num("c_bar");
  r.eps_bar = num("eps_bar");
  r.c_nabla = num("c_nabla");
  r.alpha = num("alpha");
  r.beta = num("beta");
  r.gamma = num("gamma");
  r.consensus_bound = num("consensus_bound");
  r.gradient_bound = num("gradient_bound");
  r.bounds_m = num("bounds_m");
  r.bounds_l = num("bounds_l");
  r.bounds_c0 = num("bounds_c0");
  r.bounds_c1 = num("bounds_c1");
  r.bounds_sampled = kv["bounds_provenance"] == "sampled";
  r.feasibility_notes = kv["feasibility"];
  return r;
}

StabilityAccumulator::StabilityAccumulator(const LaplacianDecomposition& d, int dimension,
                                           double delta_c)
    : decomp_(&d), dimension_(dimension), delta_c_(delta_c),
      min_delta_bar_(std::numeric_limits<double>::infinity()) {}

void StabilityAccumulator::update(const std::vector<Matrix>& hessians) {
  const TransformedSystem ts = build_abar(*decomp_, hessians, dimension_);
  min_delta_bar_ = std::min(min_delta_bar_, delta_bar(ts));
  const PhiPair pp = phi(ts, delta_c_);
  max_phi_norm_ = std::max(max_phi_norm_, pp.norm);
  max_phi_rho_ = std::max(max_phi_rho_, pp.rho);
  ++refreshes_;
}

}  // namespace trackopt
