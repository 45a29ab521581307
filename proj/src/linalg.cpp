#include "trackopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace trackopt {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// Fortran-style SIGN(a, b): |a| carrying the sign of b.
double sign_of(double a, double b) { return b >= 0.0 ? std::fabs(a) : -std::fabs(a); }

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  require(rows >= 0 && cols >= 0, "Matrix: negative dimensions");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Matrix::Matrix(int rows, int cols, std::initializer_list<double> entries) : Matrix(rows, cols) {
  require(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) == entries.size(),
          "Matrix: entry count does not match dimensions");
  std::copy(entries.begin(), entries.end(), data_.begin());
  for (double v : data_) require(std::isfinite(v), "Matrix: non-finite entry");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < m.rows(); ++i) m(i, i) = d[static_cast<std::size_t>(i)];
  return m;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix add: shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sub: shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix mul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
  return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
  require(a.cols() == static_cast<int>(x.size()), "matvec: dimension mismatch");
  Vector y(static_cast<std::size_t>(a.rows()), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s = std::max(s, std::fabs(v));
  return s;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (int p = 0; p < b.rows(); ++p)
        for (int q = 0; q < b.cols(); ++q)
          c(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return c;
}

SymmetricEigen eig_symmetric(const Matrix& m) {
  require(m.rows() == m.cols(), "eig_symmetric: matrix must be square");
  const int n = m.rows();
  const double scale = std::max(1.0, max_abs(m));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      require(std::fabs(m(i, j) - m(j, i)) <= 1e-10 * scale,
              "eig_symmetric: matrix is not symmetric within tolerance");

  Matrix a = m;
  // Symmetrize exactly so rotations see a consistent upper triangle.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = avg;
    }
  Matrix q = Matrix::identity(n);

  // Cyclic Jacobi sweeps; quadratic convergence makes 30 sweeps generous.
  const double frob = std::max(frobenius_norm(a), 1e-300);
  for (int sweep = 0; sweep < 30; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * frob) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double tau = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = sign_of(1.0, tau) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        a(p, p) -= t * apr;
        a(r, r) += t * apr;
        a(p, r) = a(r, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == r) continue;
          const double aip = a(i, p), air = a(i, r);
          a(i, p) = a(p, i) = c * aip - s * air;
          a(i, r) = a(r, i) = s * aip + c * air;
        }
        for (int i = 0; i < n; ++i) {
          const double qip = q(i, p), qir = q(i, r);
          q(i, p) = c * qip - s * qir;
          q(i, r) = s * qip + c * qir;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&a](int i, int j) { return a(i, i) < a(j, j); });

  SymmetricEigen out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[static_cast<std::size_t>(j)] = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = q(i, order[static_cast<std::size_t>(j)]);
  }
  return out;
}

namespace {

// Householder reduction of a general real matrix to upper Hessenberg form,
// in place (EISPACK orthes, without transformation accumulation).
void hessenberg_reduce(Matrix& a) {
  const int n = a.rows();
  Vector ort(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k + 2 < n; ++k) {
    double scale = 0.0;
    for (int i = k + 1; i < n; ++i) scale += std::fabs(a(i, k));
    if (scale == 0.0) continue;

    double h = 0.0;
    for (int i = n - 1; i >= k + 1; --i) {
      ort[static_cast<std::size_t>(i)] = a(i, k) / scale;
      h += ort[static_cast<std::size_t>(i)] * ort[static_cast<std::size_t>(i)];
    }
    const double g = -sign_of(std::sqrt(h), ort[static_cast<std::size_t>(k + 1)]);
    h -= ort[static_cast<std::size_t>(k + 1)] * g;
    ort[static_cast<std::size_t>(k + 1)] -= g;

    // Apply P = I - (ort ort^T)/h from the left, then from the right.
    for (int j = k; j < n; ++j) {
      double f = 0.0;
      for (int i = k + 1; i < n; ++i) f += ort[static_cast<std::size_t>(i)] * a(i, j);
      f /= h;
      for (int i = k + 1; i < n; ++i) a(i, j) -= f * ort[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
      double f = 0.0;
      for (int j = k + 1; j < n; ++j) f += ort[static_cast<std::size_t>(j)] * a(i, j);
      f /= h;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * ort[static_cast<std::size_t>(j)];
    }

    a(k + 1, k) = scale * g;
    for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
// iteration (EISPACK hqr, eigenvalues only). Throws when the total iteration
// budget of 30n sweeps is exhausted.
std::vector<std::complex<double>> hessenberg_eigenvalues(Matrix h) {
  const int n = h.rows();
  std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
  const double eps = std::ldexp(1.0, -52);

  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) norm += std::fabs(h(i, j));
  if (norm == 0.0) return w;  // zero matrix

  int en = n - 1;
  double shift_total = 0.0;
  int budget = 30 * n;

  while (en >= 0) {
    int its = 0;
    for (;;) {
      // Find the smallest l with a negligible subdiagonal below it.
      int l = en;
      while (l > 0) {
        double s = std::fabs(h(l - 1, l - 1)) + std::fabs(h(l, l));
        if (s == 0.0) s = norm;
        if (std::fabs(h(l, l - 1)) <= eps * s) {
          h(l, l - 1) = 0.0;
          break;
        }
        --l;
      }

      double x = h(en, en);
      if (l == en) {  // one real root
        w[static_cast<std::size_t>(en)] = {x + shift_total, 0.0};
        --en;
        break;
      }

      double y = h(en - 1, en - 1);
      double ww = h(en, en - 1) * h(en - 1, en);
      if (l == en - 1) {  // a 2x2 block deflates: two roots
        double p = 0.5 * (y - x);
        double q = p * p + ww;
        double zz = std::sqrt(std::fabs(q));
        x += shift_total;
        if (q >= 0.0) {
          zz = p + sign_of(zz, p);
          double r1 = x + zz;
          double r2 = (zz != 0.0) ? x - ww / zz : r1;
          w[static_cast<std::size_t>(en - 1)] = {r1, 0.0};
          w[static_cast<std::size_t>(en)] = {r2, 0.0};
        } else {
          w[static_cast<std::size_t>(en - 1)] = {x + p, zz};
          w[static_cast<std::size_t>(en)] = {x + p, -zz};
        }
        en -= 2;
        break;
      }

      if (budget-- <= 0)
        throw std::runtime_error("eig_general: QR iteration failed to converge within 30n sweeps");

      if (its == 10 || its == 20) {  // exceptional shift
        shift_total += x;
        for (int i = 0; i <= en; ++i) h(i, i) -= x;
        double s = std::fabs(h(en, en - 1)) + std::fabs(h(en - 1, en - 2));
        x = y = 0.75 * s;
        ww = -0.4375 * s * s;
      }
      ++its;

      // Form the first column of (H - a I)(H - b I) and look for two
      // consecutive small subdiagonals to start the bulge chase from.
      int m = en - 2;
      double p = 0.0, q = 0.0, r = 0.0;
      while (m >= l) {
        const double zz = h(m, m);
        const double rr = x - zz;
        const double ss = y - zz;
        p = (rr * ss - ww) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - zz - rr - ss;
        r = h(m + 2, m + 1);
        const double s = std::fabs(p) + std::fabs(q) + std::fabs(r);
        if (s != 0.0) {
          p /= s;
          q /= s;
          r /= s;
        }
        if (m == l) break;
        const double u = std::fabs(h(m, m - 1)) * (std::fabs(q) + std::fabs(r));
        const double v =
            std::fabs(p) * (std::fabs(h(m - 1, m - 1)) + std::fabs(zz) + std::fabs(h(m + 1, m + 1)));
        if (u <= eps * v) break;
        --m;
      }
      for (int i = m + 2; i <= en; ++i) {
        h(i, i - 2) = 0.0;
        if (i > m + 2) h(i, i - 3) = 0.0;
      }

      // Double QR sweep on rows l..en, columns m..en.
      for (int k = m; k <= en - 1; ++k) {
        const bool notlast = (k != en - 1);
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::fabs(p) + std::fabs(q) + std::fabs(r);
          if (x == 0.0) continue;  // bulge already gone
          p /= x;
          q /= x;
          r /= x;
        }
        double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
        if (s == 0.0) continue;
        if (k != m)
          h(k, k - 1) = -s * x;
        else if (l != m)
          h(k, k - 1) = -h(k, k - 1);
        p += s;
        x = p / s;
        y = q / s;
        const double zz = r / s;
        q /= p;
        r /= p;

        for (int j = k; j <= en; ++j) {  // row modification
          double f = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            f += r * h(k + 2, j);
            h(k + 2, j) -= f * zz;
          }
          h(k + 1, j) -= f * y;
          h(k, j) -= f * x;
        }
        const int top = std::min(en, k + 3);
        for (int i = l; i <= top; ++i) {  // column modification
          double f = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            f += zz * h(i, k + 2);
            h(i, k + 2) -= f * r;
          }
          h(i, k + 1) -= f * q;
          h(i, k) -= f;
        }
      }
    }
  }
  return w;
}

}  // namespace

std::vector<std::complex<double>> eig_general(const Matrix& m) {
  require(m.rows() == m.cols(), "eig_general: matrix must be square");
  const int n = m.rows();
  if (n == 0) return {};
  if (n == 1) return {std::complex<double>(m(0, 0), 0.0)};
  Matrix a = m;
  hessenberg_reduce(a);
  return hessenberg_eigenvalues(std::move(a));
}

double spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  const Matrix g = transpose(m) * m;
  const SymmetricEigen e = eig_symmetric(g);
  return std::sqrt(std::max(0.0, e.values.back()));
}

double spectral_radius(const Matrix& m) {
  double r = 0.0;
  for (const auto& g : eig_general(m)) r = std::max(r, std::abs(g));
  return r;
}

Vector solve_linear(const Matrix& a, const Vector& b) {
  require(a.rows() == a.cols(), "solve_linear: matrix must be square");
  require(a.rows() == static_cast<int>(b.size()), "solve_linear: rhs dimension mismatch");
  const int n = a.rows();
  Matrix lu = a;
  Vector x = b;
  const double threshold = 1e-12 * max_abs(a);

  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
    if (std::fabs(lu(piv, k)) <= threshold) {
      std::ostringstream msg;
      msg << "solve_linear: matrix is singular (pivot " << k << " has magnitude "
          << std::fabs(lu(piv, k)) << ")";
      throw std::runtime_error(msg.str());
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(piv)]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      lu(i, k) = 0.0;
      for (int j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      x[static_cast<std::size_t>(i)] -= f * x[static_cast<std::size_t>(k)];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double acc = x[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) acc -= lu(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = acc / lu(i, i);
  }
  return x;
}

double norm2(const Vector& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector operator+(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "vector add: dimension mismatch");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Vector operator-(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "vector sub: dimension mismatch");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Vector operator*(double s, const Vector& v) {
  Vector c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = s * v[i];
  return c;
}

}  // namespace trackopt
