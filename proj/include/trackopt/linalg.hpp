#pragma once

// Dense real matrix/vector kernels and small-matrix eigenvalue solvers.
// Everything here is sized for desk-scale problems (a few hundred rows at
// most); storage is dense row-major and all routines are deterministic.

#include <complex>
#include <initializer_list>
#include <vector>

namespace trackopt {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::initializer_list<double> entries);

  static Matrix identity(int n);
  static Matrix diagonal(const Vector& d);

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  const std::vector<double>& data() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, const Vector& x);
bool operator==(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

/// Kronecker product, size (a.rows*b.rows) x (a.cols*b.cols).
Matrix kron(const Matrix& a, const Matrix& b);

/// Eigendecomposition of a real symmetric matrix via cyclic Jacobi rotations.
/// Eigenvalues ascending; `vectors` holds the matching orthonormal
/// eigenvectors as columns. Rejects non-square or asymmetric input.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};
SymmetricEigen eig_symmetric(const Matrix& m);

/// Eigenvalues of a real square matrix (Householder reduction to Hessenberg
/// form followed by the Francis double-shift QR iteration). Complex values
/// come out in exact conjugate pairs; throws on iteration overrun.
std::vector<std::complex<double>> eig_general(const Matrix& m);

/// Largest singular value, computed as sqrt of the top eigenvalue of m^T m.
double spectral_norm(const Matrix& m);

/// max |eigenvalue| over eig_general(m).
double spectral_radius(const Matrix& m);

/// Solve a x = b by Gaussian elimination with partial pivoting. A pivot of
/// magnitude <= 1e-12 * max|a| is treated as singular and reported with the
/// failing column index.
Vector solve_linear(const Matrix& a, const Vector& b);

// Small vector helpers shared across modules.
double norm2(const Vector& v);
double dot(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& v);

}  // namespace trackopt
