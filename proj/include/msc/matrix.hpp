#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace msc {

using Vector = std::vector<double>;

// Dense real64 matrix, column-major. Columns are the dominant access
// pattern (dictionary atoms, data examples), so they are contiguous.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  Vector col_vector(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);

// DᵀD. Defined as matmul(transpose(d), d) so the two routes agree exactly.
Matrix gram(const Matrix& d);

Vector matvec(const Matrix& a, const Vector& x);             // A·x
Vector matvec_transposed(const Matrix& a, const Vector& x);  // Aᵀ·x

double dot(const double* a, const double* b, std::size_t n);
double dot(const Vector& a, const Vector& b);
double norm2(const double* v, std::size_t n);
double norm2(const Vector& v);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* v, std::size_t n);
double frobenius_sq(const Matrix& m);

Matrix identity(std::size_t n);

// Binary matrix file: magic "MSC1", rows (u64 LE), cols (u64 LE), then
// rows*cols real64 LE values in column-major order.
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

// Text ingestion: one row per line, comma-separated decimals. Input only.
Matrix load_csv(const std::string& path);

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues
// come back in non-increasing order; eigenvectors are columns with the
// sign fixed so each vector's largest-magnitude entry is positive.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};
EigenDecomposition eigh(const Matrix& sym, int max_sweeps = 64);

// In-place lower Cholesky of an SPD matrix. Returns false when a pivot
// drops below `tiny` (matrix not positive definite at working precision).
bool cholesky(Matrix& a, double tiny = 0.0);
// Solves L·Lᵀ·x = b given the lower factor.
Vector cholesky_solve(const Matrix& lower, const Vector& b);

}  // namespace msc
