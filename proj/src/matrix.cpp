#include "msc/matrix.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>

#include "msc/errors.hpp"

namespace msc {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw argument_error("matrix: data length does not match rows*cols");
  }
}

Vector Matrix::col_vector(std::size_t j) const {
  return Vector(col(j), col(j) + rows_);
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  if (v.size() != rows_) throw argument_error("matrix: column length mismatch");
  std::copy(v.begin(), v.end(), col(j));
}

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      t(j, i) = m(i, j);
    }
  }
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw argument_error("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  // j-k-i order: contiguous column accumulation, and the k-ascending sum
  // per entry matches the naive triple loop bit for bit.
  const std::size_t m = a.rows();
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      axpy(bkj, a.col(k), cj, m);
    }
  }
  return c;
}

Matrix gram(const Matrix& d) {
  return matmul(transpose(d), d);
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (x.size() != a.cols()) throw argument_error("matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    if (x[k] == 0.0) continue;
    axpy(x[k], a.col(k), y.data(), a.rows());
  }
  return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  if (x.size() != a.rows()) throw argument_error("matvec_transposed: dimension mismatch");
  Vector y(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    y[j] = dot(a.col(j), x.data(), a.rows());
  }
  return y;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw argument_error("dot: length mismatch");
  return dot(a.data(), b.data(), a.size());
}

double norm2(const double* v, std::size_t n) {
  return std::sqrt(dot(v, v, n));
}

double norm2(const Vector& v) { return norm2(v.data(), v.size()); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] *= alpha;
}

double frobenius_sq(const Matrix& m) {
  return dot(m.data().data(), m.data().data(), m.data().size());
}

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'C', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

bool get_u64(std::istream& is, std::uint64_t& v) {
  char buf[8];
  if (!is.read(buf, 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return true;
}

}  // namespace

void save_matrix(const Matrix& m, const std::string& path) {
  if (m.rows() == 0 || m.cols() == 0) throw argument_error("save_matrix: rows and cols must be positive");
  if (!m.all_finite()) throw argument_error("save_matrix: non-finite entries");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw format_error("save_matrix: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  put_u64(os, m.rows());
  put_u64(os, m.cols());
  for (double x : m.data()) {
    put_u64(os, std::bit_cast<std::uint64_t>(x));
  }
  if (!os) throw format_error("save_matrix: write failed on '" + path + "'");
}

Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("load_matrix: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw format_error("load_matrix: bad magic in '" + path + "'");
  }
  std::uint64_t rows = 0, cols = 0;
  if (!get_u64(is, rows) || !get_u64(is, cols)) {
    throw format_error("load_matrix: truncated header in '" + path + "'");
  }
  if (rows == 0 || cols == 0) throw format_error("load_matrix: zero dimension in '" + path + "'");
  const std::uint64_t max_elems = std::numeric_limits<std::uint64_t>::max() / 8;
  if (cols != 0 && rows > max_elems / cols) {
    throw format_error("load_matrix: dimension overflow in '" + path + "'");
  }
  const std::uint64_t n = rows * cols;
  if (n > std::numeric_limits<std::size_t>::max() / sizeof(double)) {
    throw format_error("load_matrix: dimension overflow in '" + path + "'");
  }
  std::vector<double> data(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    if (!get_u64(is, bits)) throw format_error("load_matrix: truncated payload in '" + path + "'");
    data[static_cast<std::size_t>(i)] = std::bit_cast<double>(bits);
  }
  char extra;
  if (is.read(&extra, 1)) throw format_error("load_matrix: trailing bytes in '" + path + "'");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
  if (!m.all_finite()) throw format_error("load_matrix: non-finite entries in '" + path + "'");
  return m;
}

Matrix load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw format_error("load_csv: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw format_error("load_csv: unparsable value in '" + path + "'");
      if (!std::isfinite(v)) throw format_error("load_csv: non-finite value in '" + path + "'");
      row.push_back(v);
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') throw format_error("load_csv: expected ',' in '" + path + "'");
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw format_error("load_csv: ragged rows in '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw format_error("load_csv: no data in '" + path + "'");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

EigenDecomposition eigh(const Matrix& sym, int max_sweeps) {
  if (sym.rows() != sym.cols()) throw argument_error("eigh: matrix must be square");
  const std::size_t n = sym.rows();
  Matrix a = sym;
  Matrix v = identity(n);

  double scale_ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale_ref = std::max(scale_ref, std::abs(a(i, i)));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) scale_ref = std::max(scale_ref, std::abs(a(i, j)));
  const double stop = 1e-15 * std::max(scale_ref, 1e-300) * static_cast<double>(n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop * 1e-2) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    std::size_t imax = 0;
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v(i, src)) > vmax) {
        vmax = std::abs(v(i, src));
        imax = i;
      }
    }
    const double sgn = v(imax, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sgn * v(i, src);
  }
  return out;
}

bool cholesky(Matrix& a, double tiny) {
  if (a.rows() != a.cols()) throw argument_error("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d <= tiny) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

Vector cholesky_solve(const Matrix& lower, const Vector& b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw argument_error("cholesky_solve: dimension mismatch");
  Vector x = b;
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * x[k];
    x[i] = s / lower(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * x[k];
    x[ii] = s / lower(ii, ii);
  }
  return x;
}

}  // namespace msc
