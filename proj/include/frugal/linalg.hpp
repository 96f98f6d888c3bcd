#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace frugal {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  /// Builds from nested rows; all rows must share a length and every entry
  /// must be finite.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// transpose(a) * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b) without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a * x
Vector matvec(const Matrix& a, std::span<const double> x);
/// transpose(a) * x
Vector matvec_t(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& a);
double norm2(std::span<const double> x);
double distance(std::span<const double> a, std::span<const double> b);

/// Counter-based random stream: the value at position `counter` depends only
/// on (seed, counter), so a stream can be persisted as two integers and
/// replayed exactly. Streams are single-consumer; use split() to derive
/// independent children for parallel consumers.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  /// One standard-normal draw (Box-Muller, consumes two counters).
  double normal() noexcept;

  /// Independent child stream keyed by `key`; does not advance this stream.
  RngStream split(std::uint64_t key) const noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// d independent standard-normal draws. Throws InvalidDimension for d == 0.
Vector gaussian_vector(std::size_t d, RngStream& rng);

/// ||W^T W - I||_F for square W.
double orthonormality_residual(const Matrix& w);
/// Same quantity for any shape (the identity is cols x cols).
double gram_residual(const Matrix& w);

/// Largest singular value by power iteration on W^T W. Returns 0 for the zero
/// matrix.
double spectral_norm(const Matrix& w, std::size_t max_iters = 5000, double tol = 1e-13);

/// Inverse through partial-pivoted LU. Throws SingularMatrixError when a pivot
/// vanishes or the 1-norm condition estimate reaches kMaxCondition.
Matrix invert_matrix(const Matrix& w);
inline constexpr double kMaxCondition = 1e8;

/// Haar-distributed orthonormal matrix from the QR factorization of a Gaussian
/// matrix.
Matrix random_orthonormal(std::size_t n, RngStream& rng);

}  // namespace frugal
