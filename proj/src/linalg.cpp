#include "frugal/linalg.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace frugal {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::SingularMatrix: return "singular-matrix";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::InvalidPair: return "invalid-pair";
    case ErrorKind::TrainingDiverged: return "training-diverged";
    case ErrorKind::InsufficientPool: return "insufficient-pool";
    case ErrorKind::LabelMismatch: return "label-mismatch";
    case ErrorKind::Phase: return "phase";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::DuplicateId: return "duplicate-id";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::Shape, "matrix entry count does not match rows x cols");
  }
  if (!all_finite()) {
    throw Error(ErrorKind::InvalidArgument, "matrix entries must be finite");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorKind::Shape, "ragged matrix rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::Shape, "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::Shape, "matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k).data();
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      double* out = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::Shape, "matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorKind::Shape, "matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw Error(ErrorKind::Shape, "matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += arow[j] * xi;
  }
  return y;
}

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// RngStream: SplitMix64 evaluated at (seed, counter).

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t value = mix64(mix64(seed_) + (counter_ + 1) * kGolden);
  ++counter_;
  return value;
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
  // Lemire's nearly-divisionless rejection; unbiased for every n.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::split(std::uint64_t key) const noexcept {
  return RngStream(mix64(seed_ ^ mix64(key * kGolden + 0x632BE59BD9B4E019ULL)), 0);
}

Vector gaussian_vector(std::size_t d, RngStream& rng) {
  if (d == 0) throw Error(ErrorKind::InvalidDimension, "gaussian_vector: dimension must be >= 1");
  Vector v(d);
  for (std::size_t i = 0; i < d; i += 2) {
    const double u1 = static_cast<double>((rng.next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(angle);
    if (i + 1 < d) v[i + 1] = r * std::sin(angle);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Norms and conditioning

double gram_residual(const Matrix& w) {
  const std::size_t n = w.cols();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (std::size_t k = 0; k < w.rows(); ++k) g += w(k, i) * w(k, j);
      if (i == j) g -= 1.0;
      s += g * g;
    }
  }
  return std::sqrt(s);
}

double orthonormality_residual(const Matrix& w) {
  if (!w.square()) throw Error(ErrorKind::Shape, "orthonormality_residual: matrix must be square");
  return gram_residual(w);
}

double spectral_norm(const Matrix& w, std::size_t max_iters, double tol) {
  if (!w.square()) throw Error(ErrorKind::Shape, "spectral_norm: matrix must be square");
  if (max_iters == 0 || !(tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "spectral_norm: need max_iters >= 1 and tol > 0");
  }
  const std::size_t n = w.cols();
  if (n == 0 || frobenius_norm(w) == 0.0) return 0.0;

  // Fixed generic start so the estimate is reproducible.
  RngStream start(0x5EEDC0FFEEULL);
  Vector v = gaussian_vector(n, start);
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  double sigma = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const Vector wv = matvec(w, v);
    const double estimate = norm2(wv);
    Vector next = matvec_t(w, wv);
    nv = norm2(next);
    if (nv == 0.0) return estimate;
    for (double& x : next) x /= nv;
    v = std::move(next);
    const bool converged = it > 0 && std::abs(estimate - sigma) <= tol * estimate;
    sigma = estimate;
    if (converged) break;
  }
  return norm2(matvec(w, v));
}

namespace {

double one_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

Matrix invert_matrix(const Matrix& w) {
  if (!w.square()) throw Error(ErrorKind::Shape, "invert_matrix: matrix must be square");
  const std::size_t n = w.rows();
  Matrix lu = w;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  const double scale = one_norm(w);
  const auto singular = [&](double condition) {
    std::ostringstream msg;
    msg << "matrix is singular or ill-conditioned (condition estimate " << condition << ")";
    return SingularMatrixError(msg.str(), condition);
  };
  if (scale == 0.0) throw singular(INFINITY);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(pivot, k))) pivot = i;
    if (std::abs(lu(pivot, k)) <= scale * 1e-15) throw singular(INFINITY);
    if (pivot != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(pivot).begin());
      std::swap(perm[k], perm[pivot]);
    }
    const double diag = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = lu(i, k) / diag;
      lu(i, k) = factor;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= factor * lu(k, j);
    }
  }

  // Solve L U X = P I column by column.
  Matrix inv(n, n);
  Vector col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
      col[i] /= lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
  }

  const double condition = scale * one_norm(inv);
  if (!std::isfinite(condition) || condition >= kMaxCondition) throw singular(condition);
  return inv;
}

Matrix random_orthonormal(std::size_t n, RngStream& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidDimension, "random_orthonormal: n must be >= 1");
  // Columns of a Gaussian matrix, orthonormalized by modified Gram-Schmidt
  // with one reorthogonalization pass.
  std::vector<Vector> cols;
  cols.reserve(n);
  for (std::size_t j = 0; j < n; ++j) cols.push_back(gaussian_vector(n, rng));
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += cols[k][i] * cols[j][i];
        for (std::size_t i = 0; i < n; ++i) cols[j][i] -= dot * cols[k][i];
      }
    }
    const double nrm = norm2(cols[j]);
    for (double& x : cols[j]) x /= nrm;
  }
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) q(i, j) = cols[j][i];
  return q;
}

}  // namespace frugal
