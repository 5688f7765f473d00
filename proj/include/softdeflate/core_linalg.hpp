#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "softdeflate/rng.hpp"

namespace softdeflate {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tall-skinny n x r block (column-major).
using DenseBlock = Eigen::MatrixXd;

class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// n x r block with orthonormal columns.
class Basis {
 public:
  Basis() = default;

  /// Checks ||Q^T Q - I||_max <= tol before adopting `q`.
  static Basis from_orthonormal(Matrix q, double tol = 1e-10);
  /// Adopts `q` without checking; for outputs of orthonormalizing routines.
  static Basis adopt(Matrix q) { return Basis(std::move(q)); }
  static Basis empty(Index n) { return Basis(Matrix(n, 0)); }

  const Matrix& mat() const { return q_; }
  Index rows() const { return q_.rows(); }
  Index cols() const { return q_.cols(); }
  Basis leading(Index count) const { return Basis(q_.leftCols(count)); }

  /// max_ij |(Q^T Q - I)_ij|
  double orthonormality_defect() const;

 private:
  explicit Basis(Matrix q) : q_(std::move(q)) {}
  Matrix q_;
};

/// Rank-r approximation X * Y^T of an n x n matrix.
struct Factors {
  DenseBlock x;
  DenseBlock y;

  static Factors zero(Index n) { return {Matrix(n, 0), Matrix(n, 0)}; }
  Index rank() const { return x.cols(); }
  Index dim() const { return x.rows(); }
};

struct QrResult {
  Basis q;
  Matrix r;                // upper triangular, nonnegative diagonal
  bool completed = false;  // some column was numerically dependent and replaced
};

/// Column-by-column Gram-Schmidt with a second full reorthogonalization pass.
/// A column whose residual falls below 1e-12 * ||S||_F is replaced by a random
/// unit vector orthogonal to the preceding columns (R gets a zero diagonal).
QrResult qr_orthonormalize(const DenseBlock& s, Rng& rng);
/// Same, with a fixed internal stream for the rank-deficient completion.
QrResult qr_orthonormalize(const DenseBlock& s);

/// Orthonormal basis of [X | extra] whose first X.cols() columns are X itself.
Basis extend_basis(const Basis& x, const DenseBlock& extra, Rng& rng);

struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
};

SymEig sym_eig_small(const Matrix& m);

/// sin of the largest principal angle between span(A) and span(B), both with
/// the same shape. Evaluated as ||B - A(A^T B)||_2 in O(n r^2).
double principal_angle_sin(const Basis& a, const Basis& b);

/// ||(I - A A^T) B||_2 for orthonormal A, B with any column counts. Equals 1
/// whenever B has more columns than A.
double subspace_distance(const Matrix& a, const Matrix& b);

/// mu(Q) = max_i (n / r) ||e_i^T Q||^2.
double coherence(const Matrix& q);
inline double coherence(const Basis& q) { return coherence(q.mat()); }

/// Entrywise median across same-shaped blocks; even counts average the two
/// middle values.
DenseBlock entrywise_median(std::span<const DenseBlock> blocks);

/// Haar-distributed dim x dim orthogonal matrix.
Matrix random_orthonormal(Index dim, Rng& rng);

/// Square linear map applied to blocks of column vectors. `apply_transpose`
/// may be left empty for symmetric maps.
struct LinearOperator {
  Index dim = 0;
  std::function<Matrix(const Matrix&)> apply;
  std::function<Matrix(const Matrix&)> apply_transpose{};

  bool has_transpose() const { return static_cast<bool>(apply_transpose); }
};

/// Wraps a dense square matrix (copied into the closure), with its transpose.
LinearOperator dense_operator(Matrix m);

}  // namespace softdeflate
