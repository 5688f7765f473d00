#include "softdeflate/core_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace softdeflate {

namespace {

constexpr double kDependentColumnTol = 1e-12;

// Orthogonalizes v twice against the first `count` columns of q and returns
// the accumulated coefficients.
Vector project_out(const Matrix& q, Index count, Vector& v) {
  Vector coeff = Vector::Zero(count);
  if (count == 0) return coeff;
  const auto prior = q.leftCols(count);
  for (int pass = 0; pass < 2; ++pass) {
    Vector h = prior.transpose() * v;
    v.noalias() -= prior * h;
    coeff += h;
  }
  return coeff;
}

Vector random_unit_orthogonal(const Matrix& q, Index count, Rng& rng) {
  for (;;) {
    Vector g = rng.gaussian(q.rows(), 1);
    project_out(q, count, g);
    const double nrm = g.norm();
    if (nrm > 1e-8) return g / nrm;
  }
}

}  // namespace

Basis Basis::from_orthonormal(Matrix q, double tol) {
  Basis b(std::move(q));
  const double defect = b.orthonormality_defect();
  if (!(defect <= tol))
    throw std::invalid_argument("Basis: columns not orthonormal (defect " + std::to_string(defect) + ")");
  return b;
}

double Basis::orthonormality_defect() const {
  if (q_.cols() == 0) return 0.0;
  Matrix g = q_.transpose() * q_;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

QrResult qr_orthonormalize(const DenseBlock& s, Rng& rng) {
  const Index n = s.rows();
  const Index r = s.cols();
  if (r > n) throw dimension_error("qr_orthonormalize: more columns than rows");

  const double threshold = kDependentColumnTol * s.norm();
  Matrix q(n, r);
  Matrix upper = Matrix::Zero(r, r);
  bool completed = false;

  for (Index j = 0; j < r; ++j) {
    Vector v = s.col(j);
    upper.col(j).head(j) = project_out(q, j, v);
    const double nrm = v.norm();
    if (nrm <= threshold || nrm == 0.0) {
      q.col(j) = random_unit_orthogonal(q, j, rng);
      completed = true;
    } else {
      q.col(j) = v / nrm;
      upper(j, j) = nrm;
    }
  }
  return {Basis::adopt(std::move(q)), std::move(upper), completed};
}

QrResult qr_orthonormalize(const DenseBlock& s) {
  Rng rng(0x5eedULL);
  return qr_orthonormalize(s, rng);
}

Basis extend_basis(const Basis& x, const DenseBlock& extra, Rng& rng) {
  const Index n = x.rows();
  if (extra.rows() != n) throw dimension_error("extend_basis: row mismatch");
  const Index r0 = x.cols();
  const Index total = r0 + extra.cols();
  if (total > n) throw dimension_error("extend_basis: more columns than rows");

  Matrix q(n, total);
  q.leftCols(r0) = x.mat();
  const double threshold = kDependentColumnTol * extra.norm();
  for (Index j = 0; j < extra.cols(); ++j) {
    Vector v = extra.col(j);
    project_out(q, r0 + j, v);
    const double nrm = v.norm();
    if (nrm <= threshold || nrm == 0.0)
      q.col(r0 + j) = random_unit_orthogonal(q, r0 + j, rng);
    else
      q.col(r0 + j) = v / nrm;
  }
  return Basis::adopt(std::move(q));
}

SymEig sym_eig_small(const Matrix& m) {
  if (m.rows() != m.cols()) throw dimension_error("sym_eig_small: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("sym_eig_small: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("sym_eig_small: eigensolver did not converge");

  // Eigen returns ascending order.
  const Index d = m.rows();
  SymEig out{Vector(d), Matrix(d, d)};
  for (Index i = 0; i < d; ++i) {
    out.values(i) = solver.eigenvalues()(d - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  return out;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw dimension_error("subspace_distance: row mismatch");
  if (b.cols() == 0) return 0.0;
  if (b.cols() > a.cols()) return 1.0;
  const Matrix resid = b - a * (a.transpose() * b);
  const Matrix gram = resid.transpose() * resid;
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return std::clamp(std::sqrt(std::max(0.0, top)), 0.0, 1.0);
}

double principal_angle_sin(const Basis& a, const Basis& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw dimension_error("principal_angle_sin: bases must have the same shape");
  return subspace_distance(a.mat(), b.mat());
}

double coherence(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  const double n = static_cast<double>(q.rows());
  const double r = static_cast<double>(q.cols());
  return (n / r) * q.rowwise().squaredNorm().maxCoeff();
}

DenseBlock entrywise_median(std::span<const DenseBlock> blocks) {
  if (blocks.empty()) throw std::invalid_argument("entrywise_median: empty input");
  const Index rows = blocks[0].rows();
  const Index cols = blocks[0].cols();
  for (const auto& b : blocks)
    if (b.rows() != rows || b.cols() != cols) throw dimension_error("entrywise_median: shape mismatch");
  if (blocks.size() == 1) return blocks[0];

  const std::size_t count = blocks.size();
  const std::size_t mid = count / 2;
  DenseBlock out(rows, cols);
  std::vector<double> vals(count);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      for (std::size_t s = 0; s < count; ++s) vals[s] = blocks[s](i, j);
      std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
      double med = vals[mid];
      if (count % 2 == 0) {
        const double lower = *std::max_element(vals.begin(), vals.begin() + mid);
        med = 0.5 * (lower + med);
      }
      out(i, j) = med;
    }
  }
  return out;
}

Matrix random_orthonormal(Index dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("random_orthonormal: dim must be positive");
  const Matrix g = rng.gaussian(dim, dim);
  return qr_orthonormalize(g, rng).q.mat();
}

LinearOperator dense_operator(Matrix m) {
  if (m.rows() != m.cols()) throw dimension_error("dense_operator: matrix not square");
  const Index dim = m.rows();
  auto shared = std::make_shared<const Matrix>(std::move(m));
  return {dim, [shared](const Matrix& v) -> Matrix { return *shared * v; },
          [shared](const Matrix& v) -> Matrix { return shared->transpose() * v; }};
}

}  // namespace softdeflate
