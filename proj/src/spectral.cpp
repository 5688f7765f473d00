#include "softdeflate/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace softdeflate {

SpectralEstimate subspace_iteration(const LinearOperator& op, Index k, int iterations, Rng& rng) {
  const Index n = op.dim;
  if (k < 1) throw std::invalid_argument("subspace_iteration: k must be positive");
  if (k > n) throw dimension_error("subspace_iteration: k exceeds the dimension");
  if (iterations < 1) throw std::invalid_argument("subspace_iteration: need at least one iteration");

  Matrix s = qr_orthonormalize(rng.gaussian(n, k), rng).q.mat();
  for (int l = 0; l < iterations; ++l) s = qr_orthonormalize(op.apply(s), rng).q.mat();

  // Rayleigh-Ritz on (op S)^T (op S): rotating S inside its span makes the
  // column norms ||op s_i|| the singular values of op S.
  const Matrix image = op.apply(s);
  Matrix gram = image.transpose() * image;
  gram = 0.5 * (gram + gram.transpose());
  const SymEig eig = sym_eig_small(gram);
  Matrix basis = s * eig.vectors;
  const Vector sigmas = eig.values.cwiseMax(0.0).cwiseSqrt();
  return {qr_orthonormalize(basis, rng).q, sigmas};
}

double spectral_norm(const LinearOperator& op, int iterations, Rng& rng) {
  if (iterations < 1) throw std::invalid_argument("spectral_norm: need at least one iteration");
  Vector v = rng.gaussian(op.dim, 1);
  v /= v.norm();
  const bool gram = op.has_transpose();
  for (int l = 0; l < iterations; ++l) {
    Vector w = gram ? Vector(op.apply_transpose(op.apply(v))) : Vector(op.apply(v));
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
  }
  return op.apply(v).norm();
}

int default_subspace_iterations(Index n, Index k, double c, int cap) {
  const double raw = std::ceil(c * std::pow(static_cast<double>(k), 3.5) * std::log(static_cast<double>(n)));
  return std::clamp(static_cast<int>(raw), 1, cap);
}

}  // namespace softdeflate
