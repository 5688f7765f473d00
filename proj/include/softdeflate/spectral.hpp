#pragma once

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

struct SpectralEstimate {
  Basis basis;    // n x k, columns ordered to match sigmas
  Vector sigmas;  // descending, nonnegative
};

/// Subspace iteration: S_0 random orthonormal, then L rounds of S <- QR(op S).
/// A final Rayleigh-Ritz rotation of S diagonalizes (op S)^T (op S), so
/// sigma_i = ||op s_i||_2 are the singular values of op S, in descending order.
SpectralEstimate subspace_iteration(const LinearOperator& op, Index k, int iterations, Rng& rng);

/// Power iteration from one random unit vector; returns ||op v_L||_2. With a
/// transpose available the iteration runs on op^T op, so the result estimates
/// the spectral norm even for non-normal op.
double spectral_norm(const LinearOperator& op, int iterations, Rng& rng);

/// Default SubsIt iteration count ceil(c * k^{7/2} * ln n), capped at `cap`.
int default_subspace_iterations(Index n, Index k, double c = 1.0, int cap = 500);

}  // namespace softdeflate
