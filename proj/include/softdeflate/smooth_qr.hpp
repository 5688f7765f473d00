#pragma once

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

struct SmoothResult {
  Basis basis;
  double final_sigma = 0.0;  // scale of the last noise draw; 0 when none was added
  bool met_target = false;   // coherence(basis) <= mu
  int iterations = 1;        // QR calls, including the initial noise-free one
};

struct SmoothOptions {
  /// When false the perturbation H is forced to zero (the retry loop still
  /// runs its schedule). Test hook.
  bool add_noise = true;
  /// Power iterations for the spectral norm of S.
  int norm_iterations = 50;
};

/// Orthonormalizes S, then while coherence exceeds mu and sigma <= ||S||,
/// retries QR(S + H) with fresh H_ij ~ N(0, sigma^2 / n), doubling sigma from
/// zeta ||S|| / n.
SmoothResult smooth_qr(const DenseBlock& s, double zeta, double mu, Rng& rng, const SmoothOptions& opts = {});

/// Upper bound ceil(log2(n / zeta)) + 2 on SmoothResult::iterations.
int smooth_qr_iteration_bound(Index n, double zeta);

}  // namespace softdeflate
