#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/observations.hpp"
#include "softdeflate/rng.hpp"
#include "softdeflate/smooth_qr.hpp"

namespace softdeflate {

/// Least squares S = argmin sum_{(i,j) in Omega} (A_ij - (R S^T)_ij)^2.
/// Row j of S solves B_j x = sum_i A_ij R_i^T with B_j = sum_i R_i^T R_i over
/// the observed (i, j). Columns with fewer than r observations or cond(B_j) >
/// 1e12 use the minimum-norm solution (eigenvalue cutoff 1e-10 lambda_max);
/// unobserved columns give zero rows.
DenseBlock ls_solve_block(const ObservationSet& omega, const Basis& r);

struct AltLsIteration {
  int index = 0;            // 1-based iteration number
  double coherence = 0.0;   // of R_l
  bool met_target = true;   // SmoothQR reached mu (always true without smoothing)
  double residual = 0.0;    // ||P_{Omega_l}(A - R_{l-1} S_l^T)||_F, normalized by 1/p
};

struct AltLsReport {
  std::vector<AltLsIteration> iterations;
  int smoothing_failures = 0;
};

struct AltLsOptions {
  /// false: R_l = QR(S_l) with no noise (the simplified variant).
  bool smoothing = true;
  SmoothOptions smooth{};
  /// Test hook: discard the observations of this sub-split (0-based s).
  std::optional<int> empty_subsplit{};
  /// Called with (l, R_l) for l = 1..L, including the final R_L that the
  /// output does not use. Diagnostics only.
  std::function<void(int, const Basis&)> observer{};
};

struct AltLsResult {
  Basis x;       // R_{L-1}
  DenseBlock y;  // S_L
  AltLsReport report;
};

/// Smoothed-median alternating least squares from the orthonormal start R0.
/// Omega is split into `iterations` equal-rate independent sets, each further
/// into `s_max` sets; S_l is the entrywise median of the per-split solves and
/// R_l = SmoothQR(S_l, zeta, mu). The approximation is x * y^T.
AltLsResult smaltls(const ObservationSet& omega, const Basis& r0, int iterations, int s_max, double zeta, double mu,
                    Rng& rng, const AltLsOptions& opts = {});

}  // namespace softdeflate
