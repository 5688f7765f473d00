#pragma once

#include <vector>

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/observations.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

/// Z = sum_i w_i v_i v_i^T with w_i >= 0 and unit v_i.
struct RankOneSum {
  std::vector<double> weights;
  std::vector<Vector> vectors;

  std::size_t rank() const { return weights.size(); }
  double trace() const;
  double entry(Index i, Index j) const;
  Matrix to_dense(Index n) const;
};

struct FrankWolfeOptions {
  int power_iters = 50;
  /// Start from trace_bound * v v^T for a random unit v instead of Z = 0. The
  /// first step (alpha = 1) discards the start either way; it only changes the
  /// first residual.
  bool random_init = false;
  /// Dense eigensolver for the step direction. Test mode for small n.
  bool exact_eigvec = false;
};

struct FrankWolfeResult {
  RankOneSum z;
  std::vector<double> objective;  // f(Z_l) = 0.5 ||A_Omega - Z_Omega||_F^2 after each step
};

/// Number of Frank-Wolfe steps for accuracy eps: ceil(1 / eps).
int frank_wolfe_iterations(double eps);

/// Frank-Wolfe over {Z symmetric PSD, tr Z = trace_bound} for the unnormalized
/// objective on observed entries. Each step takes the top eigenvector w of the
/// symmetrized residual and sets Z <- alpha tb w w^T + (1 - alpha) Z with
/// alpha = 1 / l. Power iteration runs on the residual; when its Rayleigh
/// quotient is negative it reruns on the residual shifted by |quotient| I so
/// that the algebraically largest eigenvalue is found.
FrankWolfeResult frank_wolfe(const ObservationSet& omega, double eps, double trace_bound, Rng& rng,
                             const FrankWolfeOptions& opts = {});

/// Rank-k truncated SVD of the normalized observed matrix P(A) by subspace
/// iteration: X from SubsIt, Y = P(A)^T X, so X Y^T = X X^T P(A).
Factors naive_svd_complete(const ObservationSet& omega, Index k, Rng& rng, int iterations = 100);

}  // namespace softdeflate
