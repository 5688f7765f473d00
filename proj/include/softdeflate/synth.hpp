#pragma once

#include <functional>
#include <span>
#include <vector>

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

struct SpectrumGaps {
  std::vector<double> gamma_r;  // gamma_r = 1 - sigma_{r+1} / sigma_r for r = 1..k, sigma_{k+1} = 0
  double gamma = 0.0;           // min of gamma_r >= 1/(4k) over r < k, else 1/(4k)
  double gamma_star = 0.0;      // min(gamma, gamma_k)
};

/// Throws std::invalid_argument unless `sigmas` is nonempty, positive and
/// nonincreasing.
void check_spectrum(std::span<const double> sigmas);

SpectrumGaps spectrum_gaps(std::span<const double> sigmas);

enum class NoiseMode { low_rank, dense };

struct PlantedOptions {
  double noise_frobenius = 0.0;
  Index noise_rank = 0;  // q; 0 selects 2k. The noise has rank at most 2q.
  NoiseMode noise_mode = NoiseMode::low_rank;
};

/// A = U diag(sigmas) U^T + N with N = V C V^T (V orthonormal, orthogonal to
/// U) or, in dense mode, an explicit symmetric N with (I - UU^T) N (I - UU^T) = N.
struct PlantedInstance {
  Index n = 0;
  Index k = 0;
  Basis u;
  Vector sigmas;
  Matrix noise_basis;  // n x q2, empty without low-rank noise
  Matrix noise_core;   // q2 x q2 symmetric
  Matrix noise_dense;  // n x n in dense mode, else empty
  double noise_frobenius = 0.0;
  double mu_u = 0.0;
  double mu_n = 0.0;  // 0 without noise

  bool has_noise() const { return noise_frobenius > 0.0; }
  double entry(Index i, Index j) const;
  std::function<double(Index, Index)> oracle() const;
  /// ||A||_F, using the orthogonality of N and U.
  double frobenius_norm() const;
  /// ||N||_2.
  double noise_spectral_norm() const;
  /// v -> A v without forming A (dense mode uses the stored N).
  Matrix apply(const Matrix& v) const;
  Matrix to_dense() const;
};

PlantedInstance gen_planted(Index n, std::span<const double> spectrum, Rng& rng, const PlantedOptions& opts = {});

/// mu_N: the smallest value meeting both noise incoherence conditions,
/// max_i ||e_i^T N||^2 <= mu_N / n min(||N||_F^2, sigma_k^2) and
/// max_ij |N_ij| <= mu_N ||N||_F / n. Costs O(n^2 q).
double noise_coherence(const PlantedInstance& instance);

/// ||A - X Y^T||_F. Projects onto an orthonormal basis of [U V X Y] and takes
/// the Frobenius norm of the small core matrix, so the n x n difference is
/// never formed and nothing cancels.
double fro_error_factored(const PlantedInstance& instance, const Factors& factors);

/// v -> (A - X Y^T) v.
LinearOperator error_operator(const PlantedInstance& instance, const Factors& factors);

/// sin theta(U^{(<= r_j)}, X^{(<= r_j)}) for each boundary r_j.
std::vector<double> subspace_errors(const PlantedInstance& instance, const Basis& x, std::span<const Index> boundaries);

}  // namespace softdeflate
