#include "softdeflate/smooth_qr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "softdeflate/spectral.hpp"

namespace softdeflate {

SmoothResult smooth_qr(const DenseBlock& s, double zeta, double mu, Rng& rng, const SmoothOptions& opts) {
  if (!(zeta > 0.0)) throw std::invalid_argument("smooth_qr: zeta must be positive");
  if (!(mu >= 1.0)) throw std::invalid_argument("smooth_qr: mu must be at least 1");
  if (s.size() == 0 || s.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("smooth_qr: S is zero");

  const Index n = s.rows();
  // ||S|| = sqrt(||S^T S||) on the small Gram matrix.
  const Matrix gram = s.transpose() * s;
  const double norm_s = std::sqrt(spectral_norm(dense_operator(gram), opts.norm_iterations, rng));

  SmoothResult out;
  out.basis = qr_orthonormalize(s, rng).q;
  double sigma = zeta * norm_s / static_cast<double>(n);
  while (coherence(out.basis) > mu && sigma <= norm_s) {
    if (opts.add_noise) {
      const double stddev = sigma / std::sqrt(static_cast<double>(n));
      out.basis = qr_orthonormalize(s + rng.gaussian(n, s.cols(), stddev), rng).q;
    } else {
      out.basis = qr_orthonormalize(s, rng).q;
    }
    out.final_sigma = sigma;
    ++out.iterations;
    sigma *= 2.0;
  }
  out.met_target = coherence(out.basis) <= mu;
  return out;
}

int smooth_qr_iteration_bound(Index n, double zeta) {
  return std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n) / zeta))) + 2);
}

}  // namespace softdeflate
