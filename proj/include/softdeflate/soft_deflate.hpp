#pragma once

#include <vector>

#include "softdeflate/altls.hpp"
#include "softdeflate/core_linalg.hpp"
#include "softdeflate/observations.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

enum class MuSchedule {
  pseudocode,  // (sqrt(mu0) + (t - 1) sqrt(mu* k))^2
  h3,          // (sqrt(mu0) (1 + c5 / k)^(t-1) + (t - 1) 16 sqrt(mu* ln n))^2
};

struct DeflateConfig {
  Index k = 1;
  double eps = 1e-3;
  double delta = 0.0;  // bound on ||N||_F
  double mu_star = 1.0;
  double mu0 = 1.0;

  double p0 = 0.0;
  std::vector<double> p_epoch;  // p_t, one per epoch t = 1..k
  std::vector<double> p_fit;    // p_t', one per epoch
  std::vector<int> lt;          // S-M-AltLS iterations per epoch

  int l_inner = 100;  // SubsIt iterations
  int s_max = 3;
  double zeta = 1e-3;  // multiplied by s0 at run time
  double gap_ratio = 0.75;

  MuSchedule mu_schedule = MuSchedule::pseudocode;
  double c5 = 1.0;
  bool smoothing = true;
  int s0_iterations = 100;

  /// Throws std::invalid_argument describing the first violated field.
  void validate() const;
  /// p0 + sum_t (p_t + p_t').
  double total_rate() const;
};

/// The default threshold 1 - 1/(4k).
double default_gap_ratio(Index k);

/// Smallest i <= k - r_prev (1-based) with sigmas[i] <= gap_ratio * sigmas[i-1];
/// k - r_prev when no such i exists or the estimates run out.
Index find_gap(const Vector& sigmas, Index k, Index r_prev, double gap_ratio);

struct EpochRecord {
  int t = 0;
  Index r = 0;  // r_t
  Index d = 0;  // d_t
  double s = 0.0;
  double tau = 0.0;
  double mu = 0.0;
  Vector sigmas;                  // SubsIt estimates for T_t
  std::vector<double> sin_theta;  // sin(U^{(<= r_t)}, X_t); empty without truth
  AltLsReport altls;
  double wall_ms = 0.0;  // not part of the deterministic record
};

struct EpochTrace {
  double s0 = 0.0;
  bool early_return = false;  // stopped on the sigma_1 < 10 eps s0 test
  std::vector<EpochRecord> epochs;
};

struct DeflateResult {
  Factors factors;
  EpochTrace trace;
};

/// Runs SoftDeflate on Omega. `truth`, when given, is the planted basis U and
/// only feeds the sin-theta diagnostics.
DeflateResult soft_deflate(const ObservationSet& omega, const DeflateConfig& config, Rng& rng,
                           const Basis* truth = nullptr);

/// Practical schedule for a budget of m expected observations: by default 5% to
/// p0, 15% spread over the p_t and 80% over the p_t', L_t = ceil(16 k ln(k n / eps)),
/// s_max = 3, L = min(500, ceil(k^3.5 ln n)), zeta = eps k^-5, mu* = max(1, ln n),
/// mu0 = mu* k + ln n. Throws when some p_t' n < 2k.
DeflateConfig default_schedule(Index n, Index k, double eps, double m, double p0_share = 0.05,
                               double epoch_share = 0.15);

/// Uses a fixed number of observations per S-M-AltLS iteration instead:
/// L_t = max(1, floor(p_t' n^2 / obs_per_iter)).
void set_iterations_from_budget(DeflateConfig& config, Index n, double obs_per_iter);

/// The worst-case sampling rate under which SoftDeflate's recovery guarantee holds,
/// evaluated literally with natural logarithms; a diagnostic only.
double theoretical_sample_rate(double n, double k, double gamma_star, double sigma1, double sigmak, double eps,
                               double delta_over_eps_norm, double mu0, double mu_star, double c);

}  // namespace softdeflate
