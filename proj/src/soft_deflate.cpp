#include "softdeflate/soft_deflate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "softdeflate/spectral.hpp"

namespace softdeflate {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("DeflateConfig: " + what);
}

bool valid_rate(double p) { return p > 0.0 && p <= 1.0; }

double epoch_mu(const DeflateConfig& c, Index n, int t) {
  const double k = static_cast<double>(c.k);
  const double steps = static_cast<double>(t - 1);
  double root = 0.0;
  switch (c.mu_schedule) {
    case MuSchedule::pseudocode:
      root = std::sqrt(c.mu0) + steps * std::sqrt(c.mu_star * k);
      break;
    case MuSchedule::h3:
      root = std::sqrt(c.mu0) * std::pow(1.0 + c.c5 / k, steps) +
             steps * 16.0 * std::sqrt(c.mu_star * std::log(static_cast<double>(n)));
      break;
  }
  return std::max(1.0, root * root);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void DeflateConfig::validate() const {
  require(k >= 1, "k must be positive");
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(delta >= 0.0, "delta must be nonnegative");
  require(mu_star > 0.0 && mu0 > 0.0, "coherence parameters must be positive");
  require(valid_rate(p0), "p0 must lie in (0, 1]");
  const auto epochs = static_cast<std::size_t>(k);
  require(p_epoch.size() == epochs && p_fit.size() == epochs && lt.size() == epochs,
          "p_epoch, p_fit and lt need one entry per epoch (k)");
  for (std::size_t t = 0; t < epochs; ++t) {
    require(valid_rate(p_epoch[t]) && valid_rate(p_fit[t]), "epoch rates must lie in (0, 1]");
    require(lt[t] >= 1, "every L_t must be at least 1");
  }
  require(total_rate() <= 1.0 + 1e-12, "rates sum above 1");
  require(l_inner >= 1, "l_inner must be positive");
  require(s_max >= 1, "s_max must be positive");
  require(zeta > 0.0, "zeta must be positive");
  require(gap_ratio > 0.0 && gap_ratio < 1.0, "gap_ratio must lie in (0, 1)");
  require(c5 >= 0.0, "c5 must be nonnegative");
  require(s0_iterations >= 1, "s0_iterations must be positive");
}

double DeflateConfig::total_rate() const {
  double sum = p0;
  for (double p : p_epoch) sum += p;
  for (double p : p_fit) sum += p;
  return sum;
}

double default_gap_ratio(Index k) {
  if (k < 1) throw std::invalid_argument("default_gap_ratio: k must be positive");
  return 1.0 - 1.0 / (4.0 * static_cast<double>(k));
}

Index find_gap(const Vector& sigmas, Index k, Index r_prev, double gap_ratio) {
  if (r_prev >= k) throw std::invalid_argument("find_gap: r_prev must be below k");
  if (sigmas.size() == 0) throw std::invalid_argument("find_gap: no estimates");
  const Index limit = k - r_prev;
  for (Index i = 1; i <= limit && i < sigmas.size(); ++i)
    if (sigmas(i) <= gap_ratio * sigmas(i - 1)) return i;
  return limit;
}

DeflateResult soft_deflate(const ObservationSet& omega, const DeflateConfig& config, Rng& rng, const Basis* truth) {
  config.validate();
  const Index n = omega.dim();
  const Index k = config.k;
  if (k > n) throw dimension_error("soft_deflate: k exceeds the dimension");
  if (truth && (truth->rows() != n)) throw dimension_error("soft_deflate: truth basis has the wrong dimension");
  if (config.total_rate() > omega.rate() * (1.0 + 1e-12))
    throw std::invalid_argument("soft_deflate: the observation rate is below p0 + sum(p_t + p_t')");

  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(2 * k + 1));
  rates.push_back(config.p0);
  for (Index t = 0; t < k; ++t) {
    rates.push_back(config.p_epoch[static_cast<std::size_t>(t)]);
    rates.push_back(config.p_fit[static_cast<std::size_t>(t)]);
  }
  Rng split_rng = rng.split();
  const auto parts = split_observations(omega, rates, split_rng);

  DeflateResult out;
  out.factors = Factors::zero(n);
  {
    Rng norm_rng = rng.split();
    const ResidualOperator first(parts[0]);
    out.trace.s0 = spectral_norm(first.as_operator(), config.s0_iterations, norm_rng);
  }
  const double s0 = out.trace.s0;
  const double zeta = config.zeta * s0;
  const double log_n = std::log(static_cast<double>(n));
  const double flat_bound = 8.0 * std::sqrt(config.mu_star * log_n / static_cast<double>(n));

  Basis x = Basis::empty(n);
  Index r_prev = 0;
  double s_prev = s0;
  for (int t = 1; t <= static_cast<int>(k); ++t) {
    const auto start = std::chrono::steady_clock::now();
    Rng epoch_rng = rng.split();
    const auto& omega_t = parts[static_cast<std::size_t>(2 * t - 1)];
    const auto& omega_fit = parts[static_cast<std::size_t>(2 * t)];
    const double p_t = config.p_epoch[static_cast<std::size_t>(t - 1)];

    EpochRecord rec;
    rec.t = t;
    rec.tau = config.mu_star / (static_cast<double>(n) * p_t) * (2.0 * static_cast<double>(k) * s_prev + config.delta);

    const ResidualOperator residual(omega_t, &out.factors, rec.tau);
    SpectralEstimate est = subspace_iteration(residual.as_operator(), k - r_prev, config.l_inner, epoch_rng);
    rec.sigmas = est.sigmas;

    const double top = est.sigmas(0);
    if (top < 10.0 * config.eps * s0 || top == 0.0) {
      rec.r = r_prev;
      rec.wall_ms = elapsed_ms(start);
      out.trace.early_return = true;
      out.trace.epochs.push_back(std::move(rec));
      return out;
    }

    rec.d = find_gap(est.sigmas, k, r_prev, config.gap_ratio);
    rec.r = r_prev + rec.d;
    rec.s = est.sigmas(rec.d - 1);

    const Matrix rotation = random_orthonormal(rec.d, epoch_rng);
    const Matrix flat = (est.basis.mat().leftCols(rec.d) * rotation).cwiseMax(-flat_bound).cwiseMin(flat_bound);
    const Basis w = extend_basis(x, flat, epoch_rng);

    rec.mu = epoch_mu(config, n, t);
    AltLsOptions opts;
    opts.smoothing = config.smoothing;
    AltLsResult fit = smaltls(omega_fit, w, config.lt[static_cast<std::size_t>(t - 1)], config.s_max, zeta, rec.mu,
                              epoch_rng, opts);
    rec.altls = std::move(fit.report);

    x = std::move(fit.x);
    out.factors = Factors{x.mat(), std::move(fit.y)};
    if (truth) {
      const Index upto = std::min(rec.r, truth->cols());
      rec.sin_theta.push_back(subspace_distance(x.mat(), truth->mat().leftCols(upto)));
    }
    rec.wall_ms = elapsed_ms(start);
    out.trace.epochs.push_back(std::move(rec));

    r_prev = out.trace.epochs.back().r;
    s_prev = out.trace.epochs.back().s;
    if (r_prev >= k) break;
  }
  return out;
}

DeflateConfig default_schedule(Index n, Index k, double eps, double m, double p0_share, double epoch_share) {
  if (n < 1 || k < 1) throw std::invalid_argument("default_schedule: n and k must be positive");
  if (k > n) throw dimension_error("default_schedule: k exceeds n");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("default_schedule: eps must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  if (!(m > 0.0 && m <= nd * nd)) throw std::invalid_argument("default_schedule: budget must lie in (0, n^2]");
  const double fit_share = 1.0 - p0_share - epoch_share;
  if (!(p0_share > 0.0 && epoch_share > 0.0 && fit_share > 0.0))
    throw std::invalid_argument("default_schedule: shares must be positive and sum below 1");

  const double p = m / (nd * nd);
  DeflateConfig c;
  c.k = k;
  c.eps = eps;
  c.p0 = p0_share * p;
  c.p_epoch.assign(static_cast<std::size_t>(k), epoch_share * p / kd);
  c.p_fit.assign(static_cast<std::size_t>(k), fit_share * p / kd);
  if (c.p_fit[0] * nd < 2.0 * kd)
    throw std::invalid_argument("default_schedule: budget too small (p_t' n = " + std::to_string(c.p_fit[0] * nd) +
                                " < 2k)");

  const int lt = static_cast<int>(std::ceil(4.0 * std::log(kd * nd / eps) * 4.0 * kd));
  c.lt.assign(static_cast<std::size_t>(k), std::max(1, lt));
  c.s_max = 3;
  c.l_inner = default_subspace_iterations(n, k);
  c.zeta = eps * std::pow(kd, -5.0);
  c.gap_ratio = default_gap_ratio(k);
  c.mu_star = std::max(1.0, std::log(nd));
  c.mu0 = c.mu_star * kd + std::log(nd);
  return c;
}

void set_iterations_from_budget(DeflateConfig& config, Index n, double obs_per_iter) {
  if (!(obs_per_iter > 0.0)) throw std::invalid_argument("set_iterations_from_budget: budget must be positive");
  const double cells = static_cast<double>(n) * static_cast<double>(n);
  config.lt.resize(config.p_fit.size());
  for (std::size_t t = 0; t < config.p_fit.size(); ++t)
    config.lt[t] = std::max(1, static_cast<int>(std::floor(config.p_fit[t] * cells / obs_per_iter)));
}

double theoretical_sample_rate(double n, double k, double gamma_star, double sigma1, double sigmak, double eps,
                               double delta_over_eps_norm, double mu0, double mu_star, double c) {
  const double log_n = std::log(n);
  return c * std::pow(k, 9.0) / (std::pow(gamma_star, 3.0) * n) * std::log(k * sigma1 / (sigmak + eps * sigma1)) *
         (1.0 + delta_over_eps_norm * delta_over_eps_norm) * (mu0 + mu_star * k * log_n) * log_n * log_n;
}

}  // namespace softdeflate
