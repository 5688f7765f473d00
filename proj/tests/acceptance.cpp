// Acceptance suite: one PASS/FAIL line per criterion. `--expect-red 1,3`
// lists criteria known to fail; the exit code is nonzero only when some other
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "dense_frank_wolfe.hpp"
#include "softdeflate/altls.hpp"
#include "softdeflate/baselines.hpp"
#include "softdeflate/experiment.hpp"
#include "softdeflate/smooth_qr.hpp"
#include "softdeflate/soft_deflate.hpp"
#include "softdeflate/spectral.hpp"
#include "softdeflate/synth.hpp"

using namespace softdeflate;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Each seed gets independent instance, sample and algorithm streams.
struct SeedStreams {
  Rng instance;
  Rng sample;
  Rng algorithm;
  explicit SeedStreams(std::uint64_t seed, std::uint64_t salt)
      : SeedStreams(Rng(Rng::mix(salt) ^ seed)) {}

 private:
  explicit SeedStreams(Rng root) : instance(root.split()), sample(root.split()), algorithm(root.split()) {}
};

// Noise-free recovery at n = 600, k = 4, p = 0.25. The configuration below is
// the best found under sample splitting: one epoch captures all four
// directions and the whole fitting budget goes to six plain AltLS rounds.
Outcome criterion_1() {
  const Index n = 600;
  const std::vector<double> spectrum{1.0, 0.9, 0.5, 0.4};
  const double p = 0.25;
  int good = 0;
  double worst_seconds = 0.0;
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeedStreams s(seed, 1);
    const auto inst = gen_planted(n, spectrum, s.instance);
    const auto omega = sample_observations(inst.oracle(), n, p, s.sample);

    DeflateConfig c = default_schedule(n, 4, 1e-3, p * n * n);
    c.p0 = 0.005 * p;
    c.p_epoch.assign(4, 1e-6);
    c.p_fit.assign(4, 1e-6);
    c.p_epoch[0] = 0.25 * p;
    c.p_fit[0] = 0.745 * p - 1e-5;
    c.lt.assign(4, 6);
    c.s_max = 1;
    c.smoothing = false;
    c.gap_ratio = 0.5;
    c.mu_star = inst.mu_u;

    const auto t0 = std::chrono::steady_clock::now();
    const auto res = soft_deflate(omega, c, s.algorithm);
    const double secs = seconds_since(t0);
    worst_seconds = std::max(worst_seconds, secs);
    const double err = fro_error_factored(inst, res.factors) / inst.frobenius_norm();
    errors.push_back(err);
    if (err <= 1e-3 && secs <= 60.0) ++good;
  }
  std::sort(errors.begin(), errors.end());
  return {good >= 9, fmt("%.0f/10 seeds at rel. error <= 1e-3 (median %.2e, slowest %.2f s)", good,
                         0.5 * (errors[4] + errors[5]), worst_seconds)};
}

// Spectrum (1, 1, 0.1) at n = 1000 and m = 3e5 with the simplified AltLS and
// 15000 fitting observations per iteration.
Outcome criterion_2() {
  const Index n = 1000;
  const std::vector<double> spectrum{1.0, 1.0, 0.1};
  const double m = 3e5;
  const double p = m / (static_cast<double>(n) * n);
  int deflate_good = 0;
  int svd_good = 0;
  double worst_sin = 0.0;
  double least_third = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeedStreams s(seed, 2);
    const auto inst = gen_planted(n, spectrum, s.instance);
    const auto omega = sample_observations(inst.oracle(), n, p, s.sample);

    DeflateConfig c = default_schedule(n, 3, 1e-3, m, 0.05, 0.2);
    set_iterations_from_budget(c, n, 15000);
    c.s_max = 1;
    c.smoothing = false;
    c.mu_star = inst.mu_u;
    Rng deflate_rng = s.algorithm.split();
    const auto res = soft_deflate(omega, c, deflate_rng);
    const double sin = subspace_distance(res.factors.x, inst.u.mat());
    worst_sin = std::max(worst_sin, sin);
    if (sin <= 0.15) ++deflate_good;

    Rng svd_rng = s.algorithm.split();
    const auto svd = naive_svd_complete(omega, 3, svd_rng);
    const double third = subspace_distance(svd.x, inst.u.mat().col(2));
    least_third = std::min(least_third, third);
    if (third >= 0.5) ++svd_good;
  }
  return {deflate_good >= 8 && svd_good >= 8,
          fmt("soft_deflate sin <= 0.15 on %.0f/10 (worst %.3f); ", deflate_good, worst_sin) +
              fmt("naive_svd third-direction sin >= 0.5 on %.0f/10 (least %.3f)", svd_good, least_third)};
}

// ||N||_F = 0.05 ||M||_F, eps = 0.05, p = 0.8, simplified AltLS. With eps
// this large the early-return threshold 10 eps s0 sits near sigma_k, so p0
// gets 10% of the budget to keep s0 from overshooting.
Outcome criterion_3() {
  const Index n = 600;
  const std::vector<double> spectrum{1.0, 0.9, 0.8};
  const double eps = 0.05;
  const double p = 0.8;
  double m_norm = 0.0;
  for (double s : spectrum) m_norm += s * s;
  m_norm = std::sqrt(m_norm);
  int good = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeedStreams s(seed, 3);
    PlantedOptions opts;
    opts.noise_frobenius = 0.05 * m_norm;
    const auto inst = gen_planted(n, spectrum, s.instance, opts);
    const auto omega = sample_observations(inst.oracle(), n, p, s.sample);

    DeflateConfig c = default_schedule(n, 3, eps, p * n * n, 0.1, 0.15);
    set_iterations_from_budget(c, n, 15000);
    c.s_max = 1;
    c.smoothing = false;
    c.delta = opts.noise_frobenius;
    c.mu_star = std::max(inst.mu_u, inst.mu_n);
    c.mu0 = c.mu_star * 3 + std::log(static_cast<double>(n));
    Rng deflate_rng = s.algorithm.split();
    const auto res = soft_deflate(omega, c, deflate_rng);

    Rng norm_rng = s.algorithm.split();
    const double err = spectral_norm(error_operator(inst, res.factors), 200, norm_rng);
    const double bound = 1.25 * inst.noise_spectral_norm() + eps * spectrum[0];
    worst_ratio = std::max(worst_ratio, err / bound);
    if (err <= bound) ++good;
  }
  return {good >= 8, fmt("%.0f/10 seeds within 1.25||N|| + eps sigma_1 (worst error/bound %.3f)", good, worst_ratio)};
}

Outcome criterion_4() {
  const Index n = 256;
  const double zeta = 1e-3;
  const int bound = smooth_qr_iteration_bound(n, zeta);
  int runs = 0;
  int violations = 0;
  int met = 0;
  for (Index r : {1, 4}) {
    for (double mu : {1.5, 4.0, 16.0, 64.0}) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(Rng::mix(4) ^ (seed * 131 + static_cast<std::uint64_t>(r)));
        // Mass concentrated on r rows plus a small dense perturbation.
        Matrix s = 1e-4 * rng.gaussian(n, r);
        for (Index j = 0; j < r; ++j) s(j * 7 % n, j) += 1.0 + rng.uniform();
        const auto res = smooth_qr(s, zeta, mu, rng);
        ++runs;
        met += res.met_target ? 1 : 0;
        const bool ok = res.iterations >= 1 && res.iterations <= bound &&
                        (!res.met_target || coherence(res.basis) <= mu) &&
                        res.basis.orthonormality_defect() <= 1e-10;
        if (!ok) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%.0f/%.0f runs within the contract (met_target on %.0f)", runs - violations, runs, met)};
}

Outcome criterion_5() {
  Rng rng(Rng::mix(5));
  double worst = 0.0;
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 10 + static_cast<Index>(rng.uniform() * 191);
    const Matrix g = rng.gaussian(n, n);
    const Matrix m = 0.5 * (g + g.transpose());
    const auto est = subspace_iteration(dense_operator(m), n, 500, rng);
    Vector ref = Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs();
    std::sort(ref.data(), ref.data() + ref.size(), std::greater<>());
    double rel = 0.0;
    for (Index i = 0; i < n; ++i) rel = std::max(rel, std::abs(est.sigmas(i) - ref(i)) / ref(i));
    worst = std::max(worst, rel);
    if (rel <= 1e-6) ++good;
  }
  return {good == 20, fmt("%.0f/20 matrices within 1e-6 relative (worst %.2e)", good, worst)};
}

Outcome criterion_6() {
  const std::vector<double> rates{0.3, 0.5, 0.2};
  const int universe = 10;
  const int trials = 200000;
  std::vector<Observation> entries;
  for (int j = 0; j < universe; ++j) entries.push_back({0, j, 1.0});
  const ObservationSet omega(universe, 1.0, entries);

  std::vector<std::array<long long, 8>> counts(universe);
  for (auto& c : counts) c.fill(0);
  Rng rng(Rng::mix(6));
  for (int t = 0; t < trials; ++t) {
    const auto parts = split_observations(omega, rates, rng);
    std::array<int, 10> pattern{};
    for (int l = 0; l < 3; ++l)
      for (const auto& e : parts[static_cast<std::size_t>(l)].entries()) pattern[static_cast<std::size_t>(e.j)] |= 1 << l;
    for (int j = 0; j < universe; ++j) ++counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(pattern[static_cast<std::size_t>(j)])];
  }

  std::array<double, 8> prob{};
  for (int mask = 0; mask < 8; ++mask) {
    double q = 1.0;
    for (int l = 0; l < 3; ++l) q *= (mask >> l & 1) ? rates[static_cast<std::size_t>(l)] : 1.0 - rates[static_cast<std::size_t>(l)];
    prob[static_cast<std::size_t>(mask)] = q;
  }
  const boost::math::chi_squared dist(7);
  double min_p = 1.0;
  for (const auto& c : counts) {
    double stat = 0.0;
    for (std::size_t mask = 0; mask < 8; ++mask) {
      const double expected = trials * prob[mask];
      stat += std::pow(static_cast<double>(c[mask]) - expected, 2) / expected;
    }
    min_p = std::min(min_p, boost::math::cdf(boost::math::complement(dist, stat)));
  }
  return {min_p > 1e-3, fmt("smallest per-element chi-square p-value %.3g (df 7)", min_p)};
}

Outcome criterion_7() {
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(Rng::mix(7) ^ seed);
    const Index n = 20 + static_cast<Index>(rng.uniform() * 81);
    const Index k = 1 + static_cast<Index>(rng.uniform() * 5);
    std::vector<double> spectrum;
    for (Index i = 0; i < k; ++i) spectrum.push_back(1.0 / (1.0 + static_cast<double>(i)));
    const auto inst = gen_planted(n, spectrum, rng);
    const auto omega = sample_observations(inst.oracle(), n, 1.0, rng);
    const DenseBlock s = ls_solve_block(omega, inst.u);
    const Matrix ref = inst.to_dense() * inst.u.mat();
    const double rel = (s - ref).norm() / ref.norm();
    worst = std::max(worst, rel);
    if (rel <= 1e-10) ++good;
  }
  return {good == 20, fmt("%.0f/20 seeds with ||S - A R|| <= 1e-10 ||A R|| (worst %.2e)", good, worst)};
}

Outcome criterion_8() {
  auto vec = [](std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
  };
  std::vector<std::pair<std::string, bool>> checks;
  checks.emplace_back("find_gap (1,.9,.2)", find_gap(vec({1.0, 0.9, 0.2}), 3, 0, 1.0 - 1.0 / 12.0) == 1);
  checks.emplace_back("find_gap (1,1,1)", find_gap(vec({1.0, 1.0, 1.0}), 3, 0, default_gap_ratio(3)) == 3);
  checks.emplace_back("find_gap (1,.99,.3)", find_gap(vec({1.0, 0.99, 0.3}), 3, 1, 0.9167) == 2);
  bool throws = false;
  try {
    find_gap(vec({1.0}), 3, 3, 0.5);
  } catch (const std::invalid_argument&) {
    throws = true;
  }
  checks.emplace_back("find_gap r_prev >= k", throws);

  const auto g1 = spectrum_gaps(std::vector<double>{1.0, 0.5});
  checks.emplace_back("gaps (1,.5)", g1.gamma_r.at(0) == 0.5);
  const auto g2 = spectrum_gaps(std::vector<double>{1.0, 1.0, 0.1});
  checks.emplace_back("gaps (1,1,.1)", std::abs(g2.gamma_r.at(1) - 0.9) < 1e-15 && std::abs(g2.gamma - 0.9) < 1e-15 &&
                                           g2.gamma_r.at(2) == 1.0 && std::abs(g2.gamma_star - 0.9) < 1e-15);
  const auto g3 = spectrum_gaps(std::vector<double>{1.0, 1.0, 1.0});
  checks.emplace_back("gaps all equal",
                      g3.gamma == 1.0 / 12.0 && g3.gamma_star == std::min(1.0 / 12.0, g3.gamma_r.at(2)));

  std::string failed;
  for (const auto& [name, ok] : checks)
    if (!ok) failed += (failed.empty() ? "" : ", ") + name;
  return {failed.empty(),
          failed.empty() ? fmt("all %.0f examples hold", static_cast<double>(checks.size())) : "failed: " + failed};
}

Outcome criterion_9() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng gen(Rng::mix(9) ^ seed);
    const auto inst = gen_planted(30, std::vector<double>{0.5, 0.3, 0.2}, gen);
    const auto omega = sample_observations(inst.oracle(), 30, 0.5, gen);
    Rng a(seed + 1000), b(seed + 1000);
    const auto sparse = frank_wolfe(omega, 0.05, 1.0, a);
    const auto dense = oracle::dense_frank_wolfe(omega, 20, 1.0, 50, b);
    if (sparse.objective.size() != 20) return {false, "iteration count differs from 20"};
    for (std::size_t l = 0; l < 20; ++l) worst = std::max(worst, std::abs(sparse.objective[l] - dense[l]));
  }

  Rng rng(Rng::mix(99));
  Vector v = rng.gaussian(30, 1);
  v /= v.norm();
  const Matrix a = v * v.transpose();
  const auto omega = sample_observations([&](Index i, Index j) { return a(i, j); }, 30, 1.0, rng);
  const double first = frank_wolfe(omega, 0.05, 1.0, rng).objective.at(0);
  return {worst <= 1e-8 && first <= 1e-20,
          fmt("max objective gap to dense reference %.2e; rank-1 f after step 1 = %.2e", worst, first)};
}

Outcome criterion_10() {
  const std::string base =
      "n = 150\nk = 2\nspectrum = 1, 0.5\nnoise_frobenius = 0.02\nbudget = 8000\nbudget = 12000\n"
      "seed = 0, 1, 2\nmaster_seed = 2024\ndeflate.obs_per_iter = 3000\nfro_abs = true\n";
  auto strip = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
      std::size_t pos = 0;
      for (int c = 0; c < 10; ++c) pos = line.find(',', pos) + 1;
      const auto end = line.find(',', pos);
      out += line.substr(0, pos) + (end == std::string::npos ? "" : line.substr(end)) + '\n';
    }
    return out;
  };
  int same = 0;
  int total = 0;
  for (const char* algorithm : {"soft_deflate", "frank_wolfe", "naive_svd"}) {
    std::istringstream text(std::string("algorithm = ") + algorithm + "\n" + base);
    const auto config = parse_config(text, "criterion10");
    std::string runs[2];
    for (int r = 0; r < 2; ++r) {
      std::ostringstream out;
      write_csv(out, run_experiment(config, r + 1), config.fro_abs);
      runs[r] = strip(out.str());
    }
    ++total;
    if (runs[0] == runs[1]) ++same;
  }
  return {same == total, fmt("%.0f/%.0f algorithms byte-identical across reruns (1 and 2 threads)", same, total)};
}

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) ids.insert(std::stoi(item));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_red;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-red" && i + 1 < argc) {
      expect_red = parse_ids(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      only = parse_ids(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-red ids] [--only ids]\n");
      return 2;
    }
  }

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},  {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10},
  };

  int unexpected = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const bool red = expect_red.count(id) > 0;
    const char* note = out.pass ? (red ? " [expected red, now passing]" : "") : (red ? " [expected red]" : "");
    std::printf("criterion %2d: %s  %s (%.1f s)%s\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                seconds_since(t0), note);
    std::fflush(stdout);
    if (!out.pass && !red) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
