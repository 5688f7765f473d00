#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "softdeflate/observations.hpp"
#include "softdeflate/soft_deflate.hpp"
#include "softdeflate/synth.hpp"

namespace softdeflate {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional SoftDeflate overrides on top of default_schedule.
struct DeflateSettings {
  double eps = 1e-3;
  std::optional<double> delta;    // default: planted ||N||_F
  std::optional<double> mu_star;  // default: planted max(mu(U), mu_N)
  std::optional<double> mu0;
  std::optional<int> s_max;
  std::optional<int> l_inner;
  std::optional<int> lt;
  std::optional<double> obs_per_iter;
  std::optional<double> gap_ratio;
  std::optional<double> zeta;
  std::optional<bool> smoothing;
  std::optional<MuSchedule> mu_schedule;
  std::optional<double> c5;
  double p0_share = 0.05;
  double epoch_share = 0.15;
};

struct FrankWolfeSettings {
  double eps = 0.05;
  std::optional<double> trace_bound;  // default: planted nuclear norm
  int power_iters = 50;
};

struct ExperimentConfig {
  std::string algorithm;  // soft_deflate | frank_wolfe | naive_svd
  Index n = 0;
  Index k = 0;
  std::vector<double> spectrum;
  double noise_frobenius = 0.0;
  Index noise_rank = 0;
  std::vector<double> budgets;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 0;
  std::string out;
  bool fro_abs = false;
  DeflateSettings deflate;
  FrankWolfeSettings fw;
  int svd_iterations = 100;

  /// Throws config_error on the first inconsistency.
  void validate() const;
  std::string spectrum_label() const;
};

/// Flat `key = value` text; `#` starts a comment; `budget` and `seed` may
/// repeat (each line adds to the list); every other key may appear once.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
  std::string algorithm;
  Index n = 0;
  Index k = 0;
  std::string spectrum;
  double m = 0.0;
  std::uint64_t seed = 0;
  double fro_err = 0.0;
  double sin_theta = 0.0;
  std::vector<double> sin_theta_blocks;
  long long iters = 0;
  double wall_ms = 0.0;
  double fro_err_abs = 0.0;
};

/// The deterministic stream for one (budget index, seed) cell.
Rng cell_rng(std::uint64_t master_seed, std::size_t budget_index, std::uint64_t seed);

/// Instance and observations for one cell; the algorithm stream follows.
struct CellData {
  PlantedInstance instance;
  ObservationSet omega;
  Rng algorithm_rng{0};
};
CellData prepare_cell(const ExperimentConfig& config, std::size_t budget_index, std::uint64_t seed);

/// SoftDeflate configuration used for a cell of budget m on `instance`.
DeflateConfig deflate_config_for(const ExperimentConfig& config, const PlantedInstance& instance, double m);

ResultRow run_cell(const ExperimentConfig& config, std::size_t budget_index, std::uint64_t seed);

/// All (budget, seed) cells, in budget-major order. Cells run on up to
/// `threads` threads; the output does not depend on the thread count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads = 1);

std::string csv_header(bool fro_abs);
std::string format_row(const ResultRow& row, bool fro_abs);
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool fro_abs);
/// Parses a CSV written by write_csv (with or without the fro_err_abs column).
std::vector<ResultRow> read_csv(std::istream& in);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace softdeflate
