#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "softdeflate/experiment.hpp"

namespace sd = softdeflate;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string out;
  int threads = 1;
  bool no_smoothing = false;
  std::optional<int> s_max;
  std::optional<double> gap_ratio;
  bool fro_abs = false;
};

void add_flags(CLI::App* cmd, Flags& flags, bool run_flags) {
  cmd->add_option("--out", flags.out, "Output path (default: the config's `out`, else stdout)");
  if (!run_flags) return;
  cmd->add_option("--threads", flags.threads, "Cells evaluated in parallel")
      ->envname("SOFTDEFLATE_THREADS")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-smoothing", flags.no_smoothing, "Plain QR inside S-M-AltLS");
  cmd->add_option("--s-max", flags.s_max, "Median sub-splits per S-M-AltLS iteration")->check(CLI::PositiveNumber);
  cmd->add_option("--gap-ratio", flags.gap_ratio, "Gap threshold factor in (0, 1)");
  cmd->add_flag("--fro-abs", flags.fro_abs, "Append the absolute Frobenius error column");
}

sd::ExperimentConfig load(const std::string& path, const Flags& flags) {
  sd::ExperimentConfig c = sd::load_config(path);
  if (flags.no_smoothing) c.deflate.smoothing = false;
  if (flags.s_max) c.deflate.s_max = *flags.s_max;
  if (flags.gap_ratio) c.deflate.gap_ratio = *flags.gap_ratio;
  if (flags.fro_abs) c.fro_abs = true;
  c.validate();
  return c;
}

template <typename Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open `" + path + "` for writing");
  write(file);
  if (!file) throw std::runtime_error("write to `" + path + "` failed");
}

int run_sweep(const std::vector<std::string>& paths, const Flags& flags) {
  std::vector<sd::ExperimentConfig> configs;
  for (const auto& p : paths) configs.push_back(load(p, flags));
  const bool fro_abs = configs.front().fro_abs;
  for (const auto& c : configs)
    if (c.fro_abs != fro_abs) throw sd::config_error("sweep: configs disagree on the fro_err_abs column");

  std::vector<sd::ResultRow> rows;
  for (const auto& c : configs) {
    auto part = sd::run_experiment(c, flags.threads);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const std::string out = !flags.out.empty() ? flags.out : configs.front().out;
  emit(out, [&](std::ostream& os) { sd::write_csv(os, rows, fro_abs); });
  return 0;
}

int run_gen(const std::string& path, const Flags& flags) {
  const sd::ExperimentConfig c = load(path, flags);
  const sd::CellData cell = sd::prepare_cell(c, 0, c.seeds.front());
  const std::string out = !flags.out.empty() ? flags.out : c.out;
  emit(out, [&](std::ostream& os) { sd::write_observations(os, cell.omega); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SoftDeflate matrix completion experiments"};
  app.require_subcommand(1);

  Flags run_flags, sweep_flags, gen_flags;
  std::string run_path, gen_path;
  std::vector<std::string> sweep_paths;

  CLI::App* run = app.add_subcommand("run", "Run one experiment config and write its CSV");
  run->add_option("config", run_path, "Config file")->required();
  add_flags(run, run_flags, true);

  CLI::App* sweep = app.add_subcommand("sweep", "Run several configs into one CSV");
  sweep->add_option("configs", sweep_paths, "Config files")->required();
  add_flags(sweep, sweep_flags, true);

  CLI::App* gen = app.add_subcommand("gen", "Write the observation file of the first (budget, seed) cell");
  gen->add_option("config", gen_path, "Config file")->required();
  add_flags(gen, gen_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_sweep({run_path}, run_flags);
    if (*sweep) return run_sweep(sweep_paths, sweep_flags);
    return run_gen(gen_path, gen_flags);
  } catch (const sd::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
