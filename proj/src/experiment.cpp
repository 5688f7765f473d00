#include "softdeflate/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <type_traits>

#include "softdeflate/baselines.hpp"

namespace softdeflate {

namespace {

const char* const kHeader = "algorithm,n,k,spectrum,m,seed,fro_err,sin_theta,sin_theta_blocks,iters,wall_ms";

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if constexpr (std::is_unsigned_v<T>)
    if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

class ConfigReader {
 public:
  ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw config_error(source_ + ":" + std::to_string(line) + ": " + what);
  }

  template <typename T>
  T number(std::size_t line, const std::string& key, const std::string& value) const {
    T out{};
    if (!parse_number(value, out)) fail(line, "`" + key + "` expects a number, got `" + value + "`");
    return out;
  }

  bool boolean(std::size_t line, const std::string& key, const std::string& value) const {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    fail(line, "`" + key + "` expects true or false, got `" + value + "`");
  }

  std::vector<double> numbers(std::size_t line, const std::string& key, const std::string& value) const {
    std::vector<double> out;
    for (const auto& item : split(value, ',')) out.push_back(number<double>(line, key, item));
    return out;
  }

 private:
  std::string source_;
};

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += format_number(values[i]);
  }
  return out;
}

Matrix leading_left_singular(const Matrix& b, Index k) {
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(std::min<Index>(k, svd.matrixU().cols()));
}

double nuclear_norm(const PlantedInstance& inst) {
  double total = inst.sigmas.sum();
  if (inst.noise_core.size() > 0)
    total += Eigen::SelfAdjointEigenSolver<Matrix>(inst.noise_core, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().sum();
  if (inst.noise_dense.size() > 0)
    total += Eigen::SelfAdjointEigenSolver<Matrix>(inst.noise_dense, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().sum();
  return total;
}

std::vector<double> prefix_errors(const PlantedInstance& inst, const Matrix& x) {
  const Index upto = std::min(inst.k, x.cols());
  std::vector<Index> bounds;
  for (Index b = 1; b <= upto; ++b) bounds.push_back(b);
  return subspace_errors(inst, Basis::adopt(x), bounds);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string ExperimentConfig::spectrum_label() const { return join(spectrum); }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw config_error("config: " + what); };
  if (algorithm != "soft_deflate" && algorithm != "frank_wolfe" && algorithm != "naive_svd")
    fail("algorithm must be soft_deflate, frank_wolfe or naive_svd (got `" + algorithm + "`)");
  if (n < 1) fail("n must be positive");
  try {
    check_spectrum(spectrum);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (k != static_cast<Index>(spectrum.size())) fail("k must equal the spectrum length");
  if (k > n) fail("k exceeds n");
  if (!(noise_frobenius >= 0.0)) fail("noise_frobenius must be nonnegative");
  if (noise_rank < 0) fail("noise_rank must be nonnegative");
  if (budgets.empty()) fail("at least one budget is required");
  const double cells = static_cast<double>(n) * static_cast<double>(n);
  for (double m : budgets)
    if (!(m > 0.0 && m <= cells)) fail("budget " + format_number(m) + " outside (0, n^2]");
  if (seeds.empty()) fail("at least one seed is required");
  if (!(fw.eps > 0.0 && fw.eps <= 1.0)) fail("fw.eps must lie in (0, 1]");
  if (fw.trace_bound && !(*fw.trace_bound > 0.0)) fail("fw.trace_bound must be positive");
  if (fw.power_iters < 1) fail("fw.power_iters must be positive");
  if (svd_iterations < 1) fail("svd.iterations must be positive");

  if (algorithm == "soft_deflate") {
    if (!(deflate.eps > 0.0 && deflate.eps < 1.0)) fail("deflate.eps must lie in (0, 1)");
    for (double m : budgets) {
      try {
        DeflateConfig c = default_schedule(n, k, deflate.eps, m, deflate.p0_share, deflate.epoch_share);
        if (deflate.obs_per_iter && !(*deflate.obs_per_iter > 0.0)) fail("deflate.obs_per_iter must be positive");
        if (deflate.lt) c.lt.assign(c.lt.size(), *deflate.lt);
        if (deflate.s_max) c.s_max = *deflate.s_max;
        if (deflate.l_inner) c.l_inner = *deflate.l_inner;
        if (deflate.gap_ratio) c.gap_ratio = *deflate.gap_ratio;
        if (deflate.zeta) c.zeta = *deflate.zeta;
        if (deflate.c5) c.c5 = *deflate.c5;
        if (deflate.mu_star) c.mu_star = *deflate.mu_star;
        if (deflate.mu0) c.mu0 = *deflate.mu0;
        if (deflate.delta) c.delta = *deflate.delta;
        c.validate();
      } catch (const std::invalid_argument& e) {
        fail("budget " + format_number(m) + ": " + e.what());
      }
    }
  }
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ConfigReader reader(source);
  ExperimentConfig c;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t lineno = 0;
  bool have_k = false;

  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) reader.fail(lineno, "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) reader.fail(lineno, "missing key");
    if (value.empty()) reader.fail(lineno, "missing value for `" + key + "`");

    const bool list_key = key == "budget" || key == "seed";
    if (!list_key) {
      const auto [it, fresh] = seen.emplace(key, lineno);
      if (!fresh) reader.fail(lineno, "`" + key + "` repeats line " + std::to_string(it->second));
    }

    auto num = [&](auto tag) { return reader.number<decltype(tag)>(lineno, key, value); };
    auto& d = c.deflate;
    if (key == "algorithm") {
      c.algorithm = value;
    } else if (key == "n") {
      c.n = num(Index{});
    } else if (key == "k") {
      c.k = num(Index{});
      have_k = true;
    } else if (key == "spectrum") {
      c.spectrum = reader.numbers(lineno, key, value);
    } else if (key == "noise_frobenius") {
      c.noise_frobenius = num(double{});
    } else if (key == "noise_rank") {
      c.noise_rank = num(Index{});
    } else if (key == "budget") {
      for (double m : reader.numbers(lineno, key, value)) c.budgets.push_back(m);
    } else if (key == "seed") {
      for (const auto& item : split(value, ','))
        c.seeds.push_back(reader.number<std::uint64_t>(lineno, key, item));
    } else if (key == "master_seed") {
      c.master_seed = num(std::uint64_t{});
    } else if (key == "out") {
      c.out = value;
    } else if (key == "fro_abs") {
      c.fro_abs = reader.boolean(lineno, key, value);
    } else if (key == "deflate.eps") {
      d.eps = num(double{});
    } else if (key == "deflate.delta") {
      d.delta = num(double{});
    } else if (key == "deflate.mu_star") {
      d.mu_star = num(double{});
    } else if (key == "deflate.mu0") {
      d.mu0 = num(double{});
    } else if (key == "deflate.s_max") {
      d.s_max = num(int{});
    } else if (key == "deflate.l_inner") {
      d.l_inner = num(int{});
    } else if (key == "deflate.lt") {
      d.lt = num(int{});
    } else if (key == "deflate.obs_per_iter") {
      d.obs_per_iter = num(double{});
    } else if (key == "deflate.gap_ratio") {
      d.gap_ratio = num(double{});
    } else if (key == "deflate.zeta") {
      d.zeta = num(double{});
    } else if (key == "deflate.smoothing") {
      d.smoothing = reader.boolean(lineno, key, value);
    } else if (key == "deflate.mu_schedule") {
      if (value == "pseudocode")
        d.mu_schedule = MuSchedule::pseudocode;
      else if (value == "h3")
        d.mu_schedule = MuSchedule::h3;
      else
        reader.fail(lineno, "deflate.mu_schedule must be pseudocode or h3");
    } else if (key == "deflate.c5") {
      d.c5 = num(double{});
    } else if (key == "deflate.p0_share") {
      d.p0_share = num(double{});
    } else if (key == "deflate.epoch_share") {
      d.epoch_share = num(double{});
    } else if (key == "fw.eps") {
      c.fw.eps = num(double{});
    } else if (key == "fw.trace_bound") {
      c.fw.trace_bound = num(double{});
    } else if (key == "fw.power_iters") {
      c.fw.power_iters = num(int{});
    } else if (key == "svd.iterations") {
      c.svd_iterations = num(int{});
    } else {
      reader.fail(lineno, "unknown key `" + key + "`");
    }
  }
  if (!have_k) c.k = static_cast<Index>(c.spectrum.size());
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config `" + path + "`");
  return parse_config(in, path);
}

Rng cell_rng(std::uint64_t master_seed, std::size_t budget_index, std::uint64_t seed) {
  std::uint64_t h = Rng::mix(master_seed);
  h = Rng::mix(h ^ static_cast<std::uint64_t>(budget_index));
  h = Rng::mix(h ^ seed);
  return Rng(h);
}

CellData prepare_cell(const ExperimentConfig& config, std::size_t budget_index, std::uint64_t seed) {
  Rng cell = cell_rng(config.master_seed, budget_index, seed);
  Rng instance_rng = cell.split();
  Rng sample_rng = cell.split();
  CellData data;
  data.algorithm_rng = cell.split();

  PlantedOptions opts;
  opts.noise_frobenius = config.noise_frobenius;
  opts.noise_rank = config.noise_rank;
  data.instance = gen_planted(config.n, config.spectrum, instance_rng, opts);

  const double cells = static_cast<double>(config.n) * static_cast<double>(config.n);
  const double p = std::min(1.0, config.budgets.at(budget_index) / cells);
  data.omega = sample_observations(data.instance.oracle(), config.n, p, sample_rng);
  return data;
}

DeflateConfig deflate_config_for(const ExperimentConfig& config, const PlantedInstance& instance, double m) {
  const DeflateSettings& s = config.deflate;
  DeflateConfig c = default_schedule(config.n, config.k, s.eps, m, s.p0_share, s.epoch_share);
  c.delta = s.delta.value_or(instance.noise_frobenius);
  c.mu_star = s.mu_star.value_or(std::max(instance.mu_u, instance.mu_n));
  c.mu0 = s.mu0.value_or(c.mu_star * static_cast<double>(config.k) + std::log(static_cast<double>(config.n)));
  if (s.obs_per_iter) set_iterations_from_budget(c, config.n, *s.obs_per_iter);
  if (s.lt) c.lt.assign(c.lt.size(), *s.lt);
  if (s.s_max) c.s_max = *s.s_max;
  if (s.l_inner) c.l_inner = *s.l_inner;
  if (s.gap_ratio) c.gap_ratio = *s.gap_ratio;
  if (s.zeta) c.zeta = *s.zeta;
  if (s.smoothing) c.smoothing = *s.smoothing;
  if (s.mu_schedule) c.mu_schedule = *s.mu_schedule;
  if (s.c5) c.c5 = *s.c5;
  c.validate();
  return c;
}

ResultRow run_cell(const ExperimentConfig& config, std::size_t budget_index, std::uint64_t seed) {
  CellData data = prepare_cell(config, budget_index, seed);
  const PlantedInstance& inst = data.instance;

  ResultRow row;
  row.algorithm = config.algorithm;
  row.n = config.n;
  row.k = config.k;
  row.spectrum = config.spectrum_label();
  row.m = config.budgets[budget_index];
  row.seed = seed;

  Factors factors;
  Matrix basis;
  const auto start = std::chrono::steady_clock::now();
  if (config.algorithm == "soft_deflate") {
    const DeflateConfig dc = deflate_config_for(config, inst, row.m);
    DeflateResult res = soft_deflate(data.omega, dc, data.algorithm_rng);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    factors = std::move(res.factors);
    basis = factors.x;
    std::vector<Index> bounds;
    for (const auto& e : res.trace.epochs)
      if (e.d > 0) bounds.push_back(std::min(e.r, inst.k));
    row.iters = static_cast<long long>(bounds.size());
    row.sin_theta_blocks = subspace_errors(inst, Basis::adopt(basis), bounds);
  } else if (config.algorithm == "frank_wolfe") {
    FrankWolfeOptions opts;
    opts.power_iters = config.fw.power_iters;
    const double tb = config.fw.trace_bound.value_or(nuclear_norm(inst));
    FrankWolfeResult res = frank_wolfe(data.omega, config.fw.eps, tb, data.algorithm_rng, opts);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    Matrix b(config.n, static_cast<Index>(res.z.rank()));
    for (std::size_t a = 0; a < res.z.rank(); ++a)
      b.col(static_cast<Index>(a)) = std::sqrt(res.z.weights[a]) * res.z.vectors[a];
    factors = Factors{b, b};
    basis = leading_left_singular(b, config.k);
    row.iters = static_cast<long long>(res.objective.size());
    row.sin_theta_blocks = prefix_errors(inst, basis);
  } else {
    factors = naive_svd_complete(data.omega, config.k, data.algorithm_rng, config.svd_iterations);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    basis = factors.x;
    row.iters = config.svd_iterations;
    row.sin_theta_blocks = prefix_errors(inst, basis);
  }

  row.fro_err_abs = fro_error_factored(inst, factors);
  row.fro_err = row.fro_err_abs / inst.frobenius_norm();
  row.sin_theta = subspace_distance(basis, inst.u.mat());
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  std::vector<std::pair<std::size_t, std::uint64_t>> cells;
  for (std::size_t b = 0; b < config.budgets.size(); ++b)
    for (const auto seed : config.seeds) cells.emplace_back(b, seed);

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        rows[i] = run_cell(config, cells[i].first, cells[i].second);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };

  const auto count = static_cast<std::size_t>(std::clamp<int>(threads, 1, 256));
  if (count == 1 || cells.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(count, cells.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string csv_header(bool fro_abs) { return std::string(kHeader) + (fro_abs ? ",fro_err_abs" : ""); }

std::string format_row(const ResultRow& r, bool fro_abs) {
  std::string out = r.algorithm;
  out += ',' + std::to_string(r.n);
  out += ',' + std::to_string(r.k);
  out += ',' + r.spectrum;
  out += ',' + format_number(r.m);
  out += ',' + std::to_string(r.seed);
  out += ',' + format_number(r.fro_err);
  out += ',' + format_number(r.sin_theta);
  out += ',' + join(r.sin_theta_blocks);
  out += ',' + std::to_string(r.iters);
  out += ',' + format_number(r.wall_ms);
  if (fro_abs) out += ',' + format_number(r.fro_err_abs);
  return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool fro_abs) {
  out << csv_header(fro_abs) << '\n';
  for (const auto& r : rows) out << format_row(r, fro_abs) << '\n';
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw format_error("csv: missing header");
  line = trim(line);
  bool fro_abs = false;
  if (line == csv_header(true))
    fro_abs = true;
  else if (line != csv_header(false))
    throw format_error("csv: unexpected header `" + line + "`");
  const std::size_t width = fro_abs ? 12 : 11;

  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    auto bad = [&](const std::string& what) -> format_error {
      return format_error("csv line " + std::to_string(lineno) + ": " + what);
    };
    if (f.size() != width) throw bad("expected " + std::to_string(width) + " fields");
    ResultRow r;
    r.algorithm = f[0];
    r.spectrum = f[3];
    if (!parse_number(f[1], r.n) || !parse_number(f[2], r.k) || !parse_number(f[4], r.m) ||
        !parse_number(f[5], r.seed) || !parse_number(f[6], r.fro_err) || !parse_number(f[7], r.sin_theta) ||
        !parse_number(f[9], r.iters) || !parse_number(f[10], r.wall_ms))
      throw bad("malformed number");
    if (!f[8].empty()) {
      for (const auto& item : split(f[8], ';')) {
        double v = 0.0;
        if (!parse_number(item, v)) throw bad("malformed sin_theta_blocks");
        r.sin_theta_blocks.push_back(v);
      }
    }
    if (fro_abs && !parse_number(f[11], r.fro_err_abs)) throw bad("malformed fro_err_abs");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace softdeflate
