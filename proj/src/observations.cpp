#include "softdeflate/observations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace softdeflate {

namespace {

void check_rate(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sampling probability must lie in (0, 1]");
}

bool less_ij(const Observation& a, const Observation& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ObservationSet::ObservationSet(Index n, double p, std::vector<Observation> entries) : n_(n), p_(p) {
  check_rate(p);
  if (n < 1) throw std::invalid_argument("ObservationSet: dimension must be positive");
  for (const auto& e : entries)
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) throw std::out_of_range("ObservationSet: index outside [0, n)");

  std::stable_sort(entries.begin(), entries.end(), less_ij);
  // Keep the last of each run of equal indices.
  std::vector<Observation> unique;
  unique.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k + 1 < entries.size() && entries[k + 1].i == entries[k].i && entries[k + 1].j == entries[k].j) {
      ++duplicates_;
      continue;
    }
    unique.push_back(entries[k]);
  }
  entries_ = std::move(unique);
  build_index();
}

ObservationSet::ObservationSet(Index n, double p, std::vector<Observation> entries, presorted_tag)
    : n_(n), p_(p), entries_(std::move(entries)) {
  check_rate(p);
  build_index();
}

void ObservationSet::build_index() {
  const auto n = static_cast<std::size_t>(n_);
  row_ptr_.assign(n + 1, 0);
  col_ptr_.assign(n + 1, 0);
  for (const auto& e : entries_) {
    ++row_ptr_[static_cast<std::size_t>(e.i) + 1];
    ++col_ptr_[static_cast<std::size_t>(e.j) + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());

  col_pos_.resize(entries_.size());
  std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::size_t k = 0; k < entries_.size(); ++k)
    col_pos_[fill[static_cast<std::size_t>(entries_[k].j)]++] = static_cast<std::uint32_t>(k);
}

std::span<const Observation> ObservationSet::row(Index i) const {
  const auto a = row_ptr_[static_cast<std::size_t>(i)];
  const auto b = row_ptr_[static_cast<std::size_t>(i) + 1];
  return std::span<const Observation>(entries_).subspan(a, b - a);
}

std::span<const std::uint32_t> ObservationSet::column(Index j) const {
  const auto a = col_ptr_[static_cast<std::size_t>(j)];
  const auto b = col_ptr_[static_cast<std::size_t>(j) + 1];
  return std::span<const std::uint32_t>(col_pos_).subspan(a, b - a);
}

Matrix ObservationSet::to_dense_normalized() const {
  Matrix out = Matrix::Zero(n_, n_);
  for (const auto& e : entries_) out(e.i, e.j) = e.value / p_;
  return out;
}

ObservationSet sample_observations(const std::function<double(Index, Index)>& entry, Index n, double p, Rng& rng) {
  check_rate(p);
  if (n < 1) throw std::invalid_argument("sample_observations: dimension must be positive");
  const long long total = static_cast<long long>(n) * n;
  std::vector<Observation> entries;
  entries.reserve(static_cast<std::size_t>(std::ceil(p * static_cast<double>(total) * 1.01)) + 16);

  auto push = [&](long long idx) {
    const auto i = static_cast<std::int32_t>(idx / n);
    const auto j = static_cast<std::int32_t>(idx % n);
    entries.push_back({i, j, entry(i, j)});
  };

  if (p >= 1.0) {
    for (long long idx = 0; idx < total; ++idx) push(idx);
  } else {
    // Gaps between successive inclusions are geometric.
    std::geometric_distribution<long long> gap(p);
    for (long long idx = gap(rng.engine()); idx < total; idx += 1 + gap(rng.engine())) push(idx);
  }
  return ObservationSet(n, p, std::move(entries), ObservationSet::presorted_tag{});
}

std::vector<ObservationSet> split_observations(const ObservationSet& omega, std::span<const double> rates, Rng& rng) {
  if (rates.empty()) throw std::invalid_argument("split_observations: no rates given");
  double sum = 0.0;
  double none = 1.0;
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("split_observations: rates must lie in (0, 1]");
    sum += r;
    none *= 1.0 - r;
  }
  const double p = omega.rate();
  if (sum > p * (1.0 + 1e-12))
    throw std::invalid_argument("split_observations: rates sum to " + format_double(sum) + " > p = " +
                                format_double(p));

  const double any = 1.0 - none;
  const double keep = any / p;
  const std::size_t count = rates.size();

  // first[l] = P(smallest included index is l) = prod_{m<l}(1 - p_m) * p_l.
  std::vector<double> first(count);
  double prefix = 1.0;
  for (std::size_t l = 0; l < count; ++l) {
    first[l] = prefix * rates[l];
    prefix *= 1.0 - rates[l];
  }

  std::vector<std::vector<Observation>> parts(count);
  for (auto& part : parts) part.reserve(static_cast<std::size_t>(static_cast<double>(omega.size()) * 1.05 / count) + 8);

  for (const auto& e : omega.entries()) {
    if (keep < 1.0 && !rng.bernoulli(keep)) continue;
    double u = rng.uniform() * any;
    std::size_t lead = count - 1;
    for (std::size_t l = 0; l < count; ++l) {
      if (u < first[l]) {
        lead = l;
        break;
      }
      u -= first[l];
    }
    parts[lead].push_back(e);
    for (std::size_t l = lead + 1; l < count; ++l)
      if (rng.bernoulli(rates[l])) parts[l].push_back(e);
  }

  std::vector<ObservationSet> out;
  out.reserve(count);
  for (std::size_t l = 0; l < count; ++l)
    out.push_back(ObservationSet(omega.dim(), rates[l], std::move(parts[l]), ObservationSet::presorted_tag{}));
  return out;
}

std::vector<double> membership_count_distribution(std::span<const double> rates) {
  // dist[c] = P(exactly c memberships) under independent inclusions.
  std::vector<double> dist{1.0};
  for (double r : rates) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t c = 0; c < dist.size(); ++c) {
      next[c] += dist[c] * (1.0 - r);
      next[c + 1] += dist[c] * r;
    }
    dist = std::move(next);
  }
  const double any = 1.0 - dist[0];
  std::vector<double> q(rates.size());
  for (std::size_t c = 1; c < dist.size(); ++c) q[c - 1] = dist[c] / any;
  return q;
}

ObservationSet truncate_observations(const ObservationSet& omega, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("truncate_observations: clamp level must be nonnegative");
  const double bound = omega.rate() * c;
  std::vector<Observation> entries(omega.entries().begin(), omega.entries().end());
  if (std::isfinite(bound))
    for (auto& e : entries) e.value = std::clamp(e.value, -bound, bound);
  return ObservationSet(omega.dim(), omega.rate(), std::move(entries), ObservationSet::presorted_tag{});
}

ResidualOperator::ResidualOperator(const ObservationSet& omega, const Factors* factors, std::optional<double> clamp)
    : n_(omega.dim()) {
  if (factors && factors->rank() > 0) {
    if (factors->x.rows() != n_ || factors->y.rows() != n_ || factors->x.cols() != factors->y.cols())
      throw dimension_error("ResidualOperator: factor dimensions do not match");
  }
  if (clamp && !(*clamp >= 0.0)) throw std::invalid_argument("ResidualOperator: clamp level must be nonnegative");

  const double inv_p = 1.0 / omega.rate();
  const bool subtract = factors && factors->rank() > 0;
  const std::size_t nnz = omega.size();
  rows_.reserve(nnz);
  cols_.reserve(nnz);
  values_.reserve(nnz);
  for (const auto& e : omega.entries()) {
    double v = e.value;
    if (subtract) v -= factors->x.row(e.i).dot(factors->y.row(e.j));
    v *= inv_p;
    if (clamp) v = std::clamp(v, -*clamp, *clamp);
    rows_.push_back(e.i);
    cols_.push_back(e.j);
    values_.push_back(v);
  }
}

Matrix ResidualOperator::apply(const Matrix& v) const {
  if (v.rows() != n_) throw dimension_error("ResidualOperator::apply: dimension mismatch");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor in = v;
  RowMajor out = RowMajor::Zero(n_, v.cols());
  for (std::size_t k = 0; k < values_.size(); ++k) out.row(rows_[k]) += values_[k] * in.row(cols_[k]);
  return out;
}

Matrix ResidualOperator::apply_transpose(const Matrix& v) const {
  if (v.rows() != n_) throw dimension_error("ResidualOperator::apply_transpose: dimension mismatch");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor in = v;
  RowMajor out = RowMajor::Zero(n_, v.cols());
  for (std::size_t k = 0; k < values_.size(); ++k) out.row(cols_[k]) += values_[k] * in.row(rows_[k]);
  return out;
}

Matrix ResidualOperator::to_dense() const {
  Matrix out = Matrix::Zero(n_, n_);
  for (std::size_t k = 0; k < values_.size(); ++k) out(rows_[k], cols_[k]) = values_[k];
  return out;
}

LinearOperator ResidualOperator::as_operator() const {
  return {n_, [this](const Matrix& v) { return apply(v); }, [this](const Matrix& v) { return apply_transpose(v); }};
}

ObservationSet read_observations(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_content_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_content_line(line)) throw format_error("observation file: missing header");
  std::istringstream header(line);
  std::string key_n, key_p;
  long long n = 0;
  double p = 0.0;
  if (!(header >> key_n >> n >> key_p >> p) || key_n != "n" || key_p != "p")
    throw format_error("observation file: header must read `n <n> p <p>`");

  std::vector<Observation> entries;
  while (next_content_line(line)) {
    std::istringstream fields(line);
    long long i = 0, j = 0;
    double v = 0.0;
    std::string extra;
    if (!(fields >> i >> j >> v) || (fields >> extra))
      throw format_error("observation file: malformed triple on line " + std::to_string(lineno));
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw format_error("observation file: index out of range on line " + std::to_string(lineno));
    entries.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), v});
  }
  try {
    return ObservationSet(static_cast<Index>(n), p, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw format_error(std::string("observation file: ") + e.what());
  }
}

void write_observations(std::ostream& out, const ObservationSet& omega) {
  out << "n " << omega.dim() << " p " << format_double(omega.rate()) << '\n';
  for (const auto& e : omega.entries()) out << e.i << ' ' << e.j << ' ' << format_double(e.value) << '\n';
}

}  // namespace softdeflate
