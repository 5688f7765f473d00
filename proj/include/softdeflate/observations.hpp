#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "softdeflate/core_linalg.hpp"
#include "softdeflate/rng.hpp"

namespace softdeflate {

struct Observation {
  std::int32_t i;
  std::int32_t j;
  double value;  // raw A_ij; the 1/p normalization is applied by operators
};

/// Sampled entries of an n x n matrix, each index included with probability p.
/// Entries are stored sorted by (i, j) and additionally indexed by column.
class ObservationSet {
 public:
  ObservationSet() = default;
  /// Sorts `entries`; for duplicate (i, j) the last occurrence wins and is
  /// counted in duplicates_dropped().
  ObservationSet(Index n, double p, std::vector<Observation> entries);

  Index dim() const { return n_; }
  double rate() const { return p_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t duplicates_dropped() const { return duplicates_; }

  std::span<const Observation> entries() const { return entries_; }
  std::span<const Observation> row(Index i) const;
  /// Positions into entries() of the observations in column j, increasing i.
  std::span<const std::uint32_t> column(Index j) const;

  /// The normalized observed matrix (1/p) P(A) as a dense n x n array. Tests only.
  Matrix to_dense_normalized() const;

 private:
  struct presorted_tag {};
  ObservationSet(Index n, double p, std::vector<Observation> entries, presorted_tag);
  void build_index();

  friend std::vector<ObservationSet> split_observations(const ObservationSet&, std::span<const double>, Rng&);
  friend ObservationSet truncate_observations(const ObservationSet&, double);
  friend ObservationSet sample_observations(const std::function<double(Index, Index)>&, Index, double, Rng&);

  Index n_ = 0;
  double p_ = 1.0;
  std::size_t duplicates_ = 0;
  std::vector<Observation> entries_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::uint32_t> col_pos_;
};

/// Includes each (i, j) in [n]^2 independently with probability p, reading
/// A_ij from `entry` once per included index.
ObservationSet sample_observations(const std::function<double(Index, Index)>& entry, Index n, double p, Rng& rng);

/// Splits Omega into independent sets, the l-th including every index with
/// probability rates[l]. Omega is first thinned to 1 - prod(1 - p_l); each
/// survivor then draws its membership pattern from the product-Bernoulli law
/// conditioned on at least one inclusion.
std::vector<ObservationSet> split_observations(const ObservationSet& omega, std::span<const double> rates, Rng& rng);

/// q_r = P(exactly r memberships | at least one), r = 1..L, for the product
/// Bernoulli law with the given rates. Returned vector has q_r at index r - 1.
std::vector<double> membership_count_distribution(std::span<const double> rates);

/// Clamps every normalized entry value / p to [-c, c].
ObservationSet truncate_observations(const ObservationSet& omega, double c);

/// T with T_ij = clamp((1/p)(A_ij - <X_i, Y_j>), +-c) on observed (i, j), zero
/// elsewhere. Entry values are computed once at construction.
class ResidualOperator {
 public:
  explicit ResidualOperator(const ObservationSet& omega, const Factors* factors = nullptr,
                            std::optional<double> clamp = std::nullopt);

  Index dim() const { return n_; }
  std::size_t nnz() const { return values_.size(); }

  Matrix apply(const Matrix& v) const;
  Matrix apply_transpose(const Matrix& v) const;

  /// Dense materialization of T. Tests only.
  Matrix to_dense() const;

  /// Non-owning adaptor; `this` must outlive the returned operator.
  LinearOperator as_operator() const;

 private:
  Index n_;
  std::vector<std::int32_t> rows_;
  std::vector<std::int32_t> cols_;
  std::vector<double> values_;
};

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text format: header `n <n> p <p>`, then one `i j value` triple per line.
ObservationSet read_observations(std::istream& in);
void write_observations(std::ostream& out, const ObservationSet& omega);

}  // namespace softdeflate
