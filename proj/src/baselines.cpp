#include "softdeflate/baselines.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "softdeflate/spectral.hpp"

namespace softdeflate {

namespace {

// Symmetrized sparse residual 0.5 (R + R^T) with R = A_Omega - Z_Omega.
class SymmetricResidual {
 public:
  SymmetricResidual(const ObservationSet& omega, const std::vector<double>& z_cache) : n_(omega.dim()) {
    const auto entries = omega.entries();
    rows_.reserve(entries.size());
    cols_.reserve(entries.size());
    half_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      rows_.push_back(entries[k].i);
      cols_.push_back(entries[k].j);
      half_.push_back(0.5 * (entries[k].value - z_cache[k]));
    }
  }

  Vector apply(const Vector& v, double shift = 0.0) const {
    Vector out = shift * v;
    for (std::size_t k = 0; k < half_.size(); ++k) {
      out(rows_[k]) += half_[k] * v(cols_[k]);
      out(cols_[k]) += half_[k] * v(rows_[k]);
    }
    return out;
  }

  Matrix to_dense() const {
    Matrix out = Matrix::Zero(n_, n_);
    for (std::size_t k = 0; k < half_.size(); ++k) {
      out(rows_[k], cols_[k]) += half_[k];
      out(cols_[k], rows_[k]) += half_[k];
    }
    return out;
  }

 private:
  Index n_;
  std::vector<std::int32_t> rows_;
  std::vector<std::int32_t> cols_;
  std::vector<double> half_;
};

Vector power_top(const SymmetricResidual& m, const Vector& start, int iters, double shift) {
  Vector v = start;
  for (int l = 0; l < iters; ++l) {
    Vector w = m.apply(v, shift);
    const double nrm = w.norm();
    if (nrm == 0.0) break;
    v = w / nrm;
  }
  return v;
}

Vector top_eigenvector(const SymmetricResidual& m, Index n, Rng& rng, const FrankWolfeOptions& opts) {
  if (opts.exact_eigvec) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.to_dense());
    return eig.eigenvectors().col(n - 1);
  }
  Vector start = rng.gaussian(n, 1);
  start /= start.norm();
  Vector v = power_top(m, start, opts.power_iters, 0.0);
  const double rayleigh = v.dot(m.apply(v));
  if (rayleigh < 0.0) v = power_top(m, start, opts.power_iters, -rayleigh);
  return v;
}

double objective(const ObservationSet& omega, const std::vector<double>& z_cache) {
  double sum = 0.0;
  const auto entries = omega.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double d = entries[k].value - z_cache[k];
    sum += d * d;
  }
  return 0.5 * sum;
}

}  // namespace

double RankOneSum::trace() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double RankOneSum::entry(Index i, Index j) const {
  double sum = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) sum += weights[a] * vectors[a](i) * vectors[a](j);
  return sum;
}

Matrix RankOneSum::to_dense(Index n) const {
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t a = 0; a < weights.size(); ++a) out.noalias() += weights[a] * vectors[a] * vectors[a].transpose();
  return out;
}

int frank_wolfe_iterations(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("frank_wolfe: eps must lie in (0, 1]");
  return static_cast<int>(std::ceil(1.0 / eps - 1e-9));
}

FrankWolfeResult frank_wolfe(const ObservationSet& omega, double eps, double trace_bound, Rng& rng,
                             const FrankWolfeOptions& opts) {
  const int iterations = frank_wolfe_iterations(eps);
  if (!(trace_bound > 0.0)) throw std::invalid_argument("frank_wolfe: trace_bound must be positive");
  if (omega.empty()) throw std::invalid_argument("frank_wolfe: no observations");
  if (opts.power_iters < 1) throw std::invalid_argument("frank_wolfe: power_iters must be positive");

  const Index n = omega.dim();
  const auto entries = omega.entries();
  FrankWolfeResult out;
  std::vector<double> z_cache(entries.size(), 0.0);

  if (opts.random_init) {
    Vector v = rng.gaussian(n, 1);
    v /= v.norm();
    for (std::size_t k = 0; k < entries.size(); ++k) z_cache[k] = trace_bound * v(entries[k].i) * v(entries[k].j);
    out.z.weights.push_back(trace_bound);
    out.z.vectors.push_back(std::move(v));
  }

  for (int l = 1; l <= iterations; ++l) {
    const double alpha = 1.0 / static_cast<double>(l);
    const SymmetricResidual residual(omega, z_cache);
    const Vector w = top_eigenvector(residual, n, rng, opts);

    const double keep = 1.0 - alpha;
    const double step = alpha * trace_bound;
    for (std::size_t k = 0; k < entries.size(); ++k)
      z_cache[k] = keep * z_cache[k] + step * w(entries[k].i) * w(entries[k].j);

    RankOneSum next;
    for (std::size_t a = 0; a < out.z.weights.size(); ++a) {
      const double weight = keep * out.z.weights[a];
      if (weight > 0.0) {
        next.weights.push_back(weight);
        next.vectors.push_back(std::move(out.z.vectors[a]));
      }
    }
    next.weights.push_back(step);
    next.vectors.push_back(w);
    out.z = std::move(next);
    out.objective.push_back(objective(omega, z_cache));
  }
  return out;
}

Factors naive_svd_complete(const ObservationSet& omega, Index k, Rng& rng, int iterations) {
  if (k < 1) throw std::invalid_argument("naive_svd_complete: k must be positive");
  if (k > omega.dim()) throw dimension_error("naive_svd_complete: k exceeds the dimension");
  const ResidualOperator observed(omega);
  SpectralEstimate est = subspace_iteration(observed.as_operator(), k, iterations, rng);
  Matrix y = observed.apply_transpose(est.basis.mat());
  return Factors{est.basis.mat(), std::move(y)};
}

}  // namespace softdeflate
