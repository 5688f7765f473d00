#include "softdeflate/altls.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace softdeflate {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kEigenCutoff = 1e-10;

Vector min_norm_solve(const Matrix& b, const Vector& rhs) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = kEigenCutoff * lambda.maxCoeff();
  Vector coeff = eig.eigenvectors().transpose() * rhs;
  for (Index i = 0; i < coeff.size(); ++i) coeff(i) = lambda(i) > cutoff ? coeff(i) / lambda(i) : 0.0;
  return eig.eigenvectors() * coeff;
}

double fit_residual(const ObservationSet& omega, const Matrix& x, const Matrix& y) {
  double sum = 0.0;
  for (const auto& e : omega.entries()) {
    const double d = e.value - x.row(e.i).dot(y.row(e.j));
    sum += d * d;
  }
  return std::sqrt(sum) / omega.rate();
}

}  // namespace

DenseBlock ls_solve_block(const ObservationSet& omega, const Basis& r) {
  const Index n = omega.dim();
  if (r.rows() != n) throw dimension_error("ls_solve_block: basis rows do not match the observation dimension");
  const Index rank = r.cols();
  const Matrix& rm = r.mat();
  const auto entries = omega.entries();

  DenseBlock s = DenseBlock::Zero(n, rank);
  Matrix b(rank, rank);
  Vector rhs(rank);
  for (Index j = 0; j < n; ++j) {
    const auto col = omega.column(j);
    if (col.empty()) continue;
    b.setZero();
    rhs.setZero();
    for (const auto pos : col) {
      const auto& e = entries[pos];
      const auto ri = rm.row(e.i);
      b.noalias() += ri.transpose() * ri;
      rhs.noalias() += e.value * ri.transpose();
    }

    bool well_posed = static_cast<Index>(col.size()) >= rank;
    if (well_posed) {
      const Vector lambda = Eigen::SelfAdjointEigenSolver<Matrix>(b, Eigen::EigenvaluesOnly).eigenvalues();
      well_posed = lambda(0) > 0.0 && lambda(rank - 1) / lambda(0) <= kMaxCondition;
    }
    if (well_posed) {
      Eigen::LLT<Matrix> llt(b);
      if (llt.info() == Eigen::Success) {
        s.row(j) = llt.solve(rhs).transpose();
        continue;
      }
    }
    s.row(j) = min_norm_solve(b, rhs).transpose();
  }
  return s;
}

AltLsResult smaltls(const ObservationSet& omega, const Basis& r0, int iterations, int s_max, double zeta, double mu,
                    Rng& rng, const AltLsOptions& opts) {
  if (iterations < 1) throw std::invalid_argument("smaltls: need at least one iteration");
  if (s_max < 1) throw std::invalid_argument("smaltls: s_max must be at least 1");
  if (r0.rows() != omega.dim()) throw dimension_error("smaltls: start basis does not match the dimension");
  if (r0.cols() < 1) throw std::invalid_argument("smaltls: start basis has no columns");

  const double level_rate = omega.rate() / iterations;
  const std::vector<double> level_rates(static_cast<std::size_t>(iterations), level_rate);
  const std::vector<double> sub_rates(static_cast<std::size_t>(s_max), level_rate / s_max);
  const auto levels = split_observations(omega, level_rates, rng);

  AltLsResult out;
  Basis current = r0;
  for (int l = 0; l < iterations; ++l) {
    const auto& level = levels[static_cast<std::size_t>(l)];
    auto subsets = split_observations(level, sub_rates, rng);
    if (opts.empty_subsplit && *opts.empty_subsplit >= 0 && *opts.empty_subsplit < s_max)
      subsets[static_cast<std::size_t>(*opts.empty_subsplit)] = ObservationSet(level.dim(), sub_rates[0], {});

    std::vector<DenseBlock> solves;
    solves.reserve(subsets.size());
    for (const auto& subset : subsets) solves.push_back(ls_solve_block(subset, current));
    DenseBlock s = entrywise_median(solves);
    if (s.cwiseAbs().maxCoeff() == 0.0)
      throw std::runtime_error("smaltls: iteration " + std::to_string(l + 1) + " of " + std::to_string(iterations) +
                               " produced an all-zero update (too few observations or a zero residual); use fewer "
                               "iterations or a larger budget");

    AltLsIteration rec;
    rec.index = l + 1;
    rec.residual = fit_residual(level, current.mat(), s);

    Basis next;
    if (opts.smoothing) {
      SmoothResult smooth = smooth_qr(s, zeta, mu, rng, opts.smooth);
      rec.met_target = smooth.met_target;
      if (!smooth.met_target) ++out.report.smoothing_failures;
      next = std::move(smooth.basis);
    } else {
      next = qr_orthonormalize(s, rng).q;
    }
    rec.coherence = coherence(next);
    if (opts.observer) opts.observer(l + 1, next);
    out.report.iterations.push_back(rec);

    if (l + 1 == iterations) {
      out.x = std::move(current);
      out.y = std::move(s);
    } else {
      current = std::move(next);
    }
  }
  return out;
}

}  // namespace softdeflate
