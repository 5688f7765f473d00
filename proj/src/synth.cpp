#include "softdeflate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace softdeflate {

namespace {

Matrix project_out_twice(const Matrix& u, Matrix g) {
  for (int pass = 0; pass < 2; ++pass) g -= u * (u.transpose() * g);
  return g;
}

}  // namespace

void check_spectrum(std::span<const double> sigmas) {
  if (sigmas.empty()) throw std::invalid_argument("spectrum: no values");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) throw std::invalid_argument("spectrum: values must be positive");
    if (i > 0 && sigmas[i] > sigmas[i - 1]) throw std::invalid_argument("spectrum: values must be nonincreasing");
  }
}

SpectrumGaps spectrum_gaps(std::span<const double> sigmas) {
  check_spectrum(sigmas);
  const std::size_t k = sigmas.size();
  const double floor = 1.0 / (4.0 * static_cast<double>(k));
  SpectrumGaps out;
  out.gamma_r.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    const double next = r + 1 < k ? sigmas[r + 1] : 0.0;
    out.gamma_r[r] = 1.0 - next / sigmas[r];
  }
  out.gamma = floor;
  bool found = false;
  for (std::size_t r = 0; r + 1 < k; ++r) {
    if (out.gamma_r[r] >= floor && (!found || out.gamma_r[r] < out.gamma)) {
      out.gamma = out.gamma_r[r];
      found = true;
    }
  }
  out.gamma_star = std::min(out.gamma, out.gamma_r[k - 1]);
  return out;
}

double PlantedInstance::entry(Index i, Index j) const {
  const Matrix& um = u.mat();
  double v = 0.0;
  for (Index l = 0; l < k; ++l) v += sigmas(l) * um(i, l) * um(j, l);
  if (noise_dense.size() > 0) {
    v += noise_dense(i, j);
  } else if (noise_basis.cols() > 0) {
    v += noise_basis.row(i).dot(noise_core * noise_basis.row(j).transpose());
  }
  return v;
}

std::function<double(Index, Index)> PlantedInstance::oracle() const {
  return [this](Index i, Index j) { return entry(i, j); };
}

double PlantedInstance::frobenius_norm() const {
  return std::sqrt(sigmas.squaredNorm() + noise_frobenius * noise_frobenius);
}

double PlantedInstance::noise_spectral_norm() const {
  if (noise_dense.size() > 0)
    return Eigen::SelfAdjointEigenSolver<Matrix>(noise_dense, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
  if (noise_core.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(noise_core, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

Matrix PlantedInstance::apply(const Matrix& v) const {
  if (v.rows() != n) throw dimension_error("PlantedInstance::apply: dimension mismatch");
  const Matrix& um = u.mat();
  Matrix out = um * (sigmas.asDiagonal() * (um.transpose() * v));
  if (noise_dense.size() > 0)
    out.noalias() += noise_dense * v;
  else if (noise_basis.cols() > 0)
    out.noalias() += noise_basis * (noise_core * (noise_basis.transpose() * v));
  return out;
}

Matrix PlantedInstance::to_dense() const {
  const Matrix& um = u.mat();
  Matrix out = um * sigmas.asDiagonal() * um.transpose();
  if (noise_dense.size() > 0)
    out += noise_dense;
  else if (noise_basis.cols() > 0)
    out += noise_basis * noise_core * noise_basis.transpose();
  return out;
}

PlantedInstance gen_planted(Index n, std::span<const double> spectrum, Rng& rng, const PlantedOptions& opts) {
  check_spectrum(spectrum);
  const auto k = static_cast<Index>(spectrum.size());
  if (n < 1) throw std::invalid_argument("gen_planted: n must be positive");
  if (k > n) throw dimension_error("gen_planted: k exceeds n");
  if (!(opts.noise_frobenius >= 0.0)) throw std::invalid_argument("gen_planted: noise level must be nonnegative");

  PlantedInstance inst;
  inst.n = n;
  inst.k = k;
  inst.sigmas = Eigen::Map<const Vector>(spectrum.data(), k);
  inst.u = qr_orthonormalize(rng.gaussian(n, k), rng).q;
  inst.mu_u = coherence(inst.u);

  if (opts.noise_frobenius > 0.0) {
    if (k == n) throw dimension_error("gen_planted: no room for noise orthogonal to U");
    const Matrix& um = inst.u.mat();
    if (opts.noise_mode == NoiseMode::dense) {
      Matrix g = rng.gaussian(n, n);
      Matrix sym = 0.5 * (g + g.transpose());
      sym = project_out_twice(um, sym);
      sym = project_out_twice(um, Matrix(sym.transpose()));
      sym = 0.5 * (sym + sym.transpose());
      inst.noise_dense = sym * (opts.noise_frobenius / sym.norm());
    } else {
      const Index q = std::min(opts.noise_rank > 0 ? opts.noise_rank : 2 * k, (n - k) / 2);
      if (q < 1) throw dimension_error("gen_planted: no room for low-rank noise orthogonal to U");
      // P (G H^T + H G^T) P with P = I - UU^T, rewritten on an orthonormal
      // basis V of P [G H].
      const Matrix gh = project_out_twice(um, rng.gaussian(n, 2 * q));
      QrResult qr = qr_orthonormalize(gh, rng);
      Matrix v = project_out_twice(um, qr.q.mat());
      v = qr_orthonormalize(v, rng).q.mat();
      const Matrix coords = v.transpose() * gh;  // 2q x 2q
      const Matrix core = coords.leftCols(q) * coords.rightCols(q).transpose() +
                          coords.rightCols(q) * coords.leftCols(q).transpose();
      inst.noise_basis = std::move(v);
      inst.noise_core = core * (opts.noise_frobenius / core.norm());
    }
    inst.noise_frobenius = opts.noise_frobenius;
    inst.mu_n = noise_coherence(inst);
  }
  return inst;
}

double noise_coherence(const PlantedInstance& instance) {
  if (!instance.has_noise()) return 0.0;
  const Index n = instance.n;
  const double nd = static_cast<double>(n);
  const double fro = instance.noise_frobenius;
  const double sigma_k = instance.sigmas(instance.k - 1);

  double max_row_sq = 0.0;
  double max_entry = 0.0;
  const Index block = 256;
  for (Index start = 0; start < n; start += block) {
    const Index rows = std::min(block, n - start);
    Matrix chunk;
    if (instance.noise_dense.size() > 0)
      chunk = instance.noise_dense.middleRows(start, rows);
    else
      chunk = instance.noise_basis.middleRows(start, rows) * instance.noise_core *
              instance.noise_basis.transpose();
    max_row_sq = std::max(max_row_sq, chunk.rowwise().squaredNorm().maxCoeff());
    max_entry = std::max(max_entry, chunk.cwiseAbs().maxCoeff());
  }
  const double row_term = nd * max_row_sq / std::min(fro * fro, sigma_k * sigma_k);
  const double entry_term = nd * max_entry / fro;
  return std::max(row_term, entry_term);
}

double fro_error_factored(const PlantedInstance& instance, const Factors& factors) {
  const Index n = instance.n;
  if (factors.x.rows() != n || factors.y.rows() != n || factors.x.cols() != factors.y.cols())
    throw dimension_error("fro_error_factored: factor dimensions do not match the instance");

  if (instance.noise_dense.size() > 0) {
    Matrix diff = instance.to_dense();
    if (factors.rank() > 0) diff.noalias() -= factors.x * factors.y.transpose();
    return diff.norm();
  }

  const Matrix& um = instance.u.mat();
  const Index q2 = instance.noise_basis.cols();
  const Index r = factors.rank();
  const Index width = instance.k + q2 + 2 * r;
  if (width >= n) {
    Matrix diff = instance.to_dense();
    if (r > 0) diff.noalias() -= factors.x * factors.y.transpose();
    return diff.norm();
  }

  Matrix stacked(n, width);
  stacked.leftCols(instance.k) = um;
  if (q2 > 0) stacked.middleCols(instance.k, q2) = instance.noise_basis;
  stacked.middleCols(instance.k + q2, r) = factors.x;
  stacked.rightCols(r) = factors.y;
  Rng rng(0x5eedULL);
  const Matrix q = qr_orthonormalize(stacked, rng).q.mat();

  const Matrix qu = q.transpose() * um;
  Matrix core = qu * instance.sigmas.asDiagonal() * qu.transpose();
  if (q2 > 0) {
    const Matrix qv = q.transpose() * instance.noise_basis;
    core.noalias() += qv * instance.noise_core * qv.transpose();
  }
  if (r > 0) core.noalias() -= (q.transpose() * factors.x) * (q.transpose() * factors.y).transpose();
  return core.norm();
}

LinearOperator error_operator(const PlantedInstance& instance, const Factors& factors) {
  if (factors.x.rows() != instance.n || factors.y.rows() != instance.n)
    throw dimension_error("error_operator: factor dimensions do not match the instance");
  return {instance.n, [&instance, &factors](const Matrix& v) -> Matrix {
            Matrix out = instance.apply(v);
            if (factors.rank() > 0) out.noalias() -= factors.x * (factors.y.transpose() * v);
            return out;
          },
          // The planted matrix is symmetric.
          [&instance, &factors](const Matrix& v) -> Matrix {
            Matrix out = instance.apply(v);
            if (factors.rank() > 0) out.noalias() -= factors.y * (factors.x.transpose() * v);
            return out;
          }};
}

std::vector<double> subspace_errors(const PlantedInstance& instance, const Basis& x, std::span<const Index> boundaries) {
  if (x.rows() != instance.n) throw dimension_error("subspace_errors: basis has the wrong dimension");
  std::vector<double> out;
  out.reserve(boundaries.size());
  Index prev = 0;
  for (const Index b : boundaries) {
    if (b <= prev) throw std::invalid_argument("subspace_errors: boundaries must be increasing and positive");
    if (b > instance.k || b > x.cols()) throw std::invalid_argument("subspace_errors: boundary exceeds the column count");
    out.push_back(principal_angle_sin(instance.u.leading(b), x.leading(b)));
    prev = b;
  }
  return out;
}

}  // namespace softdeflate
