#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/spdc_model.hpp"

namespace schmidtmodes {

/// Coherent modes of one axis: descending weights summing to one and modes
/// with sum phi_i^2 dx = 1 stored column-wise.
template <typename Scalar>
struct AxisSpectrum {
  Grid1D<Scalar> grid;
  Vector<Scalar> lambdas;
  Matrix<Scalar> modes;
  // sum of |negative eigenvalues| over sum of positive ones, before clipping
  Scalar negativity_budget = Scalar(0);
};

/// Thrown when a numerical guard (normalization, symmetry) fails.
class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Flips each column so its first sample above 1e-3 of the column peak is positive.
template <typename Scalar>
void fix_signs(Matrix<Scalar>& modes) {
  for (Eigen::Index c = 0; c < modes.cols(); ++c) {
    const Scalar threshold = Scalar(1e-3) * modes.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < modes.rows(); ++r) {
      if (std::abs(modes(r, c)) > threshold) {
        if (modes(r, c) < 0) modes.col(c) = -modes.col(c);
        break;
      }
    }
  }
}

template <typename Scalar>
void check_k_max(Eigen::Index k_max, Eigen::Index n) {
  if (k_max < 1 || k_max > n) {
    throw std::invalid_argument("k_max must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k_max));
  }
}

}  // namespace detail

/// Eigendecomposition of the rectangle-rule kernel W dx. Negative eigenvalues
/// are clipped to zero, the leading k_max are kept and renormalized to sum to one.
template <typename Scalar>
AxisSpectrum<Scalar> diagonalize(const CorrelationMatrix<Scalar>& w, Eigen::Index k_max) {
  const Eigen::Index n = w.grid.size();
  detail::check_length(w.grid, w.values.rows());
  detail::check_k_max<Scalar>(k_max, n);
  const Scalar scale = w.values.cwiseAbs().maxCoeff();
  if ((w.values - w.values.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
    throw NumericalGuardError("correlation matrix is not symmetric");
  }
  const Scalar dx = w.grid.dx();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(w.values * dx);
  if (solver.info() != Eigen::Success) throw NumericalGuardError("eigendecomposition did not converge");

  const Vector<Scalar>& values = solver.eigenvalues();  // ascending
  const Scalar positive = values.cwiseMax(Scalar(0)).sum();
  const Scalar negative = -values.cwiseMin(Scalar(0)).sum();
  if (!(positive > 0)) throw NumericalGuardError("correlation matrix has no positive eigenvalue");

  AxisSpectrum<Scalar> out{w.grid, Vector<Scalar>(k_max), Matrix<Scalar>(n, k_max), negative / positive};
  for (Eigen::Index i = 0; i < k_max; ++i) {
    const Eigen::Index src = n - 1 - i;
    out.lambdas[i] = std::max(Scalar(0), values[src]);
    out.modes.col(i) = solver.eigenvectors().col(src) / std::sqrt(dx);
  }
  out.lambdas /= out.lambdas.sum();
  detail::fix_signs(out.modes);
  return out;
}

/// Direct Schmidt decomposition of a position amplitude by SVD of psi dx.
/// Independent of the cross-spectral density route; used as the oracle.
template <typename Scalar>
AxisSpectrum<Scalar> schmidt_decompose(const TwoPhotonAmplitude<Scalar>& psi, Eigen::Index k_max) {
  if (psi.representation != Representation::Position) {
    throw std::invalid_argument("schmidt_decompose expects a position-representation amplitude");
  }
  const Eigen::Index n = psi.grid.size();
  detail::check_k_max<Scalar>(k_max, n);
  const Scalar dx = psi.grid.dx();
  const Scalar peak = psi.values.cwiseAbs().maxCoeff();
  if (psi.values.imag().cwiseAbs().maxCoeff() > Scalar(1e-10) * peak) {
    throw NumericalGuardError("schmidt_decompose: amplitude is not real");
  }
  Eigen::BDCSVD<Matrix<Scalar>> svd(Matrix<Scalar>(psi.values.real() * dx), Eigen::ComputeThinU);
  AxisSpectrum<Scalar> out{psi.grid, Vector<Scalar>(k_max), Matrix<Scalar>(n, k_max), Scalar(0)};
  out.lambdas = svd.singularValues().head(k_max).array().square();
  out.lambdas /= out.lambdas.sum();
  out.modes = svd.matrixU().leftCols(k_max) / std::sqrt(dx);
  detail::fix_signs(out.modes);
  return out;
}

/// K = 1 / sum lambda^2 of a normalized spectrum.
template <typename Derived>
double schmidt_number(const Eigen::MatrixBase<Derived>& lambdas) {
  const double total = double(lambdas.sum());
  if (lambdas.size() == 0 || std::abs(total - 1.0) > 1e-6) {
    throw NumericalGuardError("schmidt_number: spectrum is not normalized (sum = " + std::to_string(total) + ")");
  }
  if ((lambdas.array() < 0).any()) throw NumericalGuardError("schmidt_number: negative weight");
  return 1.0 / double(lambdas.squaredNorm());
}

/// K of the tensor-product spectrum lambda_m lambda_n, without forming it.
template <typename DerivedX, typename DerivedY>
double schmidt_number(const Eigen::MatrixBase<DerivedX>& lambdas_x, const Eigen::MatrixBase<DerivedY>& lambdas_y) {
  return schmidt_number(lambdas_x) * schmidt_number(lambdas_y);
}

struct ModeWeight {
  Eigen::Index m = 0;  // x-axis index
  Eigen::Index n = 0;  // y-axis index
  double lambda = 0.0;
};

struct TensorSpectrum {
  std::vector<ModeWeight> ranked;
  bool truncated = false;
  std::string warning;
};

/// Leading top_k weights lambda_m lambda_n, descending, ties by (m, n).
template <typename Scalar>
TensorSpectrum tensor_combine(const AxisSpectrum<Scalar>& x, const AxisSpectrum<Scalar>& y, std::size_t top_k) {
  const std::size_t available = std::size_t(x.lambdas.size()) * std::size_t(y.lambdas.size());
  TensorSpectrum out;
  if (top_k > available) {
    out.truncated = true;
    out.warning = "top_k " + std::to_string(top_k) + " exceeds the " + std::to_string(available) +
                  " available products; truncated";
    top_k = available;
  }
  std::vector<ModeWeight> all;
  all.reserve(available);
  for (Eigen::Index m = 0; m < x.lambdas.size(); ++m)
    for (Eigen::Index n = 0; n < y.lambdas.size(); ++n) all.push_back({m, n, double(x.lambdas[m] * y.lambdas[n])});
  auto before = [](const ModeWeight& a, const ModeWeight& b) {
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    return a.m != b.m ? a.m < b.m : a.n < b.n;
  };
  std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(top_k), all.end(), before);
  all.resize(top_k);
  out.ranked = std::move(all);
  return out;
}

/// phi_mn(x, y) = phi_m(x) phi_n(y); rows index y, columns index x.
template <typename Scalar>
Matrix<Scalar> mode_2d(const AxisSpectrum<Scalar>& x, const AxisSpectrum<Scalar>& y, Eigen::Index m, Eigen::Index n) {
  return y.modes.col(n) * x.modes.col(m).transpose();
}

/// Coefficient of determination 1 - SS_res / SS_tot, maximized over the
/// global sign of the candidate.
template <typename DerivedC, typename DerivedR>
double fidelity(const Eigen::MatrixBase<DerivedC>& candidate, const Eigen::MatrixBase<DerivedR>& reference) {
  if (candidate.rows() != reference.rows() || candidate.cols() != reference.cols()) {
    throw std::invalid_argument("fidelity: shapes differ");
  }
  const auto r = reference.template cast<double>().array();
  const auto c = candidate.template cast<double>().array();
  const double total = (r - r.mean()).square().sum();
  if (!(total > 0.0)) throw std::invalid_argument("fidelity: reference has zero variance");
  const double plus = (c - r).square().sum();
  const double minus = (c + r).square().sum();
  return 1.0 - std::min(plus, minus) / total;
}

/// Sign changes of a sampled function, ignoring samples below `rel_threshold` of its peak.
template <typename Derived>
int sign_changes(const Eigen::MatrixBase<Derived>& v, double rel_threshold = 1e-3) {
  const double threshold = rel_threshold * double(v.cwiseAbs().maxCoeff());
  int changes = 0, last = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double s = double(v[i]);
    if (std::abs(s) <= threshold) continue;
    const int sign = s > 0 ? 1 : -1;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes;
}

/// Per-axis results combined into the two-dimensional Schmidt decomposition.
template <typename Scalar>
struct SchmidtResult {
  AxisSpectrum<Scalar> x;
  AxisSpectrum<Scalar> y;
  TensorSpectrum spectrum_2d;
  double schmidt_number = 1.0;
};

template <typename Scalar>
SchmidtResult<Scalar> combine(AxisSpectrum<Scalar> x, AxisSpectrum<Scalar> y, std::size_t top_k) {
  SchmidtResult<Scalar> out{std::move(x), std::move(y), {}, 1.0};
  out.spectrum_2d = tensor_combine(out.x, out.y, top_k);
  out.schmidt_number = schmidt_number(out.x.lambdas, out.y.lambdas);
  return out;
}

}  // namespace schmidtmodes
