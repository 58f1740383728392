#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "schmidtmodes/grid.hpp"
#include "schmidtmodes/spdc_model.hpp"

namespace schmidtmodes {

/// Real symmetric two-point function W(x_j, x_k), normalized to trace * dx == 1.
template <typename Scalar>
struct CorrelationMatrix {
  Grid1D<Scalar> grid;
  Matrix<Scalar> values;
  // trace * dx before normalization
  Scalar trace_norm = Scalar(1);

  Vector<Scalar> intensity() const { return values.diagonal(); }
};

struct HomogeneityReport {
  double sum_coordinate_variation = 0.0;
  // +infinity when the degree of coherence never falls to 1/e on the support
  double width_ratio = 0.0;
  double intensity_half_width = 0.0;  // 1/e half-width of I(x), meters
  double coherence_half_width = 0.0;  // 1/e half-width of mu in x - x', meters
};

template <typename Scalar>
struct CoherenceFactorization {
  Grid1D<Scalar> grid;
  Vector<Scalar> intensity;
  Matrix<Scalar> mu_two_point;
  std::vector<bool> support;
  HomogeneityReport homogeneity;
};

struct HomogeneityThresholds {
  double max_sum_coordinate_variation = 0.05;
  double min_width_ratio = 10.0;
};

/// Condition (ii) via the variation bound and condition (i) via the width
/// ratio. An undefined (infinite) ratio does not pass.
inline bool is_quasi_homogeneous(const HomogeneityReport& report, const HomogeneityThresholds& thresholds = {}) {
  return report.sum_coordinate_variation <= thresholds.max_sum_coordinate_variation &&
         std::isfinite(report.width_ratio) && report.width_ratio >= thresholds.min_width_ratio;
}

/// Rescales W to unit trace * dx, recording the original value.
template <typename Scalar>
CorrelationMatrix<Scalar> normalized_correlation(const Grid1D<Scalar>& grid, Matrix<Scalar> values) {
  detail::check_length(grid, values.rows());
  detail::check_length(grid, values.cols());
  const Scalar trace = values.trace() * grid.dx();
  if (!(trace > 0)) throw std::domain_error("correlation matrix has non-positive trace");
  values /= trace;
  return {grid, std::move(values), trace};
}

/// W(x, x') = sum_k psi(x, x_k) psi*(x', x_k) dx, with the imaginary residue
/// checked and dropped.
template <typename Scalar>
CorrelationMatrix<Scalar> partial_trace(const TwoPhotonAmplitude<Scalar>& psi) {
  if (psi.representation != Representation::Position) {
    throw std::invalid_argument("partial_trace expects a position-representation amplitude");
  }
  const Scalar dx = psi.grid.dx();
  const Scalar peak = psi.values.cwiseAbs().maxCoeff();
  Matrix<Scalar> w;
  if (psi.values.imag().cwiseAbs().maxCoeff() <= Scalar(1e-13) * peak) {
    const Matrix<Scalar> re = psi.values.real();
    w.noalias() = re * re.transpose() * dx;
  } else {
    const ComplexMatrix<Scalar> full = psi.values * psi.values.adjoint() * dx;
    const Scalar residue = full.imag().cwiseAbs().maxCoeff();
    const Scalar scale = full.real().cwiseAbs().maxCoeff();
    if (residue > Scalar(1e-10) * scale) {
      throw std::domain_error("cross-spectral density is not real: relative imaginary residue " +
                              std::to_string(double(residue / scale)));
    }
    w = full.real();
  }
  Matrix<Scalar> sym = (w + w.transpose()) / Scalar(2);
  return normalized_correlation(psi.grid, std::move(sym));
}

namespace detail {

// Distance from `center` to the first 1/e crossing walking in `step` direction,
// linearly interpolated. Infinity when no crossing is found before the data
// ends or turns NaN (unmeasured).
template <typename Scalar>
double one_over_e_reach(const std::vector<Scalar>& profile, std::ptrdiff_t center, int step, double spacing) {
  const Scalar level = profile[center] / Scalar(std::exp(1.0));
  std::ptrdiff_t k = center;
  while (true) {
    const std::ptrdiff_t next = k + step;
    if (next < 0 || next >= std::ptrdiff_t(profile.size()) || std::isnan(double(profile[next]))) {
      return std::numeric_limits<double>::infinity();
    }
    if (profile[next] <= level) {
      const double frac = double(profile[k] - level) / double(profile[k] - profile[next]);
      return (double(std::abs(k - center)) + frac) * spacing;
    }
    k = next;
  }
}

template <typename Scalar>
double one_over_e_half_width(const std::vector<Scalar>& profile, std::ptrdiff_t center, double spacing) {
  return 0.5 * (one_over_e_reach(profile, center, -1, spacing) + one_over_e_reach(profile, center, +1, spacing));
}

}  // namespace detail

/// Variation of mu along lines of constant x - x', and the ratio of the
/// intensity width to the coherence width.
template <typename Scalar>
HomogeneityReport homogeneity_metrics(const CoherenceFactorization<Scalar>& fact) {
  const Eigen::Index n = fact.grid.size();
  const double dx = double(fact.grid.dx());
  HomogeneityReport report;

  double max_abs_mu = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      if (fact.support[j] && fact.support[k]) max_abs_mu = std::max(max_abs_mu, double(std::abs(fact.mu_two_point(j, k))));
  if (max_abs_mu == 0.0) throw std::domain_error("degree of coherence is empty on the support");

  // Mean and spread of mu along each line j - k = d; NaN where no pair is supported.
  std::vector<Scalar> mean_profile(2 * n - 1, std::numeric_limits<Scalar>::quiet_NaN());
  std::vector<double> line;
  double worst = 0.0;
  for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
    line.clear();
    for (Eigen::Index k = std::max<Eigen::Index>(0, -d); k < n && k + d < n; ++k) {
      const Eigen::Index j = k + d;
      if (fact.support[j] && fact.support[k]) line.push_back(double(fact.mu_two_point(j, k)));
    }
    if (line.empty()) continue;
    double mean = 0.0;
    for (const double v : line) mean += v;
    mean /= double(line.size());
    mean_profile[d + n - 1] = Scalar(mean);
    // two passes: the one-pass formula loses half the digits to cancellation
    double var = 0.0;
    for (const double v : line) var += (v - mean) * (v - mean);
    worst = std::max(worst, std::sqrt(var / double(line.size())));
  }
  report.sum_coordinate_variation = worst / max_abs_mu;

  std::vector<Scalar> intensity(fact.intensity.data(), fact.intensity.data() + n);
  Eigen::Index peak = 0;
  fact.intensity.maxCoeff(&peak);
  report.intensity_half_width = detail::one_over_e_half_width(intensity, peak, dx);
  report.coherence_half_width = detail::one_over_e_half_width(mean_profile, n - 1, dx);
  report.width_ratio = std::isfinite(report.coherence_half_width)
                           ? report.intensity_half_width / report.coherence_half_width
                           : std::numeric_limits<double>::infinity();
  return report;
}

/// I(x) = W(x, x) and mu(x, x') = W / sqrt(I I') on the support
/// {I > support_eps * max I}; mu is zero off the support.
template <typename Scalar>
CoherenceFactorization<Scalar> factorize(const CorrelationMatrix<Scalar>& w, Scalar support_eps = Scalar(1e-3)) {
  if (!(support_eps > 0 && support_eps < 1)) throw std::invalid_argument("support_eps must lie in (0, 1)");
  const Eigen::Index n = w.grid.size();
  CoherenceFactorization<Scalar> fact{w.grid, w.values.diagonal(), Matrix<Scalar>::Zero(n, n), std::vector<bool>(n), {}};
  const Scalar peak = fact.intensity.maxCoeff();
  if (!(peak > 0)) throw std::domain_error("correlation matrix has zero intensity everywhere");
  for (Eigen::Index j = 0; j < n; ++j) fact.support[j] = fact.intensity[j] > support_eps * peak;

  Vector<Scalar> root = fact.intensity.cwiseMax(Scalar(0)).cwiseSqrt();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!fact.support[k]) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (fact.support[j]) fact.mu_two_point(j, k) = w.values(j, k) / (root[j] * root[k]);
    }
    fact.mu_two_point(k, k) = Scalar(1);
  }
  fact.homogeneity = homogeneity_metrics(fact);
  return fact;
}

/// sqrt(I I') mu, i.e. W restricted to the support.
template <typename Scalar>
Matrix<Scalar> reassemble(const CoherenceFactorization<Scalar>& fact) {
  const Vector<Scalar> root = fact.intensity.cwiseMax(Scalar(0)).cwiseSqrt();
  return root.asDiagonal() * fact.mu_two_point * root.asDiagonal();
}

}  // namespace schmidtmodes
