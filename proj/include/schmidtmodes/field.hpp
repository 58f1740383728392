#pragma once

#include <cmath>
#include <optional>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/interpolation.hpp"

namespace schmidtmodes {

// A field model answers I(x) and W(x, x') at arbitrary coordinates inside its
// grid window and std::nullopt outside it. Frames are synthesized from these.

/// Tabulated W evaluated by Catmull-Rom interpolation.
template <typename ScalarT>
class SampledField {
 public:
  using Scalar = ScalarT;

  explicit SampledField(CorrelationMatrix<Scalar> w) : w_(std::move(w)), intensity_(w_.values.diagonal()) {}

  const Grid1D<Scalar>& grid() const { return w_.grid; }
  std::optional<Scalar> intensity(Scalar x) const {
    return sample_cubic(intensity_, double(w_.grid.index_of(x)));
  }
  std::optional<Scalar> cross(Scalar x, Scalar x2) const {
    return sample_cubic(w_.values, double(w_.grid.index_of(x)), double(w_.grid.index_of(x2)));
  }

 private:
  CorrelationMatrix<Scalar> w_;
  Vector<Scalar> intensity_;
};

/// Closed-form Gaussian kernel W(x, x') = c exp(-alpha (x^2 + x'^2) + beta x x'),
/// normalized so that sum_k I(x_k) dx == 1 on its grid.
template <typename ScalarT>
class GaussianKernelField {
 public:
  using Scalar = ScalarT;

  GaussianKernelField(Grid1D<Scalar> grid, Scalar alpha, Scalar beta) : grid_(grid), alpha_(alpha), beta_(beta) {
    if (!(Scalar(2) * alpha > std::abs(beta))) throw std::invalid_argument("Gaussian kernel is not positive");
    Scalar trace(0);
    for (Eigen::Index k = 0; k < grid_.size(); ++k) trace += raw(grid_.x(k), grid_.x(k));
    scale_ = Scalar(1) / (trace * grid_.dx());
  }

  const Grid1D<Scalar>& grid() const { return grid_; }
  std::optional<Scalar> intensity(Scalar x) const { return cross(x, x); }
  std::optional<Scalar> cross(Scalar x, Scalar x2) const {
    if (!inside(x) || !inside(x2)) return std::nullopt;
    return scale_ * raw(x, x2);
  }

  CorrelationMatrix<Scalar> sampled() const {
    const Eigen::Index n = grid_.size();
    Matrix<Scalar> w(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index j = 0; j < n; ++j) w(j, k) = scale_ * raw(grid_.x(j), grid_.x(k));
    return normalized_correlation(grid_, std::move(w));
  }

 private:
  Scalar raw(Scalar x, Scalar x2) const { return std::exp(-alpha_ * (x * x + x2 * x2) + beta_ * x * x2); }
  bool inside(Scalar x) const {
    const Scalar slack = Scalar(1e-9) * grid_.dx();
    return x >= grid_.x_min() - slack && x <= grid_.x_max() + slack;
  }

  Grid1D<Scalar> grid_;
  Scalar alpha_, beta_, scale_ = Scalar(1);
};

/// Reduced state of the double-Gaussian amplitude, integrated in closed form.
template <typename Scalar>
GaussianKernelField<Scalar> double_gaussian_field(Scalar a_plus, Scalar a_minus, const Grid1D<Scalar>& grid) {
  // psi = exp(-a (x^2 + y^2) - 2 b x y); tracing y out leaves
  // exp(-a (x^2 + x'^2) + b^2 (x + x')^2 / (2 a)).
  const Scalar a = Scalar(1) / (Scalar(4) * a_plus * a_plus) + Scalar(1) / (Scalar(4) * a_minus * a_minus);
  const Scalar b = Scalar(1) / (Scalar(4) * a_plus * a_plus) - Scalar(1) / (Scalar(4) * a_minus * a_minus);
  const Scalar c = b * b / (Scalar(2) * a);
  return GaussianKernelField<Scalar>(grid, a - c, Scalar(2) * c);
}

/// Gaussian Schell-model source exp(-(x^2 + x'^2) / (4 sigma_i^2)) exp(-(x - x')^2 / (2 sigma_mu^2)).
template <typename Scalar>
GaussianKernelField<Scalar> gaussian_schell_field(Scalar sigma_intensity, Scalar sigma_mu, const Grid1D<Scalar>& grid) {
  const Scalar coherence = Scalar(1) / (Scalar(2) * sigma_mu * sigma_mu);
  return GaussianKernelField<Scalar>(grid, Scalar(1) / (Scalar(4) * sigma_intensity * sigma_intensity) + coherence,
                                     Scalar(2) * coherence);
}

}  // namespace schmidtmodes
