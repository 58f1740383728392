#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace schmidtmodes {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexVector = Vector<std::complex<Scalar>>;
template <typename Scalar>
using ComplexMatrix = Matrix<std::complex<Scalar>>;

// Uniform, even-length sampling grid. Sample k sits at x_k = (k - n/2) dx so
// the origin is sample n/2 and centering an FFT is a pure index rotation.
template <typename Scalar>
class Grid1D {
 public:
  Grid1D() = default;

  Grid1D(Eigen::Index n, Scalar dx) : n_(n), dx_(dx) {
    if (n < 2 || n % 2 != 0) {
      throw std::invalid_argument("grid size must be even and >= 2, got " + std::to_string(n));
    }
    if (!(dx > Scalar(0)) || !std::isfinite(static_cast<double>(dx))) {
      throw std::invalid_argument("grid spacing must be positive and finite");
    }
  }

  Eigen::Index size() const { return n_; }
  Scalar dx() const { return dx_; }
  Scalar dq() const { return Scalar(2) * std::numbers::pi_v<Scalar> / (Scalar(n_) * dx_); }
  Eigen::Index center() const { return n_ / 2; }

  Scalar x(Eigen::Index k) const { return Scalar(k - n_ / 2) * dx_; }
  Scalar q(Eigen::Index k) const { return Scalar(k - n_ / 2) * dq(); }
  Scalar x_min() const { return x(0); }
  Scalar x_max() const { return x(n_ - 1); }
  Scalar q_max() const { return q(n_ - 1); }

  Vector<Scalar> positions() const {
    return Vector<Scalar>::NullaryExpr(n_, [this](Eigen::Index k) { return x(k); });
  }
  Vector<Scalar> momenta() const {
    return Vector<Scalar>::NullaryExpr(n_, [this](Eigen::Index k) { return q(k); });
  }

  // Fractional sample index of coordinate `coord`.
  Scalar index_of(Scalar coord) const { return coord / dx_ + Scalar(n_ / 2); }

  bool operator==(const Grid1D&) const = default;

 private:
  Eigen::Index n_ = 2;
  Scalar dx_ = Scalar(1);
};

template <typename Scalar>
Grid1D<Scalar> make_grid(Eigen::Index n, Scalar dx) {
  return Grid1D<Scalar>(n, dx);
}

namespace detail {

template <typename Scalar>
void check_length(const Grid1D<Scalar>& grid, Eigen::Index length) {
  if (length != grid.size()) {
    throw std::invalid_argument("array length " + std::to_string(length) +
                                " does not match grid size " + std::to_string(grid.size()));
  }
}

// Rotates a centered array so the origin sample lands at index 0, and back.
template <typename Derived>
auto rotate_to_origin(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  Vector<S> out(n);
  for (Eigen::Index k = 0; k < n; ++k) out[k] = v[(k + n / 2) % n];
  return out;
}

template <typename Derived>
auto rotate_to_center(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  Vector<S> out(n);
  for (Eigen::Index k = 0; k < n; ++k) out[(k + n / 2) % n] = v[k];
  return out;
}

}  // namespace detail

/// Continuous-normalized centered Fourier transform,
///   F(q_k) = dx / sqrt(2 pi) * sum_j f(x_j) exp(-i q_k x_j),
/// so that sum |f|^2 dx == sum |F|^2 dq exactly.
template <typename Scalar>
ComplexVector<Scalar> fft_centered(const ComplexVector<Scalar>& field, const Grid1D<Scalar>& grid) {
  detail::check_length(grid, field.size());
  Eigen::FFT<Scalar> fft;
  ComplexVector<Scalar> rotated = detail::rotate_to_origin(field);
  ComplexVector<Scalar> spectrum(grid.size());
  fft.fwd(spectrum, rotated);
  const Scalar scale = grid.dx() / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  return detail::rotate_to_center(spectrum) * scale;
}

/// Inverse of fft_centered: takes samples on the momentum grid back to positions.
template <typename Scalar>
ComplexVector<Scalar> ifft_centered(const ComplexVector<Scalar>& spectrum,
                                    const Grid1D<Scalar>& grid) {
  detail::check_length(grid, spectrum.size());
  Eigen::FFT<Scalar> fft;
  // Eigen's inverse already divides by n; undo it and apply the dq convention.
  ComplexVector<Scalar> rotated = detail::rotate_to_origin(spectrum);
  ComplexVector<Scalar> field(grid.size());
  fft.inv(field, rotated);
  const Scalar scale =
      Scalar(grid.size()) * grid.dq() / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  return detail::rotate_to_center(field) * scale;
}

enum class Direction { Forward, Inverse };

// Applies the centered transform along both indices of a sampled 2D function.
template <typename Scalar>
ComplexMatrix<Scalar> fft2_centered(const ComplexMatrix<Scalar>& values, const Grid1D<Scalar>& grid,
                                    Direction direction = Direction::Forward) {
  detail::check_length(grid, values.rows());
  detail::check_length(grid, values.cols());
  auto transform = [&](const ComplexVector<Scalar>& v) {
    return direction == Direction::Forward ? fft_centered(v, grid) : ifft_centered(v, grid);
  };
  ComplexMatrix<Scalar> out(values.rows(), values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) out.col(c) = transform(values.col(c));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out.row(r) = transform(out.row(r).transpose()).transpose();
  }
  return out;
}

}  // namespace schmidtmodes
