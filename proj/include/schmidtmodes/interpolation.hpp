#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>

#include "schmidtmodes/grid.hpp"

namespace schmidtmodes {

// Separable Catmull-Rom resampling. Exact on sample nodes, C1 in between.
// Indices outside [0, n-1] are reported as std::nullopt; neighbours past the
// edge are clamped to the edge sample.

namespace detail {

template <typename Scalar>
std::array<Scalar, 4> catmull_rom_weights(Scalar t) {
  const Scalar t2 = t * t;
  const Scalar t3 = t2 * t;
  return {Scalar(0.5) * (-t3 + Scalar(2) * t2 - t), Scalar(0.5) * (Scalar(3) * t3 - Scalar(5) * t2 + Scalar(2)),
          Scalar(0.5) * (Scalar(-3) * t3 + Scalar(4) * t2 + t), Scalar(0.5) * (t3 - t2)};
}

struct Stencil {
  std::array<Eigen::Index, 4> index;
  double frac;
  bool on_node;
};

// Tolerance in index units below which a coordinate is treated as a node.
inline constexpr double kNodeSnap = 1e-9;

inline std::optional<Stencil> stencil(double position, Eigen::Index n) {
  if (!(position > -kNodeSnap && position < double(n - 1) + kNodeSnap)) return std::nullopt;
  const double nearest = std::round(position);
  if (std::abs(position - nearest) < kNodeSnap) {
    const auto k = static_cast<Eigen::Index>(nearest);
    return Stencil{{k, k, k, k}, 0.0, true};
  }
  const auto base = static_cast<Eigen::Index>(std::floor(position));
  auto clamp = [n](Eigen::Index k) { return k < 0 ? Eigen::Index(0) : (k >= n ? n - 1 : k); };
  return Stencil{{clamp(base - 1), base, clamp(base + 1), clamp(base + 2)}, position - double(base), false};
}

}  // namespace detail

/// Samples `values` at fractional index `position`.
template <typename Derived>
std::optional<typename Derived::Scalar> sample_cubic(const Eigen::MatrixBase<Derived>& values,
                                                     double position) {
  using Scalar = typename Derived::Scalar;
  const auto s = detail::stencil(position, values.size());
  if (!s) return std::nullopt;
  if (s->on_node) return values[s->index[0]];
  const auto w = detail::catmull_rom_weights(Scalar(s->frac));
  Scalar acc(0);
  for (int i = 0; i < 4; ++i) acc += w[i] * values[s->index[i]];
  return acc;
}

/// Samples a matrix at fractional (row, col) indices.
template <typename Derived>
std::optional<typename Derived::Scalar> sample_cubic(const Eigen::MatrixBase<Derived>& values,
                                                     double row, double col) {
  using Scalar = typename Derived::Scalar;
  const auto sr = detail::stencil(row, values.rows());
  const auto sc = detail::stencil(col, values.cols());
  if (!sr || !sc) return std::nullopt;
  if (sr->on_node && sc->on_node) return values(sr->index[0], sc->index[0]);
  const auto wr = sr->on_node ? std::array<Scalar, 4>{0, 1, 0, 0} : detail::catmull_rom_weights(Scalar(sr->frac));
  const auto wc = sc->on_node ? std::array<Scalar, 4>{0, 1, 0, 0} : detail::catmull_rom_weights(Scalar(sc->frac));
  Scalar acc(0);
  for (int i = 0; i < 4; ++i) {
    if (wr[i] == Scalar(0)) continue;
    Scalar row_acc(0);
    for (int j = 0; j < 4; ++j) row_acc += wc[j] * values(sr->index[i], sc->index[j]);
    acc += wr[i] * row_acc;
  }
  return acc;
}

/// Samples a function tabulated on `grid` at physical coordinate `coord`.
template <typename Scalar>
std::optional<Scalar> sample_on_grid(const Vector<Scalar>& values, const Grid1D<Scalar>& grid,
                                     Scalar coord) {
  return sample_cubic(values, static_cast<double>(grid.index_of(coord)));
}

}  // namespace schmidtmodes
