#pragma once

#include <cmath>
#include <numbers>

#include "schmidtmodes/grid.hpp"

namespace schmidtmodes {

/// L2-normalized Hermite-Gaussian of order `order` and width `width`:
///   h_n(x / width) / sqrt(width), h_n the physicists' Hermite function.
/// Uses the three-term recurrence on normalized functions, stable to high order.
template <typename Scalar>
Vector<Scalar> hermite_gaussian(int order, Scalar width, const Grid1D<Scalar>& grid) {
  const Vector<Scalar> u = grid.positions() / width;
  Vector<Scalar> prev = Vector<Scalar>::Zero(u.size());
  Vector<Scalar> cur = (-u.array().square() / Scalar(2)).exp() * std::pow(std::numbers::pi_v<Scalar>, Scalar(-0.25));
  for (int k = 0; k < order; ++k) {
    Vector<Scalar> next = std::sqrt(Scalar(2) / Scalar(k + 1)) * u.cwiseProduct(cur) -
                          std::sqrt(Scalar(k) / Scalar(k + 1)) * prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur / std::sqrt(width);
}

}  // namespace schmidtmodes
