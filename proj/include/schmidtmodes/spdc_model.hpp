#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "schmidtmodes/grid.hpp"
#include "schmidtmodes/hermite.hpp"

namespace schmidtmodes {

/// Degenerate collinear type-I down-conversion with a Gaussian pump.
template <typename Scalar>
struct SpdcParams {
  Scalar lambda_pump = Scalar(355e-9);  // m
  Scalar pump_waist = Scalar(507e-6);   // m
  Scalar crystal_length = Scalar(1e-3); // m
  Scalar index_scale = Scalar(1);       // n_p in k_p = 2 pi n_p / lambda_pump
  // Exponent of the sinc(u) ~ exp(-alpha u) bridge used only to map these
  // parameters onto the double-Gaussian model.
  Scalar gaussian_alpha = Scalar(0.455);

  Scalar pump_wavenumber() const {
    return Scalar(2) * std::numbers::pi_v<Scalar> * index_scale / lambda_pump;
  }

  void validate() const {
    if (!(lambda_pump > 0) || !(pump_waist > 0) || !(crystal_length > 0)) {
      throw std::invalid_argument("spdc: lambda_pump, pump_waist and crystal_length must be > 0");
    }
    if (!(index_scale >= 1)) throw std::invalid_argument("spdc: index_scale must be >= 1");
    if (!(gaussian_alpha > 0)) throw std::invalid_argument("spdc: gaussian_alpha must be > 0");
  }
};

enum class Representation { Position, Momentum };

/// Sampled psi(x_s = x_j, x_i = x_k) (or its momentum counterpart) on a square grid.
/// Normalized so that sum |psi|^2 * d^2 == 1 with d the spacing of the representation.
template <typename Scalar>
struct TwoPhotonAmplitude {
  Grid1D<Scalar> grid;
  ComplexMatrix<Scalar> values;
  Representation representation = Representation::Position;

  Scalar spacing() const {
    return representation == Representation::Position ? grid.dx() : grid.dq();
  }
  Scalar norm_squared() const { return values.squaredNorm() * spacing() * spacing(); }
};

namespace detail {

template <typename Scalar>
void normalize(TwoPhotonAmplitude<Scalar>& psi) {
  const Scalar norm2 = psi.norm_squared();
  if (!(norm2 > 0)) throw std::domain_error("two-photon amplitude has zero norm");
  psi.values /= std::sqrt(norm2);
}

template <typename Scalar>
Scalar sinc(Scalar u) {
  return std::abs(u) < Scalar(1e-8) ? Scalar(1) - u * u / Scalar(6) : std::sin(u) / u;
}

}  // namespace detail

/// Longitudinal mismatch of the paraxial collinear degenerate model:
///   dk_z = -(q_s - q_i)^2 / (2 k_p).
template <typename Scalar>
Scalar phase_mismatch(const SpdcParams<Scalar>& params, Scalar q_signal, Scalar q_idler) {
  const Scalar diff = q_signal - q_idler;
  return -diff * diff / (Scalar(2) * params.pump_wavenumber());
}

/// psi(q_s, q_i) ∝ exp[-(q_s + q_i)^2 w_p^2 / 4] sinc[dk_z L / 2] for one Cartesian axis.
///
/// The momentum grid must reach 6 / w_p (pump envelope) and
/// 3 sqrt(4 pi n_p / (lambda_p L)) (phase-matching sinc). The unpaired sample
/// at q = -n/2 dq is zeroed so the array is inversion symmetric and its
/// position transform is real.
template <typename Scalar>
TwoPhotonAmplitude<Scalar> momentum_amplitude(const SpdcParams<Scalar>& params, const Grid1D<Scalar>& grid) {
  params.validate();
  const Scalar pump_reach = Scalar(6) / params.pump_waist;
  const Scalar sinc_reach = Scalar(3) * std::sqrt(Scalar(4) * std::numbers::pi_v<Scalar> * params.index_scale /
                                                  (params.lambda_pump * params.crystal_length));
  const Scalar reach = grid.q_max();
  if (reach < pump_reach || reach < sinc_reach) {
    std::ostringstream msg;
    msg << "momentum grid reaches only " << reach << " rad/m;";
    if (reach < pump_reach) msg << " pump envelope needs " << pump_reach << " rad/m (6/w_p);";
    if (reach < sinc_reach) msg << " phase-matching sinc needs " << sinc_reach << " rad/m;";
    msg << " decrease dx or increase n";
    throw std::invalid_argument(msg.str());
  }

  const Eigen::Index n = grid.size();
  TwoPhotonAmplitude<Scalar> psi{grid, ComplexMatrix<Scalar>::Zero(n, n), Representation::Momentum};
  const Scalar w2 = params.pump_waist * params.pump_waist;
  for (Eigen::Index j = 1; j < n; ++j) {
    const Scalar qs = grid.q(j);
    for (Eigen::Index k = 1; k < n; ++k) {
      const Scalar qi = grid.q(k);
      const Scalar sum = qs + qi;
      const Scalar envelope = std::exp(-sum * sum * w2 / Scalar(4));
      const Scalar matching = detail::sinc(phase_mismatch(params, qs, qi) * params.crystal_length / Scalar(2));
      psi.values(j, k) = envelope * matching;
    }
  }
  detail::normalize(psi);
  return psi;
}

/// Position-space amplitude via the centered inverse transform along both axes.
template <typename Scalar>
TwoPhotonAmplitude<Scalar> to_position(const TwoPhotonAmplitude<Scalar>& psi_momentum) {
  if (psi_momentum.representation != Representation::Momentum) {
    throw std::invalid_argument("to_position expects a momentum-representation amplitude");
  }
  TwoPhotonAmplitude<Scalar> out{psi_momentum.grid,
                                 fft2_centered(psi_momentum.values, psi_momentum.grid, Direction::Inverse),
                                 Representation::Position};
  detail::normalize(out);
  return out;
}

/// psi(x_s, x_i) ∝ exp[-(x_s + x_i)^2 / (4 a_+^2)] exp[-(x_s - x_i)^2 / (4 a_-^2)].
/// a_plus == a_minus gives the separable limit.
template <typename Scalar>
TwoPhotonAmplitude<Scalar> double_gaussian_amplitude(Scalar a_plus, Scalar a_minus, const Grid1D<Scalar>& grid) {
  if (!(a_minus > 0) || a_plus < a_minus) {
    throw std::invalid_argument("double Gaussian needs a_plus >= a_minus > 0");
  }
  if (std::min(-grid.x_min(), grid.x_max()) < Scalar(5) * a_plus) {
    throw std::invalid_argument("grid must cover +-5 a_plus for the double Gaussian model");
  }
  const Eigen::Index n = grid.size();
  TwoPhotonAmplitude<Scalar> psi{grid, ComplexMatrix<Scalar>(n, n), Representation::Position};
  const Scalar cp = Scalar(1) / (Scalar(4) * a_plus * a_plus);
  const Scalar cm = Scalar(1) / (Scalar(4) * a_minus * a_minus);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const Scalar s = grid.x(j) + grid.x(k);
      const Scalar d = grid.x(j) - grid.x(k);
      psi.values(j, k) = std::exp(-cp * s * s - cm * d * d);
    }
  }
  detail::normalize(psi);
  return psi;
}

/// Ratio z of the geometric double-Gaussian spectrum lambda_n = (1 - z) z^n.
template <typename Scalar>
Scalar double_gaussian_ratio(Scalar a_plus, Scalar a_minus) {
  const Scalar t = (a_plus - a_minus) / (a_plus + a_minus);
  return t * t;
}

template <typename Scalar>
Vector<Scalar> double_gaussian_spectrum(Scalar a_plus, Scalar a_minus, Eigen::Index count) {
  const Scalar z = double_gaussian_ratio(a_plus, a_minus);
  Vector<Scalar> lambdas(count);
  Scalar power(1);
  for (Eigen::Index k = 0; k < count; ++k, power *= z) lambdas[k] = (Scalar(1) - z) * power;
  return lambdas;
}

/// Analytic Schmidt mode of order `order`: a Hermite-Gaussian of width sqrt(a_+ a_-).
template <typename Scalar>
Vector<Scalar> double_gaussian_mode(Scalar a_plus, Scalar a_minus, int order, const Grid1D<Scalar>& grid) {
  return hermite_gaussian(order, std::sqrt(a_plus * a_minus), grid);
}

/// Double-Gaussian widths that approximate the sinc model through
/// sinc(u) ~ exp(-alpha u): a_+ = w_p and a_- = sqrt(alpha L / k_p).
template <typename Scalar>
std::pair<Scalar, Scalar> gaussian_bridge_widths(const SpdcParams<Scalar>& params) {
  params.validate();
  return {params.pump_waist,
          std::sqrt(params.gaussian_alpha * params.crystal_length / params.pump_wavenumber())};
}

}  // namespace schmidtmodes
