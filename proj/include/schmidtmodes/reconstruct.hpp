#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/interferometer.hpp"
#include "schmidtmodes/interpolation.hpp"

namespace schmidtmodes {

enum class Axis { X, Y };
enum class Extrapolation { Zero, Hold };

struct ReconstructionOptions {
  double support_eps = 1e-3;
  // Half-width, in rows (or columns), of the band summed around the centroid cut.
  int row_average = 3;
  Extrapolation extrapolation = Extrapolation::Zero;
  // For photon-counted frames the measured range of mu ends after the last
  // sample exceeding this many standard deviations of its noise. 0 disables.
  double noise_cut_sigmas = 5.0;
};

/// Thrown when frames that should form one measurement disagree.
class DataContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// W(m rho, rho / m) on camera pixels, signed.
template <typename Scalar>
struct DifferenceMap {
  Matrix<Scalar> values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
  // per-pixel variance of `values`; zero for noise-free frames
  Matrix<Scalar> variance;
  double magnification = 2.0;
  double pixel_pitch = 1.0;
};

/// Single-variable degree of coherence on Delta = rho (m - 1/m).
template <typename Scalar>
struct MuProfile {
  Vector<Scalar> delta;
  Vector<Scalar> values;
  std::vector<bool> valid;
  Eigen::Index origin = 0;  // sample with Delta == 0
  Vector<Scalar> sigma;     // photon-noise standard deviation of values
};

namespace detail {

template <typename Scalar>
void require_same_geometry(const Frame<Scalar>& a, const Frame<Scalar>& b, const std::string& what) {
  if (a.width() != b.width() || a.height() != b.height()) throw DataContractError(what + ": frame sizes differ");
  auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max(std::abs(u), std::abs(v)); };
  if (!close(a.meta.magnification, b.meta.magnification)) throw DataContractError(what + ": magnification differs");
  if (!close(a.meta.pixel_pitch, b.meta.pixel_pitch)) throw DataContractError(what + ": pixel pitch differs");
  if (!close(a.meta.counts_scale, b.meta.counts_scale)) throw DataContractError(what + ": counts_scale differs");
}

}  // namespace detail

namespace detail {

// Variance of a recorded frame: the counts themselves for photon-counted
// frames plus the read noise, zero for expectation frames.
template <typename Scalar>
Matrix<Scalar> frame_variance(const Frame<Scalar>& f) {
  if (f.meta.noise == NoiseKind::None) return Matrix<Scalar>::Zero(f.height(), f.width());
  return f.values.cwiseMax(Scalar(0)).array() + Scalar(f.meta.read_noise_sigma * f.meta.read_noise_sigma);
}

}  // namespace detail

/// [I(phi = pi/4) - I(phi = 0)] / 4. Negative (noise) values are kept.
template <typename Scalar>
DifferenceMap<Scalar> extract_w_antidiagonal(const Frame<Scalar>& frame_pi4, const Frame<Scalar>& frame_0) {
  detail::require_same_geometry(frame_pi4, frame_0, "interferogram pair");
  if (!frame_pi4.meta.bs_present || !frame_0.meta.bs_present) {
    throw DataContractError("interferogram pair: both frames need the beam splitter in place");
  }
  constexpr double quarter = std::numbers::pi / 4.0;
  if (std::abs(frame_pi4.meta.phi - quarter) > 1e-9 || std::abs(frame_0.meta.phi) > 1e-9) {
    throw DataContractError("interferogram pair: expected phi = pi/4 and phi = 0");
  }
  return {(frame_pi4.values - frame_0.values) / Scalar(4), frame_pi4.valid && frame_0.valid,
          (detail::frame_variance(frame_pi4) + detail::frame_variance(frame_0)) / Scalar(16),
          frame_pi4.meta.magnification, frame_pi4.meta.pixel_pitch};
}

/// Intensity-weighted centroid of the valid pixels, rounded to a pixel.
template <typename Scalar>
PixelOrigin centroid_pixel(const Frame<Scalar>& frame) {
  double total = 0.0, sr = 0.0, sc = 0.0;
  for (Eigen::Index r = 0; r < frame.height(); ++r) {
    for (Eigen::Index c = 0; c < frame.width(); ++c) {
      if (!frame.valid(r, c)) continue;
      const double v = std::max(0.0, double(frame.values(r, c)));
      total += v;
      sr += v * double(r);
      sc += v * double(c);
    }
  }
  if (!(total > 0.0)) throw DataContractError("arm frame carries no signal");
  return {std::round(sr / total), std::round(sc / total)};
}

namespace detail {

// Sum over the band of rows (axis X) or columns (axis Y) around the origin,
// as a function of the position along `axis`. Positions where any summed
// pixel is invalid are flagged.
template <typename Scalar, typename Get, typename Valid>
std::pair<Vector<Scalar>, std::vector<bool>> band_sum(Eigen::Index length, Eigen::Index across, Eigen::Index origin_across,
                                                      int half_width, Get get, Valid valid) {
  Vector<Scalar> sum = Vector<Scalar>::Zero(length);
  std::vector<bool> ok(length, true);
  const Eigen::Index lo = origin_across - half_width;
  const Eigen::Index hi = origin_across + half_width;
  if (lo < 0 || hi >= across) throw DataContractError("averaging band leaves the frame");
  for (Eigen::Index along = 0; along < length; ++along) {
    for (Eigen::Index a = lo; a <= hi; ++a) {
      sum[along] += get(along, a);
      ok[along] = ok[along] && valid(along, a);
    }
  }
  return {std::move(sum), std::move(ok)};
}

template <typename Scalar, typename M>
auto oriented(const M& m, Axis axis) {
  // along = column index for X, row index for Y
  return [&m, axis](Eigen::Index along, Eigen::Index across) {
    return axis == Axis::X ? m(across, along) : m(along, across);
  };
}

}  // namespace detail

/// mu(Delta) = W(m rho, rho/m) / sqrt(I(m rho) I(rho/m)) along one camera axis
/// through `origin`, relabelled to Delta = rho (m - 1/m) and scaled to mu(0) = 1.
/// Band sums are divided as a ratio of sums, which keeps the separable
/// factor of the orthogonal axis a constant.
template <typename Scalar>
MuProfile<Scalar> compute_mu_profile(const DifferenceMap<Scalar>& w_anti, const Frame<Scalar>& arm_demag,
                                     const Frame<Scalar>& arm_mag_est, Axis axis, PixelOrigin origin,
                                     const ReconstructionOptions& options = {}) {
  detail::require_same_geometry(arm_demag, arm_mag_est, "arm frames");
  if (w_anti.values.rows() != arm_demag.height() || w_anti.values.cols() != arm_demag.width()) {
    throw DataContractError("difference map and arm frame sizes differ");
  }
  const bool along_x = axis == Axis::X;
  const Eigen::Index length = along_x ? arm_demag.width() : arm_demag.height();
  const Eigen::Index across = along_x ? arm_demag.height() : arm_demag.width();
  const auto origin_along = Eigen::Index(along_x ? origin.col : origin.row);
  const auto origin_across = Eigen::Index(along_x ? origin.row : origin.col);

  const auto d = detail::oriented<Scalar>(w_anti.values, axis);
  const auto dv = detail::oriented<Scalar>(w_anti.valid, axis);
  const auto a = detail::oriented<Scalar>(arm_demag.values, axis);
  const auto av = detail::oriented<Scalar>(arm_demag.valid, axis);
  const auto b = detail::oriented<Scalar>(arm_mag_est.values, axis);
  const auto bv = detail::oriented<Scalar>(arm_mag_est.valid, axis);

  auto [num, num_ok] = detail::band_sum<Scalar>(length, across, origin_across, options.row_average, d, dv);
  auto [num_var, var_ok] = detail::band_sum<Scalar>(length, across, origin_across, options.row_average,
                                                     detail::oriented<Scalar>(w_anti.variance, axis), dv);
  auto [den, den_ok] = detail::band_sum<Scalar>(
      length, across, origin_across, options.row_average,
      [&](Eigen::Index i, Eigen::Index j) { return std::sqrt(std::max(Scalar(0), a(i, j) * b(i, j))); },
      [&](Eigen::Index i, Eigen::Index j) { return av(i, j) && bv(i, j); });

  const Scalar den_peak = den.maxCoeff();
  if (!(den_peak > 0)) throw DataContractError("arm frames carry no signal along the cut");

  const double m = w_anti.magnification;
  const double step = w_anti.pixel_pitch * (m - 1.0 / m);
  MuProfile<Scalar> profile{Vector<Scalar>(length), Vector<Scalar>::Zero(length), std::vector<bool>(length),
                            origin_along, Vector<Scalar>::Zero(length)};
  for (Eigen::Index i = 0; i < length; ++i) {
    profile.delta[i] = Scalar(double(i - origin_along) * step);
    profile.valid[i] = num_ok[i] && den_ok[i] && den[i] > Scalar(options.support_eps) * den_peak;
    if (profile.valid[i]) {
      profile.values[i] = num[i] / den[i];
      profile.sigma[i] = std::sqrt(num_var[i]) / den[i];
    }
  }
  if (!profile.valid[origin_along] || !(profile.values[origin_along] > 0)) {
    throw DataContractError("degree of coherence is undefined at the origin");
  }
  const Scalar at_origin = profile.values[origin_along];
  profile.values /= at_origin;
  profile.sigma /= at_origin;
  return profile;
}

/// Folds a profile onto |Delta|, averaging the two branches where both are valid.
/// Entry k holds |Delta| = k * step. The result stops at the first gap and,
/// for photon-counted data, after the last sample whose magnitude exceeds
/// `noise_cut_sigmas` standard deviations of its noise.
template <typename Scalar>
Vector<Scalar> fold_profile(const MuProfile<Scalar>& profile, double noise_cut_sigmas = 0.0) {
  const Eigen::Index n = profile.values.size();
  std::vector<Scalar> folded;
  std::size_t significant = 0;
  bool noisy = false;
  for (Eigen::Index k = 0;; ++k) {
    const Eigen::Index lo = profile.origin - k, hi = profile.origin + k;
    const bool lo_ok = lo >= 0 && profile.valid[lo];
    const bool hi_ok = hi < n && profile.valid[hi];
    if (!lo_ok && !hi_ok) break;
    Scalar value, sigma;
    if (lo_ok && hi_ok) {
      value = (profile.values[lo] + profile.values[hi]) / Scalar(2);
      sigma = std::hypot(profile.sigma[lo], profile.sigma[hi]) / Scalar(2);
    } else {
      const Eigen::Index i = lo_ok ? lo : hi;
      value = profile.values[i];
      sigma = profile.sigma[i];
    }
    folded.push_back(value);
    noisy = noisy || sigma > 0;
    if (!(std::abs(value) <= Scalar(noise_cut_sigmas) * sigma)) significant = folded.size();
  }
  if (noisy && noise_cut_sigmas > 0) folded.resize(significant);
  return Eigen::Map<Vector<Scalar>>(folded.data(), Eigen::Index(folded.size()));
}

/// mu(x_j, x_k) = mu(|x_j - x_k|), Toeplitz and symmetric by construction.
template <typename Scalar>
Matrix<Scalar> remap_mu(const MuProfile<Scalar>& profile, const Grid1D<Scalar>& grid,
                        Extrapolation extrapolation = Extrapolation::Zero, double noise_cut_sigmas = 0.0) {
  const Vector<Scalar> folded = fold_profile(profile, noise_cut_sigmas);
  if (folded.size() == 0) throw DataContractError("degree of coherence profile is empty");
  const double step = std::abs(double(profile.delta[1] - profile.delta[0]));
  const Eigen::Index n = grid.size();

  Vector<Scalar> by_offset(n);
  for (Eigen::Index d = 0; d < n; ++d) {
    const double pos = double(d) * double(grid.dx()) / step;
    const auto v = sample_cubic(folded, pos);
    by_offset[d] = v ? *v : (extrapolation == Extrapolation::Hold ? folded[folded.size() - 1] : Scalar(0));
  }
  Matrix<Scalar> mu(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j) mu(j, k) = by_offset[std::abs(j - k)];
  return mu;
}

/// Central cut of the beam-splitter-removed frame, mapped from camera
/// coordinates rho to field coordinates rho / m and resampled onto `grid`.
template <typename Scalar>
Vector<Scalar> intensity_on_field_grid(const Frame<Scalar>& arm_demag, double m, Axis axis, const Grid1D<Scalar>& grid,
                                       PixelOrigin origin, const ReconstructionOptions& options = {}) {
  if (arm_demag.meta.bs_present) throw DataContractError("intensity needs the beam-splitter-removed frame");
  const bool along_x = axis == Axis::X;
  const Eigen::Index length = along_x ? arm_demag.width() : arm_demag.height();
  const Eigen::Index across = along_x ? arm_demag.height() : arm_demag.width();
  const double origin_along = along_x ? origin.col : origin.row;
  const auto origin_across = Eigen::Index(along_x ? origin.row : origin.col);

  auto [cut, ok] = detail::band_sum<Scalar>(length, across, origin_across, options.row_average,
                                             detail::oriented<Scalar>(arm_demag.values, axis),
                                             detail::oriented<Scalar>(arm_demag.valid, axis));
  const double pitch = arm_demag.meta.pixel_pitch;
  Vector<Scalar> intensity = Vector<Scalar>::Zero(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double pos = origin_along + m * double(grid.x(k)) / pitch;
    const auto v = sample_cubic(cut, pos);
    if (!v) continue;
    const auto nearest = Eigen::Index(std::lround(pos));
    if (ok[nearest]) intensity[k] = std::max(Scalar(0), *v);
  }
  return intensity;
}

/// W_jk = sqrt(I_j I_k) mu_jk, normalized to unit trace * dx. No PSD clipping.
template <typename Scalar>
CorrelationMatrix<Scalar> assemble_w(const Vector<Scalar>& intensity, const Matrix<Scalar>& mu, const Grid1D<Scalar>& grid) {
  detail::check_length(grid, intensity.size());
  if ((intensity.array() < 0).any()) throw std::invalid_argument("assemble_w: intensity must be non-negative");
  if (!(intensity.maxCoeff() > 0)) throw std::domain_error("assemble_w: intensity is zero everywhere");
  const Vector<Scalar> root = intensity.cwiseSqrt();
  Matrix<Scalar> w = root.asDiagonal() * mu * root.asDiagonal();
  return normalized_correlation(grid, std::move(w));
}

/// Everything recovered for one axis.
template <typename Scalar>
struct AxisReconstruction {
  Vector<Scalar> intensity;
  MuProfile<Scalar> profile;
  CorrelationMatrix<Scalar> w;
};

/// The four recorded frames of one measurement.
template <typename Scalar>
struct FrameSet {
  Frame<Scalar> pi4;
  Frame<Scalar> zero;
  Frame<Scalar> arm;
};

/// Frames -> anti-diagonal W -> mu(Delta) -> mu(x, x') -> W(x, x') for one axis.
template <typename Scalar>
AxisReconstruction<Scalar> reconstruct_axis(const FrameSet<Scalar>& frames, Axis axis, const Grid1D<Scalar>& grid,
                                            const ReconstructionOptions& options = {}) {
  const double m = frames.arm.meta.magnification;
  const PixelOrigin origin = centroid_pixel(frames.arm);
  const auto difference = extract_w_antidiagonal(frames.pi4, frames.zero);
  const auto magnified = rescale_arm(frames.arm, m, origin);
  auto profile = compute_mu_profile(difference, frames.arm, magnified, axis, origin, options);
  auto intensity = intensity_on_field_grid(frames.arm, m, axis, grid, origin, options);
  auto w = assemble_w(intensity, remap_mu(profile, grid, options.extrapolation, options.noise_cut_sigmas), grid);
  return {std::move(intensity), std::move(profile), std::move(w)};
}

}  // namespace schmidtmodes
