#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/field.hpp"
#include "schmidtmodes/interpolation.hpp"

namespace schmidtmodes {

enum class NoiseKind { None, Poisson };

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  std::uint64_t seed = 0;
  // Additive Gaussian read noise in counts, applied after Poisson sampling.
  double read_noise_sigma = 0.0;
};

/// Magnifying/demagnifying common-path interferometer with a 50:50 splitter
/// and a camera of square pixels.
struct InterferometerConfig {
  double magnification = 2.0;
  double hwp_phi = 0.0;  // radians
  bool bs_present = true;
  double pixel_pitch = 4.6e-6;  // m
  double counts_scale = 6.0e4;  // expected counts at the brightest pixel
  NoiseModel noise;
  // Square detector side in pixels; 0 selects the field grid size.
  Eigen::Index pixels = 0;

  void validate() const {
    if (!(magnification > 1.0)) throw std::invalid_argument("interferometer: magnification must be > 1");
    if (!(pixel_pitch > 0.0)) throw std::invalid_argument("interferometer: pixel_pitch must be > 0");
    if (!(counts_scale > 0.0)) throw std::invalid_argument("interferometer: counts_scale must be > 0");
    if (pixels < 0 || pixels % 2 != 0) throw std::invalid_argument("interferometer: pixels must be even");
    if (noise.read_noise_sigma < 0.0) throw std::invalid_argument("interferometer: read_noise_sigma must be >= 0");
  }
};

struct FrameMeta {
  double phi = 0.0;
  double magnification = 2.0;
  bool bs_present = true;
  std::string exposure = "simulated";
  std::uint64_t seed = 0;
  double counts_scale = 1.0;
  double pixel_pitch = 1.0;
  NoiseKind noise = NoiseKind::None;
  double read_noise_sigma = 0.0;
};

/// Detector image, values(row, col) with row the y axis. Pixel (r, c) sits at
/// camera coordinates ((c - width/2) p, (r - height/2) p).
template <typename Scalar>
struct Frame {
  Matrix<Scalar> values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
  FrameMeta meta;

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
  double x(Eigen::Index col) const { return double(col - width() / 2) * meta.pixel_pitch; }
  double y(Eigen::Index row) const { return double(row - height() / 2) * meta.pixel_pitch; }
};

namespace detail {

// splitmix64: counter-based so every pixel owns an independent stream.
struct SplitMix64 {
  using result_type = std::uint64_t;
  std::uint64_t state;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  SplitMix64 g{a ^ (b * 0xd6e8feb86659fd93ULL)};
  g();
  return g();
}

// One stream per (seed, frame kind, pixel): frames taken at different phi do
// not share noise.
inline std::uint64_t pixel_stream(std::uint64_t seed, const FrameMeta& meta, std::uint64_t pixel) {
  const std::uint64_t kind = mix(std::bit_cast<std::uint64_t>(meta.phi), meta.bs_present ? 1 : 2);
  return mix(mix(seed, kind), pixel);
}

template <typename Scalar>
void apply_noise(Frame<Scalar>& frame, const NoiseModel& noise) {
  if (noise.kind == NoiseKind::None && noise.read_noise_sigma == 0.0) return;
  const Eigen::Index w = frame.width();
  for (Eigen::Index r = 0; r < frame.height(); ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      SplitMix64 engine{pixel_stream(noise.seed, frame.meta, std::uint64_t(r * w + c))};
      double v = double(frame.values(r, c));
      if (noise.kind == NoiseKind::Poisson && v > 0.0) {
        std::poisson_distribution<std::int64_t> poisson(v);
        v = double(poisson(engine));
      }
      if (noise.read_noise_sigma > 0.0) {
        std::normal_distribution<double> read(0.0, noise.read_noise_sigma);
        v = std::max(0.0, v + read(engine));
      }
      frame.values(r, c) = Scalar(v);
    }
  }
}

// Per-axis samples of the three terms of the detection probability along one
// camera axis: I(m x), I(x / m), W(m x, x / m).
template <typename Scalar>
struct AxisTerms {
  Vector<Scalar> magnified, demagnified, cross;
  std::vector<bool> magnified_valid, demagnified_valid;
};

template <typename Field>
auto axis_terms(const Field& field, Eigen::Index pixels, double pitch, double m) {
  using Scalar = typename Field::Scalar;
  AxisTerms<Scalar> t{Vector<Scalar>::Zero(pixels), Vector<Scalar>::Zero(pixels), Vector<Scalar>::Zero(pixels),
                      std::vector<bool>(pixels), std::vector<bool>(pixels)};
  for (Eigen::Index c = 0; c < pixels; ++c) {
    const Scalar x = Scalar(double(c - pixels / 2) * pitch);
    const Scalar big = Scalar(m) * x;
    const Scalar small = x / Scalar(m);
    const auto i_big = field.intensity(big);
    const auto i_small = field.intensity(small);
    const auto cross = field.cross(big, small);
    t.magnified_valid[c] = i_big.has_value();
    t.demagnified_valid[c] = i_small.has_value();
    t.magnified[c] = i_big.value_or(Scalar(0));
    t.demagnified[c] = i_small.value_or(Scalar(0));
    t.cross[c] = cross.value_or(Scalar(0));
  }
  return t;
}

inline FrameMeta meta_from(const InterferometerConfig& cfg) {
  FrameMeta meta;
  meta.phi = cfg.hwp_phi;
  meta.magnification = cfg.magnification;
  meta.bs_present = cfg.bs_present;
  meta.seed = cfg.noise.seed;
  meta.counts_scale = cfg.counts_scale;
  meta.pixel_pitch = cfg.pixel_pitch;
  meta.noise = cfg.noise.kind;
  meta.read_noise_sigma = cfg.noise.read_noise_sigma;
  return meta;
}

// Smallest even detector that images the whole field grid through the
// demagnifying arm.
template <typename Scalar>
Eigen::Index detector_pixels(const Grid1D<Scalar>& grid, const InterferometerConfig& cfg) {
  if (cfg.pixels > 0) return cfg.pixels;
  const double needed = cfg.magnification * double(grid.size()) * double(grid.dx()) / cfg.pixel_pitch;
  const double nearest = std::round(needed);
  auto pixels = Eigen::Index(std::abs(needed - nearest) < 1e-9 * needed ? nearest : std::ceil(needed));
  return pixels + pixels % 2;
}

// Bright-fringe maximum that maps to counts_scale; shared by every frame of a set.
template <typename Scalar>
Scalar bright_fringe_peak(const AxisTerms<Scalar>& tx, const AxisTerms<Scalar>& ty) {
  Scalar peak(0);
  for (Eigen::Index r = 0; r < ty.magnified.size(); ++r)
    for (Eigen::Index c = 0; c < tx.magnified.size(); ++c)
      peak = std::max(peak, tx.magnified[c] * ty.magnified[r] + tx.demagnified[c] * ty.demagnified[r] +
                                Scalar(2) * std::abs(tx.cross[c] * ty.cross[r]));
  if (!(peak > 0)) throw std::domain_error("field is zero over the whole detector");
  return peak;
}

}  // namespace detail

/// Expected (or Poisson-sampled) counts
///   s [I(m x) I(m y) + I(x/m) I(y/m) - 2 W_x(m x, x/m) W_y(m y, y/m) cos 4 phi] / peak.
/// Pixels whose magnified coordinate leaves the field window see a zero field
/// and are marked invalid.
template <typename FieldX, typename FieldY>
Frame<typename FieldX::Scalar> simulate_frame(const FieldX& fx, const FieldY& fy, const InterferometerConfig& cfg) {
  using Scalar = typename FieldX::Scalar;
  cfg.validate();
  if (!cfg.bs_present) throw std::invalid_argument("simulate_frame needs the beam splitter in place");
  const Eigen::Index pixels = detail::detector_pixels(fx.grid(), cfg);
  const auto tx = detail::axis_terms(fx, pixels, cfg.pixel_pitch, cfg.magnification);
  const auto ty = detail::axis_terms(fy, pixels, cfg.pixel_pitch, cfg.magnification);
  const Scalar scale = Scalar(cfg.counts_scale) / detail::bright_fringe_peak(tx, ty);
  const Scalar fringe = Scalar(2) * Scalar(std::cos(4.0 * cfg.hwp_phi));

  Frame<Scalar> frame{Matrix<Scalar>(pixels, pixels), {}, detail::meta_from(cfg)};
  frame.valid.resize(pixels, pixels);
  for (Eigen::Index r = 0; r < pixels; ++r) {
    for (Eigen::Index c = 0; c < pixels; ++c) {
      const Scalar e = tx.magnified[c] * ty.magnified[r] + tx.demagnified[c] * ty.demagnified[r] -
                       fringe * tx.cross[c] * ty.cross[r];
      frame.values(r, c) = std::max(Scalar(0), scale * e);
      frame.valid(r, c) = tx.magnified_valid[c] && ty.magnified_valid[r];
    }
  }
  detail::apply_noise(frame, cfg.noise);
  return frame;
}

template <typename Scalar>
Frame<Scalar> simulate_frame(const CorrelationMatrix<Scalar>& wx, const CorrelationMatrix<Scalar>& wy,
                             const InterferometerConfig& cfg) {
  return simulate_frame(SampledField<Scalar>(wx), SampledField<Scalar>(wy), cfg);
}

template <typename Scalar>
Frame<Scalar> simulate_frame(const CoherenceFactorization<Scalar>& fx, const CoherenceFactorization<Scalar>& fy,
                             const InterferometerConfig& cfg) {
  return simulate_frame(CorrelationMatrix<Scalar>{fx.grid, reassemble(fx), Scalar(1)},
                        CorrelationMatrix<Scalar>{fy.grid, reassemble(fy), Scalar(1)}, cfg);
}

/// Beam splitter removed: only the demagnified alternative I(x/m) I(y/m)
/// reaches the camera. Uses the same count scale as simulate_frame.
template <typename FieldX, typename FieldY>
Frame<typename FieldX::Scalar> simulate_arm(const FieldX& fx, const FieldY& fy, const InterferometerConfig& cfg) {
  using Scalar = typename FieldX::Scalar;
  cfg.validate();
  if (cfg.bs_present) throw std::invalid_argument("simulate_arm needs bs_present = false");
  const Eigen::Index pixels = detail::detector_pixels(fx.grid(), cfg);
  const auto tx = detail::axis_terms(fx, pixels, cfg.pixel_pitch, cfg.magnification);
  const auto ty = detail::axis_terms(fy, pixels, cfg.pixel_pitch, cfg.magnification);
  const Scalar scale = Scalar(cfg.counts_scale) / detail::bright_fringe_peak(tx, ty);

  Frame<Scalar> frame{Matrix<Scalar>(pixels, pixels), {}, detail::meta_from(cfg)};
  frame.meta.phi = 0.0;
  frame.valid.resize(pixels, pixels);
  for (Eigen::Index r = 0; r < pixels; ++r) {
    for (Eigen::Index c = 0; c < pixels; ++c) {
      frame.values(r, c) = std::max(Scalar(0), scale * tx.demagnified[c] * ty.demagnified[r]);
      frame.valid(r, c) = tx.demagnified_valid[c] && ty.demagnified_valid[r];
    }
  }
  detail::apply_noise(frame, cfg.noise);
  return frame;
}

template <typename Scalar>
Frame<Scalar> simulate_arm(const CorrelationMatrix<Scalar>& wx, const CorrelationMatrix<Scalar>& wy,
                           const InterferometerConfig& cfg) {
  return simulate_arm(SampledField<Scalar>(wx), SampledField<Scalar>(wy), cfg);
}

template <typename Scalar>
Frame<Scalar> simulate_arm(const CoherenceFactorization<Scalar>& fx, const CoherenceFactorization<Scalar>& fy,
                           const InterferometerConfig& cfg) {
  return simulate_arm(CorrelationMatrix<Scalar>{fx.grid, reassemble(fx), Scalar(1)},
                      CorrelationMatrix<Scalar>{fy.grid, reassemble(fy), Scalar(1)}, cfg);
}

/// Pixel pitch for which every reconstruction sample lands on a node of
/// `grid`: the difference coordinate advances by exactly dx per pixel.
inline double matched_pixel_pitch(double dx, double m) { return dx * m / (m * m - 1.0); }

struct PixelOrigin {
  double row = 0.0;
  double col = 0.0;
};

template <typename Scalar>
PixelOrigin frame_center(const Frame<Scalar>& frame) {
  return {double(frame.height() / 2), double(frame.width() / 2)};
}

/// Estimates I(m rho) from the arm frame I(rho / m) by resampling it at m^2 rho
/// about `origin`. Amplitude is left as measured.
template <typename Scalar>
Frame<Scalar> rescale_arm(const Frame<Scalar>& arm, double m, std::optional<PixelOrigin> origin = std::nullopt) {
  if (arm.meta.bs_present) throw std::invalid_argument("rescale_arm expects a beam-splitter-removed frame");
  if (!(m > 0.0)) throw std::invalid_argument("rescale_arm: magnification must be > 0");
  const PixelOrigin o = origin.value_or(frame_center(arm));
  const double factor = m * m;
  Frame<Scalar> out{Matrix<Scalar>::Zero(arm.height(), arm.width()), {}, arm.meta};
  out.meta.exposure = "rescaled";
  out.valid.setConstant(arm.height(), arm.width(), false);
  for (Eigen::Index r = 0; r < arm.height(); ++r) {
    const double src_r = o.row + factor * (double(r) - o.row);
    for (Eigen::Index c = 0; c < arm.width(); ++c) {
      const double src_c = o.col + factor * (double(c) - o.col);
      const auto v = sample_cubic(arm.values, src_r, src_c);
      if (!v) continue;
      out.values(r, c) = *v;
      out.valid(r, c) = arm.valid(Eigen::Index(std::lround(src_r)), Eigen::Index(std::lround(src_c)));
    }
  }
  return out;
}

}  // namespace schmidtmodes
