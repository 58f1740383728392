#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "schmidtmodes/field.hpp"
#include "schmidtmodes/io/config.hpp"
#include "schmidtmodes/reconstruct.hpp"
#include "schmidtmodes/schmidt.hpp"

namespace schmidtmodes::io {

/// The reduced state of one transverse axis. Both axes are identical and
/// separable, so a single model drives x and y.
struct ForwardModel {
  CorrelationMatrix<double> w;
  // Closed form, present for double-Gaussian sources; frames are then
  // synthesized without interpolating the tabulated w.
  std::optional<GaussianKernelField<double>> analytic;
};

/// psi(x_s, x_i) of the configured source in position representation.
TwoPhotonAmplitude<double> source_amplitude(const RunConfig& config);
ForwardModel build_forward_model(const RunConfig& config);
ForwardModel forward_model_from(const TwoPhotonAmplitude<double>& psi);

FrameSet<double> simulate_frames(const ForwardModel& model, const RunConfig& config);

struct Reconstruction {
  AxisReconstruction<double> x;
  AxisReconstruction<double> y;
  DifferenceMap<double> difference;
};

Reconstruction reconstruct_frames(const FrameSet<double>& frames, const RunConfig& config);

/// diagonalize() plus the configured negativity policy. A budget above the
/// limit throws NumericalGuardError under ClipPolicy::Fail and appends to
/// `warnings` under ClipPolicy::Clip.
AxisSpectrum<double> analyze_axis(const CorrelationMatrix<double>& w, const RunConfig& config, const std::string& label,
                                  std::vector<std::string>* warnings = nullptr);

inline constexpr Eigen::Index kOracleMaxGrid = 2048;

/// Direct SVD of psi. Grids above kOracleMaxGrid are refused (ConfigError).
AxisSpectrum<double> oracle_spectrum(const TwoPhotonAmplitude<double>& psi, const RunConfig& config);

struct OracleComparison {
  std::vector<double> mode_fidelity_x;
  std::vector<double> mode_fidelity_y;
  // R^2 of the leading top_k two-dimensional weights against the oracle's
  double spectrum_fidelity = 0.0;
};

OracleComparison compare_to_oracle(const SchmidtResult<double>& result, const AxisSpectrum<double>& oracle,
                                   const RunConfig& config);

/// Full width at 1/e of |D| along the central row of the difference image,
/// as a fraction of the frame width.
double difference_stripe_fraction(const DifferenceMap<double>& difference);

// Schmidt number published for the laboratory source the defaults describe; reported for context.
inline constexpr double kPublishedSchmidtNumber = 3413.0;

struct CommandOptions {
  RunConfig config;
  std::filesystem::path out_dir;
  // Where earlier stages left their artifacts; defaults to out_dir.
  std::filesystem::path in_dir;
  std::optional<std::filesystem::path> oracle_dir;
};

void cmd_simulate(const CommandOptions& options);
void cmd_reconstruct(const CommandOptions& options);
nlohmann::json cmd_schmidt(const CommandOptions& options);
nlohmann::json cmd_oracle(const CommandOptions& options);
nlohmann::json cmd_report(const CommandOptions& options);

}  // namespace schmidtmodes::io
