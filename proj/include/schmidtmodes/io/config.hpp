#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/interferometer.hpp"
#include "schmidtmodes/reconstruct.hpp"
#include "schmidtmodes/spdc_model.hpp"

namespace schmidtmodes::io {

/// Invalid or unparseable run configuration. The message starts with the
/// offending field path, e.g. "$.interferometer.magnification: must be > 1".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourceModel { Spdc, DoubleGaussian };
enum class ClipPolicy { Clip, Fail };

struct SourceConfig {
  SourceModel model = SourceModel::Spdc;
  // Double-Gaussian widths in meters; zero means "derive from spdc".
  double a_plus = 0.0;
  double a_minus = 0.0;
};

struct GridConfig {
  Eigen::Index n = 2048;
  double dx = 2.3e-6;
};

struct SchmidtConfig {
  Eigen::Index k_max = 100;
  std::size_t top_k = 100;
  // Clip: negative eigenvalues are dropped and only reported.
  // Fail: a negativity budget above max_negativity_budget is an error.
  ClipPolicy clip_policy = ClipPolicy::Fail;
  double max_negativity_budget = 0.01;
  int modes_to_export = 10;
};

struct HomogeneityConfig {
  HomogeneityThresholds thresholds;
  double support_eps = 1e-3;
};

struct RunConfig {
  SpdcParams<double> spdc;
  SourceConfig source;
  GridConfig grid;
  // hwp_phi and bs_present are set per frame by the pipeline; noise.seed comes from `seed`.
  InterferometerConfig interferometer;
  bool matched_pitch = false;
  ReconstructionOptions reconstruction;
  SchmidtConfig schmidt;
  HomogeneityConfig homogeneity;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "schmidtmodes_out";

  Grid1D<double> field_grid() const { return Grid1D<double>(grid.n, grid.dx); }
  /// Interferometer settings with the seed applied and the pitch resolved.
  InterferometerConfig interferometer_settings() const;
  std::pair<double, double> double_gaussian_widths() const;
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace schmidtmodes::io
