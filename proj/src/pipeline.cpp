#include "schmidtmodes/io/pipeline.hpp"

#include <numbers>

#include "schmidtmodes/io/artifacts.hpp"

namespace schmidtmodes::io {

using nlohmann::json;

namespace {

const char* const kFramePi4 = "frame_phi_pi4";
const char* const kFrameZero = "frame_phi_0";
const char* const kFrameArm = "frame_arm";

// Model constructors reject grids that cannot hold the source; that is a
// configuration problem, not a numerical one.
template <typename F>
auto as_config_error(const char* path, F&& build) {
  try {
    return build();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(path) + ": " + e.what());
  }
}

bool is_double_gaussian(const RunConfig& config) { return config.source.model == SourceModel::DoubleGaussian; }

GaussianKernelField<double> analytic_field(const RunConfig& config) {
  const auto [a_plus, a_minus] = config.double_gaussian_widths();
  return double_gaussian_field(a_plus, a_minus, config.field_grid());
}

Frame<double> read_required_frame(const std::filesystem::path& dir, const char* stem) {
  for (const char* ext : {".pgm", ".json"}) {
    const auto path = dir / (std::string(stem) + ext);
    if (!std::filesystem::exists(path)) throw DataContractError("missing frame file " + path.string());
  }
  return read_frame(dir, stem);
}

CorrelationMatrix<double> read_required_correlation(const std::filesystem::path& dir, const char* stem, Axis expected) {
  const auto path = dir / (std::string(stem) + ".bin");
  if (!std::filesystem::exists(path)) throw DataContractError("missing correlation matrix " + path.string());
  Axis axis = Axis::X;
  auto w = read_correlation(dir, stem, &axis);
  if (axis != expected) throw DataContractError(path.string() + " holds the wrong axis");
  return w;
}

json homogeneity_json(const HomogeneityReport& h, const HomogeneityConfig& config) {
  // Infinity has no JSON spelling; an undefined ratio is written as null.
  const json ratio = std::isfinite(h.width_ratio) ? json(h.width_ratio) : json(nullptr);
  return {{"sum_coordinate_variation", h.sum_coordinate_variation},
          {"width_ratio", ratio},
          {"intensity_half_width", h.intensity_half_width},
          {"coherence_half_width", h.coherence_half_width},
          {"max_sum_coordinate_variation", config.thresholds.max_sum_coordinate_variation},
          {"min_width_ratio", config.thresholds.min_width_ratio},
          {"quasi_homogeneous", is_quasi_homogeneous(h, config.thresholds)}};
}

void write_frames(ArtifactDir& dir, const FrameSet<double>& frames) {
  dir.write_frame(kFramePi4, frames.pi4);
  dir.write_frame(kFrameZero, frames.zero);
  dir.write_frame(kFrameArm, frames.arm);
}

void write_reconstruction(ArtifactDir& dir, const Reconstruction& rec) {
  for (const auto* axis : {&rec.x, &rec.y}) {
    const Axis a = axis == &rec.x ? Axis::X : Axis::Y;
    const std::string name = axis_name(a);
    dir.write_matrix("w_" + name, encode_correlation(axis->w, a));
    dir.write("intensity_" + name + ".csv", intensity_csv(axis->w.grid, axis->intensity));
    dir.write("mu_" + name + ".csv", mu_csv(axis->profile));
  }
  dir.write("difference.pfm", encode_pfm(rec.difference.values.cast<float>()));
  dir.write("difference_preview.pgm", encode_pgm16(preview16(rec.difference.values)));
}

// Smallest centered window holding every exported 1D mode above 1e-3 of its peak.
Eigen::Index mode_window_half(const AxisSpectrum<double>& s, Eigen::Index count) {
  const Eigen::Index n = s.grid.size();
  const Eigen::Index center = n / 2;
  Eigen::Index half = 1;
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto mode = s.modes.col(k);
    const double threshold = 1e-3 * mode.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(mode[j]) > threshold) half = std::max(half, std::abs(j - center) + 1);
  }
  return std::min(half, center);
}

json write_schmidt(ArtifactDir& dir, const SchmidtResult<double>& result, const RunConfig& config,
                   const std::vector<std::string>& warnings) {
  dir.write("spectrum.csv", spectrum_csv(result.spectrum_2d));
  const Eigen::Index count =
      std::min<Eigen::Index>(config.schmidt.modes_to_export, std::min(result.x.modes.cols(), result.y.modes.cols()));
  for (const auto* axis : {&result.x, &result.y}) {
    const std::string name = axis == &result.x ? "x" : "y";
    dir.write("spectrum_" + name + ".csv", axis_spectrum_csv(axis->lambdas));
    dir.write("modes_" + name + ".csv", modes_csv(*axis, count));
  }

  const Eigen::Index half = std::max(mode_window_half(result.x, count), mode_window_half(result.y, count));
  const Eigen::Index start = result.x.grid.size() / 2 - half;
  json images = json::array();
  const std::size_t exported = std::min(std::size_t(config.schmidt.modes_to_export), result.spectrum_2d.ranked.size());
  for (std::size_t rank = 0; rank < exported; ++rank) {
    const ModeWeight& w = result.spectrum_2d.ranked[rank];
    const Eigen::MatrixXd full = mode_2d(result.x, result.y, w.m, w.n);
    const Eigen::MatrixXd crop = full.block(start, start, 2 * half, 2 * half);
    const std::string stem = "mode_" + std::to_string(rank) + "_m" + std::to_string(w.m) + "_n" + std::to_string(w.n);
    dir.write(stem + ".pfm", encode_pfm(crop.cast<float>()));
    dir.write(stem + "_preview.pgm", encode_pgm16(preview16(crop)));
    images.push_back({{"rank", rank}, {"m", w.m}, {"n", w.n}, {"lambda", w.lambda}, {"file", stem + ".pfm"}});
  }

  return {{"schmidt_number", result.schmidt_number},
          {"schmidt_number_x", schmidt_number(result.x.lambdas)},
          {"schmidt_number_y", schmidt_number(result.y.lambdas)},
          {"negativity_budget", {{"x", result.x.negativity_budget}, {"y", result.y.negativity_budget}}},
          {"k_max", config.schmidt.k_max},
          {"spectrum_truncated", result.spectrum_2d.truncated},
          {"mode_images",
           {{"x0", result.x.grid.x(start)}, {"pixel", result.x.grid.dx()}, {"size", 2 * half}, {"modes", images}}},
          {"warnings", warnings}};
}

json write_oracle(ArtifactDir& dir, const AxisSpectrum<double>& oracle) {
  dir.write_matrix("oracle_modes", encode_matrix(oracle.modes, json{{"kind", "modes"},
                                                                    {"n", oracle.grid.size()},
                                                                    {"dx", oracle.grid.dx()},
                                                                    {"count", oracle.modes.cols()}}));
  dir.write("oracle_spectrum_x.csv", axis_spectrum_csv(oracle.lambdas));
  const double k_axis = schmidt_number(oracle.lambdas);
  json summary{{"schmidt_number_axis", k_axis}, {"schmidt_number", k_axis * k_axis}, {"lambda_sum", oracle.lambdas.sum()}};
  dir.write_json("oracle.json", summary);
  return summary;
}

AxisSpectrum<double> read_oracle(const std::filesystem::path& dir) {
  for (const char* name : {"oracle_modes.bin", "oracle_modes.json", "oracle_spectrum_x.csv"}) {
    if (!std::filesystem::exists(dir / name)) {
      throw DataContractError("oracle directory " + dir.string() + " lacks " + name + " (run the oracle command)");
    }
  }
  auto [modes, header] = read_matrix(dir, "oracle_modes");
  const Eigen::VectorXd lambdas = parse_axis_spectrum_csv(read_file(dir / "oracle_spectrum_x.csv"));
  if (lambdas.size() != modes.cols()) throw DataContractError("oracle spectrum and modes disagree in length");
  try {
    return {Grid1D<double>(header.at("n").get<Eigen::Index>(), header.at("dx").get<double>()), lambdas, modes, 0.0};
  } catch (const std::exception& e) {
    throw FormatError(std::string("oracle modes header: ") + e.what());
  }
}

json comparison_json(const OracleComparison& c) {
  return {{"mode_fidelity", {{"x", c.mode_fidelity_x}, {"y", c.mode_fidelity_y}}},
          {"spectrum_fidelity", c.spectrum_fidelity}};
}

SchmidtResult<double> analyze(const Reconstruction& rec, const RunConfig& config, std::vector<std::string>& warnings) {
  return combine(analyze_axis(rec.x.w, config, "x", &warnings), analyze_axis(rec.y.w, config, "y", &warnings),
                 config.schmidt.top_k);
}

}  // namespace

TwoPhotonAmplitude<double> source_amplitude(const RunConfig& config) {
  const Grid1D<double> grid = config.field_grid();
  if (is_double_gaussian(config)) {
    const auto [a_plus, a_minus] = config.double_gaussian_widths();
    return as_config_error("$.grid", [&] { return double_gaussian_amplitude(a_plus, a_minus, grid); });
  }
  return to_position(as_config_error("$.grid", [&] { return momentum_amplitude(config.spdc, grid); }));
}

ForwardModel forward_model_from(const TwoPhotonAmplitude<double>& psi) { return {partial_trace(psi), std::nullopt}; }

ForwardModel build_forward_model(const RunConfig& config) {
  if (is_double_gaussian(config)) {
    auto field = analytic_field(config);
    auto w = field.sampled();
    return {std::move(w), std::move(field)};
  }
  return forward_model_from(source_amplitude(config));
}

FrameSet<double> simulate_frames(const ForwardModel& model, const RunConfig& config) {
  InterferometerConfig cfg = config.interferometer_settings();
  auto run = [&](const auto& field) {
    cfg.bs_present = true;
    cfg.hwp_phi = std::numbers::pi / 4.0;
    auto pi4 = simulate_frame(field, field, cfg);
    cfg.hwp_phi = 0.0;
    auto zero = simulate_frame(field, field, cfg);
    cfg.bs_present = false;
    auto arm = simulate_arm(field, field, cfg);
    return FrameSet<double>{std::move(pi4), std::move(zero), std::move(arm)};
  };
  if (model.analytic) return run(*model.analytic);
  return run(SampledField<double>(model.w));
}

Reconstruction reconstruct_frames(const FrameSet<double>& frames, const RunConfig& config) {
  if (frames.arm.meta.bs_present) throw DataContractError("arm frame was recorded with the beam splitter in place");
  detail::require_same_geometry(frames.pi4, frames.arm, "arm frame");
  const Grid1D<double> grid = config.field_grid();
  auto x = reconstruct_axis(frames, Axis::X, grid, config.reconstruction);
  auto y = reconstruct_axis(frames, Axis::Y, grid, config.reconstruction);
  return {std::move(x), std::move(y), extract_w_antidiagonal(frames.pi4, frames.zero)};
}

AxisSpectrum<double> analyze_axis(const CorrelationMatrix<double>& w, const RunConfig& config, const std::string& label,
                                  std::vector<std::string>* warnings) {
  if (w.grid.size() < config.schmidt.k_max) {
    throw ConfigError("$.schmidt.k_max: exceeds the " + std::to_string(w.grid.size()) + "-point grid of axis " + label);
  }
  auto spectrum = diagonalize(w, config.schmidt.k_max);
  if (spectrum.negativity_budget > config.schmidt.max_negativity_budget) {
    const std::string message = "axis " + label + ": negativity budget " + std::to_string(spectrum.negativity_budget) +
                                " exceeds " + std::to_string(config.schmidt.max_negativity_budget);
    if (config.schmidt.clip_policy == ClipPolicy::Fail) throw NumericalGuardError(message);
    if (warnings) warnings->push_back(message + "; negative eigenvalues clipped");
  }
  return spectrum;
}

AxisSpectrum<double> oracle_spectrum(const TwoPhotonAmplitude<double>& psi, const RunConfig& config) {
  if (psi.grid.size() > kOracleMaxGrid) {
    throw ConfigError("$.grid.n: " + std::to_string(psi.grid.size()) + " exceeds the dense-SVD memory guard of " +
                      std::to_string(kOracleMaxGrid));
  }
  return schmidt_decompose(psi, config.schmidt.k_max);
}

OracleComparison compare_to_oracle(const SchmidtResult<double>& result, const AxisSpectrum<double>& oracle,
                                   const RunConfig& config) {
  if (oracle.grid.size() != result.x.grid.size()) throw DataContractError("oracle grid differs from the analyzed grid");
  OracleComparison out;
  const Eigen::Index count = std::min<Eigen::Index>(
      config.schmidt.modes_to_export, std::min(oracle.modes.cols(), std::min(result.x.modes.cols(), result.y.modes.cols())));
  for (Eigen::Index k = 0; k < count; ++k) {
    out.mode_fidelity_x.push_back(fidelity(result.x.modes.col(k), oracle.modes.col(k)));
    out.mode_fidelity_y.push_back(fidelity(result.y.modes.col(k), oracle.modes.col(k)));
  }
  const TensorSpectrum reference = tensor_combine(oracle, oracle, config.schmidt.top_k);
  const std::size_t length = std::min(reference.ranked.size(), result.spectrum_2d.ranked.size());
  Eigen::VectorXd got(length), want(length);
  for (std::size_t i = 0; i < length; ++i) {
    got[Eigen::Index(i)] = result.spectrum_2d.ranked[i].lambda;
    want[Eigen::Index(i)] = reference.ranked[i].lambda;
  }
  out.spectrum_fidelity = length > 1 ? fidelity(got, want) : 1.0;
  return out;
}

double difference_stripe_fraction(const DifferenceMap<double>& difference) {
  const Eigen::Index row = difference.values.rows() / 2;
  std::vector<double> cut(std::size_t(difference.values.cols()));
  for (Eigen::Index c = 0; c < difference.values.cols(); ++c) cut[std::size_t(c)] = std::abs(difference.values(row, c));
  const auto peak = std::ptrdiff_t(std::max_element(cut.begin(), cut.end()) - cut.begin());
  return 2.0 * detail::one_over_e_half_width(cut, peak, 1.0) / double(difference.values.cols());
}

void cmd_simulate(const CommandOptions& options) {
  const RunConfig& config = options.config;
  ArtifactDir dir(options.out_dir);
  write_frames(dir, simulate_frames(build_forward_model(config), config));
  dir.write_manifest("simulate", to_json(config));
}

void cmd_reconstruct(const CommandOptions& options) {
  const RunConfig& config = options.config;
  const FrameSet<double> frames{read_required_frame(options.in_dir, kFramePi4),
                                read_required_frame(options.in_dir, kFrameZero),
                                read_required_frame(options.in_dir, kFrameArm)};
  ArtifactDir dir(options.out_dir);
  write_reconstruction(dir, reconstruct_frames(frames, config));
  dir.write_manifest("reconstruct", to_json(config));
}

json cmd_schmidt(const CommandOptions& options) {
  const RunConfig& config = options.config;
  std::optional<AxisSpectrum<double>> oracle;
  if (options.oracle_dir) oracle = read_oracle(*options.oracle_dir);
  auto wx = read_required_correlation(options.in_dir, "w_x", Axis::X);
  auto wy = read_required_correlation(options.in_dir, "w_y", Axis::Y);

  std::vector<std::string> warnings;
  const auto result = combine(analyze_axis(wx, config, "x", &warnings), analyze_axis(wy, config, "y", &warnings),
                              config.schmidt.top_k);
  ArtifactDir dir(options.out_dir);
  json summary = write_schmidt(dir, result, config, warnings);
  if (oracle) summary["oracle"] = comparison_json(compare_to_oracle(result, *oracle, config));
  dir.write_json("schmidt.json", summary);
  dir.write_manifest("schmidt", to_json(config));
  return summary;
}

json cmd_oracle(const CommandOptions& options) {
  const RunConfig& config = options.config;
  if (config.grid.n > kOracleMaxGrid) {
    throw ConfigError("$.grid.n: " + std::to_string(config.grid.n) + " exceeds the dense-SVD memory guard of " +
                      std::to_string(kOracleMaxGrid));
  }
  const auto oracle = oracle_spectrum(source_amplitude(config), config);
  ArtifactDir dir(options.out_dir);
  json summary = write_oracle(dir, oracle);
  dir.write_manifest("oracle", to_json(config));
  return summary;
}

json cmd_report(const CommandOptions& options) {
  const RunConfig& config = options.config;
  if (config.grid.n > kOracleMaxGrid) {
    throw ConfigError("$.grid.n: " + std::to_string(config.grid.n) + " exceeds the dense-SVD memory guard of " +
                      std::to_string(kOracleMaxGrid));
  }
  ArtifactDir dir(options.out_dir);

  // psi is the largest object of the run; drop it once both consumers have it.
  auto [oracle, model] = [&] {
    const auto psi = source_amplitude(config);
    auto spectrum = oracle_spectrum(psi, config);
    return std::pair{std::move(spectrum), is_double_gaussian(config) ? build_forward_model(config) : forward_model_from(psi)};
  }();
  const json oracle_summary = write_oracle(dir, oracle);

  const auto factorization = factorize(model.w, config.homogeneity.support_eps);
  const FrameSet<double> frames = simulate_frames(model, config);
  write_frames(dir, frames);
  const Reconstruction rec = reconstruct_frames(frames, config);
  write_reconstruction(dir, rec);

  std::vector<std::string> warnings;
  const auto result = analyze(rec, config, warnings);
  json schmidt_summary = write_schmidt(dir, result, config, warnings);
  const OracleComparison comparison = compare_to_oracle(result, oracle, config);
  schmidt_summary["oracle"] = comparison_json(comparison);
  dir.write_json("schmidt.json", schmidt_summary);

  const double k_oracle = oracle_summary["schmidt_number"].get<double>();
  json report{{"source", is_double_gaussian(config) ? "double_gaussian" : "spdc"},
              {"schmidt_number", result.schmidt_number},
              {"oracle_schmidt_number", k_oracle},
              {"relative_deviation_from_oracle", std::abs(result.schmidt_number - k_oracle) / k_oracle},
              {"published_schmidt_number", kPublishedSchmidtNumber},
              {"negativity_budget", {{"x", result.x.negativity_budget}, {"y", result.y.negativity_budget}}},
              {"homogeneity", homogeneity_json(factorization.homogeneity, config.homogeneity)},
              {"difference_stripe_fraction", difference_stripe_fraction(rec.difference)},
              {"oracle", comparison_json(comparison)},
              {"warnings", warnings}};
  dir.write_json("report.json", report);
  dir.write_manifest("report", to_json(config));
  return report;
}

}  // namespace schmidtmodes::io
