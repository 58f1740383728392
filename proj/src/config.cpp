#include "schmidtmodes/io/config.hpp"

#include <fstream>
#include <map>
#include <set>

namespace schmidtmodes::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::uint64_t read_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  // documents built in code hold signed integers even when non-negative
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() >= 0) return std::uint64_t(j.get<std::int64_t>());
    fail(path, "must be >= 0");
  }
  fail(path, "expected a non-negative integer");
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <typename Enum>
Enum read_enum(const json& j, const std::string& path, const std::map<std::string, Enum>& names) {
  const std::string s = read_string(j, path);
  const auto it = names.find(s);
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [name, _] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  fail(path, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

// Visits the known keys of one JSON object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  template <typename F>
  void field(const std::string& key, F&& read) {
    known_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) read(*it, path_ + "." + key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) fail(path_ + "." + item.key(), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

const std::map<std::string, SourceModel> kSourceModels{{"spdc", SourceModel::Spdc},
                                                       {"double_gaussian", SourceModel::DoubleGaussian}};
const std::map<std::string, NoiseKind> kNoiseKinds{{"none", NoiseKind::None}, {"poisson", NoiseKind::Poisson}};
const std::map<std::string, Extrapolation> kExtrapolations{{"zero", Extrapolation::Zero},
                                                           {"hold", Extrapolation::Hold}};
const std::map<std::string, ClipPolicy> kClipPolicies{{"clip", ClipPolicy::Clip}, {"fail", ClipPolicy::Fail}};

template <typename Enum>
std::string name_of(Enum value, const std::map<std::string, Enum>& names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  throw std::logic_error("unnamed enum value");
}

}  // namespace

InterferometerConfig RunConfig::interferometer_settings() const {
  InterferometerConfig cfg = interferometer;
  cfg.noise.seed = seed;
  if (matched_pitch) cfg.pixel_pitch = matched_pixel_pitch(grid.dx, cfg.magnification);
  return cfg;
}

std::pair<double, double> RunConfig::double_gaussian_widths() const {
  if (source.a_plus > 0.0) return {source.a_plus, source.a_minus};
  return gaussian_bridge_widths(spdc);
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* path) {
    if (!(v > 0.0)) fail(path, "must be > 0");
  };
  positive(spdc.lambda_pump, "$.spdc.lambda_pump");
  positive(spdc.pump_waist, "$.spdc.pump_waist");
  positive(spdc.crystal_length, "$.spdc.crystal_length");
  if (!(spdc.index_scale >= 1.0)) fail("$.spdc.index_scale", "must be >= 1");
  positive(spdc.gaussian_alpha, "$.spdc.gaussian_alpha");

  if (source.a_plus != 0.0 || source.a_minus != 0.0) {
    positive(source.a_minus, "$.source.a_minus");
    if (!(source.a_plus >= source.a_minus)) fail("$.source.a_plus", "must be >= a_minus");
  }

  if (grid.n < 2 || grid.n % 2 != 0) fail("$.grid.n", "must be even and >= 2");
  positive(grid.dx, "$.grid.dx");

  if (!(interferometer.magnification > 1.0)) fail("$.interferometer.magnification", "must be > 1");
  if (!matched_pitch) positive(interferometer.pixel_pitch, "$.interferometer.pixel_pitch");
  positive(interferometer.counts_scale, "$.interferometer.counts_scale");
  if (interferometer.pixels % 2 != 0) fail("$.interferometer.pixels", "must be even (0 selects automatic sizing)");
  if (!(interferometer.noise.read_noise_sigma >= 0.0)) fail("$.interferometer.read_noise_sigma", "must be >= 0");

  if (!(reconstruction.support_eps >= 0.0 && reconstruction.support_eps < 1.0)) {
    fail("$.reconstruction.support_eps", "must lie in [0, 1)");
  }
  if (reconstruction.row_average < 0) fail("$.reconstruction.row_average", "must be >= 0");
  if (!(reconstruction.noise_cut_sigmas >= 0.0)) fail("$.reconstruction.noise_cut_sigmas", "must be >= 0");

  if (schmidt.k_max < 1) fail("$.schmidt.k_max", "must be >= 1");
  if (schmidt.k_max > grid.n) fail("$.schmidt.k_max", "must not exceed grid.n");
  if (schmidt.top_k < 1) fail("$.schmidt.top_k", "must be >= 1");
  if (!(schmidt.max_negativity_budget >= 0.0)) fail("$.schmidt.max_negativity_budget", "must be >= 0");
  if (schmidt.modes_to_export < 0) fail("$.schmidt.modes_to_export", "must be >= 0");

  if (!(homogeneity.thresholds.max_sum_coordinate_variation >= 0.0)) {
    fail("$.homogeneity.max_sum_coordinate_variation", "must be >= 0");
  }
  if (!(homogeneity.thresholds.min_width_ratio > 0.0)) fail("$.homogeneity.min_width_ratio", "must be > 0");
  if (!(homogeneity.support_eps > 0.0 && homogeneity.support_eps < 1.0)) {
    fail("$.homogeneity.support_eps", "must lie in (0, 1)");
  }
  if (output_dir.empty()) fail("$.output_dir", "must not be empty");
}

RunConfig parse_config(const json& document) {
  RunConfig c;
  ObjectReader root(document, "$");

  root.field("spdc", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    r.field("lambda_pump", [&](const json& v, const std::string& q) { c.spdc.lambda_pump = read_number(v, q); });
    r.field("pump_waist", [&](const json& v, const std::string& q) { c.spdc.pump_waist = read_number(v, q); });
    r.field("crystal_length", [&](const json& v, const std::string& q) { c.spdc.crystal_length = read_number(v, q); });
    r.field("index_scale", [&](const json& v, const std::string& q) { c.spdc.index_scale = read_number(v, q); });
    r.field("gaussian_alpha", [&](const json& v, const std::string& q) { c.spdc.gaussian_alpha = read_number(v, q); });
    r.finish();
  });

  root.field("source", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    r.field("model", [&](const json& v, const std::string& q) { c.source.model = read_enum(v, q, kSourceModels); });
    r.field("a_plus", [&](const json& v, const std::string& q) { c.source.a_plus = read_number(v, q); });
    r.field("a_minus", [&](const json& v, const std::string& q) { c.source.a_minus = read_number(v, q); });
    r.finish();
  });

  root.field("grid", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    r.field("n", [&](const json& v, const std::string& q) { c.grid.n = Eigen::Index(read_unsigned(v, q)); });
    r.field("dx", [&](const json& v, const std::string& q) { c.grid.dx = read_number(v, q); });
    r.finish();
  });

  root.field("interferometer", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    auto& ifm = c.interferometer;
    r.field("magnification", [&](const json& v, const std::string& q) { ifm.magnification = read_number(v, q); });
    r.field("pixel_pitch", [&](const json& v, const std::string& q) {
      if (v.is_string()) {
        if (v.get<std::string>() != "matched") fail(q, "expected a number or \"matched\"");
        c.matched_pitch = true;
      } else {
        ifm.pixel_pitch = read_number(v, q);
        c.matched_pitch = false;
      }
    });
    r.field("counts_scale", [&](const json& v, const std::string& q) { ifm.counts_scale = read_number(v, q); });
    r.field("pixels", [&](const json& v, const std::string& q) { ifm.pixels = Eigen::Index(read_unsigned(v, q)); });
    r.field("noise", [&](const json& v, const std::string& q) { ifm.noise.kind = read_enum(v, q, kNoiseKinds); });
    r.field("read_noise_sigma",
            [&](const json& v, const std::string& q) { ifm.noise.read_noise_sigma = read_number(v, q); });
    r.finish();
  });

  root.field("reconstruction", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    auto& rec = c.reconstruction;
    r.field("support_eps", [&](const json& v, const std::string& q) { rec.support_eps = read_number(v, q); });
    r.field("row_average", [&](const json& v, const std::string& q) { rec.row_average = int(read_unsigned(v, q)); });
    r.field("extrapolation",
            [&](const json& v, const std::string& q) { rec.extrapolation = read_enum(v, q, kExtrapolations); });
    r.field("noise_cut_sigmas", [&](const json& v, const std::string& q) { rec.noise_cut_sigmas = read_number(v, q); });
    r.finish();
  });

  root.field("schmidt", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    auto& s = c.schmidt;
    r.field("k_max", [&](const json& v, const std::string& q) { s.k_max = Eigen::Index(read_unsigned(v, q)); });
    r.field("top_k", [&](const json& v, const std::string& q) { s.top_k = std::size_t(read_unsigned(v, q)); });
    r.field("clip_policy", [&](const json& v, const std::string& q) { s.clip_policy = read_enum(v, q, kClipPolicies); });
    r.field("max_negativity_budget",
            [&](const json& v, const std::string& q) { s.max_negativity_budget = read_number(v, q); });
    r.field("modes_to_export", [&](const json& v, const std::string& q) { s.modes_to_export = int(read_unsigned(v, q)); });
    r.finish();
  });

  root.field("homogeneity", [&](const json& j, const std::string& p) {
    ObjectReader r(j, p);
    auto& h = c.homogeneity;
    r.field("max_sum_coordinate_variation", [&](const json& v, const std::string& q) {
      h.thresholds.max_sum_coordinate_variation = read_number(v, q);
    });
    r.field("min_width_ratio",
            [&](const json& v, const std::string& q) { h.thresholds.min_width_ratio = read_number(v, q); });
    r.field("support_eps", [&](const json& v, const std::string& q) { h.support_eps = read_number(v, q); });
    r.finish();
  });

  root.field("seed", [&](const json& v, const std::string& q) { c.seed = read_unsigned(v, q); });
  root.field("output_dir", [&](const json& v, const std::string& q) { c.output_dir = read_string(v, q); });
  root.finish();

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(document);
}

json to_json(const RunConfig& c) {
  json pitch = c.matched_pitch ? json("matched") : json(c.interferometer.pixel_pitch);
  return json{
      {"spdc",
       {{"lambda_pump", c.spdc.lambda_pump},
        {"pump_waist", c.spdc.pump_waist},
        {"crystal_length", c.spdc.crystal_length},
        {"index_scale", c.spdc.index_scale},
        {"gaussian_alpha", c.spdc.gaussian_alpha}}},
      {"source",
       {{"model", name_of(c.source.model, kSourceModels)}, {"a_plus", c.source.a_plus}, {"a_minus", c.source.a_minus}}},
      {"grid", {{"n", c.grid.n}, {"dx", c.grid.dx}}},
      {"interferometer",
       {{"magnification", c.interferometer.magnification},
        {"pixel_pitch", pitch},
        {"counts_scale", c.interferometer.counts_scale},
        {"pixels", c.interferometer.pixels},
        {"noise", name_of(c.interferometer.noise.kind, kNoiseKinds)},
        {"read_noise_sigma", c.interferometer.noise.read_noise_sigma}}},
      {"reconstruction",
       {{"support_eps", c.reconstruction.support_eps},
        {"row_average", c.reconstruction.row_average},
        {"extrapolation", name_of(c.reconstruction.extrapolation, kExtrapolations)},
        {"noise_cut_sigmas", c.reconstruction.noise_cut_sigmas}}},
      {"schmidt",
       {{"k_max", c.schmidt.k_max},
        {"top_k", c.schmidt.top_k},
        {"clip_policy", name_of(c.schmidt.clip_policy, kClipPolicies)},
        {"max_negativity_budget", c.schmidt.max_negativity_budget},
        {"modes_to_export", c.schmidt.modes_to_export}}},
      {"homogeneity",
       {{"max_sum_coordinate_variation", c.homogeneity.thresholds.max_sum_coordinate_variation},
        {"min_width_ratio", c.homogeneity.thresholds.min_width_ratio},
        {"support_eps", c.homogeneity.support_eps}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
  };
}

}  // namespace schmidtmodes::io
