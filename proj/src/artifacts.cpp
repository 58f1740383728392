#include "schmidtmodes/io/artifacts.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace schmidtmodes::io {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string(what) + ": missing '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(what) + ": bad '" + key + "'");
  }
}

std::string noise_name(NoiseKind k) { return k == NoiseKind::Poisson ? "poisson" : "none"; }

NoiseKind noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::None;
  if (s == "poisson") return NoiseKind::Poisson;
  throw FormatError("frame sidecar: unknown noise '" + s + "'");
}

struct Box {
  Eigen::Index row = 0, col = 0, rows = 0, cols = 0;
};

Box valid_box(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& valid) {
  Eigen::Index r0 = valid.rows(), r1 = -1, c0 = valid.cols(), c1 = -1;
  for (Eigen::Index r = 0; r < valid.rows(); ++r)
    for (Eigen::Index c = 0; c < valid.cols(); ++c)
      if (valid(r, c)) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  if (r1 < 0) return {};
  const Box box{r0, c0, r1 - r0 + 1, c1 - c0 + 1};
  if (Eigen::Index(valid.count()) != box.rows * box.cols) {
    throw std::invalid_argument("frame valid mask is not a rectangle and cannot be stored as a box");
  }
  return box;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

EncodedFrame encode_frame(const Frame<double>& frame) {
  const double peak = frame.values.size() ? frame.values.maxCoeff() : 0.0;
  const double per_level = std::max(1.0, peak / 65535.0);
  Gray16 levels(frame.height(), frame.width());
  for (Eigen::Index r = 0; r < frame.height(); ++r)
    for (Eigen::Index c = 0; c < frame.width(); ++c)
      levels(r, c) = std::uint16_t(std::clamp(std::lround(frame.values(r, c) / per_level), 0L, 65535L));

  const Box box = valid_box(frame.valid);
  const FrameMeta& m = frame.meta;
  const json sidecar{{"phi", m.phi},
                     {"magnification", m.magnification},
                     {"bs_present", m.bs_present},
                     {"exposure", m.exposure},
                     {"seed", m.seed},
                     {"counts_scale", m.counts_scale},
                     {"pixel_pitch", m.pixel_pitch},
                     {"noise", noise_name(m.noise)},
                     {"read_noise_sigma", m.read_noise_sigma},
                     {"counts_per_level", per_level},
                     {"width", frame.width()},
                     {"height", frame.height()},
                     {"valid_region", {{"row", box.row}, {"col", box.col}, {"rows", box.rows}, {"cols", box.cols}}}};
  return {encode_pgm16(levels), sidecar.dump(2) + "\n"};
}

Frame<double> decode_frame(const std::string& pgm, const std::string& sidecar_text) {
  constexpr const char* what = "frame sidecar";
  const json s = parse_json(sidecar_text, what);
  const Gray16 levels = decode_pgm16(pgm);
  if (field<Eigen::Index>(s, "width", what) != levels.cols() || field<Eigen::Index>(s, "height", what) != levels.rows()) {
    throw FormatError("frame sidecar size does not match the image");
  }
  const double per_level = field<double>(s, "counts_per_level", what);
  if (!(per_level > 0.0)) throw FormatError("frame sidecar: counts_per_level must be > 0");

  Frame<double> frame;
  frame.values = levels.cast<double>() * per_level;
  FrameMeta& m = frame.meta;
  m.phi = field<double>(s, "phi", what);
  m.magnification = field<double>(s, "magnification", what);
  m.bs_present = field<bool>(s, "bs_present", what);
  m.exposure = field<std::string>(s, "exposure", what);
  m.seed = field<std::uint64_t>(s, "seed", what);
  m.counts_scale = field<double>(s, "counts_scale", what);
  m.pixel_pitch = field<double>(s, "pixel_pitch", what);
  m.noise = noise_kind(field<std::string>(s, "noise", what));
  m.read_noise_sigma = field<double>(s, "read_noise_sigma", what);

  const json region = field<json>(s, "valid_region", what);
  const Box box{field<Eigen::Index>(region, "row", what), field<Eigen::Index>(region, "col", what),
                field<Eigen::Index>(region, "rows", what), field<Eigen::Index>(region, "cols", what)};
  if (box.row < 0 || box.col < 0 || box.rows < 0 || box.cols < 0 || box.row + box.rows > levels.rows() ||
      box.col + box.cols > levels.cols()) {
    throw FormatError("frame sidecar: valid_region exceeds the image");
  }
  frame.valid.setConstant(levels.rows(), levels.cols(), false);
  frame.valid.block(box.row, box.col, box.rows, box.cols).setConstant(true);
  return frame;
}

EncodedMatrix encode_matrix(const Eigen::MatrixXd& m, json header) {
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  header["dtype"] = "float64";
  header["order"] = "row-major";
  header["endian"] = "little";
  std::string bin(std::size_t(m.size()) * 8, '\0');
  char* p = bin.data();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, p += 8) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(m(r, c));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::memcpy(p, &bits, 8);
    }
  }
  return {std::move(bin), header.dump(2) + "\n"};
}

std::pair<Eigen::MatrixXd, json> decode_matrix(const std::string& bin, const std::string& header_text) {
  constexpr const char* what = "matrix header";
  json header = parse_json(header_text, what);
  if (field<std::string>(header, "dtype", what) != "float64" || field<std::string>(header, "order", what) != "row-major" ||
      field<std::string>(header, "endian", what) != "little") {
    throw FormatError("matrix header: only little-endian row-major float64 is supported");
  }
  const auto rows = field<Eigen::Index>(header, "rows", what);
  const auto cols = field<Eigen::Index>(header, "cols", what);
  if (rows < 0 || cols < 0 || bin.size() != std::size_t(rows * cols) * 8) {
    throw FormatError("matrix payload size does not match its header");
  }
  Eigen::MatrixXd m(rows, cols);
  const char* p = bin.data();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c, p += 8) {
      std::uint64_t bits;
      std::memcpy(&bits, p, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      m(r, c) = std::bit_cast<double>(bits);
    }
  }
  return {std::move(m), std::move(header)};
}

std::string axis_name(Axis axis) { return axis == Axis::X ? "x" : "y"; }

EncodedMatrix encode_correlation(const CorrelationMatrix<double>& w, Axis axis) {
  return encode_matrix(w.values, json{{"kind", "correlation"},
                                      {"axis", axis_name(axis)},
                                      {"n", w.grid.size()},
                                      {"dx", w.grid.dx()},
                                      {"trace_norm", w.trace_norm}});
}

CorrelationMatrix<double> decode_correlation(const std::string& bin, const std::string& header_text, Axis* axis) {
  constexpr const char* what = "correlation header";
  auto [values, header] = decode_matrix(bin, header_text);
  if (field<std::string>(header, "kind", what) != "correlation") throw FormatError("not a correlation matrix");
  const auto n = field<Eigen::Index>(header, "n", what);
  if (values.rows() != n || values.cols() != n) throw FormatError("correlation matrix is not n x n");
  const std::string name = field<std::string>(header, "axis", what);
  if (name != "x" && name != "y") throw FormatError("correlation header: axis must be x or y");
  if (axis) *axis = name == "x" ? Axis::X : Axis::Y;
  try {
    return {Grid1D<double>(n, field<double>(header, "dx", what)), std::move(values),
            field<double>(header, "trace_norm", what)};
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("correlation header: ") + e.what());
  }
}

std::string intensity_csv(const Grid1D<double>& grid, const Eigen::VectorXd& intensity) {
  detail::check_length(grid, intensity.size());
  std::string out = "x,intensity\n";
  for (Eigen::Index k = 0; k < grid.size(); ++k) out += fmt(grid.x(k)) + "," + fmt(intensity[k]) + "\n";
  return out;
}

std::string mu_csv(const MuProfile<double>& profile) {
  std::string out = "delta,mu,sigma,valid\n";
  for (Eigen::Index i = 0; i < profile.values.size(); ++i) {
    out += fmt(profile.delta[i]) + "," + fmt(profile.values[i]) + "," + fmt(profile.sigma[i]) + "," +
           (profile.valid[std::size_t(i)] ? "1" : "0") + "\n";
  }
  return out;
}

std::string spectrum_csv(const TensorSpectrum& spectrum) {
  std::string out = "rank,m,n,lambda\n";
  for (std::size_t i = 0; i < spectrum.ranked.size(); ++i) {
    const auto& w = spectrum.ranked[i];
    out += std::to_string(i) + "," + std::to_string(w.m) + "," + std::to_string(w.n) + "," + fmt(w.lambda) + "\n";
  }
  return out;
}

std::string axis_spectrum_csv(const Eigen::VectorXd& lambdas) {
  std::string out = "k,lambda\n";
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) out += std::to_string(k) + "," + fmt(lambdas[k]) + "\n";
  return out;
}

Eigen::VectorXd parse_axis_spectrum_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "k,lambda") throw FormatError("spectrum CSV: expected header 'k,lambda'");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("spectrum CSV: malformed row '" + line + "'");
    try {
      if (std::stoul(line.substr(0, comma)) != values.size()) throw FormatError("");
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw FormatError("spectrum CSV: malformed row '" + line + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
}

std::string modes_csv(const AxisSpectrum<double>& spectrum, Eigen::Index count) {
  count = std::min(count, spectrum.modes.cols());
  std::string out = "x";
  for (Eigen::Index k = 0; k < count; ++k) out += ",phi_" + std::to_string(k);
  out += "\n";
  for (Eigen::Index j = 0; j < spectrum.grid.size(); ++j) {
    out += fmt(spectrum.grid.x(j));
    for (Eigen::Index k = 0; k < count; ++k) out += "," + fmt(spectrum.modes(j, k));
    out += "\n";
  }
  return out;
}

ArtifactDir::ArtifactDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
}

void ArtifactDir::write(const std::string& name, const std::string& bytes) {
  write_file_atomic(dir_ / name, bytes);
  hashes_[name] = sha256_hex(bytes);
}

void ArtifactDir::write_json(const std::string& name, const json& value) { write(name, value.dump(2) + "\n"); }

void ArtifactDir::write_frame(const std::string& stem, const Frame<double>& frame) {
  const EncodedFrame encoded = encode_frame(frame);
  write(stem + ".pgm", encoded.pgm);
  write(stem + ".json", encoded.sidecar);
}

void ArtifactDir::write_matrix(const std::string& stem, const EncodedMatrix& m) {
  write(stem + ".bin", m.bin);
  write(stem + ".json", m.header);
}

void ArtifactDir::write_manifest(const std::string& command, const json& config) {
  const auto path = dir_ / "manifest.json";
  json manifest = json::object();
  if (std::filesystem::exists(path)) manifest = parse_json(read_file(path), "manifest.json");
  const std::string config_text = config.dump();
  manifest["commands"][command] = {{"config_sha256", sha256_hex(config_text)}, {"config", config}};
  for (const auto& [name, hash] : hashes_) manifest["artifacts"][name] = hash;
  write_file_atomic(path, manifest.dump(2) + "\n");
}

Frame<double> read_frame(const std::filesystem::path& dir, const std::string& stem) {
  return decode_frame(read_file(dir / (stem + ".pgm")), read_file(dir / (stem + ".json")));
}

CorrelationMatrix<double> read_correlation(const std::filesystem::path& dir, const std::string& stem, Axis* axis) {
  return decode_correlation(read_file(dir / (stem + ".bin")), read_file(dir / (stem + ".json")), axis);
}

std::pair<Eigen::MatrixXd, json> read_matrix(const std::filesystem::path& dir, const std::string& stem) {
  return decode_matrix(read_file(dir / (stem + ".bin")), read_file(dir / (stem + ".json")));
}

}  // namespace schmidtmodes::io
