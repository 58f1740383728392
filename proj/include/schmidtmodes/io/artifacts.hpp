#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "schmidtmodes/coherence.hpp"
#include "schmidtmodes/interferometer.hpp"
#include "schmidtmodes/io/image_io.hpp"
#include "schmidtmodes/reconstruct.hpp"
#include "schmidtmodes/schmidt.hpp"

namespace schmidtmodes::io {

std::string sha256_hex(const std::string& bytes);

// A frame on disk is <stem>.pgm (16-bit counts / counts_per_level) plus
// <stem>.json carrying FrameMeta, counts_per_level and the valid-pixel box.
struct EncodedFrame {
  std::string pgm;
  std::string sidecar;
};

EncodedFrame encode_frame(const Frame<double>& frame);
Frame<double> decode_frame(const std::string& pgm, const std::string& sidecar);

// Dense float64 matrix as <stem>.bin (row-major, little-endian) plus a JSON
// header <stem>.json with rows, cols and caller-supplied fields.
struct EncodedMatrix {
  std::string bin;
  std::string header;
};

EncodedMatrix encode_matrix(const Eigen::MatrixXd& m, nlohmann::json header = nlohmann::json::object());
std::pair<Eigen::MatrixXd, nlohmann::json> decode_matrix(const std::string& bin, const std::string& header);

EncodedMatrix encode_correlation(const CorrelationMatrix<double>& w, Axis axis);
CorrelationMatrix<double> decode_correlation(const std::string& bin, const std::string& header, Axis* axis = nullptr);

std::string axis_name(Axis axis);

std::string intensity_csv(const Grid1D<double>& grid, const Eigen::VectorXd& intensity);
std::string mu_csv(const MuProfile<double>& profile);
std::string spectrum_csv(const TensorSpectrum& spectrum);
std::string axis_spectrum_csv(const Eigen::VectorXd& lambdas);
Eigen::VectorXd parse_axis_spectrum_csv(const std::string& csv);
/// Columns x, phi_0 .. phi_{count-1}.
std::string modes_csv(const AxisSpectrum<double>& spectrum, Eigen::Index count);

/// Writes artifacts atomically into one directory and records their hashes
/// in manifest.json, merged with whatever earlier commands recorded there.
class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write(const std::string& name, const std::string& bytes);
  void write_json(const std::string& name, const nlohmann::json& value);
  void write_frame(const std::string& stem, const Frame<double>& frame);
  void write_matrix(const std::string& stem, const EncodedMatrix& m);
  void write_manifest(const std::string& command, const nlohmann::json& config);

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

Frame<double> read_frame(const std::filesystem::path& dir, const std::string& stem);
CorrelationMatrix<double> read_correlation(const std::filesystem::path& dir, const std::string& stem,
                                           Axis* axis = nullptr);
std::pair<Eigen::MatrixXd, nlohmann::json> read_matrix(const std::filesystem::path& dir, const std::string& stem);

}  // namespace schmidtmodes::io
