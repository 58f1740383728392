#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace schmidtmodes::io {

using Gray16 = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Malformed or unreadable image/matrix files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary PGM, 16 bit: "P5\n<width> <height>\n65535\n" followed by
// width*height big-endian uint16 samples, top row first. Row r of the matrix
// is written as image row r.
std::string encode_pgm16(const Gray16& image);
Gray16 decode_pgm16(const std::string& bytes);

// Grayscale PFM: "Pf\n<width> <height>\n-1.0\n" followed by little-endian
// float32 samples, bottom row first as the format prescribes. Row r of the
// matrix is image row r counted from the top.
std::string encode_pfm(const Eigen::MatrixXf& image);
Eigen::MatrixXf decode_pfm(const std::string& bytes);

/// Linear 16-bit preview of a signed image: min maps to 0, max to 65535.
Gray16 preview16(const Eigen::MatrixXd& image);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace schmidtmodes::io
