#include "schmidtmodes/io/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace schmidtmodes::io {

namespace {

// Reads a whitespace-separated header token, skipping '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw FormatError("truncated image header");
  return bytes.substr(start, pos - start);
}

long parse_positive(const std::string& token, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size() || v <= 0) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad ") + what + " in image header: '" + token + "'");
  }
}

// The single whitespace byte that ends a binary PNM header.
void skip_header_terminator(const std::string& bytes, std::size_t& pos) {
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("image header is not terminated by whitespace");
  }
  ++pos;
}

}  // namespace

std::string encode_pgm16(const Gray16& image) {
  std::ostringstream header;
  header << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  std::string out = header.str();
  out.reserve(out.size() + std::size_t(image.size()) * 2);
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const std::uint16_t v = image(r, c);
      out.push_back(char(v >> 8));
      out.push_back(char(v & 0xff));
    }
  }
  return out;
}

Gray16 decode_pgm16(const std::string& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw FormatError("not a binary PGM (P5) file");
  const long width = parse_positive(next_token(bytes, pos), "width");
  const long height = parse_positive(next_token(bytes, pos), "height");
  const long maxval = parse_positive(next_token(bytes, pos), "maxval");
  if (maxval < 256 || maxval > 65535) throw FormatError("expected a 16-bit PGM (maxval 256..65535)");
  skip_header_terminator(bytes, pos);
  const std::size_t needed = std::size_t(width) * std::size_t(height) * 2;
  if (bytes.size() - pos != needed) throw FormatError("PGM payload size does not match its header");
  Gray16 image(height, width);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c, p += 2) image(r, c) = std::uint16_t((p[0] << 8) | p[1]);
  }
  return image;
}

std::string encode_pfm(const Eigen::MatrixXf& image) {
  std::ostringstream header;
  header << "Pf\n" << image.cols() << ' ' << image.rows() << "\n-1.0\n";
  std::string out = header.str();
  for (Eigen::Index r = image.rows() - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(image(r, c));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char raw[4];
      std::memcpy(raw, &bits, 4);
      out.append(raw, 4);
    }
  }
  return out;
}

Eigen::MatrixXf decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "Pf") throw FormatError("not a grayscale PFM (Pf) file");
  const long width = parse_positive(next_token(bytes, pos), "width");
  const long height = parse_positive(next_token(bytes, pos), "height");
  const std::string scale_token = next_token(bytes, pos);
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    throw FormatError("bad PFM scale '" + scale_token + "'");
  }
  if (scale == 0.0) throw FormatError("PFM scale must be non-zero");
  const bool little = scale < 0.0;
  skip_header_terminator(bytes, pos);
  if (bytes.size() - pos != std::size_t(width) * std::size_t(height) * 4) {
    throw FormatError("PFM payload size does not match its header");
  }
  Eigen::MatrixXf image(height, width);
  const char* p = bytes.data() + pos;
  for (Eigen::Index r = height - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < width; ++c, p += 4) {
      std::uint32_t bits;
      std::memcpy(&bits, p, 4);
      if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
      image(r, c) = std::bit_cast<float>(bits);
    }
  }
  return image;
}

Gray16 preview16(const Eigen::MatrixXd& image) {
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  Gray16 out(image.rows(), image.cols());
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c)
      out(r, c) = std::uint16_t(std::lround((image(r, c) - lo) / span * 65535.0));
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace schmidtmodes::io
