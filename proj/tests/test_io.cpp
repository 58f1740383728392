#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "schmidtmodes/io/artifacts.hpp"
#include "schmidtmodes/io/image_io.hpp"
#include "test_fields.hpp"

using namespace schmidtmodes;
using namespace schmidtmodes::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("schmidtmodes_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Frame<double> sample_frame(double counts, NoiseKind noise = NoiseKind::None) {
  const testing_fields::SchellField f{Grid1D<double>(64, 0.1), 1.0, 0.3};
  InterferometerConfig cfg;
  cfg.pixel_pitch = 0.1;
  cfg.counts_scale = counts;
  cfg.hwp_phi = std::numbers::pi / 4;
  cfg.noise = {noise, 5, 0.0};
  return simulate_frame(f, f, cfg);
}

std::size_t line_count(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Pgm16, RoundTripAndByteLayout) {
  Gray16 img(2, 3);
  img << 0, 1, 256, 65535, 4660, 7;
  const std::string bytes = encode_pgm16(img);
  const std::string header = "P5\n3 2\n65535\n";
  ASSERT_EQ(bytes.size(), header.size() + 12);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  // big-endian samples, top row first
  EXPECT_EQ(std::uint8_t(bytes[header.size() + 4]), 0x01);
  EXPECT_EQ(std::uint8_t(bytes[header.size() + 5]), 0x00);
  EXPECT_EQ(std::uint8_t(bytes[header.size() + 8]), 0x12);
  EXPECT_EQ(std::uint8_t(bytes[header.size() + 9]), 0x34);
  EXPECT_EQ(decode_pgm16(bytes), img);
  EXPECT_EQ(encode_pgm16(decode_pgm16(bytes)), bytes);
}

TEST(Pgm16, AcceptsCommentsAndRejectsMalformed) {
  Gray16 img(1, 2);
  img << 10, 20;
  const std::string body = encode_pgm16(img).substr(std::string("P5\n2 1\n65535\n").size());
  EXPECT_EQ(decode_pgm16("P5 # camera\n2 1\n65535\n" + body), img);
  EXPECT_THROW(decode_pgm16("P2\n2 1\n65535\n" + body), FormatError);
  EXPECT_THROW(decode_pgm16("P5\n2 1\n255\n" + body), FormatError);
  EXPECT_THROW(decode_pgm16("P5\n2 1\n65535\n" + body.substr(1)), FormatError);
  EXPECT_THROW(decode_pgm16("P5\n2 x\n65535\n" + body), FormatError);
  EXPECT_THROW(decode_pgm16("P5\n2"), FormatError);
  EXPECT_THROW(decode_pgm16(""), FormatError);
}

TEST(Pfm, RoundTripIsBitExact) {
  std::mt19937 rng(3);
  std::normal_distribution<float> g;
  Eigen::MatrixXf img(5, 7);
  for (auto& v : img.reshaped()) v = g(rng);
  img(0, 0) = -0.0f;
  const std::string bytes = encode_pfm(img);
  EXPECT_EQ(bytes.rfind("Pf\n7 5\n-1.0\n", 0), 0u);
  const auto back = decode_pfm(bytes);
  EXPECT_EQ(back, img);
  EXPECT_EQ(encode_pfm(back), bytes);
}

TEST(Pfm, BottomRowFirstAndBigEndianVariant) {
  Eigen::MatrixXf img(2, 1);
  img << 1.0f, 2.0f;
  const std::string le = encode_pfm(img);
  const std::string header = "Pf\n1 2\n-1.0\n";
  float first;
  std::memcpy(&first, le.data() + header.size(), 4);
  EXPECT_EQ(first, 2.0f);  // bottom row
  // the same image stored big-endian with a positive scale
  std::string be = "Pf\n1 2\n1.0\n";
  for (const float v : {2.0f, 1.0f}) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int s = 24; s >= 0; s -= 8) be.push_back(char((bits >> s) & 0xff));
  }
  EXPECT_EQ(decode_pfm(be), img);
  EXPECT_THROW(decode_pfm("PF\n1 2\n-1.0\n" + le.substr(header.size())), FormatError);
  EXPECT_THROW(decode_pfm("Pf\n1 2\n0\n" + le.substr(header.size())), FormatError);
  EXPECT_THROW(decode_pfm(le.substr(0, le.size() - 1)), FormatError);
}

TEST(FrameCodec, RoundTripPreservesMetadataAndMask) {
  const auto frame = sample_frame(1e4);
  const auto enc = encode_frame(frame);
  const auto back = decode_frame(enc.pgm, enc.sidecar);
  EXPECT_EQ(back.valid.cast<int>().matrix(), frame.valid.cast<int>().matrix());
  EXPECT_EQ(back.meta.phi, frame.meta.phi);
  EXPECT_EQ(back.meta.magnification, frame.meta.magnification);
  EXPECT_EQ(back.meta.pixel_pitch, frame.meta.pixel_pitch);
  EXPECT_EQ(back.meta.seed, frame.meta.seed);
  EXPECT_EQ(back.meta.bs_present, frame.meta.bs_present);
  // counts below 65535 are stored one level per count
  EXPECT_LE((back.values - frame.values).cwiseAbs().maxCoeff(), 0.5 + 1e-9);
  const auto again = encode_frame(back);
  EXPECT_EQ(again.pgm, enc.pgm);
  EXPECT_EQ(again.sidecar, enc.sidecar);
}

TEST(FrameCodec, PoissonFramesAreLossless) {
  const auto frame = sample_frame(3e4, NoiseKind::Poisson);
  const auto enc = encode_frame(frame);
  const auto back = decode_frame(enc.pgm, enc.sidecar);
  EXPECT_EQ(back.values, frame.values);
  EXPECT_EQ(back.meta.noise, NoiseKind::Poisson);
}

TEST(FrameCodec, BrightFramesAreQuantizedAndStable) {
  const auto frame = sample_frame(1e6);
  const auto enc = encode_frame(frame);
  const auto back = decode_frame(enc.pgm, enc.sidecar);
  EXPECT_NEAR(back.values.maxCoeff(), 1e6, 1e-6);
  EXPECT_LE((back.values - frame.values).cwiseAbs().maxCoeff(), 0.5 * 1e6 / 65535 * (1 + 1e-12));
  const auto again = encode_frame(back);
  EXPECT_EQ(again.pgm, enc.pgm);
  EXPECT_EQ(again.sidecar, enc.sidecar);
}

TEST(FrameCodec, RejectsInconsistentSidecars) {
  const auto enc = encode_frame(sample_frame(1e4));
  auto sidecar = nlohmann::json::parse(enc.sidecar);
  sidecar["width"] = 10;
  EXPECT_THROW(decode_frame(enc.pgm, sidecar.dump()), FormatError);
  sidecar = nlohmann::json::parse(enc.sidecar);
  sidecar.erase("phi");
  EXPECT_THROW(decode_frame(enc.pgm, sidecar.dump()), FormatError);
  sidecar = nlohmann::json::parse(enc.sidecar);
  sidecar["valid_region"]["rows"] = 1000;
  EXPECT_THROW(decode_frame(enc.pgm, sidecar.dump()), FormatError);
  sidecar = nlohmann::json::parse(enc.sidecar);
  sidecar["noise"] = "gaussian";
  EXPECT_THROW(decode_frame(enc.pgm, sidecar.dump()), FormatError);
  EXPECT_THROW(decode_frame(enc.pgm, "{not json"), FormatError);

  auto frame = sample_frame(1e4);
  frame.valid(0, 0) = true;  // no longer a rectangle
  EXPECT_THROW(encode_frame(frame), std::invalid_argument);
}

TEST(MatrixCodec, BitExactRoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(6, 4);
  for (auto& v : m.reshaped()) v = g(rng) * 1e-300;
  m(1, 2) = std::numeric_limits<double>::denorm_min();
  const auto enc = encode_matrix(m, {{"note", "test"}});
  ASSERT_EQ(enc.bin.size(), 6u * 4u * 8u);
  const auto [back, header] = decode_matrix(enc.bin, enc.header);
  EXPECT_EQ(back, m);
  EXPECT_EQ(header["note"], "test");
  EXPECT_EQ(encode_matrix(back, {{"note", "test"}}).bin, enc.bin);
  // row-major: the second stored value is m(0, 1)
  double second;
  std::memcpy(&second, enc.bin.data() + 8, 8);
  EXPECT_EQ(second, m(0, 1));
  EXPECT_THROW(decode_matrix(enc.bin.substr(8), enc.header), FormatError);
}

TEST(MatrixCodec, CorrelationCarriesGridAndAxis) {
  const Grid1D<double> g(16, 2.3e-6);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(16, 16);
  v(3, 4) = v(4, 3) = 0.25;
  const CorrelationMatrix<double> w{g, v, 0.75};
  const auto enc = encode_correlation(w, Axis::Y);
  Axis axis = Axis::X;
  const auto back = decode_correlation(enc.bin, enc.header, &axis);
  EXPECT_EQ(axis, Axis::Y);
  EXPECT_EQ(back.values, w.values);
  EXPECT_EQ(back.grid.dx(), g.dx());
  EXPECT_EQ(back.grid.size(), 16);
  EXPECT_EQ(back.trace_norm, 0.75);
  EXPECT_EQ(encode_correlation(back, Axis::Y).header, enc.header);
  const auto other = encode_matrix(v, {{"kind", "something"}});
  EXPECT_THROW(decode_correlation(other.bin, other.header), FormatError);
}

TEST(Csv, RowCountsAndSpectrumParse) {
  const Grid1D<double> g(32, 0.1);
  EXPECT_EQ(line_count(intensity_csv(g, Eigen::VectorXd::Ones(32))), 33u);
  Eigen::VectorXd lambdas(4);
  lambdas << 0.5, 0.25, 0.125 + 1e-17, 0.125;
  const std::string csv = axis_spectrum_csv(lambdas);
  EXPECT_EQ(line_count(csv), 5u);
  EXPECT_EQ(parse_axis_spectrum_csv(csv), lambdas);  // %.17g round-trips doubles
  EXPECT_THROW(parse_axis_spectrum_csv("k,lam\n0,1\n"), FormatError);
  EXPECT_THROW(parse_axis_spectrum_csv("k,lambda\n1,1\n"), FormatError);
  EXPECT_THROW(parse_axis_spectrum_csv("k,lambda\n0;1\n"), FormatError);

  AxisSpectrum<double> s{g, Eigen::VectorXd::Constant(3, 1.0 / 3), Eigen::MatrixXd::Zero(32, 3), 0.0};
  const std::string modes = modes_csv(s, 10);
  EXPECT_EQ(line_count(modes), 33u);
  EXPECT_EQ(modes.substr(0, modes.find('\n')), "x,phi_0,phi_1,phi_2");
  TensorSpectrum t{{{0, 0, 0.5}, {1, 0, 0.5}}, false, ""};
  EXPECT_EQ(spectrum_csv(t), "rank,m,n,lambda\n0,0,0,0.5\n1,1,0,0.5\n");
}

TEST(Hashing, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ArtifactDir, AtomicWritesAndMergedManifest) {
  const auto dir = scratch("artifacts");
  ArtifactDir first(dir);
  first.write("a.txt", "alpha");
  first.write_manifest("one", {{"k", 1}});
  ArtifactDir second(dir);
  second.write("b.txt", "beta");
  second.write_manifest("two", {{"k", 2}});

  EXPECT_EQ(read_file(dir / "a.txt"), "alpha");
  for (const auto& entry : fs::directory_iterator(dir)) EXPECT_NE(entry.path().extension(), ".tmp");
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(manifest["artifacts"]["a.txt"], sha256_hex("alpha"));
  EXPECT_EQ(manifest["artifacts"]["b.txt"], sha256_hex("beta"));
  EXPECT_EQ(manifest["commands"]["one"]["config_sha256"], sha256_hex(nlohmann::json{{"k", 1}}.dump()));
  EXPECT_EQ(manifest["commands"]["two"]["config"]["k"], 2);
  EXPECT_THROW(read_file(dir / "missing.bin"), FormatError);
  fs::remove_all(dir);
}

TEST(ArtifactDir, FrameFilesRoundTrip) {
  const auto dir = scratch("frames");
  const auto frame = sample_frame(2e4, NoiseKind::Poisson);
  ArtifactDir out(dir);
  out.write_frame("f", frame);
  const auto back = read_frame(dir, "f");
  EXPECT_EQ(back.values, frame.values);
  const std::string pgm = read_file(dir / "f.pgm");
  out.write_frame("f", back);
  EXPECT_EQ(read_file(dir / "f.pgm"), pgm);
  fs::remove_all(dir);
}

TEST(Preview, SpansTheFullRange) {
  Eigen::MatrixXd m(2, 2);
  m << -1.0, 0.0, 0.5, 3.0;
  const Gray16 p = preview16(m);
  EXPECT_EQ(p(0, 0), 0);
  EXPECT_EQ(p(1, 1), 65535);
  EXPECT_EQ(preview16(Eigen::MatrixXd::Constant(2, 2, 4.0)).maxCoeff(), 0);
}
