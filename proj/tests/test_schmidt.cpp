#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <random>

#include "schmidtmodes/field.hpp"
#include "schmidtmodes/hermite.hpp"
#include "schmidtmodes/schmidt.hpp"

using namespace schmidtmodes;

namespace {

CorrelationMatrix<double> schell(const Grid1D<double>& g, double sigma_i, double sigma_mu) {
  Matrix<double> w(g.size(), g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j)
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const double x = g.x(j), y = g.x(k);
      w(j, k) = std::exp(-(x * x + y * y) / (4 * sigma_i * sigma_i) - (x - y) * (x - y) / (2 * sigma_mu * sigma_mu));
    }
  return normalized_correlation(g, std::move(w));
}

AxisSpectrum<double> spectrum_of(std::initializer_list<double> lambdas) {
  AxisSpectrum<double> s;
  s.lambdas = Eigen::Map<const Vector<double>>(lambdas.begin(), Eigen::Index(lambdas.size()));
  return s;
}

}  // namespace

TEST(Diagonalize, RankOneInput) {
  const Grid1D<double> g(64, 0.2);
  Vector<double> f(64);
  for (Eigen::Index k = 0; k < 64; ++k) f[k] = std::exp(-g.x(k) * g.x(k) / 2) * (1 + 0.3 * g.x(k));
  const auto s = diagonalize(normalized_correlation(g, Matrix<double>(f * f.transpose())), 4);
  EXPECT_NEAR(s.lambdas[0], 1.0, 1e-12);
  EXPECT_LT(s.lambdas.tail(3).maxCoeff(), 1e-12);
  const Vector<double> unit = f / std::sqrt(f.squaredNorm() * g.dx());
  EXPECT_NEAR(std::abs(s.modes.col(0).dot(unit) * g.dx()), 1.0, 1e-12);
  EXPECT_GT(fidelity(s.modes.col(0), unit), 1.0 - 1e-12);
}

TEST(Diagonalize, OrthonormalModesAndUnitSum) {
  const Grid1D<double> g(200, 0.05);
  const auto s = diagonalize(schell(g, 1.0, 0.3), 30);
  const Matrix<double> gram = s.modes.transpose() * s.modes * g.dx();
  EXPECT_LT((gram - Matrix<double>::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(s.lambdas.sum(), 1.0, 1e-12);
  for (Eigen::Index k = 1; k < 30; ++k) EXPECT_LE(s.lambdas[k], s.lambdas[k - 1]);
  EXPECT_TRUE((s.lambdas.array() >= 0).all());
}

TEST(Diagonalize, SchellModesAreHermiteGaussians) {
  // Gaussian Schell-model: lambda_n geometric, modes HG_n of width (2 a c)^(-1/2)
  // with a = 1/(4 s_i^2), b = 1/(2 s_mu^2), c = sqrt(1 + 2 b / a).
  const double s_i = 1.0, s_mu = 0.5;
  const Grid1D<double> g(512, 0.03);
  const auto s = diagonalize(schell(g, s_i, s_mu), 12);
  const double a = 1 / (4 * s_i * s_i), b = 1 / (2 * s_mu * s_mu), c = std::sqrt(1 + 2 * b / a);
  const double width = 1 / std::sqrt(2 * a * c);
  const double ratio = b / (a * (1 + c) + b);
  for (int n = 0; n <= 10; ++n) {
    EXPECT_EQ(sign_changes(s.modes.col(n)), n);
    EXPECT_GE(fidelity(s.modes.col(n), hermite_gaussian(n, width, g)), 0.999) << "n=" << n;
    EXPECT_NEAR(s.lambdas[n + 1] / s.lambdas[n], ratio, 1e-4) << "n=" << n;
  }
}

TEST(Diagonalize, DoubleGaussianMatchesSvdOfAmplitude) {
  const Grid1D<double> g(512, 0.05);
  const auto from_w = diagonalize(double_gaussian_field(2.5, 0.8, g).sampled(), 25);
  const auto from_psi = schmidt_decompose(double_gaussian_amplitude(2.5, 0.8, g), 25);
  for (int n = 0; n <= 20; ++n) {
    EXPECT_NEAR(from_w.lambdas[n], from_psi.lambdas[n], 1e-4 * from_psi.lambdas[n] + 1e-14);
    if (n <= 10) EXPECT_NEAR(from_w.lambdas[n + 1] / from_w.lambdas[n], double_gaussian_ratio(2.5, 0.8), 1e-4);
    EXPECT_GT(fidelity(from_w.modes.col(n), from_psi.modes.col(n)), 0.9999) << "n=" << n;
  }
}

TEST(Diagonalize, CompletenessWithAllModes) {
  const Grid1D<double> g(48, 0.2);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  Matrix<double> a(48, 48);
  for (auto& v : a.reshaped()) v = gauss(rng);
  const auto w = normalized_correlation(g, Matrix<double>(a * a.transpose()));
  const auto s = diagonalize(w, 48);
  // W = sum lambda_k phi_k phi_k^T, lambdas normalized to unit trace
  const Matrix<double> rebuilt = s.modes * s.lambdas.asDiagonal() * s.modes.transpose();
  EXPECT_LT((rebuilt - w.values).cwiseAbs().maxCoeff(), 1e-8 * w.values.cwiseAbs().maxCoeff());
}

TEST(Diagonalize, GridRefinementLeavesSpectrumUnchanged) {
  const auto coarse = diagonalize(schell(Grid1D<double>(256, 0.06), 1.0, 0.4), 10);
  const auto fine = diagonalize(schell(Grid1D<double>(512, 0.03), 1.0, 0.4), 10);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(coarse.lambdas[k], fine.lambdas[k], 1e-3 * fine.lambdas[k]);
}

TEST(Diagonalize, Deterministic) {
  const auto w = schell(Grid1D<double>(128, 0.05), 1.0, 0.2);
  const auto a = diagonalize(w, 20), b = diagonalize(w, 20);
  EXPECT_EQ(a.lambdas, b.lambdas);
  EXPECT_EQ(a.modes, b.modes);
}

TEST(Diagonalize, NegativityBudget) {
  const Grid1D<double> g(4, 1.0);
  const Matrix<double> q = Eigen::HouseholderQR<Matrix<double>>(Matrix<double>::Random(4, 4)).householderQ();
  const Vector<double> ev = (Vector<double>(4) << 0.7, 0.4, 0.0, -0.1).finished();
  Matrix<double> m = q * ev.asDiagonal() * q.transpose();
  m = (m + m.transpose()) / 2;
  const auto s = diagonalize(CorrelationMatrix<double>{g, m, 1.0}, 4);
  EXPECT_NEAR(s.negativity_budget, 0.1 / 1.1, 1e-12);
  EXPECT_EQ(s.lambdas[3], 0.0);
  EXPECT_NEAR(s.lambdas[0], 0.7 / 1.1, 1e-12);
}

TEST(Diagonalize, GuardsAndArguments) {
  const Grid1D<double> g(4, 1.0);
  Matrix<double> m = Matrix<double>::Identity(4, 4);
  m(0, 1) = 0.5;
  EXPECT_THROW(diagonalize(CorrelationMatrix<double>{g, m, 1.0}, 2), NumericalGuardError);
  const CorrelationMatrix<double> id{g, Matrix<double>::Identity(4, 4), 1.0};
  EXPECT_THROW(diagonalize(id, 0), std::invalid_argument);
  EXPECT_THROW(diagonalize(id, 5), std::invalid_argument);
  EXPECT_THROW(diagonalize(CorrelationMatrix<double>{g, -Matrix<double>::Identity(4, 4), 1.0}, 2), NumericalGuardError);
}

TEST(SchmidtNumber, ClosedForms) {
  EXPECT_DOUBLE_EQ(schmidt_number(Vector<double>::Ones(1)), 1.0);
  for (const int d : {2, 7, 50}) EXPECT_NEAR(schmidt_number(Vector<double>::Constant(d, 1.0 / d)), d, 1e-9);
  // geometric z = 1/2: (1 + z) / (1 - z) = 3
  Vector<double> geo(200);
  for (int k = 0; k < 200; ++k) geo[k] = 0.5 * std::pow(0.5, k);
  geo /= geo.sum();
  EXPECT_NEAR(schmidt_number(geo), 3.0, 1e-12);
  EXPECT_NEAR(schmidt_number(geo, geo), 9.0, 1e-10);
}

TEST(SchmidtNumber, PermutationInvariantAndGuarded) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector<double> v(30);
  for (auto& x : v) x = u(rng);
  v /= v.sum();
  Vector<double> shuffled = v;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(schmidt_number(v), schmidt_number(shuffled), 1e-12);
  EXPECT_THROW(schmidt_number(Vector<double>(Vector<double>::Constant(3, 0.5))), NumericalGuardError);
  EXPECT_THROW(schmidt_number((Vector<double>(2) << 1.5, -0.5).finished()), NumericalGuardError);
  EXPECT_THROW(schmidt_number(Vector<double>(0)), NumericalGuardError);
}

TEST(TensorCombine, RanksProductsWithTieOrder) {
  const auto x = spectrum_of({0.6, 0.4});
  const auto t = tensor_combine(x, x, 4);
  ASSERT_EQ(t.ranked.size(), 4u);
  const std::vector<double> expected{0.36, 0.24, 0.24, 0.16};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(t.ranked[k].lambda, expected[k], 1e-15);
  EXPECT_EQ(t.ranked[1].m, 0);
  EXPECT_EQ(t.ranked[1].n, 1);
  EXPECT_EQ(t.ranked[2].m, 1);
  EXPECT_EQ(t.ranked[2].n, 0);
  EXPECT_FALSE(t.truncated);
}

TEST(TensorCombine, TruncatesWithWarning) {
  const auto t = tensor_combine(spectrum_of({0.6, 0.4}), spectrum_of({1.0}), 10);
  EXPECT_EQ(t.ranked.size(), 2u);
  EXPECT_TRUE(t.truncated);
  EXPECT_FALSE(t.warning.empty());
  const auto single = tensor_combine(spectrum_of({1.0}), spectrum_of({1.0}), 1);
  ASSERT_EQ(single.ranked.size(), 1u);
  EXPECT_EQ(single.ranked[0].lambda, 1.0);
}

TEST(TensorCombine, WeightsSumToOneAndDescend) {
  const Grid1D<double> g(128, 0.05);
  const auto x = diagonalize(schell(g, 1.0, 0.3), 20);
  const auto y = diagonalize(schell(g, 0.8, 0.2), 20);
  const auto t = tensor_combine(x, y, 400);
  double sum = 0.0;
  for (std::size_t k = 0; k < t.ranked.size(); ++k) {
    sum += t.ranked[k].lambda;
    if (k) EXPECT_LE(t.ranked[k].lambda, t.ranked[k - 1].lambda);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const auto r = combine(x, y, 10);
  EXPECT_NEAR(r.schmidt_number, schmidt_number(x.lambdas) * schmidt_number(y.lambdas), 1e-12);
}

TEST(Mode2d, LobeStructure) {
  const Grid1D<double> g(256, 0.04);
  const auto x = diagonalize(schell(g, 1.0, 0.3), 6);
  const auto y = diagonalize(schell(g, 1.0, 0.3), 6);
  const Matrix<double> phi = mode_2d(x, y, 3, 1);
  ASSERT_EQ(phi.rows(), 256);
  // a row cut crosses m nodal lines, a column cut n
  const Eigen::Index c = g.center();
  Eigen::Index r_peak, c_peak;
  phi.cwiseAbs().maxCoeff(&r_peak, &c_peak);
  EXPECT_EQ(sign_changes(phi.row(r_peak).transpose()), 3);
  EXPECT_EQ(sign_changes(phi.col(c_peak)), 1);
  EXPECT_NEAR(phi.squaredNorm() * g.dx() * g.dx(), 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(phi(c + 5, c - 7), y.modes(c + 5, 1) * x.modes(c - 7, 3));
}

TEST(Fidelity, SignFreeAndGuarded) {
  Vector<double> r(5);
  r << 0.1, -0.4, 0.9, 0.3, -0.2;
  EXPECT_DOUBLE_EQ(fidelity(r, r), 1.0);
  EXPECT_DOUBLE_EQ(fidelity(Vector<double>(-r), r), 1.0);
  EXPECT_LT(fidelity(Vector<double>(r.reverse()), r), 1.0);
  EXPECT_THROW(fidelity(Vector<double>(r.head(4)), r), std::invalid_argument);
  EXPECT_THROW(fidelity(r, Vector<double>(Vector<double>::Constant(5, 2.0))), std::invalid_argument);
}

TEST(SignChanges, IgnoresNoiseFloor) {
  Vector<double> v(7);
  v << 1.0, 1e-6, -1e-6, 0.5, -0.5, -1.0, 0.2;
  EXPECT_EQ(sign_changes(v), 2);
  EXPECT_EQ(sign_changes(v, 0.0), 4);
}
