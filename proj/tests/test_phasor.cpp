#include "phasordmd/phasor.hpp"
#include "phasordmd/toy_models.hpp"

#include "testutil.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace phasordmd;

namespace {

const double kPi = std::numbers::pi;

CVector cvec(std::initializer_list<Complex> v) {
  CVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (const Complex& c : v) out(i++) = c;
  return out;
}

PairedModel uniscale_model() {
  const auto [data, truth] = toy::gen_uniscale();
  return fit(data, FitOptions{}).model;
}

}  // namespace

TEST(PhaseShift, Atan2Convention) {
  const Vector p = phase_shift(cvec({{1, 0}, {0, 1}, {-1, -1}, {-1, 0}, {-1, -0.0}, {0, 0}}));
  EXPECT_EQ(p(0), 0.0);
  EXPECT_DOUBLE_EQ(p(1), kPi / 2);
  EXPECT_DOUBLE_EQ(p(2), -3 * kPi / 4);
  EXPECT_DOUBLE_EQ(p(3), kPi);
  EXPECT_DOUBLE_EQ(p(4), kPi);  // (-pi, pi]: -pi folds to pi
  EXPECT_EQ(p(5), 0.0);
  EXPECT_EQ(undefined_phase_points(cvec({{1, 0}, {0, 0}, {0, 2}})), std::vector<Index>{1});
}

TEST(SpatialPattern, Magnitude) {
  const Vector s = spatial_pattern(cvec({{3, 4}, {0, 0}, {-1, 0}}));
  EXPECT_EQ(s(0), 5.0);
  EXPECT_EQ(s(1), 0.0);
  EXPECT_EQ(s(2), 1.0);
}

TEST(SpatialPattern, GaugeProperties) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    CVector phi(16);
    for (Index i = 0; i < phi.size(); ++i) phi(i) = Complex(normal(rng), normal(rng));
    const double a = angle(rng);
    const CVector rotated = phi * std::polar(1.0, a);
    EXPECT_LT((spatial_pattern(rotated) - spatial_pattern(phi)).cwiseAbs().maxCoeff(), 1e-14);
    const Vector d = phase_shift(rotated) - phase_shift(phi);
    for (Index i = 0; i < d.size(); ++i) EXPECT_NEAR(std::remainder(d(i) - a, 2 * kPi), 0.0, 1e-12);
  }
}

TEST(Waveform, ValuesAndBounds) {
  const Grid1D t = Grid1D::arange(0.0, 0.1, 50);
  Vector varphi(3);
  varphi << 0.0, 1.0, -2.5;
  const Matrix w = waveform(2.3, varphi, t);
  EXPECT_EQ(w(0, 0), 1.0);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), 1.0);
  // W(t = 0) = cos(varphi)
  EXPECT_LT((w.col(0) - varphi.array().cos().matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(w(1, 7), std::cos(2.3 * t[7] + 1.0));
}

TEST(PhasorDecompose, Bookkeeping) {
  PairedModel pm;
  pm.model.modes.resize(2, 3);
  pm.model.modes << Complex(1, 1), Complex(1, -1), Complex(2, 0), Complex(0, 1), Complex(0, -1), Complex(1, 0);
  pm.model.eigenvalues = cvec({{-0.1, 3.0}, {-0.1, -3.0}, {-0.2, 0.0}});
  pm.model.amplitudes = cvec({{0.5, 0}, {0.5, 0}, {2.0, 0}});
  pm.model.dt = 0.1;
  pm.pairs = {{0, 1}};
  pm.dc_modes = {2};
  const PhasorModel ph = phasor_decompose(pm);
  ASSERT_EQ(ph.modes.size(), 1u);
  ASSERT_EQ(ph.dc.size(), 1u);
  EXPECT_EQ(ph.modes[0].omega, 3.0);
  EXPECT_EQ(ph.modes[0].mu, -0.1);
  EXPECT_EQ(ph.modes[0].b, 0.5);
  EXPECT_DOUBLE_EQ(ph.modes[0].S(0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(ph.modes[0].varphi(1), kPi / 2);
  EXPECT_EQ(ph.dc[0].index, 2);
  EXPECT_EQ(ph.dc[0].mu, -0.2);

  PairedModel empty;
  empty.model.modes.resize(4, 0);
  EXPECT_TRUE(phasor_decompose(empty).modes.empty());

  pm.model.amplitudes(2) = Complex(-2.0, 0.0);
  EXPECT_ERROR_CODE(phasor_decompose(pm), ErrorCode::InvalidState);
  pm.model.amplitudes(2) = Complex(2.0, 0.1);
  EXPECT_ERROR_CODE(phasor_decompose(pm), ErrorCode::InvalidState);
}

TEST(PhasorReconstruct, PairMatchesComplexPath) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  const Grid1D t = Grid1D::arange(0.0, 0.05, 120);
  for (int trial = 0; trial < 10; ++trial) {
    PhasorMode m;
    CVector phi(12);
    for (Index i = 0; i < phi.size(); ++i) phi(i) = Complex(normal(rng), normal(rng));
    m.S = spatial_pattern(phi);
    m.varphi = phase_shift(phi);
    m.omega = 1.0 + trial;
    m.mu = -0.05 * trial;
    m.b = 0.7;
    // 2 e^{mu t} b [phi_R cos(omega t) - phi_I sin(omega t)]
    Matrix ref(12, t.size());
    for (Index k = 0; k < t.size(); ++k)
      ref.col(k) = 2 * std::exp(m.mu * t[k]) * m.b *
                   (phi.real() * std::cos(m.omega * t[k]) - phi.imag() * std::sin(m.omega * t[k]));
    EXPECT_LT(relative_error(phasor_reconstruct_pair(m, t), ref), 1e-12);
  }
}

TEST(PhasorReconstruct, EdgeCasesAndValidation) {
  const Grid1D t = Grid1D::arange(0.0, 0.1, 10);
  PhasorMode m;
  m.S = Vector::Ones(4);
  m.varphi = Vector::Zero(4);
  m.omega = 2.0;
  m.b = 0.0;
  EXPECT_EQ(phasor_reconstruct_pair(m, t).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(phasor_reconstruct({}, {}, t).size(), 0);

  DcMode dc;
  dc.S = Vector::Constant(4, 2.0);
  dc.varphi = Vector::Constant(4, kPi);
  dc.mu = -1.0;
  dc.b = 1.5;
  const Matrix r = phasor_reconstruct_dc(dc, t);
  EXPECT_NEAR(r(0, 3), -3.0 * std::exp(-t[3]), 1e-15);

  m.b = 1.0;
  PhasorMode bad = m;
  bad.varphi = Vector::Zero(3);
  EXPECT_ERROR_CODE(phasor_reconstruct_pair(bad, t), ErrorCode::InvalidArgument);
  EXPECT_ERROR_CODE(phasor_reconstruct({m}, {DcMode{0, Vector::Ones(5), Vector::Zero(5), 0, 1, {}}}, t),
                    ErrorCode::InvalidArgument);
}

TEST(PhasorReconstruct, UniscaleEquivalenceAndComponents) {
  const auto [data, truth] = toy::gen_uniscale();
  const PairedModel pm = uniscale_model();
  const PhasorModel ph = phasor_decompose(pm);
  ASSERT_EQ(ph.modes.size(), 2u);
  const CMatrix complex_rec = reconstruct(pm.model, data.time);
  const Matrix phasor_rec = phasor_reconstruct(ph, data.time);
  EXPECT_LT(complex_rec.imag().cwiseAbs().maxCoeff(), 1e-10 * complex_rec.real().cwiseAbs().maxCoeff());
  EXPECT_LT(relative_error(phasor_rec, complex_rec.real()), 1e-10);
  EXPECT_LT(relative_error(phasor_rec, data.values), 1e-4);

  for (const PhasorMode& m : ph.modes) {
    const Matrix& target = std::abs(m.omega - 2.3) < 0.1 ? truth.f1 : truth.f2;
    EXPECT_LT(relative_error(phasor_reconstruct_pair(m, data.time), target), 1e-4);
    EXPECT_GE(m.S.minCoeff(), 0.0);
    EXPECT_GT(m.varphi.minCoeff(), -kPi);
    EXPECT_LE(m.varphi.maxCoeff(), kPi);
  }
}

TEST(PhasorReconstruct, Fhat2PeakFromSpatialPattern) {
  const auto [data, truth] = toy::gen_uniscale();
  const PhasorModel ph = phasor_decompose(uniscale_model());
  const PhasorMode& m2 = std::abs(ph.modes[0].omega - 2.8) < 0.1 ? ph.modes[0] : ph.modes[1];
  const Vector pattern = 2 * m2.b * m2.S;
  Index arg = 0;
  EXPECT_NEAR(pattern.maxCoeff(&arg), truth.fhat2.maxCoeff(), 1e-6);
  EXPECT_NEAR(std::abs(data.space[arg]), std::asinh(1.0), 0.05);
}

TEST(PhasorDecompose, NoPhaseVariationMeansRealModes) {
  // Uniform cos(2.3 t): after normalization phi is real up to rounding.
  const Grid1D x = Grid1D::linspace(0.0, 1.0, 10);
  const Grid1D t = Grid1D::arange(0.0, 0.05, 200);
  Matrix v(10, 200);
  for (Index k = 0; k < 200; ++k) v.col(k).setConstant(std::cos(2.3 * t[k]));
  FitOptions opts;
  opts.rank = 2;
  opts.delays = 2;
  const FitResult r = fit(SnapshotMatrix(v, x, t), opts);
  const auto& [a, b] = r.model.pairs.at(0);
  const CVector phi = r.model.model.modes.col(a);
  EXPECT_LT(phi.imag().cwiseAbs().maxCoeff(), 1e-8 * phi.real().cwiseAbs().maxCoeff());
}
