#include "phasordmd/phasor.hpp"

#include "phasordmd/error.hpp"

#include <cmath>
#include <numbers>

namespace phasordmd {

Vector phase_shift(const CVector& phi) {
  Vector out(phi.size());
  for (Index i = 0; i < phi.size(); ++i) {
    const Complex z = phi(i);
    if (z == Complex(0.0, 0.0)) {
      out(i) = 0.0;
      continue;
    }
    double angle = std::atan2(z.imag(), z.real());
    if (angle <= -std::numbers::pi) angle = std::numbers::pi;
    out(i) = angle;
  }
  return out;
}

std::vector<Index> undefined_phase_points(const CVector& phi) {
  std::vector<Index> out;
  for (Index i = 0; i < phi.size(); ++i)
    if (phi(i) == Complex(0.0, 0.0)) out.push_back(i);
  return out;
}

Vector spatial_pattern(const CVector& phi) {
  Vector out(phi.size());
  for (Index i = 0; i < phi.size(); ++i) out(i) = std::hypot(phi(i).real(), phi(i).imag());
  return out;
}

Matrix waveform(double omega, const Vector& varphi, const Grid1D& t) {
  Matrix out(varphi.size(), t.size());
  for (Index k = 0; k < t.size(); ++k)
    for (Index i = 0; i < varphi.size(); ++i) out(i, k) = std::cos(omega * t[k] + varphi(i));
  return out;
}

PhasorModel phasor_decompose(const PairedModel& pm) {
  const CVector& b = pm.model.amplitudes;
  for (Index i = 0; i < b.size(); ++i)
    if (b(i).imag() != 0.0 || b(i).real() < 0.0)
      fail(ErrorCode::InvalidState, "phasor_decompose: amplitudes must be real and nonnegative (normalize first)");

  PhasorModel out;
  Index pair_id = 0;
  for (const auto& [a, c] : pm.pairs) {
    const CVector phi = pm.model.modes.col(a);
    PhasorMode mode;
    mode.pair_id = pair_id++;
    mode.S = spatial_pattern(phi);
    mode.varphi = phase_shift(phi);
    mode.undefined_phase = undefined_phase_points(phi);
    mode.omega = pm.model.eigenvalues(a).imag();
    mode.mu = pm.model.eigenvalues(a).real();
    mode.b = b(a).real();
    out.modes.push_back(std::move(mode));
  }
  for (Index i : pm.dc_modes) {
    const CVector phi = pm.model.modes.col(i);
    DcMode mode;
    mode.index = i;
    mode.S = spatial_pattern(phi);
    mode.varphi = phase_shift(phi);
    mode.undefined_phase = undefined_phase_points(phi);
    mode.mu = pm.model.eigenvalues(i).real();
    mode.b = b(i).real();
    out.dc.push_back(std::move(mode));
  }
  return out;
}

Matrix phasor_reconstruct_pair(const PhasorMode& mode, const Grid1D& t) {
  require(mode.S.size() == mode.varphi.size(), "phasor_reconstruct_pair: S and varphi lengths differ");
  Matrix out(mode.S.size(), t.size());
  for (Index k = 0; k < t.size(); ++k) {
    const double env = 2.0 * mode.b * std::exp(mode.mu * t[k]);
    for (Index i = 0; i < mode.S.size(); ++i)
      out(i, k) = env * mode.S(i) * std::cos(mode.omega * t[k] + mode.varphi(i));
  }
  return out;
}

Matrix phasor_reconstruct_dc(const DcMode& mode, const Grid1D& t) {
  require(mode.S.size() == mode.varphi.size(), "phasor_reconstruct_dc: S and varphi lengths differ");
  const Vector profile = mode.b * mode.S.cwiseProduct(mode.varphi.array().cos().matrix());
  Matrix out(mode.S.size(), t.size());
  for (Index k = 0; k < t.size(); ++k) out.col(k) = profile * std::exp(mode.mu * t[k]);
  return out;
}

Matrix phasor_reconstruct(const std::vector<PhasorMode>& modes, const std::vector<DcMode>& dc, const Grid1D& t) {
  Index n = -1;
  auto check = [&n](Index len) {
    if (n < 0) n = len;
    require(len == n, "phasor_reconstruct: inconsistent spatial lengths");
  };
  for (const auto& m : modes) check(m.S.size());
  for (const auto& m : dc) check(m.S.size());
  Matrix out = Matrix::Zero(std::max<Index>(n, 0), t.size());
  for (const auto& m : modes) out += phasor_reconstruct_pair(m, t);
  for (const auto& m : dc) out += phasor_reconstruct_dc(m, t);
  return out;
}

}  // namespace phasordmd
