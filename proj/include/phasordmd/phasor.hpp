#pragma once

#include "phasordmd/dmd.hpp"

#include <vector>

namespace phasordmd {

/// One conjugate pair in phasor form: 2 b S cos(omega t + varphi) exp(mu t).
struct PhasorMode {
  Index pair_id = 0;
  Vector S;       // |phi|, >= 0
  Vector varphi;  // atan2(phi_I, phi_R) in (-pi, pi]
  double omega = 0.0;
  double mu = 0.0;
  double b = 0.0;
  // Points where phi == 0 and the phase is undefined (varphi set to 0 there).
  std::vector<Index> undefined_phase;
};

/// An unpaired, non-oscillating mode: b S cos(varphi) exp(mu t).
struct DcMode {
  Index index = 0;
  Vector S;
  Vector varphi;
  double mu = 0.0;
  double b = 0.0;
  std::vector<Index> undefined_phase;
};

struct PhasorModel {
  std::vector<PhasorMode> modes;
  std::vector<DcMode> dc;
};

/// Elementwise atan2(Im, Re), mapped into (-pi, pi]; exact zeros give 0.
Vector phase_shift(const CVector& phi);
/// Indices where phi is exactly zero.
std::vector<Index> undefined_phase_points(const CVector& phi);

Vector spatial_pattern(const CVector& phi);

/// values(x, k) = cos(omega t_k + varphi(x)).
Matrix waveform(double omega, const Vector& varphi, const Grid1D& t);

/// Requires a normalized model (every amplitude real and >= 0).
PhasorModel phasor_decompose(const PairedModel& pm);

Matrix phasor_reconstruct_pair(const PhasorMode& mode, const Grid1D& t);
Matrix phasor_reconstruct_dc(const DcMode& mode, const Grid1D& t);
Matrix phasor_reconstruct(const std::vector<PhasorMode>& modes, const std::vector<DcMode>& dc, const Grid1D& t);
inline Matrix phasor_reconstruct(const PhasorModel& model, const Grid1D& t) {
  return phasor_reconstruct(model.modes, model.dc, t);
}

}  // namespace phasordmd
