#pragma once

#include "phasordmd/grid.hpp"

#include <string>
#include <utility>
#include <vector>

namespace phasordmd {

/// x(t) = sum_j phi_j exp(lambda_j t) b_j, with continuous-time eigenvalues lambda = mu + i omega.
struct DmdModel {
  CMatrix modes;        // n_space x r
  CVector eigenvalues;  // r
  CVector amplitudes;   // r
  double dt = 0.0;
  // Set when the amplitude least-squares problem had condition number > 1e12.
  bool ill_conditioned = false;

  Index rank() const { return eigenvalues.size(); }
  Index n_space() const { return modes.rows(); }
};

struct PairedModel {
  DmdModel model;
  // (a, b): lambda_b == conj(lambda_a) bitwise, omega_a > 0.
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<Index> dc_modes;
  // Only populated when unpaired oscillatory modes were explicitly allowed.
  std::vector<Index> unpaired;
};

/// Exact DMD on a rank-r truncated SVD of the first n_time-1 snapshots.
DmdModel exact_dmd(const SnapshotMatrix& data, Index rank);

struct AmplitudeFit {
  CVector amplitudes;
  double condition = 0.0;
  bool ill_conditioned = false;
};

/// Least-squares b minimizing ||X - Phi diag(b) T||_F over every snapshot.
AmplitudeFit compute_amplitudes(const DmdModel& model, const SnapshotMatrix& data);

struct PairingOptions {
  double pair_tol = 1e-6;  // relative to |lambda_i|
  double dc_tol = 1e-8;    // relative to max |lambda|
  bool allow_unpaired = false;
};

PairedModel enforce_conjugate_pairs(const DmdModel& model, const PairingOptions& opts = {});
inline PairedModel enforce_conjugate_pairs(const DmdModel& model, double tol) {
  PairingOptions opts;
  opts.pair_tol = tol;
  return enforce_conjugate_pairs(model, opts);
}

/// Absorbs arg(b) into the modes and scales each mode to unit 2-norm so that b is real and >= 0.
PairedModel normalize_modes(const PairedModel& pm);

struct RefineOptions {
  int max_iter = 100;
  double lambda_tol = 1e-12;
};

struct RefineResult {
  PairedModel model;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt over (mu, omega) per pair and mu per DC mode, with modes and amplitudes
/// eliminated by linear least squares at every step. Output is normalized.
RefineResult varpro_refine(const PairedModel& pm, const SnapshotMatrix& data, const RefineOptions& opts = {});

/// Projected residual ||X - X Psi^+ Psi||_F for the eigenvalues of a paired model.
double projected_residual(const PairedModel& pm, const SnapshotMatrix& data);

/// sum_j phi_j exp(lambda_j t) b_j on the given grid.
CMatrix reconstruct(const DmdModel& model, const Grid1D& t);

/// Stacks d time-shifted copies of the data; output is (d n_space) x (n_time - d + 1).
SnapshotMatrix time_delay_embed(const SnapshotMatrix& data, Index delays);

/// Keeps the first n_space rows of every mode.
DmdModel extract_first_delay(const DmdModel& model, Index n_space);

struct FitOptions {
  Index rank = 4;
  Index delays = 1;
  bool refine = true;
  PairingOptions pairing{};
  RefineOptions refine_opts{};
};

struct FitResult {
  PairedModel model;
  double relative_error = 0.0;
  bool refine_converged = true;
  int refine_iterations = 0;
  std::vector<std::string> warnings;
};

/// embed -> exact_dmd -> enforce_conjugate_pairs -> normalize_modes -> [varpro_refine]
/// -> extract_first_delay -> normalize_modes.
FitResult fit(const SnapshotMatrix& data, const FitOptions& opts);

}  // namespace phasordmd
