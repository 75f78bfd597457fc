#pragma once

#include "phasordmd/grid.hpp"

#include <cstdint>
#include <utility>

namespace phasordmd::toy {

/// Components of the two-feature uniscale model on x in [-5, 5], t in [0, 4 pi].
struct UniscaleTruth {
  Matrix f1;     // sech(x+3) cos(2.3t + x/10)
  Matrix f2;     // 2 sech(x) tanh(x) sin(2.8t + 2.5x)
  Vector fhat1;  // |sech(x+3)|
  Vector fhat2;  // |2 sech(x) tanh(x)|
  Matrix total;
};

std::pair<SnapshotMatrix, UniscaleTruth> gen_uniscale(Index nx = 128, Index nt = 256);

/// A two-state trajectory sampled on a time grid; row 0/1 hold the two states.
using Trajectory = Matrix;

struct IntegratorOptions {
  // RK4 steps per sample interval.
  int substeps = 10;
};

/// FitzHugh-Nagumo: v' = v - v^3/3 - w + 0.65, w' = (v + 0.7 - 0.8 w) / tau1.
Trajectory gen_fitzhugh_nagumo(double tau1, const Grid1D& t, double v0 = -1.0, double w0 = 1.0,
                               IntegratorOptions opts = {});

/// Unforced Duffing: p' = q, q' = -(p + p^3) / tau2.
Trajectory gen_duffing(double tau2, const Grid1D& t, double p0 = 1.0, double q0 = 0.0,
                       IntegratorOptions opts = {});

/// Translating wave packet 2 sin(10t + x/(2 pi)) sigma_x(x,t) sigma_t(t).
Matrix gen_transient(const Grid1D& x, const Grid1D& t);

/// Time domain length used by gen_transient: one sample interval past the last point.
double transient_period(const Grid1D& t);

struct MultiscaleParams {
  double tau1 = 2.0;
  double tau2 = 0.2;
  double v0 = -1.0, w0 = 1.0;
  double p0 = 1.0, q0 = 0.0;
  IntegratorOptions integrator{};
};

struct MultiscaleTruth {
  Matrix x_slow;
  Matrix x_fast;
  Matrix x_tran;
  Matrix x_total;
  Matrix mixing;  // orthogonal 40 x 40
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::uint64_t seed = 0;
};

/// Seeded Haar-like orthogonal matrix: QR of a standard-normal matrix, R diagonal made positive.
Matrix random_orthogonal(Index n, std::uint64_t seed);

/// 40 rows (FitzHugh-Nagumo [v,w] x10 then Duffing [p,q] x10, mixed by an orthogonal matrix)
/// plus the transient on x = 0..40, t = 0..64 with nt samples.
std::pair<SnapshotMatrix, MultiscaleTruth> gen_multiscale(std::uint64_t seed, Index nt = 1280,
                                                         const MultiscaleParams& params = {});

}  // namespace phasordmd::toy
