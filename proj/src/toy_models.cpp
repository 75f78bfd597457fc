#include "phasordmd/toy_models.hpp"

#include "phasordmd/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace phasordmd::toy {

namespace {

double sech(double x) { return 1.0 / std::cosh(x); }

using State = std::array<double, 2>;

template <class Rhs>
Trajectory integrate_rk4(Rhs rhs, const Grid1D& t, State y, int substeps, const char* name) {
  require(t.size() >= 1, std::string(name) + ": empty time grid");
  require(substeps >= 1, std::string(name) + ": substeps must be >= 1");
  Trajectory out(2, t.size());
  out(0, 0) = y[0];
  out(1, 0) = y[1];
  const double h = t.spacing() / substeps;
  auto axpy = [](const State& a, double s, const State& k) { return State{a[0] + s * k[0], a[1] + s * k[1]}; };
  for (Index k = 1; k < t.size(); ++k) {
    for (int s = 0; s < substeps; ++s) {
      const State k1 = rhs(y);
      const State k2 = rhs(axpy(y, 0.5 * h, k1));
      const State k3 = rhs(axpy(y, 0.5 * h, k2));
      const State k4 = rhs(axpy(y, h, k3));
      for (int i = 0; i < 2; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
      fail(ErrorCode::NumericalBlowup, std::string(name) + ": non-finite state at sample " + std::to_string(k));
    out(0, k) = y[0];
    out(1, k) = y[1];
  }
  return out;
}

}  // namespace

std::pair<SnapshotMatrix, UniscaleTruth> gen_uniscale(Index nx, Index nt) {
  require(nx >= 16, "gen_uniscale: nx must be >= 16");
  require(nt >= 32, "gen_uniscale: nt must be >= 32");
  const Grid1D x = Grid1D::linspace(-5.0, 5.0, nx);
  const Grid1D t = Grid1D::linspace(0.0, 4.0 * std::numbers::pi, nt);

  UniscaleTruth truth;
  truth.f1.resize(nx, nt);
  truth.f2.resize(nx, nt);
  truth.fhat1.resize(nx);
  truth.fhat2.resize(nx);
  for (Index i = 0; i < nx; ++i) {
    const double xi = x[i];
    const double a1 = sech(xi + 3.0);
    const double a2 = 2.0 * sech(xi) * std::tanh(xi);
    truth.fhat1(i) = std::abs(a1);
    truth.fhat2(i) = std::abs(a2);
    for (Index k = 0; k < nt; ++k) {
      truth.f1(i, k) = a1 * std::cos(2.3 * t[k] + xi / 10.0);
      truth.f2(i, k) = a2 * std::sin(2.8 * t[k] + 2.5 * xi);
    }
  }
  truth.total = truth.f1 + truth.f2;
  SnapshotMatrix data(truth.total, x, t);
  return {std::move(data), std::move(truth)};
}

Trajectory gen_fitzhugh_nagumo(double tau1, const Grid1D& t, double v0, double w0, IntegratorOptions opts) {
  require(tau1 > 0.0, "gen_fitzhugh_nagumo: tau1 must be positive");
  auto rhs = [tau1](const State& s) {
    const double v = s[0], w = s[1];
    return State{v - v * v * v / 3.0 - w + 0.65, (v + 0.7 - 0.8 * w) / tau1};
  };
  return integrate_rk4(rhs, t, {v0, w0}, opts.substeps, "gen_fitzhugh_nagumo");
}

Trajectory gen_duffing(double tau2, const Grid1D& t, double p0, double q0, IntegratorOptions opts) {
  require(tau2 > 0.0, "gen_duffing: tau2 must be positive");
  auto rhs = [tau2](const State& s) {
    const double p = s[0], q = s[1];
    return State{q, -(p + p * p * p) / tau2};
  };
  return integrate_rk4(rhs, t, {p0, q0}, opts.substeps, "gen_duffing");
}

double transient_period(const Grid1D& t) { return t.back() - t.front() + t.spacing(); }

Matrix gen_transient(const Grid1D& x, const Grid1D& t) {
  require(!x.empty() && !t.empty(), "gen_transient: grids must be nonempty");
  const double x0 = x.back();
  const double period = transient_period(t);
  const double width = 0.2 * x0;
  require(width != 0.0, "gen_transient: x domain maximum must be nonzero");
  Matrix out(x.size(), t.size());
  for (Index k = 0; k < t.size(); ++k) {
    const double tk = t[k] - t.front();
    const double sigma_t = std::abs(std::sin(2.0 * std::numbers::pi * tk / period));
    const double centre = x0 * tk / period;
    for (Index i = 0; i < x.size(); ++i) {
      const double d = (x[i] - centre) / width;
      const double sigma_x = std::exp(-d * d);
      out(i, k) = 2.0 * std::sin(10.0 * t[k] + x[i] / (2.0 * std::numbers::pi)) * sigma_x * sigma_t;
    }
  }
  return out;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
  require(n >= 1, "random_orthogonal: n must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

std::pair<SnapshotMatrix, MultiscaleTruth> gen_multiscale(std::uint64_t seed, Index nt,
                                                         const MultiscaleParams& params) {
  require(nt >= 256, "gen_multiscale: nt must be >= 256");
  constexpr Index kRows = 40;
  constexpr double kDuration = 64.0;
  const Grid1D x = Grid1D::linspace(0.0, 40.0, kRows);
  const Grid1D t = Grid1D::arange(0.0, kDuration / static_cast<double>(nt), nt);

  const Trajectory slow = gen_fitzhugh_nagumo(params.tau1, t, params.v0, params.w0, params.integrator);
  const Trajectory fast = gen_duffing(params.tau2, t, params.p0, params.q0, params.integrator);

  Matrix stack_slow = Matrix::Zero(kRows, nt);
  Matrix stack_fast = Matrix::Zero(kRows, nt);
  for (Index rep = 0; rep < 10; ++rep) {
    stack_slow.middleRows(2 * rep, 2) = slow;
    stack_fast.middleRows(20 + 2 * rep, 2) = fast;
  }

  MultiscaleTruth truth;
  truth.mixing = random_orthogonal(kRows, seed);
  // Row-vector convention: each snapshot s(t)^T is mixed as s(t)^T O.
  truth.x_slow = truth.mixing.transpose() * stack_slow;
  truth.x_fast = truth.mixing.transpose() * stack_fast;
  truth.x_tran = gen_transient(x, t);
  truth.x_total = truth.x_slow + truth.x_fast + truth.x_tran;
  truth.tau1 = params.tau1;
  truth.tau2 = params.tau2;
  truth.seed = seed;

  SnapshotMatrix data(truth.x_total, x, t);
  return {std::move(data), std::move(truth)};
}

}  // namespace phasordmd::toy
