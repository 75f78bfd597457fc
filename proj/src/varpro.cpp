// Variable projection refinement of DMD eigenvalues under a strict conjugate-pair
// parameterization. Each pair owns a real (mu, omega) and spans the real basis
// {e^{mu t} cos(omega t), e^{mu t} sin(omega t)}; each DC mode owns mu alone.
// The linear coefficients are eliminated by least squares, and the Jacobian uses
// Kaufman's approximation.

#include "phasordmd/dmd.hpp"

#include "phasordmd/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace phasordmd {

namespace {

struct Layout {
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<Index> dc;

  Index n_params() const { return static_cast<Index>(2 * pairs.size() + dc.size()); }
  Index n_basis() const { return n_params(); }
};

// params: [mu_0, omega_0, mu_1, omega_1, ..., mu_dc0, mu_dc1, ...]
Matrix basis(const Layout& layout, const Vector& params, const Vector& t) {
  Matrix psi(layout.n_basis(), t.size());
  Index row = 0;
  for (std::size_t p = 0; p < layout.pairs.size(); ++p) {
    const double mu = params(2 * p);
    const double omega = params(2 * p + 1);
    for (Index k = 0; k < t.size(); ++k) {
      const double env = std::exp(mu * t(k));
      psi(row, k) = env * std::cos(omega * t(k));
      psi(row + 1, k) = env * std::sin(omega * t(k));
    }
    row += 2;
  }
  const Index offset = static_cast<Index>(2 * layout.pairs.size());
  for (std::size_t d = 0; d < layout.dc.size(); ++d) {
    const double mu = params(offset + static_cast<Index>(d));
    for (Index k = 0; k < t.size(); ++k) psi(row, k) = std::exp(mu * t(k));
    ++row;
  }
  return psi;
}

struct Projection {
  Matrix coeffs;    // n x n_basis
  Matrix q;         // m x rank, orthonormal basis of span(Psi^T)
  Matrix residual;  // n x m
  double norm = std::numeric_limits<double>::infinity();
};

Projection project(const Matrix& x, const Matrix& psi) {
  Projection out;
  if (!psi.allFinite()) return out;
  const Matrix psi_t = psi.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(psi_t);
  qr.setThreshold(1e-13);
  const Index rank = qr.rank();
  out.q = (qr.householderQ() * Matrix::Identity(psi_t.rows(), psi_t.cols())).leftCols(rank);
  out.coeffs = qr.solve(x.transpose()).transpose();
  out.residual = x - (x * out.q) * out.q.transpose();
  out.norm = out.residual.norm();
  if (!std::isfinite(out.norm)) out.norm = std::numeric_limits<double>::infinity();
  return out;
}

Layout layout_of(const PairedModel& pm) { return Layout{pm.pairs, pm.dc_modes}; }

Vector params_of(const PairedModel& pm) {
  const Layout layout = layout_of(pm);
  Vector params(layout.n_params());
  Index idx = 0;
  for (const auto& [a, b] : pm.pairs) {
    params(idx++) = pm.model.eigenvalues(a).real();
    params(idx++) = std::abs(pm.model.eigenvalues(a).imag());
  }
  for (Index d : pm.dc_modes) params(idx++) = pm.model.eigenvalues(d).real();
  return params;
}

// Jacobian columns (each n x m, stored flattened) of the projected residual.
std::vector<Matrix> kaufman_jacobian(const Layout& layout, const Vector& params, const Vector& t,
                                     const Projection& proj) {
  const Matrix psi = basis(layout, params, t);
  std::vector<Matrix> cols;
  cols.reserve(static_cast<std::size_t>(layout.n_params()));
  auto project_out = [&](Matrix d) {
    d -= (d * proj.q) * proj.q.transpose();
    return Matrix(-d);
  };
  const Eigen::RowVectorXd trow = t.transpose();
  for (std::size_t p = 0; p < layout.pairs.size(); ++p) {
    const Index row = static_cast<Index>(2 * p);
    const Eigen::RowVectorXd c = psi.row(row);
    const Eigen::RowVectorXd s = psi.row(row + 1);
    const Vector ac = proj.coeffs.col(row);
    const Vector as = proj.coeffs.col(row + 1);
    const Eigen::RowVectorXd tc = trow.cwiseProduct(c);
    const Eigen::RowVectorXd ts = trow.cwiseProduct(s);
    Matrix d_mu = ac * tc + as * ts;
    Matrix d_omega = -ac * ts + as * tc;
    cols.push_back(project_out(std::move(d_mu)));
    cols.push_back(project_out(std::move(d_omega)));
  }
  const Index offset = static_cast<Index>(2 * layout.pairs.size());
  for (std::size_t d = 0; d < layout.dc.size(); ++d) {
    const Index row = offset + static_cast<Index>(d);
    const Eigen::RowVectorXd e = psi.row(row);
    Matrix d_mu = proj.coeffs.col(row) * trow.cwiseProduct(e);
    cols.push_back(project_out(std::move(d_mu)));
  }
  return cols;
}

PairedModel rebuild(const PairedModel& pm, const Layout& layout, const Vector& params, const Projection& proj) {
  PairedModel out = pm;
  CMatrix& phi = out.model.modes;
  CVector& b = out.model.amplitudes;
  CVector& lam = out.model.eigenvalues;
  auto assign = [&](Index idx, const CVector& c) {
    const double norm = c.norm();
    if (norm > 0.0) {
      phi.col(idx) = c / norm;
    } else {
      const double old = phi.col(idx).norm();
      if (old > 0.0) phi.col(idx) /= old;
    }
    b(idx) = Complex(norm, 0.0);
  };
  for (std::size_t p = 0; p < layout.pairs.size(); ++p) {
    const auto [ia, ib] = layout.pairs[p];
    const Index row = static_cast<Index>(2 * p);
    // alpha cos(wt) + beta sin(wt) = c e^{iwt} + conj(c) e^{-iwt} with c = (alpha - i beta) / 2.
    const CVector c = 0.5 * (proj.coeffs.col(row).cast<Complex>() - Complex(0.0, 1.0) * proj.coeffs.col(row + 1).cast<Complex>());
    lam(ia) = Complex(params(row), params(row + 1));
    lam(ib) = std::conj(lam(ia));
    assign(ia, c);
    phi.col(ib) = phi.col(ia).conjugate();
    b(ib) = b(ia);
  }
  const Index offset = static_cast<Index>(2 * layout.pairs.size());
  for (std::size_t d = 0; d < layout.dc.size(); ++d) {
    const Index idx = layout.dc[d];
    const Index row = offset + static_cast<Index>(d);
    lam(idx) = Complex(params(row), 0.0);
    assign(idx, proj.coeffs.col(row).cast<Complex>());
  }
  out.model.ill_conditioned = false;
  return out;
}

}  // namespace

double projected_residual(const PairedModel& pm, const SnapshotMatrix& data) {
  require(pm.unpaired.empty(), "projected_residual: unpaired modes are not representable");
  const Layout layout = layout_of(pm);
  if (layout.n_params() == 0) return data.values.norm();
  return project(data.values, basis(layout, params_of(pm), data.time.points())).norm;
}

RefineResult varpro_refine(const PairedModel& pm, const SnapshotMatrix& data, const RefineOptions& opts) {
  if (!pm.unpaired.empty()) fail(ErrorCode::InvalidState, "varpro_refine: input has unpaired oscillatory modes");
  require(pm.model.n_space() == data.n_space(), "varpro_refine: mode length does not match the data");
  require(opts.max_iter >= 0 && opts.lambda_tol >= 0.0, "varpro_refine: invalid options");

  const Layout layout = layout_of(pm);
  const Vector& t = data.time.points();
  const Matrix& x = data.values;
  RefineResult result;

  Vector params = params_of(pm);
  Projection proj = layout.n_params() > 0 ? project(x, basis(layout, params, t)) : Projection{};
  if (layout.n_params() == 0) {
    result.model = pm;
    result.initial_residual = result.final_residual = x.norm();
    result.converged = true;
    return result;
  }
  if (!std::isfinite(proj.norm)) fail(ErrorCode::NumericalBlowup, "varpro_refine: initial eigenvalues overflow the basis");
  result.initial_residual = proj.norm;

  const Index np = layout.n_params();
  double damping = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (proj.norm == 0.0) {
      converged = true;
      break;
    }
    const std::vector<Matrix> jac = kaufman_jacobian(layout, params, t, proj);
    Matrix jtj(np, np);
    Vector grad(np);
    for (Index a = 0; a < np; ++a) {
      grad(a) = (jac[a].array() * proj.residual.array()).sum();
      for (Index b = 0; b <= a; ++b) jtj(a, b) = jtj(b, a) = (jac[a].array() * jac[b].array()).sum();
    }
    const Vector scale = jtj.diagonal().cwiseMax(1e-30 * std::max(1.0, jtj.diagonal().maxCoeff()));

    bool accepted = false;
    Vector gn_step;
    while (damping <= 1e12) {
      Matrix lhs = jtj;
      lhs.diagonal() += damping * scale;
      const Vector step = lhs.ldlt().solve(-grad);
      if (gn_step.size() == 0) gn_step = step;
      const Vector trial = params + step;
      Projection cand = project(x, basis(layout, trial, t));
      if (cand.norm < proj.norm) {
        const double improvement = (proj.norm - cand.norm) / proj.norm;
        params = trial;
        proj = std::move(cand);
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        if (improvement < opts.lambda_tol) converged = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      // No decrease at any damping: stationary up to rounding if the first step was negligible.
      converged = gn_step.allFinite() && gn_step.norm() <= 1e-9 * (1.0 + params.norm());
      break;
    }
    if (converged) {
      ++iter;
      break;
    }
  }

  // Fold omega into [0, pi/dt]: aliases are indistinguishable on the sample grid, and the
  // defining member of every pair keeps omega >= 0. The span on the samples is unchanged.
  bool flipped = false;
  const double nyquist = std::numbers::pi / data.time.spacing();
  for (std::size_t p = 0; p < layout.pairs.size(); ++p) {
    const double omega = params(2 * p + 1);
    double folded = std::remainder(omega, 2.0 * nyquist);
    folded = std::abs(folded);
    if (folded != omega) {
      params(2 * p + 1) = folded;
      flipped = true;
    }
  }
  if (flipped) proj = project(x, basis(layout, params, t));

  result.model = rebuild(pm, layout, params, proj);
  result.final_residual = proj.norm;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace phasordmd
