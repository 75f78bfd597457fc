#include "phasordmd/dmd.hpp"

#include "phasordmd/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace phasordmd {

namespace {

CMatrix time_dynamics(const CVector& eigenvalues, const Vector& t) {
  CMatrix dyn(eigenvalues.size(), t.size());
  for (Index j = 0; j < eigenvalues.size(); ++j)
    for (Index k = 0; k < t.size(); ++k) dyn(j, k) = std::exp(eigenvalues(j) * t(k));
  return dyn;
}

}  // namespace

DmdModel exact_dmd(const SnapshotMatrix& data, Index rank) {
  const Index n = data.n_space();
  const Index m = data.n_time();
  require(data.values.allFinite(), "exact_dmd: non-finite input");
  require(rank >= 1 && rank <= std::min(n, m - 1),
          "exact_dmd: rank must lie in [1, min(n_space, n_time - 1)], got " + std::to_string(rank));

  const Matrix x1 = data.values.leftCols(m - 1);
  const Matrix x2 = data.values.rightCols(m - 1);
  Eigen::BDCSVD<Matrix> svd(x1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (!(sigma(0) > 0.0) || sigma(rank - 1) < 1e-12 * sigma(0)) {
    std::ostringstream msg;
    msg << "singular value " << rank - 1 << " (" << sigma(rank - 1) << ") is below 1e-12 * sigma_0";
    fail(ErrorCode::RankDeficiency, msg.str());
  }

  const Matrix u = svd.matrixU().leftCols(rank);
  const Matrix v = svd.matrixV().leftCols(rank);
  const Vector inv_sigma = sigma.head(rank).cwiseInverse();
  const Matrix x2_v_sinv = x2 * v * inv_sigma.asDiagonal();
  const Matrix atilde = u.transpose() * x2_v_sinv;

  Eigen::EigenSolver<Matrix> eig(atilde, true);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NumericalBlowup, "exact_dmd: eigensolver failed");

  DmdModel model;
  model.dt = data.time.spacing();
  model.modes = x2_v_sinv.cast<Complex>() * eig.eigenvectors();
  model.eigenvalues.resize(rank);
  for (Index j = 0; j < rank; ++j) {
    const Complex discrete = eig.eigenvalues()(j);
    if (discrete == Complex(0.0, 0.0)) fail(ErrorCode::RankDeficiency, "exact_dmd: zero discrete eigenvalue");
    model.eigenvalues(j) = std::log(discrete) / model.dt;
  }
  if (!model.modes.allFinite() || !model.eigenvalues.allFinite())
    fail(ErrorCode::NumericalBlowup, "exact_dmd: non-finite modes or eigenvalues");

  const AmplitudeFit fit = compute_amplitudes(model, data);
  model.amplitudes = fit.amplitudes;
  model.ill_conditioned = fit.ill_conditioned;
  return model;
}

AmplitudeFit compute_amplitudes(const DmdModel& model, const SnapshotMatrix& data) {
  const Index n = data.n_space();
  const Index m = data.n_time();
  const Index r = model.rank();
  require(model.modes.rows() == n && model.modes.cols() == r, "compute_amplitudes: mode shape mismatch");

  AmplitudeFit out;
  out.amplitudes = CVector::Zero(r);
  if (r == 0) return out;

  const CMatrix dyn = time_dynamics(model.eigenvalues, data.time.points());
  CMatrix design(n * m, r);
  for (Index j = 0; j < r; ++j)
    for (Index k = 0; k < m; ++k) design.block(k * n, j, n, 1) = model.modes.col(j) * dyn(j, k);
  CVector rhs(n * m);
  for (Index k = 0; k < m; ++k) rhs.segment(k * n, n) = data.values.col(k).cast<Complex>();

  Eigen::HouseholderQR<CMatrix> qr(design);
  const CMatrix rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<CMatrix> rsvd(rfac);
  const Vector& sv = rsvd.singularValues();
  out.condition = sv(r - 1) > 0.0 ? sv(0) / sv(r - 1) : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition <= 1e12);

  if (out.ill_conditioned) {
    out.amplitudes = design.completeOrthogonalDecomposition().solve(rhs);
  } else {
    out.amplitudes = qr.solve(rhs);
  }
  return out;
}

PairedModel enforce_conjugate_pairs(const DmdModel& model, const PairingOptions& opts) {
  require(opts.pair_tol > 0.0 && opts.dc_tol >= 0.0, "enforce_conjugate_pairs: tolerances must be positive");
  const Index r = model.rank();
  PairedModel pm;
  pm.model = model;
  if (r == 0) return pm;

  const CVector& lam = model.eigenvalues;
  const double max_abs = lam.cwiseAbs().maxCoeff();
  const double dc_threshold = opts.dc_tol * max_abs;
  auto is_dc = [&](Index i) { return std::abs(lam(i).imag()) <= dc_threshold; };

  std::vector<bool> matched(static_cast<std::size_t>(r), false);
  for (Index i = 0; i < r; ++i) {
    if (matched[i] || is_dc(i) || lam(i).imag() <= 0.0) continue;
    Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < r; ++j) {
      if (j == i || matched[j] || is_dc(j)) continue;
      const double dist = std::abs(lam(i) - std::conj(lam(j)));
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best < 0 || best_dist > opts.pair_tol * std::abs(lam(i))) continue;

    const Index j = best;
    matched[i] = matched[j] = true;
    pm.pairs.emplace_back(i, j);

    CMatrix& phi = pm.model.modes;
    CVector& b = pm.model.amplitudes;
    // Rotate and rescale member j (compensating b_j) so conj(phi_j) lines up with phi_i.
    const Complex overlap = phi.col(i).dot(phi.col(j).conjugate());
    const double ni = phi.col(i).norm();
    const double nj = phi.col(j).norm();
    Complex gauge(1.0, 0.0);
    if (std::abs(overlap) > 0.0) gauge = std::conj(overlap) / std::abs(overlap);
    if (ni > 0.0 && nj > 0.0) gauge *= ni / nj;
    const CVector phi_j = phi.col(j) * gauge;
    const Complex b_j = b(j) / gauge;

    const Complex lam_a = 0.5 * (lam(i) + std::conj(lam(j)));
    const CVector phi_a = 0.5 * (phi.col(i) + phi_j.conjugate());
    const Complex b_a = 0.5 * (b(i) + std::conj(b_j));
    pm.model.eigenvalues(i) = lam_a;
    pm.model.eigenvalues(j) = std::conj(lam_a);
    phi.col(i) = phi_a;
    phi.col(j) = phi_a.conjugate();
    b(i) = b_a;
    b(j) = std::conj(b_a);
  }

  for (Index i = 0; i < r; ++i) {
    if (matched[i]) continue;
    if (is_dc(i)) {
      pm.dc_modes.push_back(i);
      pm.model.eigenvalues(i) = Complex(lam(i).real(), 0.0);
    } else {
      pm.unpaired.push_back(i);
    }
  }
  if (!pm.unpaired.empty() && !opts.allow_unpaired) {
    std::ostringstream msg;
    msg << "no conjugate partner within tolerance for mode indices";
    for (Index i : pm.unpaired) msg << ' ' << i << " (lambda=" << lam(i) << ")";
    fail(ErrorCode::Strictness, msg.str());
  }
  return pm;
}

PairedModel normalize_modes(const PairedModel& pm) {
  PairedModel out = pm;
  CMatrix& phi = out.model.modes;
  CVector& b = out.model.amplitudes;
  auto normalize_one = [&](Index i) {
    const double norm = phi.col(i).norm();
    if (!(norm > 0.0)) fail(ErrorCode::DegenerateMode, "normalize_modes: mode " + std::to_string(i) + " has zero norm");
    const double mag = std::abs(b(i));
    const Complex phase = mag > 0.0 ? b(i) / mag : Complex(1.0, 0.0);
    phi.col(i) *= phase / norm;
    b(i) = Complex(mag * norm, 0.0);
  };
  for (const auto& [a, c] : out.pairs) {
    normalize_one(a);
    phi.col(c) = phi.col(a).conjugate();
    b(c) = b(a);
  }
  for (Index i : out.dc_modes) normalize_one(i);
  for (Index i : out.unpaired) normalize_one(i);
  return out;
}

CMatrix reconstruct(const DmdModel& model, const Grid1D& t) {
  const Index n = model.modes.rows();
  if (model.rank() == 0) return CMatrix::Zero(n, t.size());
  const CMatrix dyn = time_dynamics(model.eigenvalues, t.points());
  return model.modes * model.amplitudes.asDiagonal() * dyn;
}

SnapshotMatrix time_delay_embed(const SnapshotMatrix& data, Index delays) {
  require(delays >= 1, "time_delay_embed: delays must be >= 1");
  require(delays < data.n_time(), "time_delay_embed: delays must be < n_time");
  if (delays == 1) return data;
  const Index n = data.n_space();
  const Index cols = data.n_time() - delays + 1;
  Matrix out(delays * n, cols);
  for (Index k = 0; k < delays; ++k) out.middleRows(k * n, n) = data.values.middleCols(k, cols);
  return SnapshotMatrix(std::move(out), Grid1D::arange(0.0, 1.0, delays * n), data.time.slice(0, cols));
}

DmdModel extract_first_delay(const DmdModel& model, Index n_space) {
  require(n_space >= 1 && model.modes.rows() % n_space == 0,
          "extract_first_delay: mode length " + std::to_string(model.modes.rows()) + " is not divisible by " +
              std::to_string(n_space));
  DmdModel out = model;
  out.modes = model.modes.topRows(n_space);
  return out;
}

FitResult fit(const SnapshotMatrix& data, const FitOptions& opts) {
  require(opts.rank >= 1, "fit: rank must be >= 1");
  FitResult result;
  const SnapshotMatrix embedded = time_delay_embed(data, opts.delays);
  const DmdModel raw = exact_dmd(embedded, opts.rank);
  if (raw.ill_conditioned) result.warnings.emplace_back("amplitude least-squares problem is ill-conditioned");
  PairedModel pm = normalize_modes(enforce_conjugate_pairs(raw, opts.pairing));
  if (!pm.unpaired.empty()) result.warnings.emplace_back("model contains unpaired oscillatory modes");
  if (opts.refine && pm.unpaired.empty()) {
    RefineResult refined = varpro_refine(pm, embedded, opts.refine_opts);
    result.refine_converged = refined.converged;
    result.refine_iterations = refined.iterations;
    if (!refined.converged) result.warnings.emplace_back("variable projection refinement did not converge");
    pm = std::move(refined.model);
  } else if (opts.refine) {
    result.warnings.emplace_back("refinement skipped: unpaired modes present");
  }
  pm.model = extract_first_delay(pm.model, data.n_space());
  pm = normalize_modes(pm);
  result.relative_error = relative_error(reconstruct(pm.model, data.time).real(), data.values);
  result.model = std::move(pm);
  return result;
}

}  // namespace phasordmd
