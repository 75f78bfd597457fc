#include "phasordmd/grid.hpp"

#include "phasordmd/error.hpp"

#include <cmath>
#include <string>

namespace phasordmd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::NumericalBlowup: return "numerical blowup";
    case ErrorCode::RankDeficiency: return "rank deficiency";
    case ErrorCode::Strictness: return "unpaired oscillatory mode";
    case ErrorCode::DegenerateMode: return "degenerate mode";
    case ErrorCode::InvalidState: return "invalid state";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::LevelFailure: return "level failure";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Integrity: return "integrity error";
    case ErrorCode::Io: return "i/o error";
  }
  return "error";
}

Grid1D::Grid1D(Vector points) : points_(std::move(points)) {
  const Index n = points_.size();
  require(n >= 1, "grid must be nonempty");
  require(points_.allFinite(), "grid contains non-finite coordinates");
  if (n == 1) {
    spacing_ = 1.0;
    return;
  }
  spacing_ = (points_(n - 1) - points_(0)) / static_cast<double>(n - 1);
  require(spacing_ > 0.0, "grid must be strictly increasing");
  for (Index i = 1; i < n; ++i) {
    const double step = points_(i) - points_(i - 1);
    require(step > 0.0, "grid must be strictly increasing");
    require(std::abs(step - spacing_) <= 1e-12 * std::max(spacing_, std::abs(points_(i))) + 1e-12 * spacing_,
            "grid spacing is not uniform at index " + std::to_string(i));
  }
}

Grid1D::Grid1D(Vector points, double spacing) : Grid1D(std::move(points)) {
  require(spacing > 0.0, "grid spacing must be positive");
  require(size() == 1 || std::abs(spacing - spacing_) <= 1e-12 * spacing, "grid spacing does not match its points");
  spacing_ = spacing;
}

Grid1D Grid1D::linspace(double lo, double hi, Index n) {
  require(n >= 2, "linspace needs at least two points");
  return Grid1D(Vector::LinSpaced(n, lo, hi));
}

Grid1D Grid1D::arange(double start, double step, Index n) {
  require(n >= 1 && step > 0.0, "arange needs n >= 1 and step > 0");
  Vector p(n);
  for (Index i = 0; i < n; ++i) p(i) = start + step * static_cast<double>(i);
  Grid1D g(std::move(p));
  g.spacing_ = step;
  return g;
}

Grid1D Grid1D::slice(Index start, Index count) const {
  require(start >= 0 && count >= 1 && start + count <= size(), "grid slice out of range");
  Grid1D g;
  g.points_ = points_.segment(start, count);
  g.spacing_ = spacing_;
  return g;
}

Grid1D Grid1D::local() const {
  Grid1D g;
  g.points_ = points_.array() - points_(0);
  g.points_(0) = 0.0;
  g.spacing_ = spacing_;
  return g;
}

SnapshotMatrix::SnapshotMatrix(Matrix v, Grid1D s, Grid1D t)
    : values(std::move(v)), space(std::move(s)), time(std::move(t)) {
  require(values.rows() == space.size(), "snapshot rows do not match the space grid");
  require(values.cols() == time.size(), "snapshot columns do not match the time grid");
  require(values.cols() >= 2, "snapshot matrix needs at least two time samples");
  require(values.allFinite(), "snapshot matrix contains non-finite values");
}

double relative_error(const Eigen::Ref<const Matrix>& approx, const Eigen::Ref<const Matrix>& truth) {
  require(approx.rows() == truth.rows() && approx.cols() == truth.cols(), "relative_error: shape mismatch");
  const double denom = truth.norm();
  const double num = (approx - truth).norm();
  return denom > 0.0 ? num / denom : num;
}

}  // namespace phasordmd
