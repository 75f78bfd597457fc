#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace phasordmd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Uniformly spaced, strictly increasing coordinate axis.
class Grid1D {
 public:
  Grid1D() = default;

  /// Validates strict monotonicity and uniform spacing (1e-12 relative).
  explicit Grid1D(Vector points);
  /// As above, but keeps the given spacing (used when deserializing).
  Grid1D(Vector points, double spacing);

  /// `n` points from `lo` to `hi` inclusive.
  static Grid1D linspace(double lo, double hi, Index n);
  /// `n` points starting at `start` with step `step`.
  static Grid1D arange(double start, double step, Index n);

  const Vector& points() const { return points_; }
  double spacing() const { return spacing_; }
  Index size() const { return points_.size(); }
  bool empty() const { return points_.size() == 0; }
  double front() const { return points_(0); }
  double back() const { return points_(points_.size() - 1); }
  double operator[](Index i) const { return points_(i); }

  /// Contiguous sub-grid [start, start + count).
  Grid1D slice(Index start, Index count) const;
  /// Same spacing and size, shifted so the first point is zero.
  Grid1D local() const;

  bool operator==(const Grid1D& other) const {
    return spacing_ == other.spacing_ && points_ == other.points_;
  }

 private:
  Vector points_;
  double spacing_ = 0.0;
};

/// Real space x time data with its coordinate grids.
struct SnapshotMatrix {
  Matrix values;  // n_space x n_time
  Grid1D space;
  Grid1D time;

  SnapshotMatrix() = default;
  SnapshotMatrix(Matrix v, Grid1D s, Grid1D t);

  Index n_space() const { return values.rows(); }
  Index n_time() const { return values.cols(); }
};

/// ||approx - truth||_F / ||truth||_F. Returns the absolute norm when truth is zero.
double relative_error(const Eigen::Ref<const Matrix>& approx, const Eigen::Ref<const Matrix>& truth);

}  // namespace phasordmd
