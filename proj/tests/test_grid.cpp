#include "phasordmd/grid.hpp"

#include "testutil.hpp"

using namespace phasordmd;

TEST(Grid1D, LinspaceEndpointsAndSpacing) {
  const Grid1D g = Grid1D::linspace(-5.0, 5.0, 11);
  EXPECT_EQ(g.size(), 11);
  EXPECT_DOUBLE_EQ(g.front(), -5.0);
  EXPECT_DOUBLE_EQ(g.back(), 5.0);
  EXPECT_NEAR(g.spacing(), 1.0, 1e-15);
}

TEST(Grid1D, ArangeKeepsExactStep) {
  const Grid1D g = Grid1D::arange(0.0, 0.05, 1280);
  EXPECT_EQ(g.spacing(), 0.05);
  EXPECT_DOUBLE_EQ(g.back(), 0.05 * 1279);
}

TEST(Grid1D, RejectsNonMonotoneAndNonUniform) {
  Vector down(3);
  down << 0.0, -1.0, -2.0;
  EXPECT_ERROR_CODE(Grid1D{down}, ErrorCode::InvalidArgument);
  Vector uneven(4);
  uneven << 0.0, 1.0, 2.5, 3.0;
  EXPECT_ERROR_CODE(Grid1D{uneven}, ErrorCode::InvalidArgument);
  EXPECT_ERROR_CODE(Grid1D{Vector()}, ErrorCode::InvalidArgument);
}

TEST(Grid1D, SliceAndLocal) {
  const Grid1D g = Grid1D::arange(1.0, 0.25, 10);
  const Grid1D s = g.slice(4, 3);
  EXPECT_EQ(s.size(), 3);
  EXPECT_DOUBLE_EQ(s.front(), 2.0);
  const Grid1D l = s.local();
  EXPECT_EQ(l.front(), 0.0);
  EXPECT_DOUBLE_EQ(l.back(), 0.5);
  EXPECT_EQ(l.spacing(), 0.25);
  EXPECT_ERROR_CODE(g.slice(8, 3), ErrorCode::InvalidArgument);
}

TEST(SnapshotMatrix, ValidatesShapeAndValues) {
  const Grid1D x = Grid1D::linspace(0, 1, 3);
  const Grid1D t = Grid1D::linspace(0, 1, 4);
  EXPECT_NO_THROW(SnapshotMatrix(Matrix::Zero(3, 4), x, t));
  EXPECT_ERROR_CODE(SnapshotMatrix(Matrix::Zero(4, 3), x, t), ErrorCode::InvalidArgument);
  Matrix bad = Matrix::Zero(3, 4);
  bad(1, 2) = std::nan("");
  EXPECT_ERROR_CODE(SnapshotMatrix(bad, x, t), ErrorCode::InvalidArgument);
  EXPECT_ERROR_CODE(SnapshotMatrix(Matrix::Zero(3, 1), x, Grid1D::arange(0, 1, 1)), ErrorCode::InvalidArgument);
}

TEST(RelativeError, FrobeniusRatio) {
  Matrix truth(2, 2);
  truth << 3, 0, 0, 4;
  Matrix approx = truth;
  approx(0, 0) = 2;
  EXPECT_DOUBLE_EQ(relative_error(approx, truth), 1.0 / 5.0);
  EXPECT_EQ(relative_error(truth, truth), 0.0);
}
