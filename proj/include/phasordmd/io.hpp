#pragma once

#include "phasordmd/dmd.hpp"
#include "phasordmd/multires.hpp"
#include "phasordmd/phasor.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace phasordmd::io {

/// Comma-separated matrix: the header row holds column coordinates (time), the first column
/// holds row coordinates (space), the corner cell is the literal `x\t`, values carry 17
/// significant digits. Missing entries are written as `nan`.
struct MatrixCsv {
  Vector rows;  // space coordinates
  Vector cols;  // time coordinates
  Matrix values;

  static MatrixCsv from(const SnapshotMatrix& data);
  static MatrixCsv from(const Matrix& values, const Grid1D& space, const Grid1D& time);
  /// Column vector over space, stored with a single column coordinate of 0.
  static MatrixCsv column(const Vector& values, const Grid1D& space);
  /// Row vector over time, stored with a single row coordinate of 0.
  static MatrixCsv row(const Vector& values, const Grid1D& time);

  SnapshotMatrix to_snapshot() const;
};

inline constexpr std::string_view kCornerCell = "x\\t";

std::string format_matrix(const MatrixCsv& m);
MatrixCsv parse_matrix(std::string_view text, const std::string& source = "<string>");
void write_matrix(const std::filesystem::path& path, const MatrixCsv& m);
MatrixCsv read_matrix(const std::filesystem::path& path);

inline constexpr int kSchemaVersion = 1;

struct ModelDocument {
  int schema_version = kSchemaVersion;
  PairedModel model;
  Grid1D space;
  Grid1D time;
  PhasorModel phasor;  // recomputed from the raw modes and verified on load
};

std::string format_model(const PairedModel& model, const Grid1D& space, const Grid1D& time);
ModelDocument parse_model(std::string_view text);
void write_model(const std::filesystem::path& path, const PairedModel& model, const Grid1D& space, const Grid1D& time);
ModelDocument read_model(const std::filesystem::path& path);

std::string format_decomposition(const mr::MrDecomposition& d);
mr::MrDecomposition parse_decomposition(std::string_view text);
void write_decomposition(const std::filesystem::path& path, const mr::MrDecomposition& d);
mr::MrDecomposition read_decomposition(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Shortest-round-trip-safe formatting with 17 significant digits, independent of locale.
std::string format_double(double v);

}  // namespace phasordmd::io
