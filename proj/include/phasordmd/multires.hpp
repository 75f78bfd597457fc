#pragma once

#include "phasordmd/dmd.hpp"
#include "phasordmd/phasor.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace phasordmd::mr {

struct LevelConfig {
  Index window_length = 60;
  Index stride = 6;
  Index rank = 6;
  // Modes with |omega| below this are unresolved; NaN selects 2 pi / (window_length dt).
  double freq_cut = std::numeric_limits<double>::quiet_NaN();
  // Variable projection refinement of every window fit.
  bool refine = true;
};

/// Stride is round(stride_frac * window_length), at least one sample.
LevelConfig make_level(Index window_length, double stride_frac = 0.1, Index rank = 6);
/// Windows of 60, 120 and 480 samples, 10% slide, rank 6.
std::vector<LevelConfig> default_levels();

double effective_freq_cut(const LevelConfig& cfg, double dt);

/// Half-open sample range [start, end).
struct WindowRange {
  Index start = 0;
  Index end = 0;
  Index length() const { return end - start; }
  bool operator==(const WindowRange&) const = default;
};

/// Starts at 0, stride, 2 stride, ...; a final right-aligned window covers any leftover tail.
std::vector<WindowRange> sliding_windows(Index n_time, const LevelConfig& cfg);

struct WindowFit {
  WindowRange range;
  Vector mean;  // temporal mean removed before fitting
  PairedModel model;
  bool failed = false;
  std::string error;
};

/// Fits every window independently on window-local time (first sample at t = 0).
std::vector<WindowFit> fit_level(const SnapshotMatrix& data, const LevelConfig& cfg, int threads = 1);

enum class Taper { Hann, Flat };

/// Per-window weights over each window's samples, normalized to sum to one at every time index.
std::vector<Vector> stitch_weights(std::span<const WindowRange> spans, Index n_time, Taper taper = Taper::Hann);

/// Weighted average of overlapping window matrices (each n x window length).
Matrix stitch(std::span<const Matrix> window_matrices, std::span<const WindowRange> spans, Index n_time,
              Taper taper = Taper::Hann);

/// Retained conjugate pair from window k of level l; phasor terms use window-local time.
struct WindowedMode {
  Index pair = 0;    // j
  Index window = 0;  // k
  Index level = 0;   // l
  PhasorMode phasor;
  WindowRange range;
  double t_start = 0.0;
  double t_end = 0.0;
  int band = -1;
};

struct LevelSeparation {
  Matrix lowfreq;   // stitched means + unresolved modes
  Matrix resolved;  // stitched retained modes
  std::vector<WindowedMode> retained;
};

LevelSeparation scale_separate(std::span<const WindowFit> fits, const LevelConfig& cfg, const Grid1D& t,
                               Index level = 0, Taper taper = Taper::Hann);

struct BandAssignment {
  std::vector<int> labels;        // sorted so band 0 is the slowest
  std::vector<double> centroids;  // geometric-mean |omega| of each band
  int n_bands = 0;
  std::vector<std::string> warnings;
};

/// Exact 1-D k-means on log|omega|; n_bands <= 0 picks k in 2..6 by silhouette.
BandAssignment assign_bands(std::span<const double> omegas, int n_bands = 0);

struct LevelResult {
  LevelConfig config;
  double freq_cut = 0.0;
  std::vector<WindowRange> windows;
  std::vector<Index> failed_windows;
  Matrix lowfreq;  // input to the next level
};

struct DecomposeOptions {
  int n_bands = 0;  // 0 = auto
  int threads = 1;
  Taper taper = Taper::Hann;
};

struct MrDecomposition {
  Grid1D space;
  Grid1D time;
  Taper taper = Taper::Hann;
  std::vector<LevelResult> levels;
  std::vector<WindowedMode> modes;
  int n_bands = 0;
  std::vector<double> band_centroids;
  std::vector<std::string> warnings;

  /// Low-frequency content left after the last level (the slowest band).
  const Matrix& residual() const { return levels.back().lowfreq; }
  std::vector<WindowedMode> band(int p) const;
};

MrDecomposition decompose(const SnapshotMatrix& data, const std::vector<LevelConfig>& levels,
                          const DecomposeOptions& opts = {});

// Summed phasor terms of a band, evaluated on the global time grid t.
// Window k contributes at sample g only when g lies in its range; t_loc = t_g - t_start(k).

/// beta(t) = sum b exp(mu t_loc).
Vector band_amplitude(std::span<const WindowedMode> band, const Grid1D& t);
/// S_p = sum w S / beta with w = b exp(mu t_loc); NaN where beta == 0.
Matrix band_spatial_pattern(std::span<const WindowedMode> band, const Grid1D& t);
/// W_p = sum w cos(omega t_loc + varphi) / beta; NaN where beta == 0.
Matrix band_waveform(std::span<const WindowedMode> band, const Grid1D& t);

/// Stitched sum of pair reconstructions using each level's taper weights.
Matrix band_reconstruct(std::span<const WindowedMode> band, const MrDecomposition& decomposition);

enum class Weighting { Flat, Taper };

struct BandSummary {
  Vector beta;
  Matrix S;
  Matrix W;
  Matrix recon;
};

/// Flat weighting follows the plain sums above; Taper additionally multiplies every window's
/// weight by its normalized stitch weight so 2 beta S_p W_p is directly comparable to recon.
BandSummary summarize_band(const MrDecomposition& decomposition, int band, Weighting weighting = Weighting::Flat);

/// Sum of every band reconstruction plus the residual.
Matrix total_reconstruction(const MrDecomposition& decomposition);

/// Index of the truth component with the largest normalized inner product with each part.
std::vector<int> match_components(std::span<const Matrix> parts, std::span<const Matrix> truths);

/// Sums the parts matched to each truth component (zero where nothing matched).
std::vector<Matrix> group_components(std::span<const Matrix> parts, std::span<const Matrix> truths);

}  // namespace phasordmd::mr
