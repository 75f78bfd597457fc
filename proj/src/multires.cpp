#include "phasordmd/multires.hpp"

#include "phasordmd/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

namespace phasordmd::mr {

LevelConfig make_level(Index window_length, double stride_frac, Index rank) {
  require(window_length >= 2, "make_level: window length must be >= 2");
  require(stride_frac > 0.0 && stride_frac <= 1.0, "make_level: stride fraction must lie in (0, 1]");
  LevelConfig cfg;
  cfg.window_length = window_length;
  cfg.stride = std::max<Index>(1, static_cast<Index>(std::lround(stride_frac * static_cast<double>(window_length))));
  cfg.rank = rank;
  return cfg;
}

std::vector<LevelConfig> default_levels() { return {make_level(60), make_level(120), make_level(480)}; }

double effective_freq_cut(const LevelConfig& cfg, double dt) {
  if (!std::isnan(cfg.freq_cut)) return cfg.freq_cut;
  return 2.0 * std::numbers::pi / (static_cast<double>(cfg.window_length) * dt);
}

std::vector<WindowRange> sliding_windows(Index n_time, const LevelConfig& cfg) {
  require(cfg.window_length >= 1, "sliding_windows: window length must be positive");
  require(cfg.window_length <= n_time, "sliding_windows: window length " + std::to_string(cfg.window_length) +
                                           " exceeds the series length " + std::to_string(n_time));
  require(cfg.stride >= 1 && cfg.stride <= cfg.window_length, "sliding_windows: stride must lie in [1, window_length]");
  std::vector<WindowRange> out;
  Index start = 0;
  for (; start + cfg.window_length <= n_time; start += cfg.stride) out.push_back({start, start + cfg.window_length});
  if (out.back().end < n_time) out.push_back({n_time - cfg.window_length, n_time});
  return out;
}

namespace {

WindowFit fit_window(const SnapshotMatrix& data, const WindowRange& range, const LevelConfig& cfg) {
  WindowFit out;
  out.range = range;
  const Matrix block = data.values.middleCols(range.start, range.length());
  out.mean = block.rowwise().mean();
  const Matrix centred = block.colwise() - out.mean;
  const Grid1D local = data.time.slice(range.start, range.length()).local();

  out.model.model.dt = data.time.spacing();
  out.model.model.modes = CMatrix::Zero(data.n_space(), 0);
  if (!(centred.norm() > 1e-12 * std::max(1.0, block.norm()))) return out;

  const SnapshotMatrix window(centred, data.space, local);
  Index rank = std::min({cfg.rank, data.n_space(), range.length() - 1});
  try {
    while (rank >= 1) {
      try {
        PairedModel pm = normalize_modes(enforce_conjugate_pairs(exact_dmd(window, rank)));
        if (cfg.refine) pm = varpro_refine(pm, window).model;
        out.model = std::move(pm);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficiency) throw;
        --rank;
      }
    }
  } catch (const Error& e) {
    out.failed = true;
    out.error = e.what();
    out.model = PairedModel{};
    out.model.model.dt = data.time.spacing();
    out.model.model.modes = CMatrix::Zero(data.n_space(), 0);
  }
  return out;
}

}  // namespace

std::vector<WindowFit> fit_level(const SnapshotMatrix& data, const LevelConfig& cfg, int threads) {
  require(cfg.rank >= 1, "fit_level: rank must be >= 1");
  const std::vector<WindowRange> windows = sliding_windows(data.n_time(), cfg);
  std::vector<WindowFit> fits(windows.size());

  const std::size_t n_workers = std::clamp<std::size_t>(threads <= 0 ? std::thread::hardware_concurrency() : threads,
                                                        1, windows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < windows.size(); i = next++) fits[i] = fit_window(data, windows[i], cfg);
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  const auto failed = std::count_if(fits.begin(), fits.end(), [](const WindowFit& f) { return f.failed; });
  if (4 * static_cast<std::size_t>(failed) > fits.size())
    fail(ErrorCode::LevelFailure, std::to_string(failed) + " of " + std::to_string(fits.size()) +
                                      " windows failed (first: " +
                                      std::find_if(fits.begin(), fits.end(), [](const WindowFit& f) { return f.failed; })->error +
                                      ")");
  return fits;
}

std::vector<Vector> stitch_weights(std::span<const WindowRange> spans, Index n_time, Taper taper) {
  Vector total = Vector::Zero(n_time);
  std::vector<Vector> weights;
  weights.reserve(spans.size());
  for (const WindowRange& w : spans) {
    require(w.start >= 0 && w.end <= n_time && w.length() >= 1, "stitch: window span out of range");
    const Index len = w.length();
    Vector wt(len);
    for (Index i = 0; i < len; ++i) {
      if (taper == Taper::Flat) {
        wt(i) = 1.0;
      } else {
        const double s = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(len));
        wt(i) = s * s;
      }
    }
    total.segment(w.start, len) += wt;
    weights.push_back(std::move(wt));
  }
  for (Index g = 0; g < n_time; ++g)
    if (!(total(g) > 0.0)) fail(ErrorCode::Coverage, "stitch: time index " + std::to_string(g) + " is not covered");
  for (std::size_t k = 0; k < spans.size(); ++k)
    weights[k] = weights[k].cwiseQuotient(total.segment(spans[k].start, spans[k].length()));
  return weights;
}

Matrix stitch(std::span<const Matrix> window_matrices, std::span<const WindowRange> spans, Index n_time, Taper taper) {
  require(window_matrices.size() == spans.size(), "stitch: matrix and span counts differ");
  require(!spans.empty(), "stitch: no windows");
  const std::vector<Vector> weights = stitch_weights(spans, n_time, taper);
  const Index n = window_matrices.front().rows();
  Matrix out = Matrix::Zero(n, n_time);
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const Matrix& m = window_matrices[k];
    require(m.rows() == n && m.cols() == spans[k].length(), "stitch: window matrix shape mismatch");
    out.middleCols(spans[k].start, spans[k].length()) += m * weights[k].asDiagonal();
  }
  return out;
}

LevelSeparation scale_separate(std::span<const WindowFit> fits, const LevelConfig& cfg, const Grid1D& t, Index level,
                               Taper taper) {
  require(!fits.empty(), "scale_separate: no window fits");
  const double cut = effective_freq_cut(cfg, t.spacing());
  const Index n = fits.front().mean.size();

  std::vector<Matrix> low_parts, high_parts;
  std::vector<WindowRange> spans;
  LevelSeparation out;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const WindowFit& fit = fits[k];
    const Grid1D local = t.slice(fit.range.start, fit.range.length()).local();
    Matrix low = fit.mean.replicate(1, fit.range.length());
    Matrix high = Matrix::Zero(n, fit.range.length());
    if (!fit.failed && fit.model.model.rank() > 0) {
      const PhasorModel phasors = phasor_decompose(fit.model);
      for (const DcMode& dc : phasors.dc) low += phasor_reconstruct_dc(dc, local);
      for (const PhasorMode& mode : phasors.modes) {
        const Matrix part = phasor_reconstruct_pair(mode, local);
        if (std::abs(mode.omega) < cut) {
          low += part;
          continue;
        }
        high += part;
        WindowedMode wm;
        wm.pair = mode.pair_id;
        wm.window = static_cast<Index>(k);
        wm.level = level;
        wm.phasor = mode;
        wm.range = fit.range;
        wm.t_start = t[fit.range.start];
        wm.t_end = t[fit.range.end - 1];
        out.retained.push_back(std::move(wm));
      }
    }
    low_parts.push_back(std::move(low));
    high_parts.push_back(std::move(high));
    spans.push_back(fit.range);
  }
  out.lowfreq = stitch(low_parts, spans, t.size(), taper);
  out.resolved = stitch(high_parts, spans, t.size(), taper);
  return out;
}

namespace {

// Exact optimal 1-D k-means of sorted values by dynamic programming; returns cluster starts.
std::vector<std::size_t> kmeans_1d(const std::vector<double>& sorted, int k) {
  const std::size_t n = sorted.size();
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + sorted[i];
    s2[i + 1] = s2[i] + sorted[i] * sorted[i];
  }
  auto cost = [&](std::size_t i, std::size_t j) {  // inclusive [i, j]
    const double cnt = static_cast<double>(j - i + 1);
    const double sum = s1[j + 1] - s1[i];
    return std::max(0.0, (s2[j + 1] - s2[i]) - sum * sum / cnt);
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(static_cast<std::size_t>(k), std::vector<double>(n, inf));
  std::vector<std::vector<std::size_t>> arg(static_cast<std::size_t>(k), std::vector<std::size_t>(n, 0));
  for (std::size_t j = 0; j < n; ++j) dp[0][j] = cost(0, j);
  for (int c = 1; c < k; ++c) {
    for (std::size_t j = static_cast<std::size_t>(c); j < n; ++j) {
      for (std::size_t i = static_cast<std::size_t>(c); i <= j; ++i) {
        const double v = dp[c - 1][i - 1] + cost(i, j);
        if (v < dp[c][j]) {
          dp[c][j] = v;
          arg[c][j] = i;
        }
      }
    }
  }
  std::vector<std::size_t> starts(static_cast<std::size_t>(k), 0);
  std::size_t j = n - 1;
  for (int c = k - 1; c >= 1; --c) {
    starts[c] = arg[c][j];
    j = starts[c] - 1;
  }
  return starts;
}

std::vector<int> labels_from_starts(const std::vector<std::size_t>& starts, std::size_t n) {
  std::vector<int> labels(n, 0);
  for (std::size_t c = 0; c < starts.size(); ++c) {
    const std::size_t end = c + 1 < starts.size() ? starts[c + 1] : n;
    for (std::size_t i = starts[c]; i < end; ++i) labels[i] = static_cast<int>(c);
  }
  return labels;
}

double silhouette(const std::vector<double>& sorted, const std::vector<int>& labels, int k) {
  const std::size_t n = sorted.size();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[l];
  double total = 0.0;
  std::vector<double> dist(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(dist.begin(), dist.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) dist[labels[j]] += std::abs(sorted[i] - sorted[j]);
    const int own = labels[i];
    if (sizes[own] <= 1) continue;
    const double a = dist[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, dist[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace

BandAssignment assign_bands(std::span<const double> omegas, int n_bands) {
  require(!omegas.empty(), "assign_bands: no modes to assign");
  const std::size_t n = omegas.size();
  std::vector<double> logw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::abs(omegas[i]);
    require(w > 0.0 && std::isfinite(w), "assign_bands: frequencies must be finite and nonzero");
    logw[i] = std::log(w);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logw[a] < logw[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = logw[order[i]];
  int distinct = 1;
  for (std::size_t i = 1; i < n; ++i)
    if (sorted[i] != sorted[i - 1]) ++distinct;

  BandAssignment out;
  int k = n_bands;
  if (k <= 0) {
    if (distinct < 2) {
      k = 1;
      out.warnings.emplace_back("fewer than two distinct frequencies; using a single band");
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (int cand = 2; cand <= std::min(6, distinct); ++cand) {
        const double s = silhouette(sorted, labels_from_starts(kmeans_1d(sorted, cand), n), cand);
        if (s > best + 1e-12) {
          best = s;
          k = cand;
        }
      }
    }
  } else if (k > distinct) {
    out.warnings.push_back("requested " + std::to_string(k) + " bands but only " + std::to_string(distinct) +
                           " distinct frequencies; reducing");
    k = distinct;
  }

  const std::vector<int> sorted_labels = labels_from_starts(kmeans_1d(sorted, k), n);
  out.n_bands = k;
  out.labels.assign(n, 0);
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[order[i]] = sorted_labels[i];
    sums[sorted_labels[i]] += sorted[i];
    ++counts[sorted_labels[i]];
  }
  for (int c = 0; c < k; ++c) out.centroids.push_back(std::exp(sums[c] / static_cast<double>(counts[c])));
  return out;
}

std::vector<WindowedMode> MrDecomposition::band(int p) const {
  std::vector<WindowedMode> out;
  for (const WindowedMode& m : modes)
    if (m.band == p) out.push_back(m);
  return out;
}

MrDecomposition decompose(const SnapshotMatrix& data, const std::vector<LevelConfig>& levels,
                          const DecomposeOptions& opts) {
  require(!levels.empty(), "decompose: at least one level is required");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    require(levels[l].window_length <= data.n_time(),
            "decompose: window length " + std::to_string(levels[l].window_length) + " exceeds the series length " +
                std::to_string(data.n_time()));
    if (l > 0)
      require(levels[l].window_length > levels[l - 1].window_length,
              "decompose: levels must be ordered by increasing window length");
  }

  MrDecomposition out;
  out.space = data.space;
  out.time = data.time;
  out.taper = opts.taper;
  SnapshotMatrix current = data;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const std::vector<WindowFit> fits = fit_level(current, levels[l], opts.threads);
    LevelSeparation sep = scale_separate(fits, levels[l], data.time, static_cast<Index>(l), opts.taper);

    LevelResult level;
    level.config = levels[l];
    level.freq_cut = effective_freq_cut(levels[l], data.time.spacing());
    for (std::size_t k = 0; k < fits.size(); ++k) {
      level.windows.push_back(fits[k].range);
      if (fits[k].failed) level.failed_windows.push_back(static_cast<Index>(k));
    }
    if (!level.failed_windows.empty())
      out.warnings.push_back("level " + std::to_string(l) + ": " + std::to_string(level.failed_windows.size()) +
                             " window fits failed");
    level.lowfreq = std::move(sep.lowfreq);
    for (WindowedMode& m : sep.retained) out.modes.push_back(std::move(m));
    current = SnapshotMatrix(level.lowfreq, data.space, data.time);
    out.levels.push_back(std::move(level));
  }

  if (!out.modes.empty()) {
    std::vector<double> omegas;
    omegas.reserve(out.modes.size());
    for (const WindowedMode& m : out.modes) omegas.push_back(m.phasor.omega);
    BandAssignment bands = assign_bands(omegas, opts.n_bands);
    for (std::size_t i = 0; i < out.modes.size(); ++i) out.modes[i].band = bands.labels[i];
    out.n_bands = bands.n_bands;
    out.band_centroids = std::move(bands.centroids);
    for (auto& w : bands.warnings) out.warnings.push_back(std::move(w));
  }
  return out;
}

namespace {

struct Accumulated {
  Vector beta;
  Matrix s_num;
  Matrix w_num;
};

template <class WeightFn>
Accumulated accumulate(std::span<const WindowedMode> band, const Grid1D& t, WeightFn&& window_weight, bool need_fields) {
  require(!band.empty(), "band terms: band is empty");
  const Index n = band.front().phasor.S.size();
  Accumulated acc;
  acc.beta = Vector::Zero(t.size());
  if (need_fields) {
    acc.s_num = Matrix::Zero(n, t.size());
    acc.w_num = Matrix::Zero(n, t.size());
  }
  for (const WindowedMode& m : band) {
    const PhasorMode& p = m.phasor;
    require(p.S.size() == n, "band terms: inconsistent spatial lengths");
    require(m.range.start >= 0 && m.range.end <= t.size(), "band terms: window outside the time grid");
    for (Index g = m.range.start; g < m.range.end; ++g) {
      const double tl = t[g] - m.t_start;
      const double w = window_weight(m, g) * p.b * std::exp(p.mu * tl);
      acc.beta(g) += w;
      if (need_fields) {
        acc.s_num.col(g) += w * p.S;
        acc.w_num.col(g) += w * (p.omega * tl + p.varphi.array()).cos().matrix();
      }
    }
  }
  return acc;
}

Matrix divide_or_missing(const Matrix& num, const Vector& beta) {
  Matrix out = num;
  for (Index g = 0; g < beta.size(); ++g) {
    if (beta(g) > 0.0)
      out.col(g) /= beta(g);
    else
      out.col(g).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

constexpr auto kUnitWeight = [](const WindowedMode&, Index) { return 1.0; };

using LevelWeights = std::map<Index, std::vector<Vector>>;

LevelWeights level_weights(std::span<const WindowedMode> band, const MrDecomposition& d) {
  LevelWeights out;
  for (const WindowedMode& m : band) {
    if (out.contains(m.level)) continue;
    require(m.level >= 0 && m.level < static_cast<Index>(d.levels.size()), "band terms: unknown level");
    out.emplace(m.level, stitch_weights(d.levels[m.level].windows, d.time.size(), d.taper));
  }
  return out;
}

}  // namespace

Vector band_amplitude(std::span<const WindowedMode> band, const Grid1D& t) {
  return accumulate(band, t, kUnitWeight, false).beta;
}

Matrix band_spatial_pattern(std::span<const WindowedMode> band, const Grid1D& t) {
  const Accumulated acc = accumulate(band, t, kUnitWeight, true);
  return divide_or_missing(acc.s_num, acc.beta);
}

Matrix band_waveform(std::span<const WindowedMode> band, const Grid1D& t) {
  const Accumulated acc = accumulate(band, t, kUnitWeight, true);
  return divide_or_missing(acc.w_num, acc.beta);
}

Matrix band_reconstruct(std::span<const WindowedMode> band, const MrDecomposition& d) {
  require(!band.empty(), "band_reconstruct: band is empty");
  const LevelWeights weights = level_weights(band, d);
  const Grid1D& t = d.time;
  Matrix out = Matrix::Zero(band.front().phasor.S.size(), t.size());
  for (const WindowedMode& m : band) {
    const Vector& w = weights.at(m.level).at(static_cast<std::size_t>(m.window));
    const PhasorMode& p = m.phasor;
    for (Index g = m.range.start; g < m.range.end; ++g) {
      const double tl = t[g] - m.t_start;
      const double amp = 2.0 * p.b * std::exp(p.mu * tl) * w(g - m.range.start);
      out.col(g) += amp * p.S.cwiseProduct((p.omega * tl + p.varphi.array()).cos().matrix());
    }
  }
  return out;
}

BandSummary summarize_band(const MrDecomposition& d, int band, Weighting weighting) {
  const std::vector<WindowedMode> members = d.band(band);
  require(!members.empty(), "summarize_band: band " + std::to_string(band) + " has no modes");
  BandSummary out;
  Accumulated acc;
  if (weighting == Weighting::Flat) {
    acc = accumulate(members, d.time, kUnitWeight, true);
  } else {
    const LevelWeights weights = level_weights(members, d);
    acc = accumulate(
        members, d.time,
        [&](const WindowedMode& m, Index g) {
          return weights.at(m.level).at(static_cast<std::size_t>(m.window))(g - m.range.start);
        },
        true);
  }
  out.beta = acc.beta;
  out.S = divide_or_missing(acc.s_num, acc.beta);
  out.W = divide_or_missing(acc.w_num, acc.beta);
  out.recon = band_reconstruct(members, d);
  return out;
}

Matrix total_reconstruction(const MrDecomposition& d) {
  require(!d.levels.empty(), "total_reconstruction: empty decomposition");
  Matrix out = d.residual();
  for (int p = 0; p < d.n_bands; ++p) {
    const std::vector<WindowedMode> members = d.band(p);
    if (!members.empty()) out += band_reconstruct(members, d);
  }
  return out;
}

std::vector<int> match_components(std::span<const Matrix> parts, std::span<const Matrix> truths) {
  require(!truths.empty(), "match_components: no truth components");
  std::vector<int> out;
  out.reserve(parts.size());
  for (const Matrix& part : parts) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < truths.size(); ++c) {
      require(truths[c].rows() == part.rows() && truths[c].cols() == part.cols(),
              "match_components: shape mismatch");
      const double denom = part.norm() * truths[c].norm();
      const double score = denom > 0.0 ? (part.array() * truths[c].array()).sum() / denom : 0.0;
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<Matrix> group_components(std::span<const Matrix> parts, std::span<const Matrix> truths) {
  const std::vector<int> labels = match_components(parts, truths);
  std::vector<Matrix> out;
  for (const Matrix& truth : truths) out.push_back(Matrix::Zero(truth.rows(), truth.cols()));
  for (std::size_t i = 0; i < parts.size(); ++i) out[static_cast<std::size_t>(labels[i])] += parts[i];
  return out;
}

}  // namespace phasordmd::mr
