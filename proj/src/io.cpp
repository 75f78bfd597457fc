#include "phasordmd/io.hpp"

#include "phasordmd/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace phasordmd::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_double(std::string_view cell, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last)
    fail(ErrorCode::Parse, source + ":" + std::to_string(line) + ": non-numeric cell '" + std::string(cell) + "'");
  return v;
}

json vec_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vec_from(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].is_null() ? std::nan("") : j[i].get<double>();
  return v;
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix mat_from(const json& j) {
  const Index r = j.at("rows").get<Index>();
  const Index c = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != r) fail(ErrorCode::Parse, "matrix row count mismatch");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const Vector row = vec_from(data[static_cast<std::size_t>(i)]);
    if (row.size() != c) fail(ErrorCode::Parse, "matrix column count mismatch");
    m.row(i) = row.transpose();
  }
  return m;
}

json cvec_json(const CVector& v) { return json{{"re", vec_json(v.real())}, {"im", vec_json(v.imag())}}; }

CVector cvec_from(const json& j) {
  const Vector re = vec_from(j.at("re"));
  const Vector im = vec_from(j.at("im"));
  if (re.size() != im.size()) fail(ErrorCode::Parse, "complex vector parts differ in length");
  CVector v(re.size());
  for (Index i = 0; i < re.size(); ++i) v(i) = Complex(re(i), im(i));
  return v;
}

json grid_json(const Grid1D& g) { return json{{"points", vec_json(g.points())}, {"spacing", g.spacing()}}; }

Grid1D grid_from(const json& j) { return Grid1D(vec_from(j.at("points")), j.at("spacing").get<double>()); }

json phasor_json(const PhasorMode& m) {
  return json{{"pair_id", m.pair_id}, {"mu", m.mu},         {"omega", m.omega},
              {"b", m.b},             {"S", vec_json(m.S)}, {"varphi", vec_json(m.varphi)}};
}

PhasorMode phasor_from(const json& j) {
  PhasorMode m;
  m.pair_id = j.at("pair_id").get<Index>();
  m.mu = j.at("mu").get<double>();
  m.omega = j.at("omega").get<double>();
  m.b = j.at("b").get<double>();
  m.S = vec_from(j.at("S"));
  m.varphi = vec_from(j.at("varphi"));
  for (Index i = 0; i < m.S.size(); ++i)
    if (m.S(i) == 0.0) m.undefined_phase.push_back(i);
  return m;
}

void check_field(const Vector& stored, const Vector& recomputed, const std::string& what, bool angle = false) {
  if (stored.size() != recomputed.size()) fail(ErrorCode::Integrity, what + ": length mismatch");
  for (Index i = 0; i < stored.size(); ++i) {
    double diff = stored(i) - recomputed(i);
    if (angle) diff = std::remainder(diff, 2.0 * std::numbers::pi);
    if (!(std::abs(diff) <= 1e-12))
      fail(ErrorCode::Integrity, what + "[" + std::to_string(i) + "] disagrees with the raw complex mode");
  }
}

void check_scalar(double stored, double recomputed, const std::string& what) {
  if (!(std::abs(stored - recomputed) <= 1e-12 * std::max(1.0, std::abs(recomputed))))
    fail(ErrorCode::Integrity, what + " disagrees with the raw eigenvalue or amplitude");
}

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed document: ") + e.what());
  }
}

void check_schema(const json& doc, std::string_view kind) {
  if (!doc.contains("schema_version")) fail(ErrorCode::Parse, "document has no schema_version");
  const int version = doc.at("schema_version").get<int>();
  if (version != kSchemaVersion) fail(ErrorCode::Parse, "unsupported schema_version " + std::to_string(version));
  if (doc.at("kind").get<std::string>() != kind)
    fail(ErrorCode::Parse, "expected a '" + std::string(kind) + "' document");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) fail(ErrorCode::Io, "cannot format number");
  return std::string(buf, ptr);
}

MatrixCsv MatrixCsv::from(const SnapshotMatrix& data) { return from(data.values, data.space, data.time); }

MatrixCsv MatrixCsv::from(const Matrix& values, const Grid1D& space, const Grid1D& time) {
  require(values.rows() == space.size() && values.cols() == time.size(), "MatrixCsv: shape does not match grids");
  return MatrixCsv{space.points(), time.points(), values};
}

MatrixCsv MatrixCsv::column(const Vector& values, const Grid1D& space) {
  require(values.size() == space.size(), "MatrixCsv::column: length does not match the grid");
  return MatrixCsv{space.points(), Vector::Zero(1), values};
}

MatrixCsv MatrixCsv::row(const Vector& values, const Grid1D& time) {
  require(values.size() == time.size(), "MatrixCsv::row: length does not match the grid");
  return MatrixCsv{Vector::Zero(1), time.points(), values.transpose()};
}

SnapshotMatrix MatrixCsv::to_snapshot() const { return SnapshotMatrix(values, Grid1D(rows), Grid1D(cols)); }

std::string format_matrix(const MatrixCsv& m) {
  require(m.values.rows() == m.rows.size() && m.values.cols() == m.cols.size(), "format_matrix: shape mismatch");
  std::string out;
  out.reserve(static_cast<std::size_t>((m.values.size() + m.rows.size() + m.cols.size()) * 24 + 16));
  out += kCornerCell;
  for (Index k = 0; k < m.cols.size(); ++k) {
    out += ',';
    out += format_double(m.cols(k));
  }
  out += '\n';
  for (Index i = 0; i < m.rows.size(); ++i) {
    out += format_double(m.rows(i));
    for (Index k = 0; k < m.cols.size(); ++k) {
      out += ',';
      out += format_double(m.values(i, k));
    }
    out += '\n';
  }
  return out;
}

MatrixCsv parse_matrix(std::string_view text, const std::string& source) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find('\n', pos);
    if (next == std::string_view::npos) next = text.size();
    lines.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorCode::Parse, source + ": empty file");

  const auto header = split(lines[0], ',');
  if (header.front() != kCornerCell)
    fail(ErrorCode::Parse, source + ":1: expected corner cell '" + std::string(kCornerCell) + "'");
  const std::size_t ncols = header.size() - 1;
  if (ncols == 0) fail(ErrorCode::Parse, source + ":1: header has no columns");

  MatrixCsv m;
  m.cols.resize(static_cast<Index>(ncols));
  for (std::size_t k = 0; k < ncols; ++k) m.cols(static_cast<Index>(k)) = parse_double(header[k + 1], source, 1);
  const std::size_t nrows = lines.size() - 1;
  if (nrows == 0) fail(ErrorCode::Parse, source + ": no data rows");
  m.rows.resize(static_cast<Index>(nrows));
  m.values.resize(static_cast<Index>(nrows), static_cast<Index>(ncols));
  for (std::size_t i = 0; i < nrows; ++i) {
    const std::size_t line_no = i + 2;
    const auto cells = split(lines[i + 1], ',');
    if (cells.size() != ncols + 1)
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(ncols + 1) +
                                 " cells, found " + std::to_string(cells.size()));
    m.rows(static_cast<Index>(i)) = parse_double(cells[0], source, line_no);
    for (std::size_t k = 0; k < ncols; ++k)
      m.values(static_cast<Index>(i), static_cast<Index>(k)) = parse_double(cells[k + 1], source, line_no);
  }
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::Io, "write to " + path.string() + " failed");
}

void write_matrix(const std::filesystem::path& path, const MatrixCsv& m) { write_text(path, format_matrix(m)); }

MatrixCsv read_matrix(const std::filesystem::path& path) { return parse_matrix(read_text(path), path.string()); }

std::string format_model(const PairedModel& pm, const Grid1D& space, const Grid1D& time) {
  const DmdModel& model = pm.model;
  require(model.modes.rows() == space.size(), "format_model: mode length does not match the space grid");
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "dmd_model";
  doc["dt"] = model.dt;
  doc["space"] = grid_json(space);
  doc["time"] = grid_json(time);
  doc["ill_conditioned"] = model.ill_conditioned;
  doc["eigenvalues"] = cvec_json(model.eigenvalues);
  doc["amplitudes"] = cvec_json(model.amplitudes);
  json modes = json::array();
  for (Index j = 0; j < model.rank(); ++j) modes.push_back(cvec_json(model.modes.col(j)));
  doc["modes"] = modes;
  json pairs = json::array();
  for (const auto& [a, b] : pm.pairs) pairs.push_back({a, b});
  doc["pairs"] = pairs;
  doc["dc_modes"] = pm.dc_modes;
  doc["unpaired"] = pm.unpaired;

  bool normalized = true;
  for (Index j = 0; j < model.rank(); ++j)
    normalized = normalized && model.amplitudes(j).imag() == 0.0 && model.amplitudes(j).real() >= 0.0;
  json phasors = json::array();
  if (normalized) {
    const PhasorModel ph = phasor_decompose(pm);
    for (const PhasorMode& m : ph.modes) phasors.push_back(phasor_json(m));
  }
  doc["phasor"] = phasors;
  return doc.dump(1) + "\n";
}

ModelDocument parse_model(std::string_view text) {
  return guarded([&] {
    const json doc = json::parse(text);
    check_schema(doc, "dmd_model");
    ModelDocument out;
    out.schema_version = doc.at("schema_version").get<int>();
    out.space = grid_from(doc.at("space"));
    out.time = grid_from(doc.at("time"));
    DmdModel& model = out.model.model;
    model.dt = doc.at("dt").get<double>();
    model.ill_conditioned = doc.value("ill_conditioned", false);
    model.eigenvalues = cvec_from(doc.at("eigenvalues"));
    model.amplitudes = cvec_from(doc.at("amplitudes"));
    const json& modes = doc.at("modes");
    const Index r = model.eigenvalues.size();
    if (model.amplitudes.size() != r || static_cast<Index>(modes.size()) != r)
      fail(ErrorCode::Parse, "rank mismatch between eigenvalues, amplitudes and modes");
    model.modes.resize(out.space.size(), r);
    for (Index j = 0; j < r; ++j) {
      const CVector col = cvec_from(modes[static_cast<std::size_t>(j)]);
      if (col.size() != out.space.size()) fail(ErrorCode::Parse, "mode length does not match the space grid");
      model.modes.col(j) = col;
    }
    for (const json& p : doc.at("pairs")) out.model.pairs.emplace_back(p.at(0).get<Index>(), p.at(1).get<Index>());
    out.model.dc_modes = doc.at("dc_modes").get<std::vector<Index>>();
    out.model.unpaired = doc.value("unpaired", std::vector<Index>{});

    std::vector<int> seen(static_cast<std::size_t>(r), 0);
    auto mark = [&](Index i) {
      if (i < 0 || i >= r) fail(ErrorCode::Integrity, "mode index out of range");
      ++seen[static_cast<std::size_t>(i)];
    };
    for (const auto& [a, b] : out.model.pairs) {
      mark(a);
      mark(b);
    }
    for (Index i : out.model.dc_modes) mark(i);
    for (Index i : out.model.unpaired) mark(i);
    for (int s : seen)
      if (s != 1) fail(ErrorCode::Integrity, "every mode must appear exactly once in pairs, dc_modes or unpaired");

    const json& stored = doc.at("phasor");
    if (!stored.empty()) {
      out.phasor = phasor_decompose(out.model);
      if (stored.size() != out.phasor.modes.size()) fail(ErrorCode::Integrity, "phasor record count does not match pairs");
      for (std::size_t p = 0; p < stored.size(); ++p) {
        const PhasorMode s = phasor_from(stored[p]);
        const PhasorMode& c = out.phasor.modes[p];
        const std::string tag = "phasor[" + std::to_string(p) + "]";
        check_field(s.S, c.S, tag + ".S");
        check_field(s.varphi, c.varphi, tag + ".varphi", true);
        check_scalar(s.mu, c.mu, tag + ".mu");
        check_scalar(s.omega, c.omega, tag + ".omega");
        check_scalar(s.b, c.b, tag + ".b");
      }
    }
    return out;
  });
}

void write_model(const std::filesystem::path& path, const PairedModel& model, const Grid1D& space, const Grid1D& time) {
  write_text(path, format_model(model, space, time));
}

ModelDocument read_model(const std::filesystem::path& path) { return parse_model(read_text(path)); }

std::string format_decomposition(const mr::MrDecomposition& d) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "mr_decomposition";
  doc["space"] = grid_json(d.space);
  doc["time"] = grid_json(d.time);
  doc["taper"] = d.taper == mr::Taper::Hann ? "hann" : "flat";
  json levels = json::array();
  for (const mr::LevelResult& l : d.levels) {
    json windows = json::array();
    for (const mr::WindowRange& w : l.windows) windows.push_back({w.start, w.end});
    levels.push_back({{"window_length", l.config.window_length},
                      {"stride", l.config.stride},
                      {"rank", l.config.rank},
                      {"freq_cut_config", std::isnan(l.config.freq_cut) ? json(nullptr) : json(l.config.freq_cut)},
                      {"refine", l.config.refine},
                      {"freq_cut", l.freq_cut},
                      {"windows", windows},
                      {"failed_windows", l.failed_windows},
                      {"lowfreq", mat_json(l.lowfreq)}});
  }
  doc["levels"] = levels;
  json modes = json::array();
  for (const mr::WindowedMode& m : d.modes) {
    json rec = phasor_json(m.phasor);
    rec["triplet"] = {m.pair, m.window, m.level};
    rec["range"] = {m.range.start, m.range.end};
    rec["t_start"] = m.t_start;
    rec["t_end"] = m.t_end;
    rec["band"] = m.band;
    modes.push_back(rec);
  }
  doc["modes"] = modes;
  doc["n_bands"] = d.n_bands;
  doc["band_centroids"] = d.band_centroids;
  doc["warnings"] = d.warnings;
  return doc.dump(1) + "\n";
}

mr::MrDecomposition parse_decomposition(std::string_view text) {
  return guarded([&] {
    const json doc = json::parse(text);
    check_schema(doc, "mr_decomposition");
    mr::MrDecomposition d;
    d.space = grid_from(doc.at("space"));
    d.time = grid_from(doc.at("time"));
    d.taper = doc.at("taper").get<std::string>() == "flat" ? mr::Taper::Flat : mr::Taper::Hann;
    for (const json& l : doc.at("levels")) {
      mr::LevelResult level;
      level.config.window_length = l.at("window_length").get<Index>();
      level.config.stride = l.at("stride").get<Index>();
      level.config.rank = l.at("rank").get<Index>();
      const json& cut = l.at("freq_cut_config");
      level.config.freq_cut = cut.is_null() ? std::numeric_limits<double>::quiet_NaN() : cut.get<double>();
      level.config.refine = l.at("refine").get<bool>();
      level.freq_cut = l.at("freq_cut").get<double>();
      for (const json& w : l.at("windows")) level.windows.push_back({w.at(0).get<Index>(), w.at(1).get<Index>()});
      level.failed_windows = l.at("failed_windows").get<std::vector<Index>>();
      level.lowfreq = mat_from(l.at("lowfreq"));
      if (level.lowfreq.rows() != d.space.size() || level.lowfreq.cols() != d.time.size())
        fail(ErrorCode::Integrity, "low-frequency matrix does not match the grids");
      d.levels.push_back(std::move(level));
    }
    if (d.levels.empty()) fail(ErrorCode::Integrity, "decomposition has no levels");
    d.n_bands = doc.at("n_bands").get<int>();
    for (const json& rec : doc.at("modes")) {
      mr::WindowedMode m;
      m.phasor = phasor_from(rec);
      m.pair = rec.at("triplet").at(0).get<Index>();
      m.window = rec.at("triplet").at(1).get<Index>();
      m.level = rec.at("triplet").at(2).get<Index>();
      m.range = {rec.at("range").at(0).get<Index>(), rec.at("range").at(1).get<Index>()};
      m.t_start = rec.at("t_start").get<double>();
      m.t_end = rec.at("t_end").get<double>();
      m.band = rec.at("band").get<int>();
      if (m.phasor.S.size() != d.space.size() || m.phasor.varphi.size() != d.space.size())
        fail(ErrorCode::Integrity, "mode field length does not match the space grid");
      if ((m.phasor.S.array() < 0.0).any()) fail(ErrorCode::Integrity, "negative spatial pattern entry");
      if (m.level < 0 || m.level >= static_cast<Index>(d.levels.size()) || m.window < 0 ||
          m.window >= static_cast<Index>(d.levels[m.level].windows.size()) ||
          !(d.levels[m.level].windows[m.window] == m.range))
        fail(ErrorCode::Integrity, "mode triplet does not match the level windows");
      if (m.band < 0 || m.band >= d.n_bands) fail(ErrorCode::Integrity, "mode band label out of range");
      d.modes.push_back(std::move(m));
    }
    d.band_centroids = doc.at("band_centroids").get<std::vector<double>>();
    d.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return d;
  });
}

void write_decomposition(const std::filesystem::path& path, const mr::MrDecomposition& d) {
  write_text(path, format_decomposition(d));
}

mr::MrDecomposition read_decomposition(const std::filesystem::path& path) {
  return parse_decomposition(read_text(path));
}

}  // namespace phasordmd::io
