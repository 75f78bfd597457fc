// phasordmd command-line tool: generate toy data, fit DMD models, export phasor fields and
// run the windowed multi-level decomposition.

#include "phasordmd/dmd.hpp"
#include "phasordmd/error.hpp"
#include "phasordmd/io.hpp"
#include "phasordmd/multires.hpp"
#include "phasordmd/phasor.hpp"
#include "phasordmd/toy_models.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phasordmd;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::string command_line;
};

int thread_count() {
  const char* env = std::getenv("PHASORDMD_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    const int n = std::stoi(env);
    if (n < 0) throw UsageError("PHASORDMD_THREADS must be >= 0");
    return n;
  } catch (const std::logic_error&) {
    throw UsageError(std::string("PHASORDMD_THREADS is not an integer: ") + env);
  }
}

json manifest(const Context& ctx, std::string_view command) {
  json m;
  m["tool"] = "phasordmd";
  m["version"] = PHASORDMD_VERSION;
  m["command"] = command;
  m["command_line"] = ctx.command_line;
  return m;
}

void write_json(const fs::path& path, const json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::Io, "cannot create output directory " + dir.string());
}

std::string fmt(double v) { return io::format_double(v); }

Grid1D index_grid(Index n) { return Grid1D::arange(0.0, 1.0, n); }

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string model;
  std::uint64_t seed = 7;
  Index nx = 128;
  Index nt = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a, const Context& ctx) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  json m = manifest(ctx, "generate");
  m["model"] = a.model;
  m["output_dir"] = a.out;
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const io::MatrixCsv& csv) {
    io::write_matrix(dir / name, csv);
    files.push_back(name);
  };

  if (a.model == "uniscale") {
    const Index nt = a.nt > 0 ? a.nt : 256;
    const auto [data, truth] = toy::gen_uniscale(a.nx, nt);
    put("total.csv", io::MatrixCsv::from(data));
    put("f1.csv", io::MatrixCsv::from(truth.f1, data.space, data.time));
    put("f2.csv", io::MatrixCsv::from(truth.f2, data.space, data.time));
    put("fhat1.csv", io::MatrixCsv::column(truth.fhat1, data.space));
    put("fhat2.csv", io::MatrixCsv::column(truth.fhat2, data.space));
    m["config"] = {{"nx", a.nx}, {"nt", nt}};
  } else {
    const Index nt = a.nt > 0 ? a.nt : 1280;
    const toy::MultiscaleParams params;
    const auto [data, truth] = toy::gen_multiscale(a.seed, nt, params);
    put("total.csv", io::MatrixCsv::from(data));
    put("x_slow.csv", io::MatrixCsv::from(truth.x_slow, data.space, data.time));
    put("x_fast.csv", io::MatrixCsv::from(truth.x_fast, data.space, data.time));
    put("x_tran.csv", io::MatrixCsv::from(truth.x_tran, data.space, data.time));
    put("mixing.csv", io::MatrixCsv{index_grid(40).points(), index_grid(40).points(), truth.mixing});
    m["seed"] = a.seed;
    m["config"] = {{"nt", nt},
                   {"tau1", params.tau1},
                   {"tau2", params.tau2},
                   {"v0", params.v0},
                   {"w0", params.w0},
                   {"p0", params.p0},
                   {"q0", params.q0},
                   {"rk4_substeps", params.integrator.substeps}};
  }
  m["outputs"] = files;
  write_json(dir / "manifest.json", m);
  std::cout << "wrote " << files.size() << " files to " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string in;
  Index rank = 4;
  Index delays = 1;
  std::string refine = "varpro";
  double pair_tol = 1e-6;
  bool allow_unpaired = false;
  std::vector<std::string> truth;
  std::string out;
};

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p.replace_extension();
  return p.string() + suffix;
}

int run_fit(const FitArgs& a, const Context& ctx) {
  const SnapshotMatrix data = io::read_matrix(a.in).to_snapshot();
  if (a.rank > std::min(data.n_space() * a.delays, data.n_time() - a.delays))
    throw UsageError("--rank " + std::to_string(a.rank) + " exceeds the embedded data dimensions");
  if (a.delays >= data.n_time()) throw UsageError("--delays must be smaller than the number of time samples");

  FitOptions opts;
  opts.rank = a.rank;
  opts.delays = a.delays;
  opts.refine = a.refine == "varpro";
  opts.pairing.pair_tol = a.pair_tol;
  opts.pairing.allow_unpaired = a.allow_unpaired;
  const FitResult result = fit(data, opts);

  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  io::write_model(out, result.model, data.space, data.time);

  std::vector<Matrix> truths;
  for (const std::string& f : a.truth) {
    const io::MatrixCsv csv = io::read_matrix(f);
    if (csv.values.rows() != data.n_space() || csv.values.cols() != data.n_time())
      throw UsageError("truth file " + f + " does not match the input shape");
    truths.push_back(csv.values);
  }

  const DmdModel& model = result.model.model;
  std::ostringstream report;
  report << "rank " << a.rank << ", delays " << a.delays << ", refine " << a.refine << "\n";
  report << "eigenvalues (mu, omega):\n";
  for (Index j = 0; j < model.rank(); ++j)
    report << "  " << j << ": " << fmt(model.eigenvalues(j).real()) << ", " << fmt(model.eigenvalues(j).imag())
           << "  |b| = " << fmt(std::abs(model.amplitudes(j))) << "\n";

  json modes = json::array();
  const PhasorModel ph = result.model.unpaired.empty() ? phasor_decompose(result.model) : PhasorModel{};
  std::vector<Matrix> parts;
  for (const PhasorMode& p : ph.modes) parts.push_back(phasor_reconstruct_pair(p, data.time));
  const std::vector<int> match = truths.empty() ? std::vector<int>{} : mr::match_components(parts, truths);
  report << "modes:\n";
  for (std::size_t p = 0; p < ph.modes.size(); ++p) {
    const PhasorMode& mode = ph.modes[p];
    json rec = {{"pair", mode.pair_id}, {"mu", mode.mu}, {"omega", mode.omega}, {"b", mode.b},
                {"energy_fraction", parts[p].norm() / data.values.norm()}};
    report << "  pair " << mode.pair_id << ": omega " << fmt(mode.omega) << ", mu " << fmt(mode.mu) << ", b "
           << fmt(mode.b) << ", energy fraction " << fmt(parts[p].norm() / data.values.norm());
    if (!truths.empty()) {
      const double err = relative_error(parts[p], truths[static_cast<std::size_t>(match[p])]);
      rec["truth"] = a.truth[static_cast<std::size_t>(match[p])];
      rec["relative_error"] = err;
      report << ", relative error vs " << a.truth[static_cast<std::size_t>(match[p])] << " " << fmt(err);
    }
    report << "\n";
    modes.push_back(rec);
  }
  report << "total relative error " << fmt(result.relative_error) << "\n";
  for (const std::string& w : result.warnings) report << "warning: " << w << "\n";

  const fs::path report_path = sibling(out, ".report.txt");
  io::write_text(report_path, report.str());
  std::cout << report.str();

  json m = manifest(ctx, "fit");
  m["config"] = {{"rank", a.rank},           {"delays", a.delays},
                 {"refine", a.refine},       {"pair_tol", a.pair_tol},
                 {"allow_unpaired", a.allow_unpaired}};
  m["inputs"] = json::array({a.in});
  for (const std::string& f : a.truth) m["inputs"].push_back(f);
  m["outputs"] = {out.string(), report_path.string()};
  m["metrics"] = {{"total_relative_error", result.relative_error},
                  {"refine_converged", result.refine_converged},
                  {"refine_iterations", result.refine_iterations},
                  {"modes", modes}};
  m["warnings"] = result.warnings;
  write_json(sibling(out, ".manifest.json"), m);
  return 0;
}

// ---------------------------------------------------------------- phasor

struct PhasorArgs {
  std::string model;
  std::string out;
};

int run_phasor(const PhasorArgs& a, const Context& ctx) {
  const io::ModelDocument doc = io::read_model(a.model);
  if (!doc.model.unpaired.empty()) fail(ErrorCode::InvalidState, "model has unpaired modes; phasor form is undefined");
  const PhasorModel ph = doc.phasor.modes.empty() && doc.model.model.rank() > 0 ? phasor_decompose(doc.model) : doc.phasor;
  const fs::path prefix(a.out);
  if (prefix.has_parent_path()) ensure_dir(prefix.parent_path());

  std::vector<std::string> files;
  auto put = [&](const std::string& suffix, const io::MatrixCsv& csv) {
    const std::string name = prefix.string() + suffix;
    io::write_matrix(name, csv);
    files.push_back(name);
  };
  json modes = json::array();
  for (const PhasorMode& p : ph.modes) {
    const std::string tag = "_pair" + std::to_string(p.pair_id);
    put(tag + "_S.csv", io::MatrixCsv::column(p.S, doc.space));
    put(tag + "_varphi.csv", io::MatrixCsv::column(p.varphi, doc.space));
    put(tag + "_waveform.csv", io::MatrixCsv::from(waveform(p.omega, p.varphi, doc.time), doc.space, doc.time));
    put(tag + "_recon.csv", io::MatrixCsv::from(phasor_reconstruct_pair(p, doc.time), doc.space, doc.time));
    modes.push_back({{"pair", p.pair_id},
                     {"omega", p.omega},
                     {"mu", p.mu},
                     {"b", p.b},
                     {"undefined_phase_points", p.undefined_phase}});
  }
  json dcs = json::array();
  for (const DcMode& d : ph.dc) {
    const std::string tag = "_dc" + std::to_string(d.index);
    put(tag + "_S.csv", io::MatrixCsv::column(d.S, doc.space));
    put(tag + "_varphi.csv", io::MatrixCsv::column(d.varphi, doc.space));
    put(tag + "_recon.csv", io::MatrixCsv::from(phasor_reconstruct_dc(d, doc.time), doc.space, doc.time));
    dcs.push_back({{"index", d.index}, {"mu", d.mu}, {"b", d.b}});
  }
  json m = manifest(ctx, "phasor");
  m["inputs"] = {a.model};
  m["outputs"] = files;
  m["modes"] = modes;
  m["dc_modes"] = dcs;
  write_json(prefix.string() + "_manifest.json", m);
  std::cout << "wrote " << files.size() << " field files for " << ph.modes.size() << " pairs and " << ph.dc.size()
            << " DC modes\n";
  return 0;
}

// ---------------------------------------------------------------- mrcosts

struct MrArgs {
  std::string in;
  std::vector<Index> windows{60, 120, 480};
  double stride_frac = 0.1;
  Index rank = 6;
  std::string bands = "3";
  std::string taper = "hann";
  bool refine = true;
  std::vector<std::string> truth;
  double total_target = 0.10;
  double component_target = 0.15;
  std::string out;
};

int parse_bands(const std::string& s) {
  if (s == "auto") return 0;
  try {
    std::size_t pos = 0;
    const int k = std::stoi(s, &pos);
    if (pos == s.size() && k >= 1) return k;
  } catch (const std::logic_error&) {
  }
  throw UsageError("--bands must be 'auto' or a positive integer, got '" + s + "'");
}

int run_mrcosts(const MrArgs& a, const Context& ctx) {
  const int n_bands = parse_bands(a.bands);
  const SnapshotMatrix data = io::read_matrix(a.in).to_snapshot();
  std::vector<mr::LevelConfig> levels;
  for (std::size_t l = 0; l < a.windows.size(); ++l) {
    const Index len = a.windows[l];
    if (len > data.n_time())
      throw UsageError("--windows: window of " + std::to_string(len) + " samples exceeds the series length " +
                       std::to_string(data.n_time()));
    if (l > 0 && len <= a.windows[l - 1]) throw UsageError("--windows must be strictly increasing");
    mr::LevelConfig cfg = mr::make_level(len, a.stride_frac, a.rank);
    cfg.refine = a.refine;
    levels.push_back(cfg);
  }
  std::vector<Matrix> truths;
  for (const std::string& f : a.truth) {
    const io::MatrixCsv csv = io::read_matrix(f);
    if (csv.values.rows() != data.n_space() || csv.values.cols() != data.n_time())
      throw UsageError("truth file " + f + " does not match the input shape");
    truths.push_back(csv.values);
  }

  mr::DecomposeOptions opts;
  opts.n_bands = n_bands;
  opts.threads = thread_count();
  opts.taper = a.taper == "flat" ? mr::Taper::Flat : mr::Taper::Hann;
  const mr::MrDecomposition d = mr::decompose(data, levels, opts);

  const fs::path dir(a.out);
  ensure_dir(dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const io::MatrixCsv& csv) {
    io::write_matrix(dir / name, csv);
    files.push_back(name);
  };
  io::write_decomposition(dir / "decomposition.json", d);
  files.push_back("decomposition.json");

  std::vector<Matrix> parts;
  std::vector<std::string> part_names;
  json bands = json::array();
  for (int p = 0; p < d.n_bands; ++p) {
    const std::string tag = "band" + std::to_string(p);
    const mr::BandSummary s = mr::summarize_band(d, p);
    put(tag + "_beta.csv", io::MatrixCsv::row(s.beta, d.time));
    put(tag + "_S.csv", io::MatrixCsv::from(s.S, d.space, d.time));
    put(tag + "_W.csv", io::MatrixCsv::from(s.W, d.space, d.time));
    put(tag + "_recon.csv", io::MatrixCsv::from(s.recon, d.space, d.time));
    parts.push_back(s.recon);
    part_names.push_back(tag);
    bands.push_back({{"band", p},
                     {"centroid_omega", d.band_centroids[static_cast<std::size_t>(p)]},
                     {"n_modes", d.band(p).size()}});
  }
  put("residual.csv", io::MatrixCsv::from(d.residual(), d.space, d.time));
  parts.push_back(d.residual());
  part_names.push_back("residual");

  const Matrix total = mr::total_reconstruction(d);
  const double total_err = relative_error(total, data.values);
  std::ostringstream report;
  report << "levels:";
  for (const auto& l : d.levels)
    report << " " << l.config.window_length << " (stride " << l.config.stride << ", cut " << fmt(l.freq_cut) << ", "
           << l.windows.size() << " windows, " << l.failed_windows.size() << " failed)";
  report << "\nbands: " << d.n_bands << " + low-frequency residual\n";
  for (int p = 0; p < d.n_bands; ++p)
    report << "  band " << p << ": centroid omega " << fmt(d.band_centroids[static_cast<std::size_t>(p)]) << ", "
           << d.band(p).size() << " modes\n";
  report << "total relative error " << fmt(total_err) << "\n";
  bool miss = total_err > a.total_target;

  json metrics = {{"total_relative_error", total_err}};
  if (!truths.empty()) {
    const std::vector<int> match = mr::match_components(parts, truths);
    const std::vector<Matrix> grouped = mr::group_components(parts, truths);
    json comps = json::array();
    for (std::size_t c = 0; c < truths.size(); ++c) {
      std::vector<std::string> members;
      for (std::size_t i = 0; i < parts.size(); ++i)
        if (match[i] == static_cast<int>(c)) members.push_back(part_names[i]);
      const double err = relative_error(grouped[c], truths[c]);
      miss = miss || err > a.component_target;
      report << "  " << a.truth[c] << ": relative error " << fmt(err) << " from";
      for (const auto& s : members) report << " " << s;
      if (members.empty()) report << " (nothing)";
      report << "\n";
      comps.push_back({{"truth", a.truth[c]}, {"parts", members}, {"relative_error", err}});
    }
    metrics["components"] = comps;
  }
  if (miss)
    report << "MISS: total error above " << fmt(a.total_target) << " or a component error above "
           << fmt(a.component_target) << "\n";
  metrics["target_missed"] = miss;
  for (const std::string& w : d.warnings) report << "warning: " << w << "\n";
  io::write_text(dir / "report.txt", report.str());
  files.push_back("report.txt");
  std::cout << report.str();

  json m = manifest(ctx, "mrcosts");
  m["config"] = {{"windows", a.windows}, {"stride_frac", a.stride_frac}, {"rank", a.rank},
                 {"bands", a.bands},     {"taper", a.taper},             {"refine", a.refine}};
  m["inputs"] = json::array({a.in});
  for (const std::string& f : a.truth) m["inputs"].push_back(f);
  m["output_dir"] = a.out;
  m["outputs"] = files;
  m["bands"] = bands;
  m["metrics"] = metrics;
  m["warnings"] = d.warnings;
  write_json(dir / "manifest.json", m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(i ? argv[i] : "phasordmd");

  CLI::App app{"Dynamic mode decomposition in phasor form"};
  app.set_version_flag("--version", std::string("phasordmd ") + PHASORDMD_VERSION);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Write a toy data set and its truth components");
  c_gen->add_option("--model", gen.model, "uniscale or multiscale")
      ->required()
      ->check(CLI::IsMember({"uniscale", "multiscale"}));
  c_gen->add_option("--seed", gen.seed, "Seed of the mixing matrix (multiscale)");
  c_gen->add_option("--nx", gen.nx, "Spatial points (uniscale)")->check(CLI::Range(16, 1 << 20));
  c_gen->add_option("--nt", gen.nt, "Time samples (default 256 uniscale, 1280 multiscale)")
      ->check(CLI::Range(32, 1 << 24));
  c_gen->add_option("--out", gen.out, "Output directory")->required();

  FitArgs fa;
  CLI::App* c_fit = app.add_subcommand("fit", "Fit a paired DMD model to a CSV matrix");
  c_fit->add_option("--in", fa.in, "Input CSV")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--rank", fa.rank, "SVD truncation rank")->check(CLI::PositiveNumber);
  c_fit->add_option("--delays", fa.delays, "Number of time-delay copies")->check(CLI::PositiveNumber);
  c_fit->add_option("--refine", fa.refine, "varpro or none")->check(CLI::IsMember({"varpro", "none"}));
  c_fit->add_option("--pair-tol", fa.pair_tol, "Relative conjugate pairing tolerance")->check(CLI::PositiveNumber);
  c_fit->add_flag("--allow-unpaired", fa.allow_unpaired, "Keep modes without a conjugate partner");
  c_fit->add_option("--truth", fa.truth, "Truth component CSVs for per-mode errors");
  c_fit->add_option("--out", fa.out, "Model document path")->required();

  PhasorArgs pa;
  CLI::App* c_ph = app.add_subcommand("phasor", "Export S, varphi, waveform and reconstruction per pair");
  c_ph->add_option("--model", pa.model, "Model document")->required()->check(CLI::ExistingFile);
  c_ph->add_option("--out", pa.out, "Output path prefix")->required();

  MrArgs ma;
  CLI::App* c_mr = app.add_subcommand("mrcosts", "Windowed multi-level decomposition with band summaries");
  c_mr->add_option("--in", ma.in, "Input CSV")->required()->check(CLI::ExistingFile);
  c_mr->add_option("--windows", ma.windows, "Window lengths in samples")->delimiter(',')->check(CLI::Range(4, 1 << 24));
  c_mr->add_option("--stride-frac", ma.stride_frac, "Window slide as a fraction of its length")
      ->check(CLI::Range(1e-6, 1.0));
  c_mr->add_option("--rank", ma.rank, "Rank per window")->check(CLI::PositiveNumber);
  c_mr->add_option("--bands", ma.bands, "Number of bands or 'auto'");
  c_mr->add_option("--taper", ma.taper, "hann or flat")->check(CLI::IsMember({"hann", "flat"}));
  c_mr->add_flag("!--no-refine", ma.refine, "Skip variable projection in window fits");
  c_mr->add_option("--truth", ma.truth, "Truth component CSVs for per-component errors");
  c_mr->add_option("--out", ma.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_gen) return run_generate(gen, ctx);
    if (*c_fit) return run_fit(fa, ctx);
    if (*c_ph) return run_phasor(pa, ctx);
    if (*c_mr) return run_mrcosts(ma, ctx);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
