#include "phasordmd/dmd.hpp"
#include "phasordmd/error.hpp"
#include "phasordmd/io.hpp"
#include "phasordmd/multires.hpp"
#include "phasordmd/phasor.hpp"
#include "phasordmd/toy_models.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace phasordmd;

namespace {

SnapshotMatrix snapshot(const Matrix& values, const Vector& x, const Vector& t) {
  return SnapshotMatrix(values, Grid1D(x), Grid1D(t));
}

py::dict band_summary(const mr::BandSummary& s) {
  py::dict d;
  d["beta"] = s.beta;
  d["S"] = s.S;
  d["W"] = s.W;
  d["recon"] = s.recon;
  return d;
}

}  // namespace

PYBIND11_MODULE(_phasordmd, m) {
  m.doc() = "Dynamic mode decomposition in phasor form";
  m.attr("__version__") = PHASORDMD_VERSION;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "gen_uniscale",
      [](Index nx, Index nt) {
        const auto [data, truth] = toy::gen_uniscale(nx, nt);
        py::dict d;
        d["x"] = data.space.points();
        d["t"] = data.time.points();
        d["total"] = truth.total;
        d["f1"] = truth.f1;
        d["f2"] = truth.f2;
        d["fhat1"] = truth.fhat1;
        d["fhat2"] = truth.fhat2;
        return d;
      },
      py::arg("nx") = 128, py::arg("nt") = 256, "Two-feature sech/tanh toy data and its components.");

  m.def(
      "gen_multiscale",
      [](std::uint64_t seed, Index nt) {
        const auto [data, truth] = toy::gen_multiscale(seed, nt);
        py::dict d;
        d["x"] = data.space.points();
        d["t"] = data.time.points();
        d["total"] = truth.x_total;
        d["slow"] = truth.x_slow;
        d["fast"] = truth.x_fast;
        d["transient"] = truth.x_tran;
        d["mixing"] = truth.mixing;
        return d;
      },
      py::arg("seed"), py::arg("nt") = 1280,
      "FitzHugh-Nagumo + Duffing + transient wave packet, mixed by a seeded orthogonal matrix.");

  py::class_<PairedModel>(m, "PairedModel")
      .def_property_readonly("modes", [](const PairedModel& p) { return p.model.modes; })
      .def_property_readonly("eigenvalues", [](const PairedModel& p) { return p.model.eigenvalues; })
      .def_property_readonly("amplitudes", [](const PairedModel& p) { return p.model.amplitudes; })
      .def_property_readonly("dt", [](const PairedModel& p) { return p.model.dt; })
      .def_property_readonly("rank", [](const PairedModel& p) { return p.model.rank(); })
      .def_readonly("pairs", &PairedModel::pairs)
      .def_readonly("dc_modes", &PairedModel::dc_modes)
      .def_readonly("unpaired", &PairedModel::unpaired)
      .def(
          "reconstruct", [](const PairedModel& p, const Vector& t) { return reconstruct(p.model, Grid1D(t)); },
          py::arg("t"), "Complex reconstruction sum_j phi_j exp(lambda_j t) b_j.");

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("relative_error", &FitResult::relative_error)
      .def_readonly("refine_converged", &FitResult::refine_converged)
      .def_readonly("refine_iterations", &FitResult::refine_iterations)
      .def_readonly("warnings", &FitResult::warnings);

  m.def(
      "fit",
      [](const Matrix& values, const Vector& x, const Vector& t, Index rank, Index delays, bool refine,
         double pair_tol, bool allow_unpaired) {
        FitOptions opts;
        opts.rank = rank;
        opts.delays = delays;
        opts.refine = refine;
        opts.pairing.pair_tol = pair_tol;
        opts.pairing.allow_unpaired = allow_unpaired;
        py::gil_scoped_release release;
        return fit(snapshot(values, x, t), opts);
      },
      py::arg("values"), py::arg("x"), py::arg("t"), py::arg("rank") = 4, py::arg("delays") = 1,
      py::arg("refine") = true, py::arg("pair_tol") = 1e-6, py::arg("allow_unpaired") = false,
      "Exact DMD with conjugate pairing, normalization and optional variable projection.");

  py::class_<PhasorMode>(m, "PhasorMode")
      .def(py::init<>())
      .def_readwrite("pair_id", &PhasorMode::pair_id)
      .def_readwrite("S", &PhasorMode::S)
      .def_readwrite("varphi", &PhasorMode::varphi)
      .def_readwrite("omega", &PhasorMode::omega)
      .def_readwrite("mu", &PhasorMode::mu)
      .def_readwrite("b", &PhasorMode::b)
      .def_readonly("undefined_phase", &PhasorMode::undefined_phase)
      .def("__repr__", [](const PhasorMode& p) {
        return "PhasorMode(pair_id=" + std::to_string(p.pair_id) + ", omega=" + io::format_double(p.omega) +
               ", mu=" + io::format_double(p.mu) + ", b=" + io::format_double(p.b) + ")";
      });

  m.def(
      "phasor_decompose", [](const PairedModel& pm) { return phasor_decompose(pm).modes; }, py::arg("model"),
      "One PhasorMode per conjugate pair of a normalized model.");
  m.def(
      "phasor_reconstruct_pair", [](const PhasorMode& mode, const Vector& t) {
        return phasor_reconstruct_pair(mode, Grid1D(t));
      },
      py::arg("mode"), py::arg("t"), "2 b S cos(omega t + varphi) exp(mu t).");
  m.def(
      "phasor_reconstruct",
      [](const PairedModel& pm, const Vector& t) { return phasor_reconstruct(phasor_decompose(pm), Grid1D(t)); },
      py::arg("model"), py::arg("t"), "Real reconstruction from every pair and DC mode in phasor form.");
  m.def(
      "waveform", [](double omega, const Vector& varphi, const Vector& t) { return waveform(omega, varphi, Grid1D(t)); },
      py::arg("omega"), py::arg("varphi"), py::arg("t"), "cos(omega t + varphi) over space x time.");

  py::class_<mr::MrDecomposition>(m, "MrDecomposition")
      .def_readonly("n_bands", &mr::MrDecomposition::n_bands)
      .def_readonly("band_centroids", &mr::MrDecomposition::band_centroids)
      .def_readonly("warnings", &mr::MrDecomposition::warnings)
      .def_property_readonly("n_modes", [](const mr::MrDecomposition& d) { return d.modes.size(); })
      .def_property_readonly("residual", [](const mr::MrDecomposition& d) { return d.residual(); })
      .def("total_reconstruction", &mr::total_reconstruction)
      .def(
          "summarize_band",
          [](const mr::MrDecomposition& d, int band, const std::string& weighting) {
            if (weighting != "flat" && weighting != "taper") throw py::value_error("weighting must be 'flat' or 'taper'");
            return band_summary(
                mr::summarize_band(d, band, weighting == "flat" ? mr::Weighting::Flat : mr::Weighting::Taper));
          },
          py::arg("band"), py::arg("weighting") = "flat", "beta, S, W and recon of one band.")
      .def(
          "save", [](const mr::MrDecomposition& d, const std::filesystem::path& path) {
            io::write_decomposition(path, d);
          },
          py::arg("path"))
      .def_static(
          "load", [](const std::filesystem::path& path) { return io::read_decomposition(path); }, py::arg("path"));

  m.def(
      "decompose",
      [](const Matrix& values, const Vector& x, const Vector& t, std::vector<Index> windows, double stride_frac,
         Index rank, int n_bands, int threads) {
        std::vector<mr::LevelConfig> levels;
        for (Index w : windows) levels.push_back(mr::make_level(w, stride_frac, rank));
        mr::DecomposeOptions opts;
        opts.n_bands = n_bands;
        opts.threads = threads;
        py::gil_scoped_release release;
        return mr::decompose(snapshot(values, x, t), levels, opts);
      },
      py::arg("values"), py::arg("x"), py::arg("t"), py::arg("windows") = std::vector<Index>{60, 120, 480},
      py::arg("stride_frac") = 0.1, py::arg("rank") = 6, py::arg("n_bands") = 0, py::arg("threads") = 1,
      "Windowed multi-level decomposition; n_bands = 0 selects the band count automatically.");

  m.def(
      "write_matrix",
      [](const std::filesystem::path& path, const Matrix& values, const Vector& rows, const Vector& cols) {
        io::write_matrix(path, io::MatrixCsv{rows, cols, values});
      },
      py::arg("path"), py::arg("values"), py::arg("rows"), py::arg("cols"));
  m.def(
      "read_matrix",
      [](const std::filesystem::path& path) {
        const io::MatrixCsv c = io::read_matrix(path);
        return py::make_tuple(c.values, c.rows, c.cols);
      },
      py::arg("path"), "Returns (values, row coordinates, column coordinates).");
  m.def(
      "write_model",
      [](const std::filesystem::path& path, const PairedModel& pm, const Vector& x, const Vector& t) {
        io::write_model(path, pm, Grid1D(x), Grid1D(t));
      },
      py::arg("path"), py::arg("model"), py::arg("x"), py::arg("t"));
  m.def(
      "read_model", [](const std::filesystem::path& path) { return io::read_model(path).model; }, py::arg("path"),
      "Loads a model document, verifying its phasor fields against the raw modes.");
}
