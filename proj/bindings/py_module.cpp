#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "turbmit/config.hpp"
#include "turbmit/deconv.hpp"
#include "turbmit/fft.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/lucky.hpp"
#include "turbmit/metrics.hpp"
#include "turbmit/optics.hpp"
#include "turbmit/pgm_io.hpp"
#include "turbmit/psf_prior.hpp"
#include "turbmit/reference.hpp"
#include "turbmit/simulate.hpp"
#include "turbmit/synth.hpp"

namespace py = pybind11;
using namespace turbmit;

namespace {

Image to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Image img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(img.data(), arr.data(), sizeof(double) * img.size());
    return img;
}

py::array_t<double> from_image(const Image& img) {
    py::array_t<double> arr({img.height(), img.width()});
    std::memcpy(arr.mutable_data(), img.data(), sizeof(double) * img.size());
    return arr;
}

std::vector<Image> to_sequence(const py::list& frames) {
    std::vector<Image> seq;
    for (const auto& f : frames)
        seq.push_back(to_image(f.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>()));
    return seq;
}

py::list from_sequence(const std::vector<Image>& seq) {
    py::list out;
    for (const Image& f : seq) out.append(from_image(f));
    return out;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
    py::array_t<double> arr({py::ssize_t(v.size())});
    std::memcpy(arr.mutable_data(), v.data(), sizeof(double) * v.size());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_turbmit, m) {
    m.doc() = "Anisoplanatic turbulence simulation and restoration core";

    py::class_<OpticsParams>(m, "OpticsParams")
        .def(py::init<>())
        .def_readwrite("path_length_m", &OpticsParams::path_length_m)
        .def_readwrite("aperture_diameter_m", &OpticsParams::aperture_diameter_m)
        .def_readwrite("focal_length_m", &OpticsParams::focal_length_m)
        .def_readwrite("wavelength_m", &OpticsParams::wavelength_m)
        .def_readwrite("cn2", &OpticsParams::cn2)
        .def_readwrite("phase_grid", &OpticsParams::phase_grid)
        .def_readwrite("image_size", &OpticsParams::image_size)
        .def_readwrite("n_zernike", &OpticsParams::n_zernike)
        .def_readwrite("block_size", &OpticsParams::block_size)
        .def_readwrite("kernel_size", &OpticsParams::kernel_size)
        .def_readwrite("correlation_blocks", &OpticsParams::correlation_blocks)
        .def("set_dr0", &OpticsParams::set_dr0)
        .def("fried_parameter", [](const OpticsParams& p) { return fried_parameter(p); })
        .def("dr0", [](const OpticsParams& p) { return dr0_ratio(p); });

    m.def("phase_structure_function", &phase_structure_function, py::arg("separation_m"), py::arg("r0_m"));
    m.def("long_exposure_otf", &long_exposure_otf, py::arg("freq_cycles_per_m"), py::arg("params"));
    m.def("short_exposure_otf", &short_exposure_otf, py::arg("freq_cycles_per_m"), py::arg("params"));
    m.def("diffraction_cutoff", &diffraction_cutoff_cycles_per_m, py::arg("params"));

    m.def("noll_covariance", [](int n) {
        const std::vector<double> cov = noll_covariance(n);
        py::array_t<double> arr({n, n});
        std::memcpy(arr.mutable_data(), cov.data(), sizeof(double) * cov.size());
        return arr;
    });

    m.def(
        "sample_zernike_coeffs",
        [](double dr0, int n, uint64_t seed) {
            Rng rng(seed);
            const ZernikeCoeffs c = sample_zernike_coeffs(dr0, n, rng);
            return from_vector(c.a);
        },
        py::arg("dr0"), py::arg("n_modes"), py::arg("seed"));

    m.def(
        "zernike_phase",
        [](const py::array_t<double>& coeffs, int grid) {
            ZernikeBasis basis(grid, static_cast<int>(coeffs.size()));
            ZernikeCoeffs c;
            c.a.assign(coeffs.data(), coeffs.data() + coeffs.size());
            return from_image(basis.synthesize(c));
        },
        py::arg("coeffs"), py::arg("grid"));

    m.def(
        "psf_from_coeffs",
        [](const OpticsParams& params, const py::array_t<double>& coeffs) {
            const OpticsModel model(params);
            ZernikeCoeffs c;
            c.a.assign(coeffs.data(), coeffs.data() + coeffs.size());
            return from_image(model.psf_from_phase(model.phase_from_coeffs(c)).kernel);
        },
        py::arg("params"), py::arg("coeffs"));

    py::class_<SimulateOptions>(m, "SimulateOptions")
        .def(py::init<>())
        .def_readwrite("noise_sigma", &SimulateOptions::noise_sigma)
        .def_readwrite("isoplanatic", &SimulateOptions::isoplanatic)
        .def_readwrite("tilt_only", &SimulateOptions::tilt_only);

    m.def(
        "simulate_sequence",
        [](const py::list& clean, const OpticsParams& params, uint64_t seed, int threads,
           const SimulateOptions& opts) {
            return from_sequence(simulate_sequence(to_sequence(clean), params, seed, threads, opts));
        },
        py::arg("clean"), py::arg("params"), py::arg("seed"), py::arg("threads") = 1,
        py::arg("options") = SimulateOptions{});

    py::class_<PsfBasis>(m, "PsfBasis")
        .def_property_readonly("kernel_size", [](const PsfBasis& b) { return b.kernel_size; })
        .def_property_readonly("p", &PsfBasis::p)
        .def_property_readonly("mean_kernel", [](const PsfBasis& b) { return from_image(b.mean_kernel); })
        .def_property_readonly(
            "sigmas",
            [](const PsfBasis& b) { return from_vector(b.sigmas); })
        .def("component", [](const PsfBasis& b, int j) { return from_image(b.components.at(j)); })
        .def("save", [](const PsfBasis& b, const std::string& path) { save_psfb(b, path); });

    m.def("load_psfb", &load_psfb, py::arg("path"));

    py::class_<TrainOptions>(m, "TrainOptions")
        .def(py::init<>())
        .def_readwrite("ensemble_m", &TrainOptions::ensemble_m)
        .def_readwrite("p", &TrainOptions::p)
        .def_readwrite("kappa", &TrainOptions::kappa)
        .def_readwrite("tau_rel", &TrainOptions::tau_rel);

    m.def(
        "train_prior",
        [](const std::vector<double>& dr0_set, const OpticsParams& params, uint64_t seed,
           const TrainOptions& opts, int threads) { return train_prior(dr0_set, params, seed, opts, threads); },
        py::arg("dr0_set"), py::arg("params"), py::arg("seed"), py::arg("options") = TrainOptions{},
        py::arg("threads") = 1);

    m.def(
        "omp_sparse_code",
        [](const py::array_t<double>& kernel, const PsfBasis& basis, double tau) {
            Psf h;
            h.kernel = to_image(kernel);
            const SparseCode code = omp_sparse_code(h, basis, tau);
            return py::make_tuple(from_vector(code.w), code.support, code.residual, code.reached_tau);
        },
        py::arg("kernel"), py::arg("basis"), py::arg("tau"));

    py::class_<PatchWindowConfig>(m, "PatchWindowConfig")
        .def(py::init<>())
        .def_readwrite("patch_size", &PatchWindowConfig::patch_size)
        .def_readwrite("spatial_search", &PatchWindowConfig::spatial_search)
        .def_readwrite("temporal_window", &PatchWindowConfig::temporal_window)
        .def_readwrite("stride", &PatchWindowConfig::stride)
        .def_readwrite("beta", &PatchWindowConfig::beta);

    m.def(
        "compute_reference",
        [](const py::list& seq, int t, const PatchWindowConfig& cfg) {
            return from_image(compute_reference(to_sequence(seq), t, cfg));
        },
        py::arg("sequence"), py::arg("t"), py::arg("config") = PatchWindowConfig{});

    m.def(
        "calibrate_beta",
        [](double dr0, int trials, uint64_t seed, const OpticsParams& params, const PatchWindowConfig& cfg,
           int threads) { return calibrate_beta(dr0, trials, seed, params, cfg, BetaSweepOptions{}, threads); },
        py::arg("dr0"), py::arg("trials"), py::arg("seed"), py::arg("params") = OpticsParams{},
        py::arg("config") = PatchWindowConfig{}, py::arg("threads") = 1);

    m.def(
        "estimate_flow",
        [](const py::array_t<double>& moving, const py::array_t<double>& reference, int levels, int iters) {
            const FlowField f = estimate_flow(to_image(moving), to_image(reference), levels, iters);
            return py::make_tuple(from_image(f.u), from_image(f.v));
        },
        py::arg("moving"), py::arg("reference"), py::arg("levels") = 4, py::arg("iters") = 10);

    m.def(
        "warp",
        [](const py::array_t<double>& frame, const py::array_t<double>& u, const py::array_t<double>& v) {
            FlowField f{to_image(u), to_image(v)};
            return from_image(warp(to_image(frame), f));
        },
        py::arg("frame"), py::arg("u"), py::arg("v"));

    py::class_<LuckyConfig>(m, "LuckyConfig")
        .def(py::init<>())
        .def_readwrite("alpha1", &LuckyConfig::alpha1)
        .def_readwrite("alpha2", &LuckyConfig::alpha2)
        .def_readwrite("patch_size", &LuckyConfig::patch_size)
        .def_readwrite("stride", &LuckyConfig::stride)
        .def_readwrite("temporal_window", &LuckyConfig::temporal_window);

    m.def(
        "fuse_lucky",
        [](const py::list& aligned, const py::list& reference_seq, int t, const LuckyConfig& cfg) {
            return from_image(fuse_lucky(to_sequence(aligned), to_sequence(reference_seq), t, cfg));
        },
        py::arg("aligned"), py::arg("reference_seq"), py::arg("t"), py::arg("config") = LuckyConfig{});

    py::class_<DeconvConfig>(m, "DeconvConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &DeconvConfig::lambda)
        .def_readwrite("gamma", &DeconvConfig::gamma)
        .def_readwrite("outer_iters", &DeconvConfig::outer_iters)
        .def_readwrite("inner_iters", &DeconvConfig::inner_iters)
        .def_readwrite("denoiser", &DeconvConfig::denoiser)
        .def_readwrite("convergence_tol", &DeconvConfig::convergence_tol)
        .def_readwrite("fidelity_mu", &DeconvConfig::fidelity_mu)
        .def_readwrite("edge_mode", &DeconvConfig::edge_mode);

    m.def(
        "blind_deconvolve",
        [](const py::array_t<double>& y, const PsfBasis& basis, const DeconvConfig& cfg) {
            const DeconvResult res = blind_deconvolve(to_image(y), basis, cfg);
            return py::make_tuple(from_image(res.latent), from_image(res.psf.kernel),
                                  from_vector(res.weights), from_vector(res.objective_trace), res.partial);
        },
        py::arg("observed"), py::arg("basis"), py::arg("config") = DeconvConfig{});

    m.def("psnr",
          [](const py::array_t<double>& a, const py::array_t<double>& b) { return psnr(to_image(a), to_image(b)); });
    m.def("normalized_gradient", [](const py::list& seq) { return normalized_gradient(to_sequence(seq)); });
    m.def(
        "bar_pattern_dynamic_range",
        [](const py::array_t<double>& frame, const std::vector<int>& rows, int gap) {
            return bar_pattern_dynamic_range(to_image(frame), rows, gap);
        },
        py::arg("frame"), py::arg("bar_rows"), py::arg("gap_px"));

    // synthetic content and raster io, handy for smoke tests and notebooks
    m.def("synth_usaf", [](int size) { return from_image(synth::usaf_chart(size)); });
    m.def("synth_scene", [](int size, int index) { return from_image(synth::scene(size, index)); });
    m.def("synth_points", [](int size, int spacing) { return from_image(synth::point_grid(size, spacing)); });
    m.def("read_raster", [](const std::string& path) { return from_image(read_raster(path)); });
    m.def(
        "write_pgm",
        [](const py::array_t<double>& img, const std::string& path, int bits) {
            write_pgm(to_image(img), path, bits);
        },
        py::arg("image"), py::arg("path"), py::arg("bits") = 16);

    m.attr("__version__") = "0.1.0";
}
