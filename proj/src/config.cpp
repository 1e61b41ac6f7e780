#include "turbmit/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace turbmit {

using nlohmann::json;

namespace {

class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), path_ + ": expected an object");
    }
    ~Section() = default;

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            require(seen_.count(it.key()) > 0, path_ + ": unknown key '" + it.key() + "'");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    void number(const std::string& key, T& out, double lo, double hi) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        require(v.is_number(), path_ + "." + key + ": expected a number");
        const double d = v.get<double>();
        require(d >= lo && d <= hi, path_ + "." + key + ": value out of range");
        out = static_cast<T>(d);
    }

    void integer(const std::string& key, int& out, int lo, int hi) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        require(v.is_number_integer(), path_ + "." + key + ": expected an integer");
        const long long d = v.get<long long>();
        require(d >= lo && d <= hi, path_ + "." + key + ": value out of range");
        out = static_cast<int>(d);
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        require(v.is_boolean(), path_ + "." + key + ": expected a boolean");
        out = v.get<bool>();
    }

    void text(const std::string& key, std::string& out, const std::set<std::string>& allowed) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        require(v.is_string(), path_ + "." + key + ": expected a string");
        out = v.get<std::string>();
        require(allowed.empty() || allowed.count(out) > 0, path_ + "." + key + ": unsupported value '" + out + "'");
    }

    void number_list(const std::string& key, std::vector<double>& out, double lo, double hi) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        require(v.is_array() && !v.empty(), path_ + "." + key + ": expected a non-empty array");
        out.clear();
        for (const auto& e : v) {
            require(e.is_number(), path_ + "." + key + ": expected numbers");
            const double d = e.get<double>();
            require(d >= lo && d <= hi, path_ + "." + key + ": value out of range");
            out.push_back(d);
        }
    }

    const json& sub(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

OpticsParams PipelineConfig::resolved_optics() const {
    OpticsParams p = optics;
    if (dr0 > 0.0) p.set_dr0(dr0);
    return p;
}

double PipelineConfig::resolved_dr0() const { return dr0_ratio(resolved_optics()); }

void PipelineConfig::validate() const {
    resolved_optics().validate();
    reference.validate();
    lucky.validate();
    deconv.validate();
    require(threads >= 1, "config: threads must be >= 1");
    require(frames >= 1, "config: frames must be >= 1");
    require(train.ensemble_m >= 2 && train.p >= 1 && train.p <= train.ensemble_m,
            "config: train requires ensemble_m >= p >= 1");
    require(train.kappa > 0.0 && train.tau_rel > 0.0, "config: train thresholds must be positive");
    require(calibrate.trials >= 1, "config: calibrate.trials must be >= 1");
    require(!calibrate.dr0_list.empty(), "config: calibrate.dr0_list must not be empty");
}

PipelineConfig default_config() { return PipelineConfig{}; }

PipelineConfig parse_config_text(const std::string& json_text) {
    json root_json;
    try {
        root_json = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }

    PipelineConfig cfg;
    Section root(root_json, "config");
    if (root.has("seed")) {
        const json& v = root_json.at("seed");
        require(v.is_number_unsigned() || v.is_number_integer(), "config.seed: expected an integer");
        cfg.seed = v.get<uint64_t>();
    }
    root.integer("threads", cfg.threads, 1, 1024);
    root.number("dr0", cfg.dr0, -1.0, 100.0);
    root.integer("frames", cfg.frames, 1, 100000);

    if (root.has("optics")) {
        Section s(root.sub("optics"), "config.optics");
        s.number("path_length_m", cfg.optics.path_length_m, 1e-6, 1e9);
        s.number("aperture_diameter_m", cfg.optics.aperture_diameter_m, 1e-6, 100.0);
        s.number("focal_length_m", cfg.optics.focal_length_m, 1e-6, 100.0);
        s.number("wavelength_m", cfg.optics.wavelength_m, 1e-9, 1e-3);
        s.number("cn2", cfg.optics.cn2, 0.0, 1.0);
        s.integer("phase_grid", cfg.optics.phase_grid, 16, 4096);
        s.integer("image_size", cfg.optics.image_size, 16, 65536);
        s.integer("n_zernike", cfg.optics.n_zernike, 4, 1000);
        s.integer("block_size", cfg.optics.block_size, 4, 65536);
        s.integer("kernel_size", cfg.optics.kernel_size, 3, 1023);
        s.number("correlation_blocks", cfg.optics.correlation_blocks, 0.0, 1e3);
        s.finish();
    }
    if (root.has("simulate")) {
        Section s(root.sub("simulate"), "config.simulate");
        s.number("noise_sigma", cfg.simulate.noise_sigma, 0.0, 1.0);
        s.boolean("isoplanatic", cfg.simulate.isoplanatic);
        s.boolean("tilt_only", cfg.simulate.tilt_only);
        s.finish();
    }
    if (root.has("reference")) {
        Section s(root.sub("reference"), "config.reference");
        s.integer("patch_size", cfg.reference.patch_size, 3, 255);
        s.integer("spatial_search", cfg.reference.spatial_search, 1, 255);
        s.integer("temporal_window", cfg.reference.temporal_window, 0, 10000);
        s.integer("stride", cfg.reference.stride, 1, 255);
        s.number("beta", cfg.reference.beta, 0.0, 1e9);
        s.finish();
    }
    if (root.has("flow")) {
        Section s(root.sub("flow"), "config.flow");
        s.integer("levels", cfg.flow.levels, 1, 16);
        s.integer("warp_iters", cfg.flow.warp_iters, 1, 1000);
        s.integer("solver_iters", cfg.flow.solver_iters, 1, 10000);
        s.number("alpha", cfg.flow.alpha, 1e-6, 1e3);
        s.number("max_displacement", cfg.flow.max_displacement, 0.1, 1e4);
        s.boolean("dump", cfg.flow_dump);
        s.finish();
    }
    if (root.has("lucky")) {
        Section s(root.sub("lucky"), "config.lucky");
        s.number("alpha1", cfg.lucky.alpha1, -1.0, 1e12);
        s.number("alpha2", cfg.lucky.alpha2, -1.0, 1e12);
        s.integer("patch_size", cfg.lucky.patch_size, 3, 255);
        s.integer("stride", cfg.lucky.stride, 1, 255);
        s.integer("temporal_window", cfg.lucky.temporal_window, 0, 10000);
        s.finish();
    }
    if (root.has("deconv")) {
        Section s(root.sub("deconv"), "config.deconv");
        s.number("lambda", cfg.deconv.lambda, 1e-12, 1e6);
        s.number("gamma", cfg.deconv.gamma, 1e-12, 1e6);
        s.integer("outer_iters", cfg.deconv.outer_iters, 1, 10000);
        s.integer("inner_iters", cfg.deconv.inner_iters, 1, 1000000);
        s.text("denoiser", cfg.deconv.denoiser, {"nlm", "gaussian"});
        s.number("convergence_tol", cfg.deconv.convergence_tol, 0.0, 1.0);
        s.number("fidelity_mu", cfg.deconv.fidelity_mu, 1e-12, 1e6);
        s.text("edge_mode", cfg.deconv.edge_mode, {"taper", "wrap"});
        s.finish();
    }
    if (root.has("train")) {
        Section s(root.sub("train"), "config.train");
        s.integer("ensemble_m", cfg.train.ensemble_m, 2, 10000000);
        s.integer("p", cfg.train.p, 1, 100000);
        s.number("kappa", cfg.train.kappa, 1e-9, 1e9);
        s.number("tau_rel", cfg.train.tau_rel, 1e-15, 1.0);
        s.finish();
    }
    if (root.has("calibrate")) {
        Section s(root.sub("calibrate"), "config.calibrate");
        s.number_list("dr0_list", cfg.calibrate.dr0_list, 1e-3, 100.0);
        s.integer("trials", cfg.calibrate.trials, 1, 1000000);
        s.number("beta_min", cfg.calibrate.sweep.beta_min, 1e-9, 1e12);
        s.number("beta_max", cfg.calibrate.sweep.beta_max, 1e-9, 1e12);
        s.integer("grid_points", cfg.calibrate.sweep.grid_points, 3, 10000);
        s.integer("probe_size", cfg.calibrate.sweep.probe_size, 32, 8192);
        s.integer("probe_spacing", cfg.calibrate.sweep.probe_spacing, 4, 1024);
        s.integer("probe_block", cfg.calibrate.sweep.probe_block, 4, 8192);
        s.number("probe_blur", cfg.calibrate.sweep.probe_blur, 0.0, 100.0);
        s.number("probe_correlation", cfg.calibrate.sweep.probe_correlation, 0.0, 1e3);
        s.integer("probe_temporal_window", cfg.calibrate.sweep.probe_temporal_window, 1, 10000);
        s.integer("search", cfg.calibrate.sweep.search, 1, 255);
        s.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

std::string dump_config(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["dr0"] = cfg.dr0;
    j["frames"] = cfg.frames;
    j["optics"] = {
        {"path_length_m", cfg.optics.path_length_m},
        {"aperture_diameter_m", cfg.optics.aperture_diameter_m},
        {"focal_length_m", cfg.optics.focal_length_m},
        {"wavelength_m", cfg.optics.wavelength_m},
        {"cn2", cfg.optics.cn2},
        {"phase_grid", cfg.optics.phase_grid},
        {"image_size", cfg.optics.image_size},
        {"n_zernike", cfg.optics.n_zernike},
        {"block_size", cfg.optics.block_size},
        {"kernel_size", cfg.optics.kernel_size},
        {"correlation_blocks", cfg.optics.correlation_blocks},
    };
    j["simulate"] = {
        {"noise_sigma", cfg.simulate.noise_sigma},
        {"isoplanatic", cfg.simulate.isoplanatic},
        {"tilt_only", cfg.simulate.tilt_only},
    };
    j["reference"] = {
        {"patch_size", cfg.reference.patch_size},
        {"spatial_search", cfg.reference.spatial_search},
        {"temporal_window", cfg.reference.temporal_window},
        {"stride", cfg.reference.stride},
        {"beta", cfg.reference.beta},
    };
    j["flow"] = {
        {"levels", cfg.flow.levels},
        {"warp_iters", cfg.flow.warp_iters},
        {"solver_iters", cfg.flow.solver_iters},
        {"alpha", cfg.flow.alpha},
        {"max_displacement", cfg.flow.max_displacement},
        {"dump", cfg.flow_dump},
    };
    j["lucky"] = {
        {"alpha1", cfg.lucky.alpha1},
        {"alpha2", cfg.lucky.alpha2},
        {"patch_size", cfg.lucky.patch_size},
        {"stride", cfg.lucky.stride},
        {"temporal_window", cfg.lucky.temporal_window},
    };
    j["deconv"] = {
        {"lambda", cfg.deconv.lambda},
        {"gamma", cfg.deconv.gamma},
        {"outer_iters", cfg.deconv.outer_iters},
        {"inner_iters", cfg.deconv.inner_iters},
        {"denoiser", cfg.deconv.denoiser},
        {"convergence_tol", cfg.deconv.convergence_tol},
        {"fidelity_mu", cfg.deconv.fidelity_mu},
        {"edge_mode", cfg.deconv.edge_mode},
    };
    j["train"] = {
        {"ensemble_m", cfg.train.ensemble_m},
        {"p", cfg.train.p},
        {"kappa", cfg.train.kappa},
        {"tau_rel", cfg.train.tau_rel},
    };
    j["calibrate"] = {
        {"dr0_list", cfg.calibrate.dr0_list},
        {"trials", cfg.calibrate.trials},
        {"beta_min", cfg.calibrate.sweep.beta_min},
        {"beta_max", cfg.calibrate.sweep.beta_max},
        {"grid_points", cfg.calibrate.sweep.grid_points},
        {"probe_size", cfg.calibrate.sweep.probe_size},
        {"probe_spacing", cfg.calibrate.sweep.probe_spacing},
        {"probe_block", cfg.calibrate.sweep.probe_block},
        {"probe_blur", cfg.calibrate.sweep.probe_blur},
        {"probe_correlation", cfg.calibrate.sweep.probe_correlation},
        {"probe_temporal_window", cfg.calibrate.sweep.probe_temporal_window},
        {"search", cfg.calibrate.sweep.search},
    };
    return j.dump(2) + "\n";
}

}  // namespace turbmit
