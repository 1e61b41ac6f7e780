#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "turbmit/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    long long seed = -1;
    int threads = 0;
    double dr0 = 0.0;
    int frames = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (print-config shows the schema)");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--threads", args.threads, "thread budget override");
    cmd->add_option("--dr0", args.dr0, "turbulence level D/r0 override");
    cmd->add_option("--frames", args.frames, "sequence length override");
}

turbmit::PipelineConfig resolve_config(const CommonArgs& args) {
    turbmit::PipelineConfig cfg =
        args.config_path.empty() ? turbmit::default_config() : turbmit::load_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    if (args.threads > 0) cfg.threads = args.threads;
    if (args.dr0 > 0.0) cfg.dr0 = args.dr0;
    if (args.frames > 0) cfg.frames = args.frames;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"turbmit: anisoplanatic turbulence simulation and restoration"};
    app.require_subcommand(1);

    // simulate
    CommonArgs sim_args;
    std::string sim_input, sim_out;
    auto* sim = app.add_subcommand("simulate", "distort a clean image into a turbulent sequence");
    add_common(sim, sim_args);
    sim->add_option("--input", sim_input, "clean raster file or synth:<usaf|points|bars|texture|sceneN>")->required();
    sim->add_option("--output-dir", sim_out, "output directory for frame_%05d.pgm")->required();

    // calibrate-beta
    CommonArgs cal_args;
    std::string cal_out;
    std::vector<double> cal_levels;
    int cal_trials = 0;
    auto* cal = app.add_subcommand("calibrate-beta", "sweep beta against simulated tilts per D/r0 level");
    add_common(cal, cal_args);
    cal->add_option("--output", cal_out, "two-column (dr0, beta) table path")->required();
    cal->add_option("--dr0-list", cal_levels, "D/r0 levels to calibrate");
    cal->add_option("--trials", cal_trials, "trials per level");

    // train-prior
    CommonArgs train_args;
    std::string train_out;
    double train_dr0 = 0.0;
    int train_m = 0, train_p = 0;
    auto* train = app.add_subcommand("train-prior", "learn the PSF basis and sigma scales");
    add_common(train, train_args);
    train->add_option("--output", train_out, "PSFB output path")->required();
    train->add_option("--ensemble-m", train_m, "training ensemble size");
    train->add_option("--p", train_p, "number of principal components");

    // restore
    CommonArgs rest_args;
    std::string rest_in, rest_prefix = "frame", rest_basis, rest_beta, rest_out, rest_frames = "all";
    auto* rest = app.add_subcommand("restore", "reference -> flow -> lucky fusion -> blind deconvolution");
    add_common(rest, rest_args);
    rest->add_option("--input", rest_in, "directory holding <prefix>_%05d.pgm frames")->required();
    rest->add_option("--prefix", rest_prefix, "frame filename prefix");
    rest->add_option("--basis", rest_basis, "PSFB basis file")->required();
    rest->add_option("--beta-table", rest_beta, "calibration table; overrides reference.beta via D/r0");
    rest->add_option("--output-dir", rest_out, "output directory")->required();
    rest->add_option("--restore-frames", rest_frames, "'all', 'center', or comma-separated indices");

    // evaluate
    std::string ev_restored, ev_prefix = "restored", ev_clean, ev_out = "metrics.txt";
    auto* ev = app.add_subcommand("evaluate", "PSNR + normalized gradient records for restored frames");
    ev->add_option("--restored", ev_restored, "directory of restored frames")->required();
    ev->add_option("--restored-prefix", ev_prefix, "restored filename prefix");
    ev->add_option("--clean", ev_clean, "clean reference raster")->required();
    ev->add_option("--output", ev_out, "metric records path");

    // print-config
    auto* pc = app.add_subcommand("print-config", "dump the default configuration as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            turbmit::stage_simulate(resolve_config(sim_args), sim_input, sim_out);
        } else if (cal->parsed()) {
            turbmit::PipelineConfig cfg = resolve_config(cal_args);
            if (!cal_levels.empty()) cfg.calibrate.dr0_list = cal_levels;
            if (cal_trials > 0) cfg.calibrate.trials = cal_trials;
            turbmit::stage_calibrate(cfg, cal_out);
        } else if (train->parsed()) {
            turbmit::PipelineConfig cfg = resolve_config(train_args);
            if (train_m > 0) cfg.train.ensemble_m = train_m;
            if (train_p > 0) cfg.train.p = train_p;
            train_dr0 = cfg.resolved_dr0();
            if (train_dr0 <= 0.0) throw std::invalid_argument("train-prior: D/r0 must be positive (set --dr0)");
            turbmit::stage_train(cfg, train_dr0, train_out);
        } else if (rest->parsed()) {
            turbmit::stage_restore(resolve_config(rest_args), rest_in, rest_prefix, rest_basis, rest_beta,
                                   rest_out, rest_frames);
        } else if (ev->parsed()) {
            turbmit::stage_evaluate(ev_restored, ev_prefix, ev_clean, ev_out);
        } else if (pc->parsed()) {
            std::cout << turbmit::dump_config(turbmit::default_config());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
