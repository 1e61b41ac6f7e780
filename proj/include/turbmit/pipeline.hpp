#pragma once

#include <string>
#include <vector>

#include "turbmit/config.hpp"
#include "turbmit/metrics.hpp"

namespace turbmit {

/// Wall-clock seconds per restoration stage, in the order they run.
struct StageTimes {
    double reference = 0.0;
    double flow = 0.0;
    double lucky = 0.0;
    double deconv = 0.0;
    double overall = 0.0;
};

std::string format_runtime_table(const StageTimes& times);

/// Resolves "synth:<name>" pseudo-paths (usaf, points, bars, scene0..5,
/// texture) at optics.image_size, or reads a raster file.
Image load_input_image(const std::string& input, const PipelineConfig& cfg);

/// Simulates cfg.frames turbulent frames of a clean image; writes
/// <out_dir>/frame_%05d.pgm plus <out_dir>/clean.pgm.
void stage_simulate(const PipelineConfig& cfg, const std::string& input, const std::string& out_dir);

/// Writes the (dr0, beta) calibration table.
void stage_calibrate(const PipelineConfig& cfg, const std::string& out_path);

/// Trains the PSF prior at the given D/r0 level and writes the PSFB file.
void stage_train(const PipelineConfig& cfg, double dr0, const std::string& out_path);

/// Frame-selection spec: "all", "center", or a comma list of indices.
std::vector<int> parse_frame_spec(const std::string& spec, int total);

struct RestoreResult {
    StageTimes times;
    std::vector<int> restored_indices;
};

/// reference -> optical flow -> lucky fusion -> blind deconvolution.
/// Writes <out_dir>/restored_%05d.pgm (16-bit) for each selected index and
/// <out_dir>/runtime.txt with the per-stage wall-clock table. An empty
/// beta_table_path keeps cfg.reference.beta.
RestoreResult stage_restore(const PipelineConfig& cfg, const std::string& in_dir, const std::string& prefix,
                            const std::string& basis_path, const std::string& beta_table_path,
                            const std::string& out_dir, const std::string& frame_spec);

/// PSNR against the clean reference (single image or per-frame sequence)
/// and normalized gradients; writes one record per frame.
MetricReport stage_evaluate(const std::string& restored_dir, const std::string& restored_prefix,
                            const std::string& clean_path, const std::string& out_path);

}  // namespace turbmit
