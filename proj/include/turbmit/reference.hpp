#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbmit/image.hpp"
#include "turbmit/optics.hpp"

namespace turbmit {

/// Patch geometry shared by the reference-frame and lucky-fusion stages.
struct PatchWindowConfig {
    int patch_size = 9;       // odd
    int spatial_search = 11;  // odd side of the search window Omega_r
    int temporal_window = 15; // half-width of Omega_t, frames each side
    int stride = 4;           // pixels between patch centers
    double beta = 4.0;        // weight decay, 1/intensity^2

    void validate() const;
    int patch_half() const { return patch_size / 2; }
    int search_half() const { return spatial_search / 2; }
};

/// Patch centers along one axis: clamped inside the frame, stride apart,
/// with the last center pinned so every pixel is covered.
std::vector<int> patch_centers(int dim, int patch_size, int stride);

/// Raised-cosine patch window value at offset o from the center,
/// cos^2(pi o / (patch_size + 1)); strictly positive on the patch.
double patch_window_value(int offset, int patch_size);

/// Squared Euclidean distance between two equal-sized patches.
double patch_distance(const Image& a, const Image& b);

Image extract_patch(const Image& img, int cx, int cy, int patch_size);

/// Minimum patch distance over the clipped spatial search window:
/// min over dr in Omega_r of |y(r, t) - y(r + dr, t + dt)|^2.
/// Exhaustive scan; candidate patches must lie fully inside the frame.
double min_spatial_distance(const std::vector<Image>& seq, int cx, int cy, int t, int dt,
                            const PatchWindowConfig& cfg);

/// Per-patch minimum distances for every valid temporal offset, computed for
/// the whole patch grid at once (integral-image scan).
struct NonlocalDistances {
    std::vector<int> xs, ys;          // patch-center grid
    std::vector<int> dts;             // valid temporal offsets in window order
    std::vector<std::vector<double>> dmin;  // [dt index][cy-major center index]
};
NonlocalDistances compute_nonlocal_distances(const std::vector<Image>& seq, int t,
                                             const PatchWindowConfig& cfg);

/// Weighted average of co-located patches with weights exp(-beta * dmin),
/// overlapping estimates blended by the raised-cosine accumulation.
Image reference_from_distances(const std::vector<Image>& seq, int t, const PatchWindowConfig& cfg,
                               const NonlocalDistances& dists, double beta);

/// Space-time non-local reference frame at time t.
Image compute_reference(const std::vector<Image>& seq, int t, const PatchWindowConfig& cfg);

/// beta calibration on a tilt-distorted point-source probe. The probe uses a
/// fine-grained tilt field (small blocks, short correlation) so that the
/// min-distance weights see per-patch distortion; the blob width is matched
/// to the jitter scale, which keeps the error curve's minimum interior at
/// every turbulence level.
struct BetaSweepOptions {
    double beta_min = 5e-3;
    double beta_max = 5.0;
    int grid_points = 20;
    int probe_size = 64;             // probe image side, divisible by probe_block
    int probe_spacing = 12;          // point-source pitch
    int probe_block = 4;             // simulator block size for the probe
    double probe_blur = 1.2;         // blob width (Gaussian sigma, px)
    double probe_correlation = 0.8;  // tilt-field smoothing, in blocks
    int probe_temporal_window = 3;   // frames each side during calibration
    int search = 7;                  // spatial search used during calibration
};

/// Sweeps beta, averaging the reconstruction error |ref - truth| over
/// seeded trials, and returns the arg-min with parabolic refinement in
/// log(beta). Warns (stderr) when the averaged error curve is not unimodal
/// beyond a small tolerance. `mean_errors`, when given, receives the
/// averaged error per grid point.
double calibrate_beta(double dr0, int trials, uint64_t seed, const OpticsParams& base,
                      const PatchWindowConfig& cfg, const BetaSweepOptions& sweep = {}, int threads = 1,
                      std::vector<double>* mean_errors = nullptr);

struct BetaTable {
    std::vector<double> dr0;
    std::vector<double> beta;
};

BetaTable calibrate_beta_table(const std::vector<double>& dr0_list, int trials, uint64_t seed,
                               const OpticsParams& base, const PatchWindowConfig& cfg,
                               const BetaSweepOptions& sweep = {}, int threads = 1);

/// Two-column text table "dr0 beta", one row per level.
void save_beta_table(const BetaTable& table, const std::string& path);
BetaTable load_beta_table(const std::string& path);

/// Linear interpolation of the calibration curve, clamped at the ends.
double beta_for_dr0(const BetaTable& table, double dr0);

}  // namespace turbmit
