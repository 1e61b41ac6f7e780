#pragma once

#include <vector>

#include "turbmit/image.hpp"

namespace turbmit {

struct LuckyConfig {
    double alpha1 = -1.0;     // geometric cutoff, 1/intensity^2; < 0 = auto (3 / median dG)
    double alpha2 = -1.0;     // sharpness gain, 1/gradient-sum; < 0 = auto (1 / median dS)
    int patch_size = 9;       // odd
    int stride = 4;
    int temporal_window = 15;

    void validate() const;
};

/// Geometric consistency: squared distance between the aligned patch and the
/// reference patch.
double geometric_score(const Image& aligned_patch, const Image& reference_patch);

/// Sharpness: l1 norm of forward-difference gradients over the patch,
/// both axes.
double sharpness_score(const Image& patch);

/// Per-sequence parameters from score percentiles: alpha1 = 3 / median(dG),
/// alpha2 = 1 / median(dS) over all patches and frames in the window
/// (0 when the median vanishes).
void auto_alphas(const std::vector<Image>& aligned, const std::vector<Image>& reference_seq, int t,
                 const LuckyConfig& cfg, double& alpha1, double& alpha2);

/// Lucky-region fusion at time t: per patch, exp(-a1 dG + a2 dS) weights over
/// the temporal window, computed in log space with a max shift, then the
/// raised-cosine overlap blend shared with the reference stage.
Image fuse_lucky(const std::vector<Image>& aligned, const std::vector<Image>& reference_seq, int t,
                 const LuckyConfig& cfg);

/// Whole-frame mean sharpness (diagnostics for fusion tests).
double frame_sharpness(const Image& img);

}  // namespace turbmit
