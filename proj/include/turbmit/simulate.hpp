#pragma once

#include <cstdint>
#include <vector>

#include "turbmit/optics.hpp"

namespace turbmit {

struct SimulateOptions {
    double noise_sigma = 0.0;  // additive Gaussian noise std, 0 disables
    bool isoplanatic = false;  // one PSF + one tilt per frame instead of a block field
    bool tilt_only = false;    // random warping without any blur (point-source calibrations)
};

/// Per-block Zernike coefficient draw for one frame: white per-mode fields on
/// the block grid, circular Gaussian smoothing of configurable length
/// (marginal variance restored after smoothing), then the Noll covariance
/// factor applied per block.
struct CoeffField {
    int blocks_x = 0;
    int blocks_y = 0;
    std::vector<ZernikeCoeffs> coeffs;  // row-major by (by, bx)

    const ZernikeCoeffs& at(int bx, int by) const { return coeffs[static_cast<size_t>(by) * blocks_x + bx]; }
};

CoeffField sample_coeff_field(const OpticsModel& model, int blocks_x, int blocks_y, Rng& rng);

/// Tilt-induced pixel displacement field: bilinear interpolation across block
/// centers of (4/pi) * (a2, a3).
void tilt_displacement(const CoeffField& field, int block_size, int width, int height, Image& dx, Image& dy);

/// Applies spatially varying turbulence to each frame: tilt-free per-block
/// PSFs blended with a raised-cosine partition of unity, then tilt warping.
/// Frames are processed with independent substreams of `seed`, so the result
/// does not depend on the thread budget.
std::vector<Image> simulate_sequence(const std::vector<Image>& clean, const OpticsParams& params,
                                     uint64_t seed, int threads = 1, const SimulateOptions& opts = {});

/// Single-frame convenience wrapper.
Image simulate_frame(const Image& clean, const OpticsModel& model, uint64_t frame_seed,
                     const SimulateOptions& opts = {});

}  // namespace turbmit
