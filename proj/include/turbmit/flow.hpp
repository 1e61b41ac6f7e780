#pragma once

#include <string>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit {

/// Dense per-pixel displacement, pixels. warp() samples the source frame at
/// r + (u, v), i.e. backward mapping.
struct FlowField {
    Image u;
    Image v;

    int width() const { return u.width(); }
    int height() const { return u.height(); }
    static FlowField zero(int w, int h) { return {Image(w, h, 0.0), Image(w, h, 0.0)}; }
    void validate(double max_displacement) const;
};

struct FlowOptions {
    int levels = 4;            // pyramid levels
    int warp_iters = 10;       // warping updates per level
    int solver_iters = 60;     // Jacobi sweeps per warp update
    double alpha = 0.3;        // Horn-Schunck smoothness weight (images in [0,1])
    double max_displacement = 16.0;
};

/// Coarse-to-fine dense registration of `moving` against `reference`
/// (Horn-Schunck data + smoothness updates inside an incremental warping
/// loop). If the estimated flow does not reduce the residual
/// |warp(moving) - reference|, the zero flow is returned instead, so the
/// residual contract always holds.
FlowField estimate_flow(const Image& moving, const Image& reference, int levels = 4, int iters = 10);
FlowField estimate_flow_opts(const Image& moving, const Image& reference, const FlowOptions& opts);

/// Backward warp with bilinear sampling, clamp-to-edge.
Image warp(const Image& frame, const FlowField& flow);

/// Median of u and v over all pixels (diagnostics / tests).
void median_flow(const FlowField& flow, double& mu, double& mv);

/// Per-frame binary dump: magic "FLOW", u32 width, u32 height, then the u
/// plane and the v plane as little-endian f32.
void save_flow(const FlowField& flow, const std::string& path);
FlowField load_flow(const std::string& path);

}  // namespace turbmit
