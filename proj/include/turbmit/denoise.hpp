#pragma once

#include <functional>
#include <string>

#include "turbmit/image.hpp"

namespace turbmit {

/// Pluggable denoiser contract for the plug-and-play prior: image in,
/// denoised image out at the given strength (noise std for images in [0,1]).
/// Strength <= 0 must return the input unchanged.
using Denoiser = std::function<Image(const Image&, double strength)>;

/// Patch-based non-local means (offset accumulation with box filtering).
Image nlm_denoise(const Image& img, double strength, int search_radius = 5, int patch_radius = 2);

Image gaussian_denoise(const Image& img, double strength);

/// Registry: "nlm" (default) or "gaussian". Unknown names throw.
Denoiser make_denoiser(const std::string& name);

}  // namespace turbmit
