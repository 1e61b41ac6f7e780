#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit::synth {

/// Grid of point sources (slightly blurred so subpixel shifts stay
/// resolvable), pitch `spacing`, sources centered within each cell.
Image point_grid(int size, int spacing, double blur = 0.7);

/// Two horizontal bars of the given thickness separated by `gap` rows,
/// centered vertically; intensity 1 on a 0 background.
Image two_bar_probe(int size, int gap, int thickness = 2);

/// Resolution-chart style target: tri-bar groups at shrinking scales,
/// horizontal and vertical, plus a large reference square.
Image usaf_chart(int size);

/// Smooth cloud-like texture with deterministic content; values in [0,1].
Image texture(int size, uint64_t seed, double smooth_sigma = 1.5);

/// Photographic-style synthetic scenes (gradients, edges, disks, texture).
/// `index` selects one of several fixed layouts.
Image scene(int size, int index);
int scene_count();

/// Static background with a bright square moving `step` pixels per frame
/// along +x, bouncing off the frame edges.
std::vector<Image> moving_square_sequence(int size, int frames, int square, double step,
                                          double background = 0.2, double amplitude = 1.0);

}  // namespace turbmit::synth
