#include "turbmit/synth.hpp"

#include <cmath>

#include "turbmit/rng.hpp"

namespace turbmit::synth {

Image point_grid(int size, int spacing, double blur) {
    require(size > 0 && spacing >= 4, "point_grid: bad geometry");
    Image img(size, size, 0.0);
    for (int cy = spacing / 2; cy < size; cy += spacing)
        for (int cx = spacing / 2; cx < size; cx += spacing) img(cx, cy) = 1.0;
    Image blurred = gaussian_blur(img, blur);
    const double peak = blurred.max_value();
    if (peak > 0.0) blurred *= 1.0 / peak;
    return blurred;
}

Image two_bar_probe(int size, int gap, int thickness) {
    require(size > 2 * thickness + gap, "two_bar_probe: bars do not fit");
    Image img(size, size, 0.0);
    const int c = size / 2;
    const int top = c - gap / 2 - thickness;
    const int bot = c + (gap + 1) / 2;
    for (int r = 0; r < thickness; ++r) {
        for (int x = size / 8; x < size - size / 8; ++x) {
            img(x, top + r) = 1.0;
            img(x, bot + r) = 1.0;
        }
    }
    return img;
}

Image usaf_chart(int size) {
    require(size >= 64, "usaf_chart: size too small");
    Image img(size, size, 1.0);  // white background, dark bars
    auto rect = [&](int x0, int y0, int w, int h, double v) {
        for (int y = y0; y < y0 + h && y < size; ++y)
            for (int x = x0; x < x0 + w && x < size; ++x)
                if (x >= 0 && y >= 0) img(x, y) = v;
    };
    // tri-bar groups at halving scales
    int bar = size / 10;
    int x = size / 16, y = size / 16;
    while (bar >= 2) {
        for (int i = 0; i < 3; ++i) rect(x, y + i * 2 * bar, 5 * bar, bar, 0.0);        // horizontal bars
        for (int i = 0; i < 3; ++i) rect(x + 6 * bar + i * 2 * bar, y, bar, 5 * bar, 0.0);  // vertical bars
        y += 6 * bar + bar;
        bar /= 2;
    }
    // large reference square, bottom-right
    rect(size - size / 3, size - size / 3, size / 4, size / 4, 0.0);
    return img;
}

Image texture(int size, uint64_t seed, double smooth_sigma) {
    Rng rng(seed);
    Image img(size, size);
    for (size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
    Image sm = gaussian_blur(img, smooth_sigma);
    const double lo = sm.min_value(), hi = sm.max_value();
    if (hi > lo)
        for (size_t i = 0; i < sm.size(); ++i) sm.data()[i] = (sm.data()[i] - lo) / (hi - lo);
    return sm;
}

namespace {

void draw_disk(Image& img, double cx, double cy, double r, double v) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (std::hypot(x - cx, y - cy) <= r) img(x, y) = v;
}

void draw_rect(Image& img, int x0, int y0, int w, int h, double v) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y)
        for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) img(x, y) = v;
}

}  // namespace

int scene_count() { return 6; }

Image scene(int size, int index) {
    require(size >= 32, "scene: size too small");
    const int s = size;
    Image img(s, s, 0.5);
    switch (index % scene_count()) {
        case 0: {  // house-like: sky gradient, walls, roof line, windows
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) img(x, y) = 0.85 - 0.3 * y / s;
            draw_rect(img, s / 5, s / 2, 3 * s / 5, s / 2, 0.55);
            for (int i = 0; i < s / 2; ++i) {  // roof triangle
                const int half = (s / 2 - i) * 3 / 5;
                draw_rect(img, s / 2 - half, s / 4 + i / 2, 2 * half, 1, 0.25);
            }
            draw_rect(img, s / 4, 5 * s / 8, s / 8, s / 6, 0.1);
            draw_rect(img, 5 * s / 8, 5 * s / 8, s / 8, s / 6, 0.1);
            draw_rect(img, 29 * s / 64, 3 * s / 4, s / 10, s / 4, 0.2);
            break;
        }
        case 1: {  // disks on gradient
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) img(x, y) = 0.2 + 0.6 * x / s;
            draw_disk(img, s * 0.3, s * 0.35, s * 0.16, 0.95);
            draw_disk(img, s * 0.68, s * 0.62, s * 0.2, 0.05);
            draw_disk(img, s * 0.75, s * 0.25, s * 0.08, 0.7);
            break;
        }
        case 2:  // cloud texture
            return texture(s, 0xC0FFEE, 2.0);
        case 3: {  // checker of varying scale
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const int cell = 4 + 12 * x / s;
                    img(x, y) = (((x / cell) + (y / cell)) % 2) ? 0.8 : 0.2;
                }
            break;
        }
        case 4: {  // bars + ramp + square
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) img(x, y) = 0.3 + 0.4 * std::sin(2 * M_PI * 3.0 * y / s) * x / s + 0.3;
            img.clamp01();
            draw_rect(img, s / 8, s / 8, s / 4, s / 4, 0.9);
            draw_rect(img, 5 * s / 8, 5 * s / 8, s / 4, s / 4, 0.05);
            break;
        }
        default: {  // texture with geometric overlays
            img = texture(s, 0xBEEF, 3.0);
            draw_disk(img, s * 0.5, s * 0.5, s * 0.18, 0.9);
            draw_rect(img, s / 10, 2 * s / 3, s / 3, s / 8, 0.1);
            break;
        }
    }
    return img;
}

std::vector<Image> moving_square_sequence(int size, int frames, int square, double step,
                                          double background, double amplitude) {
    require(square < size, "moving_square_sequence: square too large");
    std::vector<Image> seq;
    seq.reserve(frames);
    double x = size / 6.0;
    double dir = 1.0;
    const double y0 = (size - square) / 2.0;
    for (int f = 0; f < frames; ++f) {
        Image img(size, size, background);
        const int xi = static_cast<int>(std::lround(x));
        for (int y = 0; y < square; ++y)
            for (int dx = 0; dx < square; ++dx) {
                const int px = xi + dx, py = static_cast<int>(y0) + y;
                if (px >= 0 && px < size && py >= 0 && py < size) img(px, py) = amplitude;
            }
        seq.push_back(std::move(img));
        x += dir * step;
        if (x + square + step >= size || x - step < 0) dir = -dir;
    }
    return seq;
}

}  // namespace turbmit::synth
