#include "turbmit/denoise.hpp"

#include <cmath>

namespace turbmit {

namespace {

// box filter of half-width r with clamp-to-edge, normalized by window area
void box_filter(const Image& in, Image& out, int r) {
    const int w = in.width(), h = in.height();
    Image tmp(w, h);
    const double inv = 1.0 / (2 * r + 1);
    for (int y = 0; y < h; ++y) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += in.at_clamped(i, y);
        tmp(0, y) = s * inv;
        for (int x = 1; x < w; ++x) {
            s += in.at_clamped(x + r, y) - in.at_clamped(x - r - 1, y);
            tmp(x, y) = s * inv;
        }
    }
    for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += tmp.at_clamped(x, i);
        out(x, 0) = s * inv;
        for (int y = 1; y < h; ++y) {
            s += tmp.at_clamped(x, y + r) - tmp.at_clamped(x, y - r - 1);
            out(x, y) = s * inv;
        }
    }
}

}  // namespace

Image nlm_denoise(const Image& img, double strength, int search_radius, int patch_radius) {
    if (strength <= 0.0) return img;
    const int w = img.width(), h = img.height();
    Image acc(w, h, 0.0), wacc(w, h, 0.0);
    Image diff(w, h), dbar(w, h);

    const double sigma2 = strength * strength;
    const double h2 = std::max(0.4 * sigma2, 1e-12);  // Buades-style filtering bandwidth

    for (int dy = -search_radius; dy <= search_radius; ++dy) {
        for (int dx = -search_radius; dx <= search_radius; ++dx) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double d = img(x, y) - img.at_clamped(x + dx, y + dy);
                    diff(x, y) = d * d;
                }
            box_filter(diff, dbar, patch_radius);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double d2 = std::max(dbar(x, y) - 2.0 * sigma2, 0.0);
                    const double wgt = std::exp(-d2 / h2);
                    acc(x, y) += wgt * img.at_clamped(x + dx, y + dy);
                    wacc(x, y) += wgt;
                }
        }
    }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = acc(x, y) / wacc(x, y);
    return out;
}

Image gaussian_denoise(const Image& img, double strength) {
    if (strength <= 0.0) return img;
    return gaussian_blur(img, 8.0 * strength);
}

Denoiser make_denoiser(const std::string& name) {
    if (name == "nlm")
        return [](const Image& img, double s) { return nlm_denoise(img, s); };
    if (name == "gaussian")
        return [](const Image& img, double s) { return gaussian_denoise(img, s); };
    throw std::invalid_argument("make_denoiser: unknown denoiser '" + name + "'");
}

}  // namespace turbmit
