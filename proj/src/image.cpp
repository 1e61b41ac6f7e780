#include "turbmit/image.hpp"

namespace turbmit {

Image resize_bilinear(const Image& img, int new_w, int new_h) {
    require(new_w > 0 && new_h > 0, "resize_bilinear: bad target size");
    Image out(new_w, new_h);
    const double sx = static_cast<double>(img.width()) / new_w;
    const double sy = static_cast<double>(img.height()) / new_h;
    for (int y = 0; y < new_h; ++y) {
        for (int x = 0; x < new_w; ++x) {
            out(x, y) = sample_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
        }
    }
    return out;
}

Image downsample_half(const Image& img) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int w = img.width(), h = img.height();
    Image tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * img.at_clamped(x + i, y);
            tmp(x, y) = s;
        }
    Image sm(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at_clamped(x, y + i);
            sm(x, y) = s;
        }
    const int nw = (w + 1) / 2, nh = (h + 1) / 2;
    Image out(nw, nh);
    for (int y = 0; y < nh; ++y)
        for (int x = 0; x < nw; ++x) out(x, y) = sm(2 * x, 2 * y);
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        norm += k[i + radius];
    }
    for (double& v : k) v /= norm;

    const int w = img.width(), h = img.height();
    Image tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * img.at_clamped(x + i, y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp.at_clamped(x, y + i);
            out(x, y) = s;
        }
    return out;
}

Image convolve_replicate(const Image& img, const Image& kernel) {
    require(kernel.width() % 2 == 1 && kernel.height() % 2 == 1, "convolve_replicate: kernel must be odd-sized");
    const int w = img.width(), h = img.height();
    const int kw = kernel.width(), kh = kernel.height();
    const int hx = kw / 2, hy = kh / 2;
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int j = 0; j < kh; ++j) {
                const int sy = y + hy - j;  // convolution: kernel flipped
                for (int i = 0; i < kw; ++i) {
                    s += kernel(i, j) * img.at_clamped(x + hx - i, sy);
                }
            }
            out(x, y) = s;
        }
    }
    return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
    require(a.same_size(b), "mean_abs_diff: size mismatch");
    if (a.size() == 0) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
    return s / a.size();
}

double max_abs_diff(const Image& a, const Image& b) {
    require(a.same_size(b), "max_abs_diff: size mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double sum_squared_diff(const Image& a, const Image& b) {
    require(a.same_size(b), "sum_squared_diff: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return s;
}

}  // namespace turbmit
