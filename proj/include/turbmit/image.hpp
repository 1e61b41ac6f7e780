#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace turbmit {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

/// 2-D grayscale image, double precision, row-major. Pixel access is (x, y)
/// with x the column index. Frames in the pipeline carry values in [0,1];
/// the class itself does not enforce a range so it can hold PSFs, phases,
/// gradients and other intermediate grids.
class Image {
public:
    Image() = default;
    Image(int width, int height, double fill = 0.0)
        : w_(width), h_(height), data_(static_cast<size_t>(width) * height, fill) {
        require(width >= 0 && height >= 0, "Image: negative dimensions");
    }

    int width() const { return w_; }
    int height() const { return h_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int x, int y) { return data_[static_cast<size_t>(y) * w_ + x]; }
    double operator()(int x, int y) const { return data_[static_cast<size_t>(y) * w_ + x]; }

    /// Clamp-to-edge access; used by convolution and warping border handling.
    double at_clamped(int x, int y) const {
        x = std::clamp(x, 0, w_ - 1);
        y = std::clamp(y, 0, h_ - 1);
        return (*this)(x, y);
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_size(const Image& o) const { return w_ == o.w_ && h_ == o.h_; }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }
    double min_value() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
    double max_value() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void clamp01() {
        for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
    }

    Image& operator+=(const Image& o) {
        require(same_size(o), "Image +=: size mismatch");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Image& operator-=(const Image& o) {
        require(same_size(o), "Image -=: size mismatch");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Image& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    bool operator==(const Image& o) const { return w_ == o.w_ && h_ == o.h_ && data_ == o.data_; }

private:
    int w_ = 0;
    int h_ = 0;
    std::vector<double> data_;
};

/// Bilinear sample with clamp-to-edge boundary.
inline double sample_bilinear(const Image& img, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = img.at_clamped(x0, y0);
    const double v10 = img.at_clamped(x0 + 1, y0);
    const double v01 = img.at_clamped(x0, y0 + 1);
    const double v11 = img.at_clamped(x0 + 1, y0 + 1);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

Image resize_bilinear(const Image& img, int new_w, int new_h);

/// Downsample by 2 after a small binomial anti-alias filter.
Image downsample_half(const Image& img);

/// Separable Gaussian blur, clamp-to-edge. sigma <= 0 returns the input.
Image gaussian_blur(const Image& img, double sigma);

/// Direct spatial convolution with an odd-sized kernel, clamp-to-edge.
Image convolve_replicate(const Image& img, const Image& kernel);

double mean_abs_diff(const Image& a, const Image& b);
double max_abs_diff(const Image& a, const Image& b);
double sum_squared_diff(const Image& a, const Image& b);

}  // namespace turbmit
