#pragma once

#include <complex>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit {

/// Row-major complex spectrum of a w x h grid (full redundancy, not r2c).
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> data;

    std::complex<double>& operator()(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    const std::complex<double>& operator()(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

/// Forward 2-D DFT of a real grid. Plans are cached per size and execution is
/// thread-safe; FFTW_ESTIMATE planning keeps results run-to-run identical.
Spectrum fft2(const Image& img);

/// Inverse 2-D DFT, returning the real part scaled by 1/(w*h).
Image ifft2_real(const Spectrum& spec);

Spectrum fft2_complex(const std::vector<std::complex<double>>& in, int w, int h);

/// Centered odd-sized kernel -> zero-padded spectrum with the kernel origin
/// wrapped to (0,0), i.e. the transfer function of circular convolution
/// (the classic psf2otf layout).
Spectrum kernel_transfer(const Image& kernel, int w, int h);

/// Circular convolution of img with a centered odd-sized kernel.
Image convolve_circular(const Image& img, const Image& kernel);

}  // namespace turbmit
