#include "turbmit/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace turbmit {

namespace {

// FFTW planning is not thread-safe; plan creation is serialized and plans are
// cached per (w, h, sign). Execution uses the new-array interface, which is
// safe to call concurrently on distinct buffers. All buffers come from
// fftw_malloc so alignment matches the plan.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan get_plan(int w, int h, int sign) {
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    const auto key = std::make_tuple(w, h, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(w) * h);
    // FFTW uses row-major (n0 = rows = h, n1 = cols = w).
    fftw_plan p = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    cache.emplace(key, p);
    return p;
}

struct FftwBuffer {
    explicit FftwBuffer(size_t n) : ptr(fftw_alloc_complex(n)) {}
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* ptr;
};

Spectrum run_dft(const std::vector<std::complex<double>>& in, int w, int h, int sign) {
    const size_t n = static_cast<size_t>(w) * h;
    fftw_plan plan = get_plan(w, h, sign);
    FftwBuffer buf(n);
    for (size_t i = 0; i < n; ++i) {
        buf.ptr[i][0] = in[i].real();
        buf.ptr[i][1] = in[i].imag();
    }
    fftw_execute_dft(plan, buf.ptr, buf.ptr);
    Spectrum out;
    out.width = w;
    out.height = h;
    out.data.resize(n);
    for (size_t i = 0; i < n; ++i) out.data[i] = {buf.ptr[i][0], buf.ptr[i][1]};
    return out;
}

}  // namespace

Spectrum fft2(const Image& img) {
    std::vector<std::complex<double>> in(img.size());
    for (size_t i = 0; i < img.size(); ++i) in[i] = img.data()[i];
    return run_dft(in, img.width(), img.height(), FFTW_FORWARD);
}

Spectrum fft2_complex(const std::vector<std::complex<double>>& in, int w, int h) {
    require(in.size() == static_cast<size_t>(w) * h, "fft2_complex: size mismatch");
    return run_dft(in, w, h, FFTW_FORWARD);
}

Image ifft2_real(const Spectrum& spec) {
    Spectrum inv = run_dft(spec.data, spec.width, spec.height, FFTW_BACKWARD);
    Image out(spec.width, spec.height);
    const double scale = 1.0 / (static_cast<double>(spec.width) * spec.height);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = inv.data[i].real() * scale;
    return out;
}

Spectrum kernel_transfer(const Image& kernel, int w, int h) {
    require(kernel.width() % 2 == 1 && kernel.height() % 2 == 1, "kernel_transfer: kernel must be odd-sized");
    require(kernel.width() <= w && kernel.height() <= h, "kernel_transfer: kernel larger than grid");
    Image padded(w, h, 0.0);
    const int hx = kernel.width() / 2, hy = kernel.height() / 2;
    for (int j = 0; j < kernel.height(); ++j) {
        for (int i = 0; i < kernel.width(); ++i) {
            const int x = ((i - hx) % w + w) % w;
            const int y = ((j - hy) % h + h) % h;
            padded(x, y) += kernel(i, j);
        }
    }
    return fft2(padded);
}

Image convolve_circular(const Image& img, const Image& kernel) {
    Spectrum fi = fft2(img);
    Spectrum fk = kernel_transfer(kernel, img.width(), img.height());
    for (size_t i = 0; i < fi.data.size(); ++i) fi.data[i] *= fk.data[i];
    return ifft2_real(fi);
}

}  // namespace turbmit
