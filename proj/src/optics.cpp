#include "turbmit/optics.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "turbmit/fft.hpp"

namespace turbmit {

void OpticsParams::validate() const {
    require(path_length_m > 0 && aperture_diameter_m > 0 && focal_length_m > 0 && wavelength_m > 0,
            "OpticsParams: physical lengths must be positive");
    require(cn2 >= 0, "OpticsParams: cn2 must be >= 0");
    require(phase_grid >= 16 && (phase_grid & (phase_grid - 1)) == 0,
            "OpticsParams: phase_grid must be >= 16 and a power of two");
    require(n_zernike >= 4, "OpticsParams: n_zernike must be >= 4");
    require(image_size > 0 && block_size > 0, "OpticsParams: sizes must be positive");
    require(kernel_size >= 3 && kernel_size % 2 == 1, "OpticsParams: kernel_size must be odd and >= 3");
}

void OpticsParams::set_dr0(double dr0) {
    require(dr0 >= 0.0, "set_dr0: ratio must be >= 0");
    if (dr0 == 0.0) {
        cn2 = 0.0;
        return;
    }
    const double r0 = aperture_diameter_m / dr0;
    const double k = 2.0 * M_PI / wavelength_m;
    cn2 = std::pow(r0, -5.0 / 3.0) / (0.423 * k * k * path_length_m);
}

double fried_parameter(const OpticsParams& params) {
    params.validate();
    if (params.cn2 == 0.0) return std::numeric_limits<double>::infinity();
    const double k = 2.0 * M_PI / params.wavelength_m;
    return std::pow(0.423 * k * k * params.cn2 * params.path_length_m, -3.0 / 5.0);
}

double dr0_ratio(const OpticsParams& params) {
    const double r0 = fried_parameter(params);
    return std::isinf(r0) ? 0.0 : params.aperture_diameter_m / r0;
}

double phase_structure_function(double separation_m, double r0_m) {
    require(separation_m >= 0.0, "phase_structure_function: separation must be >= 0");
    require(r0_m > 0.0, "phase_structure_function: r0 must be positive");
    return 6.88 * std::pow(separation_m / r0_m, 5.0 / 3.0);
}

double long_exposure_otf(double freq_cycles_per_m, const OpticsParams& params) {
    require(freq_cycles_per_m >= 0.0, "long_exposure_otf: frequency must be >= 0");
    const double r0 = fried_parameter(params);
    if (std::isinf(r0)) return 1.0;
    const double x = params.wavelength_m * params.focal_length_m * freq_cycles_per_m / r0;
    return std::exp(-3.44 * std::pow(x, 5.0 / 3.0));
}

double short_exposure_otf(double freq_cycles_per_m, const OpticsParams& params) {
    require(freq_cycles_per_m >= 0.0, "short_exposure_otf: frequency must be >= 0");
    const double s = params.wavelength_m * params.focal_length_m * freq_cycles_per_m;
    const double q = s / params.aperture_diameter_m;
    if (q > 1.0) return 0.0;  // beyond the diffraction cutoff
    const double r0 = fried_parameter(params);
    if (std::isinf(r0)) return 1.0;
    return std::exp(-3.44 * std::pow(s / r0, 5.0 / 3.0) * (1.0 - std::cbrt(q)));
}

double diffraction_cutoff_cycles_per_m(const OpticsParams& params) {
    return params.aperture_diameter_m / (params.wavelength_m * params.focal_length_m);
}

Psf Psf::delta(int k) {
    require(k >= 1 && k % 2 == 1, "Psf::delta: odd size required");
    Psf p;
    p.kernel = Image(k, k, 0.0);
    p.kernel(k / 2, k / 2) = 1.0;
    return p;
}

void Psf::project_to_valid() {
    double s = 0.0;
    for (size_t i = 0; i < kernel.size(); ++i) {
        double& v = kernel.data()[i];
        if (v < 0.0) v = 0.0;
        s += v;
    }
    if (s <= 0.0) {
        kernel.fill(0.0);
        kernel(kernel.width() / 2, kernel.height() / 2) = 1.0;
        return;
    }
    for (size_t i = 0; i < kernel.size(); ++i) kernel.data()[i] /= s;
}

bool Psf::is_valid(double tol) const {
    if (kernel.width() != kernel.height() || kernel.width() % 2 == 0) return false;
    double s = 0.0;
    for (size_t i = 0; i < kernel.size(); ++i) {
        const double v = kernel.data()[i];
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
        s += v;
    }
    return std::abs(s - 1.0) <= tol;
}

double Psf::centroid_offset_x() const {
    const int c = kernel.width() / 2;
    double s = 0.0;
    for (int y = 0; y < kernel.height(); ++y)
        for (int x = 0; x < kernel.width(); ++x) s += kernel(x, y) * (x - c);
    return s;
}

double Psf::centroid_offset_y() const {
    const int c = kernel.height() / 2;
    double s = 0.0;
    for (int y = 0; y < kernel.height(); ++y)
        for (int x = 0; x < kernel.width(); ++x) s += kernel(x, y) * (y - c);
    return s;
}

OpticsModel::OpticsModel(const OpticsParams& params) : params_(params) {
    params_.validate();
    basis_ = std::make_shared<ZernikeBasis>(params_.phase_grid, params_.n_zernike);
}

PhaseField OpticsModel::phase_from_coeffs(const ZernikeCoeffs& coeffs) const {
    require(coeffs.modes() <= params_.n_zernike, "phase_from_coeffs: too many modes");
    for (double v : coeffs.a) require(std::isfinite(v), "phase_from_coeffs: non-finite coefficient");
    PhaseField f;
    f.phi = basis_->synthesize(coeffs);
    f.mask = basis_->pupil_mask();
    return f;
}

Image OpticsModel::psf_intensity_full(const PhaseField& phase) const {
    const int g = params_.phase_grid;
    require(phase.phi.width() == g && phase.phi.height() == g, "psf_intensity_full: grid mismatch");
    const int s = fft_size();
    std::vector<std::complex<double>> pupil(static_cast<size_t>(s) * s, 0.0);
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            if (phase.mask(x, y) == 0.0) continue;
            pupil[static_cast<size_t>(y) * s + x] = std::polar(1.0, phase.phi(x, y));
        }
    }
    Spectrum f = fft2_complex(pupil, s, s);
    Image psf(s, s);
    double total = 0.0;
    // fftshift so the zero-phase peak sits at (s/2, s/2)
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const int sx = (x + s / 2) % s;
            const int sy = (y + s / 2) % s;
            const std::complex<double>& v = f(sx, sy);
            const double m = v.real() * v.real() + v.imag() * v.imag();
            psf(x, y) = m;
            total += m;
        }
    }
    psf *= 1.0 / total;
    return psf;
}

namespace {

Psf crop_center(const Image& full, int k, double* energy_inside) {
    const int s = full.width();
    const int c = s / 2;
    const int h = k / 2;
    Psf p;
    p.kernel = Image(k, k);
    double e = 0.0;
    for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) {
            const double v = full(c - h + x, c - h + y);
            p.kernel(x, y) = v;
            e += v;
        }
    if (energy_inside) *energy_inside = e;
    if (e > 0.0) p.kernel *= 1.0 / e;
    return p;
}

}  // namespace

Psf OpticsModel::psf_from_phase(const PhaseField& phase, CropInfo* info) const {
    const Image full = psf_intensity_full(phase);
    const int s = full.width();
    int k = std::min(params_.kernel_size, s - 1);
    if (k % 2 == 0) --k;
    double inside = 0.0;
    Psf p = crop_center(full, k, &inside);
    bool widened = false;
    while (inside < 0.98 && k + 8 <= s - 1) {
        k += 8;
        p = crop_center(full, k, &inside);
        widened = true;
    }
    if (info) {
        info->kernel_size = k;
        info->energy_inside = inside;
        info->widened = widened;
    }
    return p;
}

Psf OpticsModel::psf_from_phase_fixed(const PhaseField& phase, int kernel_size, double* energy_inside) const {
    require(kernel_size % 2 == 1 && kernel_size < fft_size(), "psf_from_phase_fixed: bad kernel size");
    const Image full = psf_intensity_full(phase);
    return crop_center(full, kernel_size, energy_inside);
}

Image OpticsModel::diffraction_otf_grid() const {
    const int g = params_.phase_grid;
    const int s = fft_size();
    const Image& mask = basis_->pupil_mask();
    Image padded(s, s, 0.0);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) padded(x, y) = mask(x, y);
    Spectrum f = fft2(padded);
    for (auto& v : f.data) v = v.real() * v.real() + v.imag() * v.imag();
    Image acorr = ifft2_real(f);
    const double dc = acorr(0, 0);
    acorr *= 1.0 / dc;
    return acorr;
}

Psf OpticsModel::diffraction_psf() const {
    ZernikeCoeffs zero;
    zero.a.assign(params_.n_zernike, 0.0);
    return psf_from_phase(phase_from_coeffs(zero));
}

ZernikeCoeffs sample_zernike_coeffs(double dr0, int n_modes, Rng& rng) {
    require(dr0 > 0.0, "sample_zernike_coeffs: D/r0 must be positive");
    ZernikeSampler sampler(n_modes, dr0);
    return sampler.sample(rng);
}

}  // namespace turbmit
