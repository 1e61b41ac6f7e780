#pragma once

#include <memory>

#include "turbmit/image.hpp"
#include "turbmit/rng.hpp"
#include "turbmit/zernike.hpp"

namespace turbmit {

/// Imaging geometry and turbulence strength. Defaults follow a 4 km
/// horizontal path with a 0.1 m aperture; the image is sampled at the focal
/// plane Nyquist spacing lambda*d/(2*D), which ties pixel units to the
/// optical model throughout the simulator.
struct OpticsParams {
    double path_length_m = 4000.0;
    double aperture_diameter_m = 0.1;
    double focal_length_m = 0.4;
    double wavelength_m = 525e-9;
    double cn2 = 1.5e-15;        // refractive-index structure parameter, m^(-2/3)
    int phase_grid = 64;         // pupil-phase samples per side, power of two
    int image_size = 512;        // pixels per side for generated imagery
    int n_zernike = 36;          // Noll mode count
    int block_size = 32;         // pixels per PSF block in the simulator
    int kernel_size = 33;        // PSF crop side, odd
    double correlation_blocks = 2.0;  // Gaussian smoothing length of the coefficient field, in blocks

    void validate() const;

    /// Sets cn2 so that aperture_diameter_m / r0 equals the requested ratio.
    void set_dr0(double dr0);
};

/// Fried parameter r0 (m), plane-wave closed form
/// r0 = (0.423 k^2 Cn2 L)^(-3/5). Returns +infinity when cn2 == 0
/// (no turbulence).
double fried_parameter(const OpticsParams& params);

/// Aperture-to-coherence ratio D/r0; 0 when there is no turbulence.
double dr0_ratio(const OpticsParams& params);

/// Kolmogorov phase structure function, rad^2: 6.88 (s / r0)^(5/3).
double phase_structure_function(double separation_m, double r0_m);

/// Long-exposure atmospheric OTF, Fried closed form.
double long_exposure_otf(double freq_cycles_per_m, const OpticsParams& params);

/// Short-exposure (tilt-removed) atmospheric OTF. Zero beyond the
/// diffraction cutoff D/(lambda d), where the bracket turns negative.
double short_exposure_otf(double freq_cycles_per_m, const OpticsParams& params);

double diffraction_cutoff_cycles_per_m(const OpticsParams& params);

/// Pupil phase on the phase grid, radians; zero outside the pupil mask.
struct PhaseField {
    Image phi;
    Image mask;
};

/// Discrete nonnegative PSF kernel, unit sum, odd side length.
struct Psf {
    Image kernel;

    int size() const { return kernel.width(); }
    static Psf delta(int k);
    /// Clips negatives and rescales to unit sum.
    void project_to_valid();
    bool is_valid(double tol = 1e-9) const;
    double centroid_offset_x() const;  // relative to the center pixel
    double centroid_offset_y() const;
};

/// Cached per-(grid, modes) Zernike machinery for one parameter set.
class OpticsModel {
public:
    explicit OpticsModel(const OpticsParams& params);

    const OpticsParams& params() const { return params_; }
    const ZernikeBasis& basis() const { return *basis_; }
    int fft_size() const { return 2 * params_.phase_grid; }  // Nyquist padding

    PhaseField phase_from_coeffs(const ZernikeCoeffs& coeffs) const;

    /// Full S x S PSF intensity (S = fft_size), centered, unit sum:
    /// |FT{pupil * exp(i phi)}|^2.
    Image psf_intensity_full(const PhaseField& phase) const;

    struct CropInfo {
        int kernel_size = 0;
        double energy_inside = 1.0;
        bool widened = false;
    };

    /// Centered crop of the full PSF to params.kernel_size, renormalized.
    /// Widens the crop in steps of 8 while more than 2% of the energy lies
    /// outside; `info`, when given, reports the final size and coverage.
    Psf psf_from_phase(const PhaseField& phase, CropInfo* info = nullptr) const;

    /// Fixed-size variant used when many kernels must share one side length
    /// (prior training); records coverage without widening.
    Psf psf_from_phase_fixed(const PhaseField& phase, int kernel_size, double* energy_inside = nullptr) const;

    /// Discrete diffraction OTF: normalized autocorrelation of the pupil
    /// mask on the S x S grid, DC at (0,0) (FFT layout).
    Image diffraction_otf_grid() const;

    /// Diffraction-limited PSF (zero phase) at the configured crop size.
    Psf diffraction_psf() const;

    /// Image displacement in pixels per radian of Noll tilt coefficient
    /// (a_2 horizontal, a_3 vertical) at Nyquist sampling: 4/pi.
    static constexpr double tilt_shift_px_per_rad = 4.0 / M_PI;

private:
    OpticsParams params_;
    std::shared_ptr<const ZernikeBasis> basis_;
};

/// Draws a Noll-covariance coefficient vector at the given D/r0.
ZernikeCoeffs sample_zernike_coeffs(double dr0, int n_modes, Rng& rng);

}  // namespace turbmit
