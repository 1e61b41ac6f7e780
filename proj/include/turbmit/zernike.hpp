#pragma once

#include <vector>

#include "turbmit/image.hpp"
#include "turbmit/rng.hpp"

namespace turbmit {

/// Noll-indexed Zernike coefficient vector; a[0] holds a_1 (piston).
struct ZernikeCoeffs {
    std::vector<double> a;

    int modes() const { return static_cast<int>(a.size()); }
    double& operator[](int noll_j) { return a[noll_j - 1]; }
    double operator[](int noll_j) const { return a[noll_j - 1]; }
};

/// Radial degree n and azimuthal order |m| for Noll index j (1-based).
/// Even j carries the cosine term, odd j the sine term.
struct NollNM {
    int n;
    int m;
};
NollNM noll_to_nm(int j);

/// Noll-normalized Zernike polynomial Z_j at polar (rho, theta), rho <= 1.
double zernike_value(int j, double rho, double theta);

/// Zernike mode images on a square pupil grid. The pupil disk spans the full
/// grid: center (g-1)/2, radius g/2, mask = (rho <= 1). Modes are zero
/// outside the mask.
class ZernikeBasis {
public:
    ZernikeBasis(int grid, int n_modes);

    int grid() const { return grid_; }
    int modes() const { return n_modes_; }
    const Image& mode(int noll_j) const { return modes_[noll_j - 1]; }
    const Image& pupil_mask() const { return mask_; }
    int pupil_pixel_count() const { return mask_pixels_; }

    /// phi = sum_j a_j Z_j, zero outside the pupil.
    Image synthesize(const ZernikeCoeffs& coeffs) const;

private:
    int grid_;
    int n_modes_;
    Image mask_;
    int mask_pixels_;
    std::vector<Image> modes_;
};

/// Covariance matrix E[a_i a_j] of Kolmogorov-statistics Zernike
/// coefficients in units of (D/r0)^(5/3) (Noll residual covariance).
/// Piston entries (j = 1) are zero. Row/col k maps to Noll index k+1.
std::vector<double> noll_covariance(int n_modes);  // row-major n x n

/// Draws coefficient vectors with the Noll covariance scaled by
/// (D/r0)^(5/3). Piston is always zero.
class ZernikeSampler {
public:
    ZernikeSampler(int n_modes, double dr0);

    int modes() const { return n_modes_; }
    double dr0() const { return dr0_; }

    ZernikeCoeffs sample(Rng& rng) const;

    /// Maps an iid standard-normal vector g (length n_modes-1, modes 2..N)
    /// through the covariance factor; used when the white field is smoothed
    /// spatially before correlation across modes is applied.
    ZernikeCoeffs from_standard_normal(const std::vector<double>& g) const;

    double variance(int noll_j) const;  // marginal variance of a_j

private:
    int n_modes_;
    double dr0_;
    std::vector<double> chol_;  // (n-1) x (n-1) lower factor, modes 2..N
};

ZernikeCoeffs remove_tilt(ZernikeCoeffs coeffs);

}  // namespace turbmit
