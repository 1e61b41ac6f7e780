#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbmit/optics.hpp"

namespace turbmit {

/// Learned PSF principal-component basis: mean kernel, orthonormal
/// components (as flattened vectors), and the per-coefficient scales sigma_j
/// of the weighted-l1 prior r(w) = sum |w_j| / sigma_j.
struct PsfBasis {
    int kernel_size = 0;
    Image mean_kernel;
    std::vector<Image> components;
    std::vector<double> sigmas;

    // training metadata
    double dr0_min = 0.0;
    double dr0_max = 0.0;
    uint32_t ensemble_size = 0;
    double kappa = 0.0;
    double tau = 0.0;

    int p() const { return static_cast<int>(components.size()); }
    void validate() const;
};

struct SparseCode {
    std::vector<double> w;
    std::vector<int> support;  // indices of nonzeros, in selection order
    double residual = 0.0;     // squared l2 residual of the centered kernel
    bool reached_tau = false;  // residual <= tau before exhausting the dictionary
};

struct EnsembleStats {
    long proposed = 0;
    long accepted = 0;
    double accept_rate = 0.0;
    double mean_crop_energy = 0.0;
};

/// Tilt-free, small-coefficient PSF ensemble. Proposal i (deterministic
/// substream of `seed`) draws at dr0_set[i % len], zeroes the tilts and
/// accepts when |a_{4:N}|^2 <= kappa * dr0^(5/3). Aborts when the accept
/// rate stays below 0.1%. All kernels share params.kernel_size.
std::vector<Psf> generate_ensemble(int m, const std::vector<double>& dr0_set, double kappa,
                                   const OpticsParams& params, uint64_t seed, int threads = 1,
                                   EnsembleStats* stats = nullptr);

/// PCA of the flattened, mean-subtracted kernels. Components are orthonormal
/// and ordered by explained variance; the sign convention makes the
/// largest-magnitude entry positive. Degenerate directions (negligible
/// eigenvalues) reduce p with a warning on stderr.
PsfBasis learn_basis(const std::vector<Psf>& ensemble, int p);

/// Explained-variance fractions (cumulative) of the PCA spectrum; entry k is
/// the fraction captured by the first k+1 components.
std::vector<double> pca_explained_variance(const std::vector<Psf>& ensemble);

/// Greedy orthogonal matching pursuit on the centered kernel h - mean:
/// min |w|_0 s.t. |(h - mean) - U w|^2 <= tau.
SparseCode omp_sparse_code(const Psf& h, const PsfBasis& basis, double tau);

/// Per-index population standard deviation over the code collection, zeros
/// included, floored at 1e-6.
std::vector<double> estimate_sigmas(const std::vector<SparseCode>& codes);

struct TrainOptions {
    int ensemble_m = 2000;
    int p = 56;
    double kappa = 1.0;      // rad^2 at D/r0 = 1, scaled by dr0^(5/3)
    double tau_rel = 1e-4;   // fraction of per-kernel energy |h|^2
};

/// Full offline training: ensemble -> basis -> sparse codes -> sigmas.
PsfBasis train_prior(const std::vector<double>& dr0_set, const OpticsParams& params, uint64_t seed,
                     const TrainOptions& opts = {}, int threads = 1, EnsembleStats* stats = nullptr);

/// PSFB container, bit-exact round trip, little-endian.
void save_psfb(const PsfBasis& basis, const std::string& path);
PsfBasis load_psfb(const std::string& path);

}  // namespace turbmit
