#pragma once

#include <string>
#include <vector>

#include "turbmit/denoise.hpp"
#include "turbmit/image.hpp"
#include "turbmit/psf_prior.hpp"

namespace turbmit {

struct DeconvConfig {
    double lambda = 0.05;        // image-prior strength
    double gamma = 1e-3;         // PSF-prior strength
    int outer_iters = 15;
    int inner_iters = 50;        // weight-solver iterations per outer step
    std::string denoiser = "nlm";
    double convergence_tol = 1e-4;
    double fidelity_mu = 5e-3;   // quadratic penalty of the frequency-domain fidelity step
    std::string edge_mode = "taper";  // "taper": replicate-pad + cosine blend; "wrap": trust the circular model

    void validate() const;
};

struct DeconvResult {
    Image latent;                        // z
    Psf psf;                             // h = mean + sum w_j u_j, projected to the PSF set
    std::vector<double> weights;         // w
    std::vector<double> objective_trace; // data fidelity per outer iteration
    bool partial = false;                // divergence guard aborted early
};

/// Quadratic-penalty fidelity step of the plug-and-play cycle, solved in the
/// frequency domain under the circular convolution model:
///   argmin_z |y - h (x) z|^2 + mu |z - v|^2.
Image fidelity_step(const Image& y, const Psf& h, const Image& v, double mu);

/// One plug-and-play proximal cycle: fidelity step from z_prev, then the
/// pluggable denoiser at strength sqrt(lambda * mu).
Image update_image(const Image& y, const Psf& h, const Image& z_prev, double lambda,
                   const Denoiser& denoiser, double mu = 5e-3);

/// Weighted-l1 PSF-weight subproblem reduced to its Gram form:
///   min_w |B w - r|^2 + gamma sum_j |w_j| / sigma_j,
/// where column j of B is u_j (x) z and r = y - mean (x) z.
struct WeightProblem {
    int p = 0;
    std::vector<double> gram;    // B^T B, p x p row-major
    std::vector<double> rhs;     // B^T r
    double r_norm2 = 0.0;
    std::vector<double> sigmas;
    double gamma = 0.0;
    double lipschitz = 0.0;      // 2 lambda_max(B^T B)

    double smooth(const std::vector<double>& w) const;               // |Bw - r|^2
    std::vector<double> smooth_grad(const std::vector<double>& w) const;
    double objective(const std::vector<double>& w) const;
};

WeightProblem build_weight_problem(const Image& y, const Image& z, const PsfBasis& basis, double gamma);

struct WeightSolve {
    std::vector<double> w;
    std::vector<double> objective_trace;  // per accepted iteration, non-increasing
    bool singular = false;                // operator collapsed, w = 0 returned
};

/// Proximal-gradient (ISTA) solve with the 1/L step; monotone by
/// construction. Terminates on relative objective change < tol.
WeightSolve solve_weight_problem(const WeightProblem& prob, int max_iters, double tol);

WeightSolve update_psf_weights(const Image& y, const Image& z, const PsfBasis& basis, double gamma,
                               int max_iters = 400, double tol = 1e-10);

/// Edge-taper preprocessing: replicate padding plus a cosine cross-fade into
/// the blurred frame near the border band, making the circular model usable
/// on natural frames.
Image pad_edgetaper(const Image& y, const Psf& h, int pad);

/// Alternating blind deconvolution of a single frame with the learned basis
/// prior. Initialization: z = y, h = projected mean kernel, w = 0.
DeconvResult blind_deconvolve(const Image& y, const PsfBasis& basis, const DeconvConfig& cfg);

}  // namespace turbmit
