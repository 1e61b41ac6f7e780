#include "turbmit/deconv.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iostream>

#include "turbmit/fft.hpp"

namespace turbmit {

void DeconvConfig::validate() const {
    require(lambda > 0.0, "DeconvConfig: lambda must be positive");
    require(gamma > 0.0, "DeconvConfig: gamma must be positive");
    require(outer_iters >= 1, "DeconvConfig: outer_iters must be >= 1");
    require(inner_iters >= 1, "DeconvConfig: inner_iters must be >= 1");
    require(convergence_tol > 0.0, "DeconvConfig: convergence_tol must be positive");
    require(fidelity_mu > 0.0, "DeconvConfig: fidelity_mu must be positive");
    require(edge_mode == "taper" || edge_mode == "wrap", "DeconvConfig: edge_mode must be 'taper' or 'wrap'");
}

Image fidelity_step(const Image& y, const Psf& h, const Image& v, double mu) {
    require(y.same_size(v), "fidelity_step: y/v size mismatch");
    require(mu > 0.0, "fidelity_step: mu must be positive");
    Spectrum Y = fft2(y);
    Spectrum V = fft2(v);
    Spectrum H = kernel_transfer(h.kernel, y.width(), y.height());
    for (size_t i = 0; i < Y.data.size(); ++i) {
        const std::complex<double> Hc = H.data[i];
        const double mag2 = std::norm(Hc);
        Y.data[i] = (std::conj(Hc) * Y.data[i] + mu * V.data[i]) / (mag2 + mu);
    }
    return ifft2_real(Y);
}

Image update_image(const Image& y, const Psf& h, const Image& z_prev, double lambda,
                   const Denoiser& denoiser, double mu) {
    require(lambda > 0.0, "update_image: lambda must be positive");
    Image z = fidelity_step(y, h, z_prev, mu);
    const double strength = std::sqrt(lambda * mu);
    if (strength < 1e-12) return z;  // data term alone
    return denoiser(z, strength);
}

double WeightProblem::smooth(const std::vector<double>& w) const {
    require(static_cast<int>(w.size()) == p, "WeightProblem::smooth: size mismatch");
    double quad = 0.0, lin = 0.0;
    for (int i = 0; i < p; ++i) {
        double gi = 0.0;
        for (int j = 0; j < p; ++j) gi += gram[static_cast<size_t>(i) * p + j] * w[j];
        quad += w[i] * gi;
        lin += w[i] * rhs[i];
    }
    return quad - 2.0 * lin + r_norm2;
}

std::vector<double> WeightProblem::smooth_grad(const std::vector<double>& w) const {
    require(static_cast<int>(w.size()) == p, "WeightProblem::smooth_grad: size mismatch");
    std::vector<double> g(p);
    for (int i = 0; i < p; ++i) {
        double gi = 0.0;
        for (int j = 0; j < p; ++j) gi += gram[static_cast<size_t>(i) * p + j] * w[j];
        g[i] = 2.0 * (gi - rhs[i]);
    }
    return g;
}

double WeightProblem::objective(const std::vector<double>& w) const {
    double reg = 0.0;
    for (int i = 0; i < p; ++i) reg += std::abs(w[i]) / sigmas[i];
    return smooth(w) + gamma * reg;
}

WeightProblem build_weight_problem(const Image& y, const Image& z, const PsfBasis& basis, double gamma) {
    require(y.same_size(z), "build_weight_problem: y/z size mismatch");
    require(!basis.sigmas.empty(), "build_weight_problem: basis has no sigmas");
    const int p = basis.p();
    const int n = y.width() * y.height();

    // columns B_j = u_j (x) z and residual target r = y - mean (x) z
    Eigen::MatrixXd B(n, p);
    for (int j = 0; j < p; ++j) {
        Psf uj;
        uj.kernel = basis.components[j];
        const Image bj = convolve_circular(z, uj.kernel);
        B.col(j) = Eigen::Map<const Eigen::VectorXd>(bj.data(), n);
    }
    const Image mz = convolve_circular(z, basis.mean_kernel);
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(y.data(), n) - Eigen::Map<const Eigen::VectorXd>(mz.data(), n);

    Eigen::MatrixXd G = B.transpose() * B;
    Eigen::VectorXd b = B.transpose() * r;

    WeightProblem prob;
    prob.p = p;
    prob.gram.assign(G.data(), G.data() + static_cast<size_t>(p) * p);  // symmetric, layout irrelevant
    prob.rhs.assign(b.data(), b.data() + p);
    prob.r_norm2 = r.squaredNorm();
    prob.sigmas = basis.sigmas;
    prob.gamma = gamma;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    prob.lipschitz = 2.0 * std::max(0.0, es.eigenvalues().maxCoeff());
    return prob;
}

WeightSolve solve_weight_problem(const WeightProblem& prob, int max_iters, double tol) {
    WeightSolve out;
    out.w.assign(prob.p, 0.0);
    if (prob.lipschitz < 1e-14) {
        out.singular = true;
        out.objective_trace.push_back(prob.objective(out.w));
        std::cerr << "update_psf_weights: operator is singular (constant image?), returning w = 0\n";
        return out;
    }
    const double step = 1.0 / prob.lipschitz;
    double obj = prob.objective(out.w);
    out.objective_trace.push_back(obj);
    std::vector<double> next(prob.p);
    for (int it = 0; it < max_iters; ++it) {
        const std::vector<double> g = prob.smooth_grad(out.w);
        for (int j = 0; j < prob.p; ++j) {
            const double cand = out.w[j] - step * g[j];
            const double thr = step * prob.gamma / prob.sigmas[j];
            next[j] = std::copysign(std::max(std::abs(cand) - thr, 0.0), cand);  // soft threshold
        }
        const double nobj = prob.objective(next);
        if (nobj > obj) break;  // numerically converged; ISTA with 1/L cannot ascend
        out.w = next;
        const double rel = (obj - nobj) / std::max(obj, 1e-300);
        obj = nobj;
        out.objective_trace.push_back(obj);
        if (rel < tol) break;
    }
    return out;
}

WeightSolve update_psf_weights(const Image& y, const Image& z, const PsfBasis& basis, double gamma,
                               int max_iters, double tol) {
    return solve_weight_problem(build_weight_problem(y, z, basis, gamma), max_iters, tol);
}

Image pad_edgetaper(const Image& y, const Psf& h, int pad) {
    const int w = y.width(), hgt = y.height();
    const int W = w + 2 * pad, H = hgt + 2 * pad;
    Image padded(W, H);
    for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx < W; ++xx) padded(xx, yy) = y.at_clamped(xx - pad, yy - pad);
    if (pad == 0) return padded;

    const Image blurred = convolve_circular(padded, h.kernel);
    auto ramp = [&](int c, int n) {
        // 0 at the border, 1 once past the taper band
        const int d = std::min(c, n - 1 - c);
        if (d >= 2 * pad) return 1.0;
        return 0.5 - 0.5 * std::cos(M_PI * d / (2.0 * pad));
    };
    for (int yy = 0; yy < H; ++yy) {
        const double wy = ramp(yy, H);
        for (int xx = 0; xx < W; ++xx) {
            const double wgt = wy * ramp(xx, W);
            padded(xx, yy) = wgt * padded(xx, yy) + (1.0 - wgt) * blurred(xx, yy);
        }
    }
    return padded;
}

namespace {

double data_fidelity(const Image& y, const Psf& h, const Image& z) {
    return sum_squared_diff(y, convolve_circular(z, h.kernel));
}

Psf reconstruct_psf(const PsfBasis& basis, const std::vector<double>& w) {
    Psf h;
    h.kernel = basis.mean_kernel;
    for (int j = 0; j < basis.p(); ++j) {
        if (w[j] == 0.0) continue;
        const Image& u = basis.components[j];
        for (size_t i = 0; i < h.kernel.size(); ++i) h.kernel.data()[i] += w[j] * u.data()[i];
    }
    h.project_to_valid();
    return h;
}

}  // namespace

DeconvResult blind_deconvolve(const Image& y, const PsfBasis& basis, const DeconvConfig& cfg) {
    cfg.validate();
    basis.validate();
    require(!basis.sigmas.empty(), "blind_deconvolve: basis has no sigmas");
    const Denoiser denoiser = make_denoiser(cfg.denoiser);

    Psf h;
    h.kernel = basis.mean_kernel;
    h.project_to_valid();

    const int pad = cfg.edge_mode == "taper" ? basis.kernel_size / 2 : 0;
    const Image yp = pad == 0 ? y : pad_edgetaper(y, h, pad);

    DeconvResult res;
    res.weights.assign(basis.p(), 0.0);

    Image z = yp;
    double strength_scale = 1.0;
    int halvings = 0;
    int rising = 0;
    double fid = data_fidelity(yp, h, z);
    res.objective_trace.push_back(fid);

    Image best_z = z;
    Psf best_h = h;
    std::vector<double> best_w = res.weights;
    double best_fid = fid;

    for (int k = 0; k < cfg.outer_iters; ++k) {
        Image z_fid = fidelity_step(yp, h, z, cfg.fidelity_mu);
        Image z_new = denoiser(z_fid, strength_scale * std::sqrt(cfg.lambda * cfg.fidelity_mu));
        z_new.clamp01();  // latent intensities live in [0,1]

        WeightSolve ws = update_psf_weights(yp, z_new, basis, cfg.gamma, cfg.inner_iters, cfg.convergence_tol);
        Psf h_new = reconstruct_psf(basis, ws.w);

        const double f = data_fidelity(yp, h_new, z_new);
        z = std::move(z_new);
        h = h_new;
        res.weights = ws.w;
        res.objective_trace.push_back(f);

        if (f < best_fid) {
            best_fid = f;
            best_z = z;
            best_h = h;
            best_w = res.weights;
        }

        if (f > fid) {
            if (++rising >= 2) {
                // divergence guard: halve the plug-and-play step, restart from the best state
                strength_scale *= 0.5;
                ++halvings;
                rising = 0;
                z = best_z;
                h = best_h;
                res.weights = best_w;
                if (halvings > 3) {
                    res.partial = true;
                    break;
                }
            }
        } else {
            rising = 0;
        }
        fid = f;
    }

    if (res.partial) {
        z = best_z;
        h = best_h;
        res.weights = best_w;
    }

    // crop the padding back off
    Image out(y.width(), y.height());
    for (int yy = 0; yy < y.height(); ++yy)
        for (int xx = 0; xx < y.width(); ++xx) out(xx, yy) = z(xx + pad, yy + pad);
    out.clamp01();
    res.latent = std::move(out);
    res.psf = h;
    return res;
}

}  // namespace turbmit
