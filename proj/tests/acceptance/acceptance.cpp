// Acceptance suite: one criterion per invocation (1..10, or "runtime" for
// the Table-style stage share check). Prints a PASS/FAIL line per criterion
// and exits nonzero on failure.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "turbmit/config.hpp"
#include "turbmit/deconv.hpp"
#include "turbmit/fft.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/lucky.hpp"
#include "turbmit/metrics.hpp"
#include "turbmit/parallel.hpp"
#include "turbmit/pgm_io.hpp"
#include "turbmit/pipeline.hpp"
#include "turbmit/psf_prior.hpp"
#include "turbmit/reference.hpp"
#include "turbmit/simulate.hpp"
#include "turbmit/synth.hpp"

using namespace turbmit;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

// radial RMS error between the ensemble-mean OTF and the analytic prediction
double mean_otf_rms(const OpticsParams& params, double dr0, int m, bool tilt_free, uint64_t seed,
                    int threads) {
    const OpticsModel model(params);
    const int s = model.fft_size();
    const int g = params.phase_grid;
    const ZernikeSampler sampler(params.n_zernike, dr0);

    // fixed chunking keeps the reduction order independent of the schedule
    const int chunks = 64;
    std::vector<Image> partial(chunks, Image(s, s, 0.0));
    parallel_for(
        chunks,
        [&](int c) {
            const int lo = static_cast<int>(static_cast<long>(m) * c / chunks);
            const int hi = static_cast<int>(static_cast<long>(m) * (c + 1) / chunks);
            Rng rng(substream_seed(seed, c));
            for (int i = lo; i < hi; ++i) {
                ZernikeCoeffs coeffs = sampler.sample(rng);
                if (tilt_free) coeffs = remove_tilt(coeffs);
                partial[c] += model.psf_intensity_full(model.phase_from_coeffs(coeffs));
            }
        },
        threads);
    Image mean_psf(s, s, 0.0);
    for (int c = 0; c < chunks; ++c) mean_psf += partial[c];
    mean_psf *= 1.0 / m;

    Spectrum f = fft2(mean_psf);
    const double dc = std::abs(f.data[0]);
    const Image dif = model.diffraction_otf_grid();

    // radial averages of the simulation and of the analytic H_dif * H_atm
    std::vector<double> sim(g + 1, 0.0), form(g + 1, 0.0);
    std::vector<int> count(g + 1, 0);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const double kx = x <= s / 2 ? x : x - s;
            const double ky = y <= s / 2 ? y : y - s;
            const double kr = std::hypot(kx, ky);
            const int bin = static_cast<int>(std::lround(kr));
            if (bin > g) continue;
            const double s_over_d = kr / g;  // lambda d f / D
            const double x53 = std::pow(s_over_d * dr0, 5.0 / 3.0);
            const double atm = tilt_free
                                   ? (s_over_d <= 1.0 ? std::exp(-3.44 * x53 * (1.0 - std::cbrt(s_over_d))) : 0.0)
                                   : std::exp(-3.44 * x53);
            sim[bin] += std::abs(f(x, y)) / dc;
            form[bin] += dif(x, y) * atm;
            ++count[bin];
        }
    }
    double rms = 0.0;
    for (int b = 0; b <= g; ++b) {
        const double d = (sim[b] - form[b]) / count[b];
        rms += d * d;
    }
    return std::sqrt(rms / (g + 1));
}

void criterion_1() {
    OpticsParams params;  // defaults: table geometry, grid 64, 36 modes
    bool ok = true;
    std::string detail;
    for (double dr0 : {1.0, 2.0, 3.0}) {
        params.set_dr0(dr0);
        const double t0 = now_s();
        const double rms_se = mean_otf_rms(params, dr0, 5000, true, 101, 4);
        const double rms_le = mean_otf_rms(params, dr0, 5000, false, 202, 4);
        const double secs = now_s() - t0;
        detail += fmt("D/r0=%.0f: SE %.4f LE %.4f in %.0fs; ", dr0, rms_se, rms_le, secs);
        if (rms_se > 0.07 || rms_le > 0.07 || secs > 300.0) ok = false;
    }
    report(1, "mean OTF of 5000 PSFs matches Eq.(4)/Eq.(3) within 7% RMS", ok, detail);
}

// ---------------------------------------------------------------- criterion 2

Image image_from(const double* rows, int n) {
    Image img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img(x, y) = rows[y * n + x];
    return img;
}

void criterion_2() {
    bool ok = true;
    std::string detail;

    // frozen hand-executed reference toy (3 frames of 4x4)
    {
        const double f0[] = {0.774, 0.439, 0.859, 0.697, 0.094, 0.976, 0.761, 0.786,
                             0.128, 0.45,  0.371, 0.927, 0.644, 0.823, 0.443, 0.227};
        const double f1[] = {0.555, 0.064, 0.828, 0.632, 0.758, 0.355, 0.971, 0.893,
                             0.778, 0.195, 0.467, 0.044, 0.154, 0.683, 0.745, 0.968};
        const double f2[] = {0.326, 0.37,  0.47,  0.189, 0.13,  0.476, 0.227, 0.67,
                             0.437, 0.833, 0.7,   0.312, 0.832, 0.805, 0.387, 0.288};
        const double expected[] = {
            0.54405877678713144, 0.24270806009658188, 0.74310644138090542, 0.54010237933493022,
            0.42404366935585924, 0.54630169692911268, 0.72326638904341367, 0.80742752365721426,
            0.53292493778588534, 0.42447388601426306, 0.50013640274721771, 0.37087497555993015,
            0.43449632483478612, 0.74988663711486170, 0.56793624518229091, 0.56244284150420709};
        const std::vector<Image> seq{image_from(f0, 4), image_from(f1, 4), image_from(f2, 4)};
        PatchWindowConfig cfg;
        cfg.patch_size = 3;
        cfg.spatial_search = 3;
        cfg.temporal_window = 1;
        cfg.stride = 1;
        cfg.beta = 0.7;
        const double err = max_abs_diff(compute_reference(seq, 1, cfg), image_from(expected, 4));
        detail += fmt("reference toy err %.2e; ", err);
        ok = ok && err < 1e-10;
    }

    // frozen hand-executed lucky toy
    {
        const double a0[] = {0.682, 0.14,  0.2,   0.007, 0.787, 0.665, 0.705, 0.781,
                             0.459, 0.569, 0.14,  0.115, 0.668, 0.471, 0.565, 0.765};
        const double a1[] = {0.635, 0.554, 0.559, 0.304, 0.031, 0.437, 0.215, 0.409,
                             0.853, 0.234, 0.058, 0.281, 0.294, 0.662, 0.557, 0.784};
        const double a2[] = {0.664, 0.406, 0.814, 0.167, 0.023, 0.09,  0.722, 0.462,
                             0.161, 0.501, 0.152, 0.696, 0.446, 0.381, 0.302, 0.63};
        const double r0[] = {0.362, 0.088, 0.118, 0.962, 0.909, 0.7,   0.266, 0.969,
                             0.779, 0.717, 0.449, 0.272, 0.096, 0.903, 0.456, 0.202};
        const double r1[] = {0.306, 0.579, 0.177, 0.857, 0.759, 0.719, 0.432, 0.627,
                             0.584, 0.65,  0.084, 0.416, 0.042, 0.494, 0.33,  0.145};
        const double r2[] = {0.103, 0.588, 0.171, 0.925, 0.581, 0.347, 0.591, 0.023,
                             0.959, 0.482, 0.783, 0.083, 0.487, 0.491, 0.938, 0.572};
        const double expected[] = {
            0.66227917159852945, 0.32525841767176045, 0.49215339297639438, 0.11250614836102715,
            0.29517220868750510, 0.43852466350426483, 0.57365193223400035, 0.58702222441053409,
            0.67109508742866775, 0.38754937846256277, 0.11320278211201419, 0.36338162736427010,
            0.35762289083846399, 0.57395304796239188, 0.49812626604704474, 0.72800778004617406};
        const std::vector<Image> aligned{image_from(a0, 4), image_from(a1, 4), image_from(a2, 4)};
        const std::vector<Image> ref{image_from(r0, 4), image_from(r1, 4), image_from(r2, 4)};
        LuckyConfig cfg;
        cfg.alpha1 = 1.0;
        cfg.alpha2 = 1.0;
        cfg.patch_size = 3;
        cfg.stride = 1;
        cfg.temporal_window = 1;
        const double err = max_abs_diff(fuse_lucky(aligned, ref, 1, cfg), image_from(expected, 4));
        detail += fmt("lucky toy err %.2e; ", err);
        ok = ok && err < 1e-10;
    }

    // sub-operations against exhaustive scans, exact
    {
        Rng rng(5);
        Image f0(10, 10), f1(10, 10);
        for (size_t i = 0; i < f0.size(); ++i) {
            f0.data()[i] = rng.uniform();
            f1.data()[i] = rng.uniform();
        }
        PatchWindowConfig cfg;
        cfg.patch_size = 3;
        cfg.spatial_search = 5;
        cfg.temporal_window = 1;
        cfg.stride = 1;
        bool sub_ok = true;
        for (int cy = 1; cy <= 8; ++cy)
            for (int cx = 1; cx <= 8; ++cx) {
                double best = 1e300;
                for (int dy = -2; dy <= 2; ++dy)
                    for (int dx = -2; dx <= 2; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 1 || nx > 8 || ny < 1 || ny > 8) continue;
                        double d = 0.0;
                        for (int py = -1; py <= 1; ++py)
                            for (int px = -1; px <= 1; ++px) {
                                const double dv = f0(cx + px, cy + py) - f1(nx + px, ny + py);
                                d += dv * dv;
                            }
                        best = std::min(best, d);
                    }
                if (min_spatial_distance({f0, f1}, cx, cy, 0, 1, cfg) != best) sub_ok = false;
                const Image pa = extract_patch(f0, cx, cy, 3);
                const Image pb = extract_patch(f1, cx, cy, 3);
                double ssd = 0.0;
                for (size_t i = 0; i < pa.size(); ++i) {
                    const double dv = pa.data()[i] - pb.data()[i];
                    ssd += dv * dv;
                }
                if (patch_distance(pa, pb) != ssd) sub_ok = false;
                if (geometric_score(pa, pb) != ssd) sub_ok = false;
            }
        detail += fmt("sub-op exhaustive equality %s", sub_ok ? "exact" : "BROKEN");
        ok = ok && sub_ok;
    }

    report(2, "Eqs.(5)-(8) and (9)-(12) match hand-executed scalar oracles", ok, detail);
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
    OpticsParams params;
    PatchWindowConfig cfg;  // patch 9 stride 4; calibration overrides window/search
    std::vector<double> betas;
    std::string detail;
    for (double dr0 : {1.0, 2.0, 3.0, 4.0}) {
        betas.push_back(calibrate_beta(dr0, 150, 606, params, cfg, BetaSweepOptions{}, 4));
        detail += fmt("beta(%.0f)=%.4f ", dr0, betas.back());
    }
    bool ok = true;
    for (size_t i = 1; i < betas.size(); ++i)
        if (!(betas[i] < betas[i - 1])) ok = false;
    report(3, "calibrated beta strictly decreasing over D/r0 {1,2,3,4}, 150 trials", ok, detail);
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
    const int size = 96, frames = 11, square = 12;
    const std::vector<Image> seq = synth::moving_square_sequence(size, frames, square, 12.0, 0.2, 1.0);
    PatchWindowConfig cfg;
    cfg.temporal_window = 5;
    cfg.beta = 5.0;

    const int t = frames / 2;
    const Image ref = compute_reference(seq, t, cfg);
    Image avg(size, size, 0.0);
    for (const Image& f : seq) avg += f;
    avg *= 1.0 / frames;

    double sq_ref = 0.0, sq_avg = 0.0;
    int count = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (seq[t](x, y) > 0.9) {
                sq_ref += ref(x, y);
                sq_avg += avg(x, y);
                ++count;
            }
    const double retain_ref = (sq_ref / count - 0.2) / 0.8;
    const double retain_avg = (sq_avg / count - 0.2) / 0.8;
    const bool ok = retain_ref >= 0.8 && retain_avg < 0.3;
    report(4, "moving square retained >=80% by the reference, <30% by plain averaging", ok,
           fmt("reference %.1f%%, temporal average %.1f%%", 100 * retain_ref, 100 * retain_avg));
}

// ---------------------------------------------------------------- criterion 5

void criterion_5() {
    bool ok = true;
    std::string detail;

    // (a) OMP equals exhaustive l0 search on an orthonormal toy dictionary
    {
        const int k = 5, p = 6, d = k * k;
        PsfBasis basis;
        basis.kernel_size = k;
        basis.mean_kernel = Image(k, k, 1.0 / d);
        for (int j = 0; j < p; ++j) {
            Image c(k, k, 0.0);
            c(j % k, j / k) = 1.0;
            basis.components.push_back(c);
        }
        basis.sigmas.assign(p, 1.0);

        Rng rng(55);
        bool omp_ok = true;
        for (int trial = 0; trial < 50; ++trial) {
            const int ja = rng.uniform_int(p);
            int jb = rng.uniform_int(p);
            while (jb == ja) jb = rng.uniform_int(p);
            const double wa = rng.uniform(-2, 2), wb = rng.uniform(-2, 2);
            Psf h;
            h.kernel = basis.mean_kernel;
            for (int i = 0; i < d; ++i)
                h.kernel.data()[i] += wa * basis.components[ja].data()[i] + wb * basis.components[jb].data()[i];
            const double tau = 1e-12;
            const SparseCode code = omp_sparse_code(h, basis, tau);

            std::vector<double> x(d);
            for (int i = 0; i < d; ++i) x[i] = h.kernel.data()[i] - basis.mean_kernel.data()[i];
            auto resid = [&](std::vector<int> sup) {
                double r2 = 0.0;
                for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
                for (int j : sup) {
                    double w = 0.0;
                    for (int i = 0; i < d; ++i) w += basis.components[j].data()[i] * x[i];
                    r2 -= w * w;
                }
                return r2;
            };
            int best_size = 3;
            std::vector<int> best;
            if (resid({}) <= tau) best_size = 0;
            for (int a = 0; a < p && best_size > 2; ++a)
                if (resid({a}) <= tau) {
                    best_size = 1;
                    best = {a};
                }
            if (best_size > 2)
                for (int a = 0; a < p; ++a)
                    for (int b = a + 1; b < p; ++b)
                        if (best_size > 2 && resid({a, b}) <= tau) {
                            best_size = 2;
                            best = {a, b};
                        }
            std::vector<int> got = code.support;
            std::sort(got.begin(), got.end());
            if (static_cast<int>(got.size()) != best_size || got != best || code.residual > tau) omp_ok = false;
        }
        detail += fmt("OMP==exhaustive over 50 draws: %s; ", omp_ok ? "yes" : "NO");
        ok = ok && omp_ok;
    }

    // (b) weight histograms over 1e5 simulated PSFs: unimodal, zero-centered,
    // heavier-tailed than the matched-variance Gaussian
    {
        OpticsParams params;  // K=33, grid 64, 36 modes
        params.set_dr0(2.0);
        const double t0 = now_s();
        PsfBasis basis = train_prior({2.0}, params, 515, TrainOptions{.ensemble_m = 2000, .p = 30}, 4, nullptr);

        const int m = 100000;
        const OpticsModel model(params);
        const ZernikeSampler sampler(params.n_zernike, 2.0);
        const double kappa_eff = 1.0 * std::pow(2.0, 5.0 / 3.0);
        const int nj = 6;  // leading components to histogram
        std::vector<std::vector<double>> w_samples(nj, std::vector<double>(m, 0.0));
        const int chunks = 200;
        parallel_for(
            chunks,
            [&](int c) {
                const int lo = static_cast<int>(static_cast<long>(m) * c / chunks);
                const int hi = static_cast<int>(static_cast<long>(m) * (c + 1) / chunks);
                Rng rng(substream_seed(99, c));
                for (int i = lo; i < hi; ++i) {
                    ZernikeCoeffs coeffs;
                    for (;;) {
                        coeffs = remove_tilt(sampler.sample(rng));
                        double q = 0.0;
                        for (int j = 4; j <= params.n_zernike; ++j) q += coeffs[j] * coeffs[j];
                        if (q <= kappa_eff) break;
                    }
                    const Psf h = model.psf_from_phase_fixed(model.phase_from_coeffs(coeffs), 33);
                    double energy = 0.0;
                    for (size_t e = 0; e < h.kernel.size(); ++e) energy += h.kernel.data()[e] * h.kernel.data()[e];
                    const SparseCode code = omp_sparse_code(h, basis, 1e-4 * energy);
                    for (int j = 0; j < nj; ++j) w_samples[j][i] = code.w[j];
                }
            },
            4);

        bool hist_ok = true;
        std::string hdetail;
        for (int j = 0; j < nj; ++j) {
            const std::vector<double>& w = w_samples[j];
            double m1 = 0, m2 = 0;
            for (double v : w) m1 += v;
            m1 /= m;
            for (double v : w) m2 += (v - m1) * (v - m1);
            m2 /= m;
            const double sd = std::sqrt(m2);
            double m4 = 0;
            for (double v : w) m4 += std::pow(v - m1, 4);
            m4 /= m;
            const double ex_kurt = m4 / (m2 * m2) - 3.0;

            const int nb = 15;
            std::vector<long> hist(nb, 0);
            for (double v : w) {
                int b = static_cast<int>((v - m1 + 4 * sd) / (8 * sd) * nb);
                b = std::clamp(b, 0, nb - 1);
                ++hist[b];
            }
            int mode = 0;
            for (int b = 1; b < nb; ++b)
                if (hist[b] > hist[mode]) mode = b;
            bool unimodal = std::abs(mode - nb / 2) <= 1;  // mode at the center
            for (int b = mode + 1; b + 1 < nb; ++b)
                if (hist[b + 1] > hist[b] * 1.15 && hist[b] > m / 1000) unimodal = false;
            for (int b = mode - 1; b > 0; --b)
                if (hist[b - 1] > hist[b] * 1.15 && hist[b] > m / 1000) unimodal = false;

            const bool centered = std::abs(m1) <= 0.1 * sd;
            if (!(unimodal && centered && ex_kurt > 0.0)) hist_ok = false;
            if (j < 3) hdetail += fmt("w%d: kurt %.2f mean/sd %.3f; ", j + 1, ex_kurt, std::abs(m1) / sd);
        }
        detail += hdetail + fmt("1e5 codes in %.0fs: %s", now_s() - t0, hist_ok ? "shape ok" : "SHAPE BAD");
        ok = ok && hist_ok;
    }

    report(5, "OMP equals exhaustive l0; weight histograms unimodal, centered, kurtotic", ok, detail);
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    bool ok = true;
    std::string detail;

    OpticsParams params;
    params.phase_grid = 32;
    params.kernel_size = 17;
    params.n_zernike = 21;
    const PsfBasis basis = train_prior({1.5}, params, 4242, TrainOptions{.ensemble_m = 150, .p = 10}, 4, nullptr);

    // (a) objective monotonicity
    {
        const Image z = synth::texture(48, 31, 1.0);
        Rng rng(7);
        Image y(48, 48);
        for (size_t i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform();
        const WeightSolve ws = update_psf_weights(y, z, basis, 1e-3, 300, 1e-14);
        bool mono = ws.objective_trace.size() > 2;
        for (size_t i = 1; i < ws.objective_trace.size(); ++i)
            if (ws.objective_trace[i] > ws.objective_trace[i - 1] + 1e-12) mono = false;
        detail += fmt("objective monotone over %zu iters: %s; ", ws.objective_trace.size(), mono ? "yes" : "NO");
        ok = ok && mono;
    }

    // (b) analytic gradient vs central differences, 1e-5 relative
    {
        const Image z = synth::texture(32, 41, 1.2);
        Rng rng(43);
        Image y(32, 32);
        for (size_t i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform();
        const WeightProblem prob = build_weight_problem(y, z, basis, 1e-3);
        std::vector<double> w(prob.p);
        for (double& v : w) v = 0.2 * rng.normal();
        const std::vector<double> grad = prob.smooth_grad(w);
        double worst = 0.0;
        for (int j = 0; j < prob.p; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(w[j]));
            std::vector<double> wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            const double fd = (prob.smooth(wp) - prob.smooth(wm)) / (2 * h);
            worst = std::max(worst, std::abs(grad[j] - fd) / std::max(std::abs(fd), 1e-12));
        }
        detail += fmt("grad vs FD rel err %.2e; ", worst);
        ok = ok && worst <= 1e-5;
    }

    // (c) frequency-domain fidelity step vs a dense circulant solve, 1e-8
    {
        const int n = 8;
        Rng rng(17);
        Image y(n, n), v(n, n);
        for (size_t i = 0; i < y.size(); ++i) {
            y.data()[i] = rng.uniform();
            v.data()[i] = rng.uniform();
        }
        Psf h;
        h.kernel = Image(3, 3);
        for (size_t i = 0; i < h.kernel.size(); ++i) h.kernel.data()[i] = rng.uniform();
        h.project_to_valid();
        const double mu = 0.021;

        std::vector<double> C(n * n * n * n, 0.0);
        for (int y0 = 0; y0 < n; ++y0)
            for (int x0 = 0; x0 < n; ++x0)
                for (int j = -1; j <= 1; ++j)
                    for (int i = -1; i <= 1; ++i) {
                        const int sx = ((x0 - i) % n + n) % n;
                        const int sy = ((y0 - j) % n + n) % n;
                        C[(y0 * n + x0) * n * n + sy * n + sx] += h.kernel(1 + i, 1 + j);
                    }
        const int nn = n * n;
        std::vector<double> A(nn * nn, 0.0), b(nn, 0.0);
        for (int r = 0; r < nn; ++r) {
            for (int c = 0; c < nn; ++c) {
                double s = 0.0;
                for (int k2 = 0; k2 < nn; ++k2) s += C[k2 * nn + r] * C[k2 * nn + c];
                A[r * nn + c] = s + (r == c ? mu : 0.0);
            }
            double s = 0.0;
            for (int k2 = 0; k2 < nn; ++k2) s += C[k2 * nn + r] * y.data()[k2];
            b[r] = s + mu * v.data()[r];
        }
        for (int col = 0; col < nn; ++col) {  // partial-pivot elimination
            int piv = col;
            for (int r = col + 1; r < nn; ++r)
                if (std::abs(A[r * nn + col]) > std::abs(A[piv * nn + col])) piv = r;
            for (int c = 0; c < nn; ++c) std::swap(A[col * nn + c], A[piv * nn + c]);
            std::swap(b[col], b[piv]);
            for (int r = col + 1; r < nn; ++r) {
                const double f = A[r * nn + col] / A[col * nn + col];
                for (int c = col; c < nn; ++c) A[r * nn + c] -= f * A[col * nn + c];
                b[r] -= f * b[col];
            }
        }
        std::vector<double> dense(nn);
        for (int r = nn - 1; r >= 0; --r) {
            double s = b[r];
            for (int c = r + 1; c < nn; ++c) s -= A[r * nn + c] * dense[c];
            dense[r] = s / A[r * nn + r];
        }

        const Image z = fidelity_step(y, h, v, mu);
        double worst = 0.0;
        for (int i = 0; i < nn; ++i) worst = std::max(worst, std::abs(z.data()[i] - dense[i]));
        detail += fmt("fidelity vs dense solve max err %.2e", worst);
        ok = ok && worst <= 1e-8;
    }

    report(6, "w-objective monotone; gradient matches FD; fidelity matches dense solve", ok, detail);
}

// ---------------------------------------------------------------- criterion 7

Psf averaged_se_psf(const OpticsModel& model, double dr0, int count, uint64_t seed) {
    const ZernikeSampler sampler(model.params().n_zernike, dr0);
    Rng rng(seed);
    Image acc(model.params().kernel_size, model.params().kernel_size, 0.0);
    for (int i = 0; i < count; ++i) {
        Psf p = model.psf_from_phase_fixed(model.phase_from_coeffs(remove_tilt(sampler.sample(rng))),
                                           model.params().kernel_size);
        p.project_to_valid();
        acc += p.kernel;
    }
    Psf h;
    h.kernel = acc;
    h.project_to_valid();
    return h;
}

void criterion_7() {
    bool ok = true;
    std::string detail;

    // (a) USAF chart at D/r0 = 1.4: restored beats the blurred input by >= 1 dB
    {
        const double t0 = now_s();
        OpticsParams params;
        params.set_dr0(1.4);
        const OpticsModel model(params);
        const Psf h_blur = averaged_se_psf(model, 1.4, 10, 777);

        const Image clean = synth::usaf_chart(256);
        Image blurred = convolve_replicate(clean, h_blur.kernel);
        blurred.clamp01();
        const double psnr_in = psnr(blurred, clean);

        const PsfBasis basis =
            train_prior({1.4}, params, 31337, TrainOptions{.ensemble_m = 1200, .p = 30}, 4, nullptr);
        DeconvConfig cfg;
        cfg.outer_iters = 15;
        const DeconvResult res = blind_deconvolve(blurred, basis, cfg);
        const double psnr_out = psnr(res.latent, clean);
        const double secs = now_s() - t0;
        detail += fmt("USAF: %.2f -> %.2f dB (%+.2f dB, %.0fs); ", psnr_in, psnr_out, psnr_out - psnr_in, secs);
        ok = ok && (psnr_out >= psnr_in + 1.0) && secs <= 600.0;
    }

    // (b) Fig.14-style trend: mean restored PSNR non-increasing in D/r0
    {
        const std::vector<double> levels{1.0, 1.4, 1.8, 2.2, 2.6};
        std::vector<double> mean_psnr;
        OpticsParams params;
        params.image_size = 128;
        for (double dr0 : levels) {
            params.set_dr0(dr0);
            const OpticsModel model(params);
            const PsfBasis basis =
                train_prior({dr0}, params, 5150, TrainOptions{.ensemble_m = 800, .p = 24}, 4, nullptr);
            const int scenes = 3, kernels = 5;
            std::vector<double> psnrs(scenes * kernels, 0.0);
            parallel_for(
                scenes * kernels,
                [&](int i) {
                    const int scn = i / kernels, ker = i % kernels;
                    const Image clean = synth::scene(128, scn);
                    const Psf h = averaged_se_psf(model, dr0, 10, substream_seed(880 + ker, i));
                    Image blurred = convolve_replicate(clean, h.kernel);
                    blurred.clamp01();
                    DeconvConfig cfg;
                    cfg.outer_iters = 10;
                    psnrs[i] = psnr(blind_deconvolve(blurred, basis, cfg).latent, clean);
                },
                4);
            double m = 0.0;
            for (double p : psnrs) m += p;
            mean_psnr.push_back(m / psnrs.size());
            detail += fmt("%.1f:%.2fdB ", dr0, mean_psnr.back());
        }
        bool trend = true;
        for (size_t i = 1; i < mean_psnr.size(); ++i)
            if (mean_psnr[i] > mean_psnr[i - 1]) trend = false;
        detail += fmt("trend %s", trend ? "non-increasing" : "VIOLATED");
        ok = ok && trend;
    }

    report(7, "blind deconvolution gains >=1 dB on USAF at D/r0=1.4; PSNR non-increasing in D/r0", ok, detail);
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    const double t_start = now_s();
    const double dr0 = 2.8;
    const auto dir = fs::temp_directory_path() / "turbmit_accept8";
    fs::remove_all(dir);
    fs::create_directories(dir);

    PipelineConfig cfg;
    cfg.threads = 4;
    cfg.frames = 100;
    cfg.dr0 = dr0;
    cfg.optics.image_size = 128;
    cfg.optics.block_size = 16;
    cfg.train.ensemble_m = 1200;
    cfg.train.p = 40;

    // calibration: interpolate beta at 2.8 from a seeded two-level table
    BetaTable table = calibrate_beta_table({2.0, 3.0}, 40, 11, cfg.resolved_optics(), cfg.reference,
                                           BetaSweepOptions{}, 4);
    save_beta_table(table, (dir / "beta.txt").string());
    stage_train(cfg, dr0, (dir / "basis.psfb").string());

    double total_gain = 0.0;
    std::string detail;
    const int n_scenes = 5;
    for (int scn = 0; scn < n_scenes; ++scn) {
        const std::string sim_dir = (dir / ("sim" + std::to_string(scn))).string();
        const std::string out_dir = (dir / ("out" + std::to_string(scn))).string();
        PipelineConfig scfg = cfg;
        scfg.seed = 1000 + scn;
        stage_simulate(scfg, "synth:scene" + std::to_string(scn), sim_dir);
        stage_restore(scfg, sim_dir, "frame", (dir / "basis.psfb").string(), (dir / "beta.txt").string(),
                      out_dir, "center");

        const Image clean = read_raster(sim_dir + "/clean.pgm");
        const std::vector<Image> frames = read_sequence(sim_dir, "frame");
        double psnr_in = 0.0;
        for (const Image& f : frames) psnr_in += psnr(f, clean);
        psnr_in /= frames.size();
        const MetricReport rep =
            stage_evaluate(out_dir, "restored", sim_dir + "/clean.pgm", out_dir + "/metrics.txt");
        const double gain = rep.psnr_db[0] - psnr_in;
        total_gain += gain;
        detail += fmt("s%d %+0.2f ", scn, gain);
    }
    const double mean_gain = total_gain / n_scenes;
    const double secs = now_s() - t_start;
    detail += fmt("=> mean %+.2f dB in %.0fs", mean_gain, secs);
    const bool ok = mean_gain >= 1.5 && secs < 1800.0;
    fs::remove_all(dir);
    report(8, "end-to-end at D/r0=2.8, 100 frames, 128x128, 5 scenes: mean gain >= 1.5 dB", ok, detail);
}

// ---------------------------------------------------------------- criterion 9

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string* why) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a))
        if (e.is_regular_file() && e.path().filename() != "runtime.txt")  // wall-clock values differ by nature
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const std::string& n : names) {
        if (!fs::exists(b / n)) {
            *why = "missing " + n;
            return false;
        }
        if (file_bytes(a / n) != file_bytes(b / n)) {
            *why = "differs: " + n;
            return false;
        }
    }
    return true;
}

void criterion_9() {
    const char* cli = std::getenv("TURBMIT_CLI");
    if (!cli) {
        report(9, "determinism across runs and thread budgets", false, "TURBMIT_CLI not set");
        return;
    }
    const auto dir = fs::temp_directory_path() / "turbmit_accept9";
    fs::remove_all(dir);
    fs::create_directories(dir);

    PipelineConfig cfg;
    cfg.frames = 21;
    cfg.dr0 = 2.0;
    cfg.optics.image_size = 64;
    cfg.optics.block_size = 16;
    cfg.optics.kernel_size = 21;
    cfg.optics.phase_grid = 32;
    cfg.optics.n_zernike = 21;
    cfg.reference.temporal_window = 5;
    cfg.lucky.temporal_window = 5;
    cfg.deconv.outer_iters = 5;
    cfg.train.ensemble_m = 150;
    cfg.train.p = 10;
    cfg.calibrate.dr0_list = {1.5, 2.5};
    cfg.calibrate.trials = 4;
    cfg.calibrate.sweep.grid_points = 6;
    const std::string cfg_path = (dir / "config.json").string();
    {
        std::ofstream out(cfg_path);
        out << dump_config(cfg);
    }

    bool ok = true;
    std::string detail;
    const std::vector<std::pair<std::string, int>> runs{{"r1t1", 1}, {"r2t1", 1}, {"r1t4", 4}, {"r2t4", 4}};
    for (const auto& [tag, threads] : runs) {
        const fs::path rd = dir / tag;
        fs::create_directories(rd);
        const std::string common = std::string(cli) + " ";
        auto run = [&](const std::string& args) {
            const std::string cmd = common + args + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
                detail += "command failed: " + args + "; ";
            }
        };
        run("simulate --config " + cfg_path + " --threads " + std::to_string(threads) +
            " --input synth:scene2 --output-dir " + (rd / "sim").string());
        run("calibrate-beta --config " + cfg_path + " --threads " + std::to_string(threads) + " --output " +
            (rd / "beta.txt").string());
        run("train-prior --config " + cfg_path + " --threads " + std::to_string(threads) + " --output " +
            (rd / "basis.psfb").string());
        run("restore --config " + cfg_path + " --threads " + std::to_string(threads) + " --input " +
            (rd / "sim").string() + " --basis " + (rd / "basis.psfb").string() + " --beta-table " +
            (rd / "beta.txt").string() + " --output-dir " + (rd / "out").string() + " --restore-frames center");
        run("evaluate --restored " + (rd / "out").string() + " --clean " + (rd / "sim" / "clean.pgm").string() +
            " --output " + (rd / "metrics.txt").string());
    }
    if (ok) {
        for (const std::string other : {"r2t1", "r1t4", "r2t4"}) {
            std::string why;
            if (!dirs_identical(dir / "r1t1" / "sim", dir / other / "sim", &why) ||
                !dirs_identical(dir / "r1t1" / "out", dir / other / "out", &why)) {
                ok = false;
                detail += other + " " + why + "; ";
            }
            for (const char* f : {"beta.txt", "basis.psfb", "metrics.txt"}) {
                if (file_bytes(dir / "r1t1" / f) != file_bytes(dir / other / f)) {
                    ok = false;
                    detail += other + std::string(" differs: ") + f + "; ";
                }
            }
        }
        if (ok) detail = "simulate/calibrate/train/restore/evaluate byte-identical over 2 runs x threads {1,4}";
    }
    fs::remove_all(dir);
    report(9, "determinism across runs and thread budgets", ok, detail);
}

// --------------------------------------------------------------- criterion 10

void criterion_10() {
    bool ok = true;
    std::string detail;
    const auto dir = fs::temp_directory_path() / "turbmit_accept10";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // PSFB bit-exact round trip
    {
        OpticsParams params;
        params.phase_grid = 32;
        params.kernel_size = 17;
        params.n_zernike = 21;
        const PsfBasis basis =
            train_prior({1.5, 2.5}, params, 21, TrainOptions{.ensemble_m = 100, .p = 8}, 4, nullptr);
        const std::string p1 = (dir / "a.psfb").string();
        const std::string p2 = (dir / "b.psfb").string();
        save_psfb(basis, p1);
        save_psfb(load_psfb(p1), p2);
        const bool same = file_bytes(p1) == file_bytes(p2) && !file_bytes(p1).empty();
        detail += fmt("PSFB round trip %s; ", same ? "bit-exact" : "DIFFERS");
        ok = ok && same;
    }

    // 16-bit raster round trip
    {
        Rng rng(3);
        Image img(33, 21);
        for (size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
        const std::string p1 = (dir / "a.pgm").string();
        const std::string p2 = (dir / "b.pgm").string();
        write_pgm(img, p1, 16);
        write_pgm(read_raster(p1), p2, 16);
        const bool same = file_bytes(p1) == file_bytes(p2) && !file_bytes(p1).empty();
        detail += fmt("16-bit PGM round trip %s", same ? "bit-exact" : "DIFFERS");
        ok = ok && same;
    }

    fs::remove_all(dir);
    report(10, "PSFB and 16-bit raster files round-trip bit-exactly", ok, detail);
}

// ------------------------------------------------------- runtime table extra

void runtime_extra() {
    const auto dir = fs::temp_directory_path() / "turbmit_runtime";
    fs::remove_all(dir);
    fs::create_directories(dir);

    PipelineConfig cfg;
    cfg.threads = 4;
    cfg.frames = 100;
    cfg.dr0 = 2.0;
    cfg.optics.image_size = 256;
    cfg.optics.block_size = 32;
    cfg.train.ensemble_m = 600;
    cfg.train.p = 24;

    stage_simulate(cfg, "synth:scene0", (dir / "sim").string());
    stage_train(cfg, 2.0, (dir / "basis.psfb").string());
    const RestoreResult res = stage_restore(cfg, (dir / "sim").string(), "frame",
                                            (dir / "basis.psfb").string(), "", (dir / "out").string(), "center");

    std::ifstream rt(dir / "out" / "runtime.txt");
    std::string text((std::istreambuf_iterator<char>(rt)), std::istreambuf_iterator<char>());
    bool rows = true;
    for (const char* row : {"Reference Frame", "Optical Flow", "Lucky Fusion", "Blind Deconvolution", "Overall"})
        if (text.find(row) == std::string::npos) rows = false;

    const double share = (res.times.flow + res.times.deconv) / std::max(res.times.overall, 1e-9);
    const bool ok = rows && share >= 0.8;
    fs::remove_all(dir);
    report(0, "runtime table rows present; flow+deconvolution dominate (>=80%)", ok,
           fmt("flow %.1fs + deconv %.1fs of %.1fs total = %.0f%%", res.times.flow, res.times.deconv,
               res.times.overall, 100 * share));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <criterion 1..10 | runtime>\n", argv[0]);
        return 2;
    }
    const std::string which = argv[1];
    if (which == "runtime") {
        runtime_extra();
    } else {
        switch (std::atoi(which.c_str())) {
            case 1: criterion_1(); break;
            case 2: criterion_2(); break;
            case 3: criterion_3(); break;
            case 4: criterion_4(); break;
            case 5: criterion_5(); break;
            case 6: criterion_6(); break;
            case 7: criterion_7(); break;
            case 8: criterion_8(); break;
            case 9: criterion_9(); break;
            case 10: criterion_10(); break;
            default:
                std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
                return 2;
        }
    }
    return g_failures == 0 ? 0 : 1;
}
