#include "turbmit/simulate.hpp"

#include <cmath>

#include "turbmit/parallel.hpp"

namespace turbmit {

namespace {

// Circular Gaussian smoothing of a small block-grid field with exact
// marginal-variance restoration (weights are identical at every site under
// wrap-around, so the variance factor is a single scalar).
void smooth_field_circular(std::vector<double>& f, int nx, int ny, double sigma) {
    if (sigma <= 0.0 || (nx <= 1 && ny <= 1)) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));

    auto make_folded = [&](int n) {
        std::vector<double> k(n, 0.0);
        if (n == 1) {
            k[0] = 1.0;
            return k;
        }
        double norm = 0.0;
        for (int i = -radius; i <= radius; ++i) norm += std::exp(-0.5 * i * i / (sigma * sigma));
        for (int i = -radius; i <= radius; ++i) {
            const int j = ((i % n) + n) % n;
            k[j] += std::exp(-0.5 * i * i / (sigma * sigma)) / norm;
        }
        return k;
    };

    auto pass = [&](std::vector<double>& v, int n, int count, int stride, int base_stride, const std::vector<double>& k) {
        double w2 = 0.0;
        for (double kv : k) w2 += kv * kv;
        const double restore = 1.0 / std::sqrt(w2);
        std::vector<double> line(n);
        for (int c = 0; c < count; ++c) {
            for (int i = 0; i < n; ++i) line[i] = v[static_cast<size_t>(c) * base_stride + static_cast<size_t>(i) * stride];
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += k[((j - i) % n + n) % n] * line[j];
                v[static_cast<size_t>(c) * base_stride + static_cast<size_t>(i) * stride] = s * restore;
            }
        }
    };

    if (nx > 1) pass(f, nx, ny, 1, nx, make_folded(nx));
    if (ny > 1) pass(f, ny, nx, nx, 1, make_folded(ny));
}

}  // namespace

CoeffField sample_coeff_field(const OpticsModel& model, int blocks_x, int blocks_y, Rng& rng) {
    const int n_modes = model.params().n_zernike;
    const double dr0 = dr0_ratio(model.params());
    CoeffField field;
    field.blocks_x = blocks_x;
    field.blocks_y = blocks_y;
    field.coeffs.resize(static_cast<size_t>(blocks_x) * blocks_y);

    const int nb = blocks_x * blocks_y;
    const int m = n_modes - 1;  // modes 2..N
    std::vector<std::vector<double>> white(m, std::vector<double>(nb));
    for (int k = 0; k < m; ++k)
        for (int b = 0; b < nb; ++b) white[k][b] = rng.normal();

    if (dr0 == 0.0) {
        for (auto& c : field.coeffs) c.a.assign(n_modes, 0.0);
        return field;
    }

    for (int k = 0; k < m; ++k) smooth_field_circular(white[k], blocks_x, blocks_y, model.params().correlation_blocks);

    const ZernikeSampler sampler(n_modes, dr0);
    std::vector<double> g(m);
    for (int b = 0; b < nb; ++b) {
        for (int k = 0; k < m; ++k) g[k] = white[k][b];
        field.coeffs[b] = sampler.from_standard_normal(g);
    }
    return field;
}

void tilt_displacement(const CoeffField& field, int block_size, int width, int height, Image& dx, Image& dy) {
    dx = Image(width, height, 0.0);
    dy = Image(width, height, 0.0);
    const double scale = OpticsModel::tilt_shift_px_per_rad;
    const double half = block_size / 2.0 - 0.5;  // block-center pixel coordinate offset
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            // position in block-grid coordinates
            const double gx = (x - half) / block_size;
            const double gy = (y - half) / block_size;
            const int bx0 = static_cast<int>(std::floor(gx));
            const int by0 = static_cast<int>(std::floor(gy));
            const double fx = gx - bx0;
            const double fy = gy - by0;
            auto cl = [&](int bx, int by) -> const ZernikeCoeffs& {
                bx = std::clamp(bx, 0, field.blocks_x - 1);
                by = std::clamp(by, 0, field.blocks_y - 1);
                return field.at(bx, by);
            };
            const ZernikeCoeffs& c00 = cl(bx0, by0);
            const ZernikeCoeffs& c10 = cl(bx0 + 1, by0);
            const ZernikeCoeffs& c01 = cl(bx0, by0 + 1);
            const ZernikeCoeffs& c11 = cl(bx0 + 1, by0 + 1);
            auto lerp2 = [&](int j) {
                return (1 - fy) * ((1 - fx) * c00[j] + fx * c10[j]) + fy * ((1 - fx) * c01[j] + fx * c11[j]);
            };
            dx(x, y) = scale * lerp2(2);
            dy(x, y) = scale * lerp2(3);
        }
    }
}

namespace {

Image warp_by_displacement(const Image& img, const Image& dx, const Image& dy) {
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out(x, y) = sample_bilinear(img, x + dx(x, y), y + dy(x, y));
    return out;
}

// Raised-cosine partition of unity: cos^2(pi u / (2B)) windows of width 2B
// at stride B sum to one on the interior; border deficits are normalized by
// the accumulated window mass.
Image blockwise_blur(const Image& img, const OpticsModel& model, const CoeffField& field) {
    const int B = model.params().block_size;
    const int w = img.width(), h = img.height();
    Image acc(w, h, 0.0), wacc(w, h, 0.0);
    for (int by = 0; by < field.blocks_y; ++by) {
        for (int bx = 0; bx < field.blocks_x; ++bx) {
            const Psf psf = model.psf_from_phase(model.phase_from_coeffs(remove_tilt(field.at(bx, by))));
            const Image& k = psf.kernel;
            const int kw = k.width(), hk = kw / 2;
            const double cx = bx * B + B / 2.0 - 0.5;
            const double cy = by * B + B / 2.0 - 0.5;
            const int x0 = std::max(0, static_cast<int>(std::ceil(cx - B)));
            const int x1 = std::min(w - 1, static_cast<int>(std::floor(cx + B)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(cy - B)));
            const int y1 = std::min(h - 1, static_cast<int>(std::floor(cy + B)));
            for (int y = y0; y <= y1; ++y) {
                const double wy = std::cos(M_PI * (y - cy) / (2.0 * B));
                for (int x = x0; x <= x1; ++x) {
                    const double wx = std::cos(M_PI * (x - cx) / (2.0 * B));
                    const double wgt = wx * wx * wy * wy;
                    if (wgt <= 0.0) continue;
                    double s = 0.0;
                    for (int j = 0; j < kw; ++j)
                        for (int i = 0; i < kw; ++i) s += k(i, j) * img.at_clamped(x + hk - i, y + hk - j);
                    acc(x, y) += wgt * s;
                    wacc(x, y) += wgt;
                }
            }
        }
    }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = wacc(x, y) > 0.0 ? acc(x, y) / wacc(x, y) : img(x, y);
    return out;
}

}  // namespace

Image simulate_frame(const Image& clean, const OpticsModel& model, uint64_t frame_seed, const SimulateOptions& opts) {
    const OpticsParams& p = model.params();
    Rng rng(frame_seed);

    int nbx, nby, block;
    if (opts.isoplanatic) {
        nbx = nby = 1;
        block = std::max(clean.width(), clean.height());
    } else {
        require(clean.width() % p.block_size == 0 && clean.height() % p.block_size == 0,
                "simulate_frame: frame dimensions must be divisible by block_size");
        nbx = clean.width() / p.block_size;
        nby = clean.height() / p.block_size;
        block = p.block_size;
    }

    CoeffField field = sample_coeff_field(model, nbx, nby, rng);

    Image out;
    if (dr0_ratio(p) == 0.0) {
        // no turbulence: exactly the diffraction blur, no randomness
        out = opts.tilt_only ? clean : convolve_replicate(clean, model.diffraction_psf().kernel);
        if (opts.noise_sigma > 0.0) {
            for (size_t i = 0; i < out.size(); ++i) out.data()[i] += opts.noise_sigma * rng.normal();
            out.clamp01();
        }
        return out;
    }
    if (opts.tilt_only) {
        out = clean;
    } else if (opts.isoplanatic) {
        const Psf psf = model.psf_from_phase(model.phase_from_coeffs(remove_tilt(field.at(0, 0))));
        out = convolve_replicate(clean, psf.kernel);
    } else {
        out = blockwise_blur(clean, model, field);
    }

    Image dx, dy;
    tilt_displacement(field, block, clean.width(), clean.height(), dx, dy);
    bool any_tilt = false;
    for (size_t i = 0; i < dx.size() && !any_tilt; ++i)
        any_tilt = dx.data()[i] != 0.0 || dy.data()[i] != 0.0;
    if (any_tilt) out = warp_by_displacement(out, dx, dy);

    if (opts.noise_sigma > 0.0) {
        for (size_t i = 0; i < out.size(); ++i) out.data()[i] += opts.noise_sigma * rng.normal();
        out.clamp01();
    }
    return out;
}

std::vector<Image> simulate_sequence(const std::vector<Image>& clean, const OpticsParams& params,
                                     uint64_t seed, int threads, const SimulateOptions& opts) {
    require(!clean.empty(), "simulate_sequence: empty input");
    for (size_t i = 1; i < clean.size(); ++i)
        require(clean[i].same_size(clean[0]), "simulate_sequence: frame size mismatch at index " + std::to_string(i));

    const OpticsModel model(params);
    std::vector<Image> out(clean.size());
    parallel_for(static_cast<int>(clean.size()),
                 [&](int i) { out[i] = simulate_frame(clean[i], model, substream_seed(seed, i), opts); },
                 threads);
    return out;
}

}  // namespace turbmit
