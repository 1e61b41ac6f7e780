#include "turbmit/reference.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "turbmit/parallel.hpp"
#include "turbmit/simulate.hpp"
#include "turbmit/synth.hpp"

namespace turbmit {

void PatchWindowConfig::validate() const {
    require(patch_size >= 3 && patch_size % 2 == 1, "PatchWindowConfig: patch_size must be odd and >= 3");
    require(spatial_search >= 1 && spatial_search % 2 == 1, "PatchWindowConfig: spatial_search must be odd and >= 1");
    require(temporal_window >= 0, "PatchWindowConfig: temporal_window must be >= 0");
    require(stride >= 1, "PatchWindowConfig: stride must be >= 1");
    require(beta >= 0.0, "PatchWindowConfig: beta must be >= 0");
}

std::vector<int> patch_centers(int dim, int patch_size, int stride) {
    const int hw = patch_size / 2;
    require(dim >= patch_size, "patch_centers: image smaller than patch");
    std::vector<int> cs;
    for (int c = hw; c <= dim - 1 - hw; c += stride) cs.push_back(c);
    if (cs.back() != dim - 1 - hw) cs.push_back(dim - 1 - hw);
    return cs;
}

double patch_window_value(int offset, int patch_size) {
    const double v = std::cos(M_PI * offset / (patch_size + 1.0));
    return v * v;
}

double patch_distance(const Image& a, const Image& b) {
    require(a.same_size(b), "patch_distance: dimension mismatch");
    return sum_squared_diff(a, b);
}

Image extract_patch(const Image& img, int cx, int cy, int patch_size) {
    const int hw = patch_size / 2;
    require(cx >= hw && cx < img.width() - hw && cy >= hw && cy < img.height() - hw,
            "extract_patch: patch not inside frame");
    Image p(patch_size, patch_size);
    for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x) p(x, y) = img(cx - hw + x, cy - hw + y);
    return p;
}

double min_spatial_distance(const std::vector<Image>& seq, int cx, int cy, int t, int dt,
                            const PatchWindowConfig& cfg) {
    cfg.validate();
    require(t >= 0 && t < static_cast<int>(seq.size()), "min_spatial_distance: t out of range");
    const int tt = t + dt;
    require(tt >= 0 && tt < static_cast<int>(seq.size()), "min_spatial_distance: t+dt out of range");
    const Image& cur = seq[t];
    const Image& other = seq[tt];
    const int hw = cfg.patch_half();
    const int sh = cfg.search_half();
    const Image p0 = extract_patch(cur, cx, cy, cfg.patch_size);
    double best = std::numeric_limits<double>::infinity();
    for (int dy = -sh; dy <= sh; ++dy) {
        for (int dx = -sh; dx <= sh; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < hw || nx >= other.width() - hw || ny < hw || ny >= other.height() - hw) continue;
            best = std::min(best, patch_distance(p0, extract_patch(other, nx, ny, cfg.patch_size)));
        }
    }
    return best;
}

namespace {

// Summed-area table with a one-pixel zero border: S(x+1, y+1) = sum of
// img over [0..x] x [0..y].
void integral_image(const Image& img, std::vector<double>& sat) {
    const int w = img.width(), h = img.height();
    sat.assign(static_cast<size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += img(x, y);
            sat[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] = sat[static_cast<size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
}

inline double box_sum(const std::vector<double>& sat, int w, int x0, int y0, int x1, int y1) {
    // inclusive box [x0..x1] x [y0..y1]
    const int W = w + 1;
    return sat[static_cast<size_t>(y1 + 1) * W + (x1 + 1)] - sat[static_cast<size_t>(y0) * W + (x1 + 1)] -
           sat[static_cast<size_t>(y1 + 1) * W + x0] + sat[static_cast<size_t>(y0) * W + x0];
}

}  // namespace

NonlocalDistances compute_nonlocal_distances(const std::vector<Image>& seq, int t, const PatchWindowConfig& cfg) {
    cfg.validate();
    require(!seq.empty(), "compute_nonlocal_distances: empty sequence");
    require(t >= 0 && t < static_cast<int>(seq.size()), "compute_nonlocal_distances: t out of range");
    const Image& cur = seq[t];
    const int w = cur.width(), h = cur.height();
    const int hw = cfg.patch_half();
    const int sh = cfg.search_half();

    NonlocalDistances out;
    out.xs = patch_centers(w, cfg.patch_size, cfg.stride);
    out.ys = patch_centers(h, cfg.patch_size, cfg.stride);
    const size_t nc = out.xs.size() * out.ys.size();

    Image diff(w, h);
    std::vector<double> sat;
    for (int dt = -cfg.temporal_window; dt <= cfg.temporal_window; ++dt) {
        const int tt = t + dt;
        if (tt < 0 || tt >= static_cast<int>(seq.size())) continue;
        out.dts.push_back(dt);
        std::vector<double> dmin(nc, std::numeric_limits<double>::infinity());
        const Image& other = seq[tt];
        for (int dy = -sh; dy <= sh; ++dy) {
            for (int dx = -sh; dx <= sh; ++dx) {
                // squared difference of cur against other shifted by (dx, dy),
                // valid where both patches stay inside the frame
                const int vx0 = std::max(hw, hw - dx), vx1 = std::min(w - 1 - hw, w - 1 - hw - dx);
                const int vy0 = std::max(hw, hw - dy), vy1 = std::min(h - 1 - hw, h - 1 - hw - dy);
                if (vx0 > vx1 || vy0 > vy1) continue;
                const int rx0 = vx0 - hw, rx1 = vx1 + hw;
                const int ry0 = vy0 - hw, ry1 = vy1 + hw;
                for (int y = ry0; y <= ry1; ++y)
                    for (int x = rx0; x <= rx1; ++x) {
                        const double d = cur(x, y) - other(x + dx, y + dy);
                        diff(x, y) = d * d;
                    }
                integral_image(diff, sat);
                size_t ci = 0;
                for (int cy : out.ys) {
                    for (int cx : out.xs) {
                        if (cx >= vx0 && cx <= vx1 && cy >= vy0 && cy <= vy1) {
                            const double ssd = box_sum(sat, w, cx - hw, cy - hw, cx + hw, cy + hw);
                            if (ssd < dmin[ci]) dmin[ci] = ssd;
                        }
                        ++ci;
                    }
                }
            }
        }
        out.dmin.push_back(std::move(dmin));
    }
    return out;
}

Image reference_from_distances(const std::vector<Image>& seq, int t, const PatchWindowConfig& cfg,
                               const NonlocalDistances& dists, double beta) {
    const Image& cur = seq[t];
    const int w = cur.width(), h = cur.height();
    const int hw = cfg.patch_half();
    const int P = cfg.patch_size;
    Image acc(w, h, 0.0), wacc(w, h, 0.0);
    std::vector<double> est(static_cast<size_t>(P) * P);

    size_t ci = 0;
    for (int cy : dists.ys) {
        for (int cx : dists.xs) {
            std::fill(est.begin(), est.end(), 0.0);
            double wsum = 0.0;
            for (size_t k = 0; k < dists.dts.size(); ++k) {
                const Image& frame = seq[t + dists.dts[k]];
                const double wgt = std::exp(-beta * dists.dmin[k][ci]);
                wsum += wgt;
                size_t ei = 0;
                for (int y = cy - hw; y <= cy + hw; ++y)
                    for (int x = cx - hw; x <= cx + hw; ++x) est[ei++] += wgt * frame(x, y);
            }
            const double inv = 1.0 / wsum;
            size_t ei = 0;
            for (int y = cy - hw; y <= cy + hw; ++y) {
                const double wy = patch_window_value(y - cy, P);
                for (int x = cx - hw; x <= cx + hw; ++x) {
                    const double pw = patch_window_value(x - cx, P) * wy;
                    acc(x, y) += pw * est[ei++] * inv;
                    wacc(x, y) += pw;
                }
            }
            ++ci;
        }
    }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = wacc(x, y) > 0.0 ? acc(x, y) / wacc(x, y) : cur(x, y);
    return out;
}

Image compute_reference(const std::vector<Image>& seq, int t, const PatchWindowConfig& cfg) {
    const NonlocalDistances dists = compute_nonlocal_distances(seq, t, cfg);
    return reference_from_distances(seq, t, cfg, dists, cfg.beta);
}

namespace {

double frob_error(const Image& a, const Image& b) { return std::sqrt(sum_squared_diff(a, b)); }

}  // namespace

double calibrate_beta(double dr0, int trials, uint64_t seed, const OpticsParams& base,
                      const PatchWindowConfig& cfg, const BetaSweepOptions& sweep, int threads,
                      std::vector<double>* mean_errors) {
    require(dr0 > 0.0, "calibrate_beta: dr0 must be positive");
    require(trials >= 1, "calibrate_beta: trials must be >= 1");
    if (dr0 < 1.0 || dr0 > 5.0)
        std::cerr << "calibrate_beta: D/r0 = " << dr0 << " outside the typical [1, 5] range\n";

    OpticsParams params = base;
    params.image_size = sweep.probe_size;
    params.block_size = sweep.probe_block;
    params.correlation_blocks = sweep.probe_correlation;
    params.set_dr0(dr0);

    PatchWindowConfig ccfg = cfg;
    ccfg.spatial_search = sweep.search;
    ccfg.temporal_window = sweep.probe_temporal_window;

    std::vector<double> betas(sweep.grid_points);
    const double l0 = std::log(sweep.beta_min), l1 = std::log(sweep.beta_max);
    for (int i = 0; i < sweep.grid_points; ++i)
        betas[i] = std::exp(l0 + (l1 - l0) * i / (sweep.grid_points - 1.0));

    const Image truth = synth::point_grid(sweep.probe_size, sweep.probe_spacing, sweep.probe_blur);
    const int T = 2 * ccfg.temporal_window + 1;
    SimulateOptions opts;
    opts.tilt_only = true;

    std::vector<std::vector<double>> trial_errors(trials);
    parallel_for(
        trials,
        [&](int trial) {
            const OpticsModel model(params);
            std::vector<Image> seq(T);
            for (int f = 0; f < T; ++f)
                seq[f] = simulate_frame(truth, model, substream_seed(substream_seed(seed, trial), f), opts);
            const int t = T / 2;
            const NonlocalDistances dists = compute_nonlocal_distances(seq, t, ccfg);
            std::vector<double> errs(betas.size());
            for (size_t i = 0; i < betas.size(); ++i)
                errs[i] = frob_error(reference_from_distances(seq, t, ccfg, dists, betas[i]), truth);
            trial_errors[trial] = std::move(errs);
        },
        threads);

    std::vector<double> mean_err(betas.size(), 0.0);
    for (int trial = 0; trial < trials; ++trial)
        for (size_t i = 0; i < betas.size(); ++i) mean_err[i] += trial_errors[trial][i];
    for (double& e : mean_err) e /= trials;
    if (mean_errors) *mean_errors = mean_err;

    size_t best = 0;
    for (size_t i = 1; i < betas.size(); ++i)
        if (mean_err[i] < mean_err[best]) best = i;

    // unimodality check (diagnostic only): count interior local minima
    int minima = 0;
    for (size_t i = 1; i + 1 < mean_err.size(); ++i)
        if (mean_err[i] < mean_err[i - 1] - 1e-9 && mean_err[i] < mean_err[i + 1] - 1e-9) ++minima;
    if (minima > 1) std::cerr << "calibrate_beta: error curve has " << minima << " local minima (noisy sweep)\n";

    if (best == 0 || best + 1 == betas.size()) return betas[best];
    // parabolic vertex refinement on the uniform log(beta) grid
    const double x1 = std::log(betas[best]);
    const double hstep = (l1 - l0) / (sweep.grid_points - 1.0);
    const double y0 = mean_err[best - 1], y1 = mean_err[best], y2 = mean_err[best + 1];
    const double denom = y0 - 2 * y1 + y2;
    if (std::abs(denom) < 1e-15) return betas[best];
    const double offset = std::clamp(0.5 * hstep * (y0 - y2) / denom, -hstep / 2, hstep / 2);
    return std::exp(x1 + offset);
}

BetaTable calibrate_beta_table(const std::vector<double>& dr0_list, int trials, uint64_t seed,
                               const OpticsParams& base, const PatchWindowConfig& cfg,
                               const BetaSweepOptions& sweep, int threads) {
    BetaTable table;
    for (size_t i = 0; i < dr0_list.size(); ++i) {
        table.dr0.push_back(dr0_list[i]);
        table.beta.push_back(calibrate_beta(dr0_list[i], trials, substream_seed(seed, 1000 + i), base, cfg, sweep, threads));
    }
    return table;
}

void save_beta_table(const BetaTable& table, const std::string& path) {
    require(table.dr0.size() == table.beta.size(), "save_beta_table: ragged table");
    std::ofstream out(path);
    require(out.good(), "save_beta_table: cannot open " + path);
    out.precision(17);
    for (size_t i = 0; i < table.dr0.size(); ++i) out << table.dr0[i] << " " << table.beta[i] << "\n";
    require(out.good(), "save_beta_table: write failed");
}

BetaTable load_beta_table(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_beta_table: cannot open " + path);
    BetaTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double d, b;
        require(static_cast<bool>(ss >> d >> b), "load_beta_table: malformed line: " + line);
        table.dr0.push_back(d);
        table.beta.push_back(b);
    }
    require(!table.dr0.empty(), "load_beta_table: empty table");
    return table;
}

double beta_for_dr0(const BetaTable& table, double dr0) {
    require(!table.dr0.empty(), "beta_for_dr0: empty table");
    if (dr0 <= table.dr0.front()) return table.beta.front();
    if (dr0 >= table.dr0.back()) return table.beta.back();
    for (size_t i = 1; i < table.dr0.size(); ++i) {
        if (dr0 <= table.dr0[i]) {
            const double f = (dr0 - table.dr0[i - 1]) / (table.dr0[i] - table.dr0[i - 1]);
            return table.beta[i - 1] + f * (table.beta[i] - table.beta[i - 1]);
        }
    }
    return table.beta.back();
}

}  // namespace turbmit
