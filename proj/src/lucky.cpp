#include "turbmit/lucky.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "turbmit/reference.hpp"

namespace turbmit {

void LuckyConfig::validate() const {
    require(patch_size >= 3 && patch_size % 2 == 1, "LuckyConfig: patch_size must be odd and >= 3");
    require(stride >= 1, "LuckyConfig: stride must be >= 1");
    require(temporal_window >= 0, "LuckyConfig: temporal_window must be >= 0");
}

double geometric_score(const Image& aligned_patch, const Image& reference_patch) {
    require(aligned_patch.same_size(reference_patch), "geometric_score: dimension mismatch");
    return sum_squared_diff(aligned_patch, reference_patch);
}

double sharpness_score(const Image& patch) {
    require(patch.width() >= 2 && patch.height() >= 2, "sharpness_score: patch too small");
    double s = 0.0;
    for (int y = 0; y < patch.height(); ++y)
        for (int x = 0; x + 1 < patch.width(); ++x) s += std::abs(patch(x + 1, y) - patch(x, y));
    for (int y = 0; y + 1 < patch.height(); ++y)
        for (int x = 0; x < patch.width(); ++x) s += std::abs(patch(x, y + 1) - patch(x, y));
    return s;
}

namespace {

struct PatchScores {
    std::vector<int> xs, ys;
    std::vector<int> dts;
    // [dt index][center index], cy-major
    std::vector<std::vector<double>> geo;
    std::vector<std::vector<double>> sharp;
};

PatchScores compute_scores(const std::vector<Image>& aligned, const std::vector<Image>& reference_seq,
                           int t, const LuckyConfig& cfg) {
    cfg.validate();
    require(!aligned.empty(), "fuse_lucky: empty stack");
    require(aligned.size() == reference_seq.size(), "fuse_lucky: aligned/reference length mismatch");
    require(t >= 0 && t < static_cast<int>(aligned.size()), "fuse_lucky: t out of range");
    for (size_t i = 0; i < aligned.size(); ++i)
        require(aligned[i].same_size(reference_seq[i]) && aligned[i].same_size(aligned[0]),
                "fuse_lucky: frame size mismatch");

    const int w = aligned[0].width(), h = aligned[0].height();
    const int hw = cfg.patch_size / 2;
    PatchScores sc;
    sc.xs = patch_centers(w, cfg.patch_size, cfg.stride);
    sc.ys = patch_centers(h, cfg.patch_size, cfg.stride);
    const size_t nc = sc.xs.size() * sc.ys.size();

    for (int dt = -cfg.temporal_window; dt <= cfg.temporal_window; ++dt) {
        const int tt = t + dt;
        if (tt < 0 || tt >= static_cast<int>(aligned.size())) continue;
        sc.dts.push_back(dt);
        const Image& fa = aligned[tt];
        const Image& fr = reference_seq[tt];
        std::vector<double> geo(nc), shp(nc);
        size_t ci = 0;
        for (int cy : sc.ys) {
            for (int cx : sc.xs) {
                double g = 0.0, s = 0.0;
                for (int y = cy - hw; y <= cy + hw; ++y)
                    for (int x = cx - hw; x <= cx + hw; ++x) {
                        const double d = fa(x, y) - fr(x, y);
                        g += d * d;
                        if (x + 1 <= cx + hw) s += std::abs(fa(x + 1, y) - fa(x, y));
                        if (y + 1 <= cy + hw) s += std::abs(fa(x, y + 1) - fa(x, y));
                    }
                geo[ci] = g;
                shp[ci] = s;
                ++ci;
            }
        }
        sc.geo.push_back(std::move(geo));
        sc.sharp.push_back(std::move(shp));
    }
    return sc;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

}  // namespace

void auto_alphas(const std::vector<Image>& aligned, const std::vector<Image>& reference_seq, int t,
                 const LuckyConfig& cfg, double& alpha1, double& alpha2) {
    const PatchScores sc = compute_scores(aligned, reference_seq, t, cfg);
    std::vector<double> all_geo, all_sharp;
    for (const auto& v : sc.geo) all_geo.insert(all_geo.end(), v.begin(), v.end());
    for (const auto& v : sc.sharp) all_sharp.insert(all_sharp.end(), v.begin(), v.end());
    const double mg = median_of(std::move(all_geo));
    const double ms = median_of(std::move(all_sharp));
    alpha1 = mg > 0.0 ? 3.0 / mg : 0.0;
    alpha2 = ms > 0.0 ? 1.0 / ms : 0.0;
}

Image fuse_lucky(const std::vector<Image>& aligned, const std::vector<Image>& reference_seq, int t,
                 const LuckyConfig& cfg) {
    const PatchScores sc = compute_scores(aligned, reference_seq, t, cfg);

    double a1 = cfg.alpha1, a2 = cfg.alpha2;
    if (a1 < 0.0 || a2 < 0.0) {
        double auto1, auto2;
        auto_alphas(aligned, reference_seq, t, cfg, auto1, auto2);
        if (a1 < 0.0) a1 = auto1;
        if (a2 < 0.0) a2 = auto2;
    }

    const int w = aligned[0].width(), h = aligned[0].height();
    const int hw = cfg.patch_size / 2;
    const int P = cfg.patch_size;
    Image acc(w, h, 0.0), wacc(w, h, 0.0);
    std::vector<double> est(static_cast<size_t>(P) * P);
    std::vector<double> logw(sc.dts.size());

    size_t ci = 0;
    for (int cy : sc.ys) {
        for (int cx : sc.xs) {
            double mx = -std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < sc.dts.size(); ++k) {
                logw[k] = -a1 * sc.geo[k][ci] + a2 * sc.sharp[k][ci];
                mx = std::max(mx, logw[k]);
            }
            std::fill(est.begin(), est.end(), 0.0);
            double wsum = 0.0;
            for (size_t k = 0; k < sc.dts.size(); ++k) {
                const double wgt = std::exp(logw[k] - mx);  // max shift: the maximizer has weight 1
                wsum += wgt;
                const Image& frame = aligned[t + sc.dts[k]];
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
        for (int x = 0; x < w; ++x) out(x, y) = wacc(x, y) > 0.0 ? acc(x, y) / wacc(x, y) : aligned[t](x, y);
    return out;
}

double frame_sharpness(const Image& img) {
    return sharpness_score(img) / img.size();
}

}  // namespace turbmit
