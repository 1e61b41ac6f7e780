#include "turbmit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace turbmit {

void FlowField::validate(double max_displacement) const {
    require(u.same_size(v), "FlowField: u/v size mismatch");
    for (size_t i = 0; i < u.size(); ++i) {
        require(std::isfinite(u.data()[i]) && std::isfinite(v.data()[i]), "FlowField: non-finite displacement");
        require(std::abs(u.data()[i]) <= max_displacement && std::abs(v.data()[i]) <= max_displacement,
                "FlowField: displacement exceeds limit");
    }
}

Image warp(const Image& frame, const FlowField& flow) {
    require(frame.same_size(flow.u) && frame.same_size(flow.v), "warp: dimension mismatch");
    Image out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            out(x, y) = sample_bilinear(frame, x + flow.u(x, y), y + flow.v(x, y));
    return out;
}

namespace {

void hs_level(const Image& moving, const Image& reference, FlowField& flow, const FlowOptions& opts) {
    const int w = moving.width(), h = moving.height();
    for (int it = 0; it < opts.warp_iters; ++it) {
        const Image warped = warp(moving, flow);
        // derivatives of the warped frame blended with the reference
        Image ix(w, h), iy(w, h), itd(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                ix(x, y) = 0.25 * (warped.at_clamped(x + 1, y) - warped.at_clamped(x - 1, y) +
                                   reference.at_clamped(x + 1, y) - reference.at_clamped(x - 1, y));
                iy(x, y) = 0.25 * (warped.at_clamped(x, y + 1) - warped.at_clamped(x, y - 1) +
                                   reference.at_clamped(x, y + 1) - reference.at_clamped(x, y - 1));
                itd(x, y) = warped(x, y) - reference(x, y);
            }
        Image du(w, h, 0.0), dv(w, h, 0.0);
        const double a2 = opts.alpha * opts.alpha;
        for (int sweep = 0; sweep < opts.solver_iters; ++sweep) {
            Image nu(w, h), nv(w, h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double ubar = 0.25 * (du.at_clamped(x - 1, y) + du.at_clamped(x + 1, y) +
                                                du.at_clamped(x, y - 1) + du.at_clamped(x, y + 1));
                    const double vbar = 0.25 * (dv.at_clamped(x - 1, y) + dv.at_clamped(x + 1, y) +
                                                dv.at_clamped(x, y - 1) + dv.at_clamped(x, y + 1));
                    const double gx = ix(x, y), gy = iy(x, y);
                    const double r = (gx * ubar + gy * vbar + itd(x, y)) / (a2 + gx * gx + gy * gy);
                    nu(x, y) = ubar - gx * r;
                    nv(x, y) = vbar - gy * r;
                }
            du = std::move(nu);
            dv = std::move(nv);
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                flow.u(x, y) = std::clamp(flow.u(x, y) + du(x, y), -opts.max_displacement, opts.max_displacement);
                flow.v(x, y) = std::clamp(flow.v(x, y) + dv(x, y), -opts.max_displacement, opts.max_displacement);
            }
    }
}

FlowField upsample_flow(const FlowField& flow, int w, int h) {
    FlowField out;
    out.u = resize_bilinear(flow.u, w, h);
    out.v = resize_bilinear(flow.v, w, h);
    const double sx = static_cast<double>(w) / flow.width();
    const double sy = static_cast<double>(h) / flow.height();
    out.u *= sx;
    out.v *= sy;
    return out;
}

}  // namespace

FlowField estimate_flow_opts(const Image& moving, const Image& reference, const FlowOptions& opts) {
    require(moving.same_size(reference), "estimate_flow: dimension mismatch");
    require(opts.levels >= 1, "estimate_flow: need at least one level");

    std::vector<Image> pyr_m{moving}, pyr_r{reference};
    for (int l = 1; l < opts.levels; ++l) {
        if (pyr_m.back().width() < 24 || pyr_m.back().height() < 24) break;
        pyr_m.push_back(downsample_half(pyr_m.back()));
        pyr_r.push_back(downsample_half(pyr_r.back()));
    }

    FlowField flow = FlowField::zero(pyr_m.back().width(), pyr_m.back().height());
    for (int l = static_cast<int>(pyr_m.size()) - 1; l >= 0; --l) {
        if (flow.width() != pyr_m[l].width() || flow.height() != pyr_m[l].height())
            flow = upsample_flow(flow, pyr_m[l].width(), pyr_m[l].height());
        hs_level(pyr_m[l], pyr_r[l], flow, opts);
    }

    // residual contract: never worse than no registration at all
    const double before = sum_squared_diff(moving, reference);
    const double after = sum_squared_diff(warp(moving, flow), reference);
    if (after > before) return FlowField::zero(moving.width(), moving.height());
    return flow;
}

FlowField estimate_flow(const Image& moving, const Image& reference, int levels, int iters) {
    FlowOptions opts;
    opts.levels = levels;
    opts.warp_iters = iters;
    return estimate_flow_opts(moving, reference, opts);
}

void median_flow(const FlowField& flow, double& mu, double& mv) {
    std::vector<double> us(flow.u.data(), flow.u.data() + flow.u.size());
    std::vector<double> vs(flow.v.data(), flow.v.data() + flow.v.size());
    const size_t mid = us.size() / 2;
    std::nth_element(us.begin(), us.begin() + mid, us.end());
    std::nth_element(vs.begin(), vs.begin() + mid, vs.end());
    mu = us[mid];
    mv = vs[mid];
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

uint32_t get_u32(const std::string& buf, size_t& pos) {
    require(pos + 4 <= buf.size(), "FLOW: truncated file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

float get_f32(const std::string& buf, size_t& pos) {
    const uint32_t bits = get_u32(buf, pos);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_flow(const FlowField& flow, const std::string& path) {
    require(flow.u.same_size(flow.v), "save_flow: u/v size mismatch");
    std::string buf;
    buf += "FLOW";
    put_u32(buf, static_cast<uint32_t>(flow.width()));
    put_u32(buf, static_cast<uint32_t>(flow.height()));
    for (size_t i = 0; i < flow.u.size(); ++i) put_f32(buf, static_cast<float>(flow.u.data()[i]));
    for (size_t i = 0; i < flow.v.size(); ++i) put_f32(buf, static_cast<float>(flow.v.data()[i]));
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "save_flow: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(out.good(), "save_flow: write failed");
}

FlowField load_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_flow: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(buf.size() >= 4 && buf.compare(0, 4, "FLOW") == 0, "load_flow: bad magic");
    size_t pos = 4;
    const int w = static_cast<int>(get_u32(buf, pos));
    const int h = static_cast<int>(get_u32(buf, pos));
    FlowField flow = FlowField::zero(w, h);
    for (size_t i = 0; i < flow.u.size(); ++i) flow.u.data()[i] = get_f32(buf, pos);
    for (size_t i = 0; i < flow.v.size(); ++i) flow.v.data()[i] = get_f32(buf, pos);
    require(pos == buf.size(), "load_flow: trailing bytes");
    return flow;
}

}  // namespace turbmit
