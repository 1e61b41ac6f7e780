#include <doctest.h>

#include <cmath>

#include "turbmit/metrics.hpp"
#include "turbmit/reference.hpp"
#include "turbmit/rng.hpp"
#include "turbmit/simulate.hpp"
#include "turbmit/synth.hpp"

using namespace turbmit;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr") {
    Image a(10, 10, 0.5);
    Image b = a;
    // perturb to an exact MSE of 0.01
    for (size_t i = 0; i < b.size(); ++i) b.data()[i] += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, b) == psnr(b, a));

    Rng rng(2);
    Image c(8, 8), d(8, 8);
    for (size_t i = 0; i < c.size(); ++i) {
        c.data()[i] = rng.uniform();
        d.data()[i] = rng.uniform();
    }
    double mse = 0.0;
    for (size_t i = 0; i < c.size(); ++i) mse += (c.data()[i] - d.data()[i]) * (c.data()[i] - d.data()[i]);
    mse /= c.size();
    CHECK(psnr(c, d) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
}

TEST_CASE("normalized gradient") {
    SUBCASE("identical frames all map to 1") {
        const Image f = synth::scene(32, 1);
        const std::vector<double> ng = normalized_gradient({f, f, f});
        for (double v : ng) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("ratios follow the gradient totals") {
        Image a(8, 8, 0.0), b(8, 8, 0.0);
        for (int y = 0; y < 8; ++y) {
            a(4, y) = 0.5;  // one edge
            b(2, y) = 0.5;  // two edges
            b(5, y) = 0.5;
        }
        const std::vector<double> ng = normalized_gradient({a, b});
        CHECK(ng[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(ng[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all-constant sequence returns the zero sentinel") {
        const std::vector<double> ng = normalized_gradient({Image(8, 8, 0.3), Image(8, 8, 0.3)});
        CHECK(ng == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("invariant to a global intensity offset") {
        const Image f = synth::scene(32, 3);
        Image g = f;
        for (size_t i = 0; i < g.size(); ++i) g.data()[i] += 0.05;
        const std::vector<double> ng = normalized_gradient({f, g});
        CHECK(ng[0] == doctest::Approx(ng[1]).epsilon(1e-12));
    }
}

TEST_CASE("anisoplanatic sharpness fluctuates less than isoplanatic at equal blur") {
    OpticsParams p;
    p.image_size = 64;
    p.block_size = 16;
    p.kernel_size = 21;
    p.set_dr0(3.0);
    const Image clean = synth::scene(64, 3);
    const int T = 40;

    SimulateOptions aniso;
    const std::vector<Image> seq_a = simulate_sequence(std::vector<Image>(T, clean), p, 5, 2, aniso);
    SimulateOptions iso;
    iso.isoplanatic = true;
    const std::vector<Image> seq_i = simulate_sequence(std::vector<Image>(T, clean), p, 5, 2, iso);

    auto stddev = [](const std::vector<double>& v) {
        double m = 0.0, m2 = 0.0;
        for (double x : v) {
            m += x;
            m2 += x * x;
        }
        m /= v.size();
        return std::sqrt(std::max(m2 / v.size() - m * m, 0.0));
    };
    const double sd_a = stddev(normalized_gradient(seq_a));
    const double sd_i = stddev(normalized_gradient(seq_i));
    CHECK(sd_a < sd_i);
}

TEST_CASE("bar pattern dynamic range") {
    SUBCASE("clean probe spans the full range") {
        const Image probe = synth::two_bar_probe(48, 10, 2);
        // bar centers: thickness 2 starting at rows 17 and 24+? locate by scan
        std::vector<int> rows;
        for (int y = 0; y < 48; ++y)
            if (probe(24, y) > 0.5 && (y == 0 || probe(24, y - 1) < 0.5)) rows.push_back(y);
        REQUIRE(rows.size() == 2);
        // bars span the middle 3/4 of the columns, so the column-average gap
        // is exactly 0.75 for the full-width probe
        CHECK(bar_pattern_dynamic_range(probe, rows, 10) == doctest::Approx(0.75).epsilon(1e-12));
        // columns through the bars (inner 3/4 of the width) reach gap 1
        Image cropped(24, 48);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 24; ++x) cropped(x, y) = probe(x + 12, y);
        CHECK(bar_pattern_dynamic_range(cropped, rows, 10) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("fully blurred-to-uniform frame scores zero") {
        CHECK(bar_pattern_dynamic_range(Image(32, 32, 0.4), {10, 20}, 10) == 0.0);
    }
    SUBCASE("reference dynamic range degrades monotonically as bars close in") {
        OpticsParams p;
        p.image_size = 64;
        p.block_size = 16;
        p.set_dr0(2.0);
        SimulateOptions opts;
        opts.tilt_only = true;
        PatchWindowConfig cfg;
        cfg.patch_size = 7;
        cfg.spatial_search = 7;
        cfg.temporal_window = 6;
        cfg.stride = 3;
        cfg.beta = 1.0;

        double prev = 1e300;
        for (int gap : {10, 6, 4, 3}) {
            const Image probe = synth::two_bar_probe(64, gap, 2);
            std::vector<int> rows;
            for (int y = 0; y < 64; ++y)
                if (probe(32, y) > 0.5 && (y == 0 || probe(32, y - 1) < 0.5)) rows.push_back(y);
            REQUIRE(rows.size() == 2);
            double dr = 0.0;
            const int seeds = 8;
            for (int s = 0; s < seeds; ++s) {
                const std::vector<Image> seq =
                    simulate_sequence(std::vector<Image>(13, probe), p, 99 + s, 2, opts);
                const Image ref = compute_reference(seq, 6, cfg);
                dr += bar_pattern_dynamic_range(ref, {rows[0] + 1, rows[1] + 1}, gap);
            }
            dr /= seeds;
            CHECK(dr <= prev + 1e-9);
            CHECK(dr >= 0.0);
            CHECK(dr <= 1.0);
            prev = dr;
        }
    }
}

TEST_SUITE_END();
