#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "turbmit/psf_prior.hpp"

using namespace turbmit;

TEST_SUITE_BEGIN("psf_prior");

namespace {

OpticsParams small_params() {
    OpticsParams p;
    p.phase_grid = 32;
    p.kernel_size = 17;
    p.n_zernike = 21;
    return p;
}

// hand-built orthonormal toy basis: p one-hot atoms on a k*k grid
PsfBasis toy_basis(int k, int p) {
    PsfBasis b;
    b.kernel_size = k;
    b.mean_kernel = Image(k, k, 1.0 / (k * k));
    for (int j = 0; j < p; ++j) {
        Image c(k, k, 0.0);
        c(j % k, j / k) = 1.0;
        b.components.push_back(c);
    }
    b.sigmas.assign(p, 1.0);
    return b;
}

}  // namespace

TEST_CASE("ensemble generation accepts exactly the small-coefficient draws") {
    OpticsParams p = small_params();
    EnsembleStats stats;
    const std::vector<Psf> ens = generate_ensemble(64, {1.0}, 0.15, p, 7, 2, &stats);
    CHECK(ens.size() == 64);
    CHECK(stats.accepted == 64);
    CHECK(stats.accept_rate > 0.0);
    CHECK(stats.accept_rate <= 1.0);
    CHECK(stats.mean_crop_energy > 0.9);
    for (const Psf& h : ens) CHECK(h.is_valid(1e-9));

    SUBCASE("huge kappa accepts everything") {
        EnsembleStats all;
        generate_ensemble(32, {2.0}, 1e9, p, 7, 2, &all);
        CHECK(all.accept_rate == 1.0);
    }
    SUBCASE("impossible kappa aborts") {
        CHECK_THROWS_AS(generate_ensemble(4, {3.0}, 1e-9, p, 7, 2, nullptr), std::runtime_error);
    }
    SUBCASE("deterministic across thread budgets") {
        const std::vector<Psf> a = generate_ensemble(16, {1.5}, 1.0, p, 3, 1, nullptr);
        const std::vector<Psf> b = generate_ensemble(16, {1.5}, 1.0, p, 3, 4, nullptr);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].kernel == b[i].kernel);
    }
}

TEST_CASE("pca basis") {
    SUBCASE("identical kernels collapse to zero components") {
        std::vector<Psf> ens(5, Psf::delta(9));
        const PsfBasis basis = learn_basis(ens, 3);
        CHECK(basis.p() == 0);
        CHECK(max_abs_diff(basis.mean_kernel, ens[0].kernel) < 1e-15);
    }

    SUBCASE("two-element ensemble: single component proportional to the difference") {
        Psf a = Psf::delta(5);
        Psf b;
        b.kernel = Image(5, 5, 1.0 / 25.0);
        const PsfBasis basis = learn_basis({a, b}, 2);
        REQUIRE(basis.p() == 1);
        // eigenvector of the 2-point cloud is (a - b) normalized
        Image diff = a.kernel;
        diff -= b.kernel;
        double norm = 0.0;
        for (size_t i = 0; i < diff.size(); ++i) norm += diff.data()[i] * diff.data()[i];
        norm = std::sqrt(norm);
        double dot = 0.0;
        for (size_t i = 0; i < diff.size(); ++i) dot += diff.data()[i] / norm * basis.components[0].data()[i];
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-10));
    }

    SUBCASE("orthonormality and tail-bounded reconstruction on a real ensemble") {
        OpticsParams p = small_params();
        const std::vector<Psf> ens = generate_ensemble(160, {2.0}, 1.0, p, 11, 2, nullptr);
        const int np = 12;
        const PsfBasis basis = learn_basis(ens, np);
        REQUIRE(basis.p() == np);

        const int d = basis.kernel_size * basis.kernel_size;
        for (int i = 0; i < np; ++i)
            for (int j = i; j < np; ++j) {
                double dot = 0.0;
                for (int k = 0; k < d; ++k) dot += basis.components[i].data()[k] * basis.components[j].data()[k];
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
            }

        // mean reconstruction error over training kernels <= eigenvalue tail
        const std::vector<double> cum = pca_explained_variance(ens);
        double total_var = 0.0;
        for (const Psf& h : ens) {
            for (int k = 0; k < d; ++k) {
                const double dv = h.kernel.data()[k] - basis.mean_kernel.data()[k];
                total_var += dv * dv;
            }
        }
        total_var /= ens.size();
        const double tail = total_var * (1.0 - cum[np - 1]);

        double mean_err = 0.0;
        for (const Psf& h : ens) {
            std::vector<double> centered(d);
            for (int k = 0; k < d; ++k) centered[k] = h.kernel.data()[k] - basis.mean_kernel.data()[k];
            std::vector<double> recon(d, 0.0);
            for (int j = 0; j < np; ++j) {
                double w = 0.0;
                for (int k = 0; k < d; ++k) w += basis.components[j].data()[k] * centered[k];
                for (int k = 0; k < d; ++k) recon[k] += w * basis.components[j].data()[k];
            }
            for (int k = 0; k < d; ++k) {
                const double dv = centered[k] - recon[k];
                mean_err += dv * dv;
            }
        }
        mean_err /= ens.size();
        CHECK(mean_err == doctest::Approx(tail).epsilon(1e-6));
    }

    SUBCASE("determinism: same ensemble, same basis (sign fixed)") {
        OpticsParams p = small_params();
        const std::vector<Psf> ens = generate_ensemble(60, {1.5}, 1.0, p, 13, 2, nullptr);
        const PsfBasis b1 = learn_basis(ens, 8);
        const PsfBasis b2 = learn_basis(ens, 8);
        for (int j = 0; j < 8; ++j) CHECK(b1.components[j] == b2.components[j]);
    }
}

TEST_CASE("omp sparse coding") {
    const int k = 5, p = 6;
    const PsfBasis basis = toy_basis(k, p);

    SUBCASE("exact one-atom case") {
        Psf h;
        h.kernel = basis.mean_kernel;
        for (size_t i = 0; i < h.kernel.size(); ++i) h.kernel.data()[i] += 3.0 * basis.components[1].data()[i];
        const SparseCode code = omp_sparse_code(h, basis, 1e-12);
        CHECK(code.support == std::vector<int>{1});
        CHECK(code.w[1] == doctest::Approx(3.0).epsilon(1e-8));
        CHECK(code.residual < 1e-10);
        CHECK(code.reached_tau);
    }

    SUBCASE("recovery inside a two-atom span matches exhaustive l0 search") {
        Psf h;
        h.kernel = basis.mean_kernel;
        for (size_t i = 0; i < h.kernel.size(); ++i)
            h.kernel.data()[i] += 0.8 * basis.components[0].data()[i] - 0.5 * basis.components[3].data()[i];
        const double tau = 1e-12;
        const SparseCode code = omp_sparse_code(h, basis, tau);
        CHECK(code.residual < 1e-10);

        // exhaustive search over supports of size <= 2 (orthonormal atoms:
        // optimal coefficients are plain inner products)
        const int d = k * k;
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) x[i] = h.kernel.data()[i] - basis.mean_kernel.data()[i];
        auto residual_for = [&](const std::vector<int>& support) {
            double r2 = 0.0;
            for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
            for (int j : support) {
                double w = 0.0;
                for (int i = 0; i < d; ++i) w += basis.components[j].data()[i] * x[i];
                r2 -= w * w;
            }
            return r2;
        };
        int best_size = 3;
        std::vector<int> best_support;
        for (int a = 0; a < p && best_size > 2; ++a)
            if (residual_for({a}) <= tau) {
                best_size = 1;
                best_support = {a};
            }
        if (best_size > 2) {
            for (int a = 0; a < p; ++a)
                for (int b = a + 1; b < p; ++b)
                    if (residual_for({a, b}) <= tau && best_size > 2) {
                        best_size = 2;
                        best_support = {a, b};
                    }
        }
        REQUIRE(best_size == 2);
        CHECK(best_support == std::vector<int>{0, 3});
        std::vector<int> got = code.support;
        std::sort(got.begin(), got.end());
        CHECK(got == best_support);  // greedy is exact on orthonormal dictionaries
    }

    SUBCASE("threshold already met gives the empty support") {
        Psf h;
        h.kernel = basis.mean_kernel;
        const SparseCode code = omp_sparse_code(h, basis, 1e-6);
        CHECK(code.support.empty());
        CHECK(code.reached_tau);
        for (double w : code.w) CHECK(w == 0.0);
    }

    SUBCASE("residual never increases along the greedy path") {
        Psf h;
        h.kernel = basis.mean_kernel;
        Rng rng(44);
        for (size_t i = 0; i < h.kernel.size(); ++i) h.kernel.data()[i] += 0.05 * rng.normal();
        double prev = 1e300;
        for (int atoms = 1; atoms <= p; ++atoms) {
            // force exactly `atoms` selections by an unreachable tau
            PsfBasis sub = basis;
            sub.components.resize(atoms);
            sub.sigmas.assign(atoms, 1.0);
            const SparseCode code = omp_sparse_code(h, sub, 1e-30);
            CHECK(code.residual <= prev + 1e-12);
            prev = code.residual;
        }
    }
}

TEST_CASE("sigma estimation") {
    SUBCASE("identical codes floor at 1e-6") {
        SparseCode c;
        c.w = {0.5, -0.25, 0.0};
        const std::vector<double> s = estimate_sigmas({c, c, c});
        CHECK(s == std::vector<double>{1e-6, 1e-6, 1e-6});
    }
    SUBCASE("two-point distribution w1 in {-1, +1} gives sigma = 1") {
        SparseCode a, b;
        a.w = {-1.0, 0.0};
        b.w = {1.0, 0.0};
        const std::vector<double> s = estimate_sigmas({a, b});
        CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s[1] == doctest::Approx(1e-6));
    }
    SUBCASE("recovers a Laplacian scale within 2% over 1e5 codes") {
        Rng rng(77);
        const double b = 0.4;  // Laplace(b): std = sqrt(2) b
        std::vector<SparseCode> codes(100000);
        for (auto& c : codes) {
            const double u = rng.uniform() - 0.5;
            c.w = {-b * std::copysign(std::log(1.0 - 2.0 * std::abs(u)), u)};
        }
        const std::vector<double> s = estimate_sigmas(codes);
        CHECK(s[0] == doctest::Approx(std::sqrt(2.0) * b).epsilon(0.02));
    }
}

TEST_CASE("psfb container round trip is bit exact") {
    OpticsParams p = small_params();
    EnsembleStats stats;
    PsfBasis basis = train_prior({1.5}, p, 21, TrainOptions{.ensemble_m = 80, .p = 10}, 2, &stats);
    REQUIRE(basis.p() == 10);
    CHECK(basis.sigmas.size() == 10);

    const auto dir = std::filesystem::temp_directory_path() / "turbmit_psfb_test";
    std::filesystem::create_directories(dir);
    const std::string p1 = (dir / "a.psfb").string();
    const std::string p2 = (dir / "b.psfb").string();
    save_psfb(basis, p1);
    const PsfBasis loaded = load_psfb(p1);
    save_psfb(loaded, p2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(!s1.empty());
    CHECK(s1 == s2);
    CHECK(s1.compare(0, 4, "PSFB") == 0);

    CHECK(loaded.kernel_size == basis.kernel_size);
    CHECK(loaded.mean_kernel == basis.mean_kernel);
    CHECK(loaded.sigmas == basis.sigmas);
    CHECK(loaded.kappa == basis.kappa);
    CHECK(loaded.dr0_min == 1.5);

    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
