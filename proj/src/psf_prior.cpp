#include "turbmit/psf_prior.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include "turbmit/parallel.hpp"

namespace turbmit {

void PsfBasis::validate() const {
    require(kernel_size >= 3 && kernel_size % 2 == 1, "PsfBasis: bad kernel size");
    require(mean_kernel.width() == kernel_size && mean_kernel.height() == kernel_size, "PsfBasis: mean kernel size");
    for (const Image& c : components)
        require(c.width() == kernel_size && c.height() == kernel_size, "PsfBasis: component size");
    require(sigmas.empty() || sigmas.size() == components.size(), "PsfBasis: sigma count");
    for (double s : sigmas) require(s > 0.0 && std::isfinite(s), "PsfBasis: sigmas must be positive finite");
}

std::vector<Psf> generate_ensemble(int m, const std::vector<double>& dr0_set, double kappa,
                                   const OpticsParams& params, uint64_t seed, int threads,
                                   EnsembleStats* stats) {
    require(m >= 1, "generate_ensemble: m must be >= 1");
    require(kappa > 0.0, "generate_ensemble: kappa must be positive");
    require(!dr0_set.empty(), "generate_ensemble: empty dr0 set");
    for (double d : dr0_set) require(d > 0.0, "generate_ensemble: dr0 must be positive");

    const OpticsModel model(params);
    const int n = params.n_zernike;
    std::vector<ZernikeSampler> samplers;
    samplers.reserve(dr0_set.size());
    for (double d : dr0_set) samplers.emplace_back(n, d);

    std::vector<Psf> out;
    out.reserve(m);
    std::vector<double> crop_energies;
    long proposed = 0;

    const int batch = std::max(64, m);
    while (static_cast<int>(out.size()) < m) {
        const long base = proposed;
        std::vector<ZernikeCoeffs> accepted_coeffs;
        for (int i = 0; i < batch && static_cast<int>(out.size()) + static_cast<int>(accepted_coeffs.size()) < m; ++i) {
            const long idx = base + i;
            const size_t level = static_cast<size_t>(idx % static_cast<long>(dr0_set.size()));
            Rng rng(substream_seed(seed, static_cast<uint64_t>(idx)));
            ZernikeCoeffs c = remove_tilt(samplers[level].sample(rng));
            ++proposed;
            double q = 0.0;
            for (int j = 4; j <= n; ++j) q += c[j] * c[j];
            const double threshold = kappa * std::pow(dr0_set[level], 5.0 / 3.0);
            if (q <= threshold) accepted_coeffs.push_back(std::move(c));
        }
        const size_t first = out.size();
        out.resize(first + accepted_coeffs.size());
        crop_energies.resize(out.size());
        parallel_for(static_cast<int>(accepted_coeffs.size()),
                     [&](int i) {
                         double energy = 0.0;
                         out[first + i] = model.psf_from_phase_fixed(model.phase_from_coeffs(accepted_coeffs[i]),
                                                                     params.kernel_size, &energy);
                         crop_energies[first + i] = energy;
                     },
                     threads);
        if (proposed >= 2000 && static_cast<double>(out.size()) / proposed < 1e-3)
            throw std::runtime_error("generate_ensemble: accept rate below 0.1% (kappa too small)");
    }

    if (stats) {
        stats->proposed = proposed;
        stats->accepted = static_cast<long>(out.size());
        stats->accept_rate = static_cast<double>(out.size()) / proposed;
        double s = 0.0;
        for (double e : crop_energies) s += e;
        stats->mean_crop_energy = crop_energies.empty() ? 0.0 : s / crop_energies.size();
    }
    return out;
}

namespace {

Eigen::MatrixXd flatten_ensemble(const std::vector<Psf>& ensemble) {
    const int d = ensemble[0].kernel.width() * ensemble[0].kernel.height();
    Eigen::MatrixXd X(d, static_cast<int>(ensemble.size()));
    for (size_t i = 0; i < ensemble.size(); ++i) {
        require(ensemble[i].kernel.same_size(ensemble[0].kernel), "learn_basis: mixed kernel sizes");
        X.col(static_cast<int>(i)) = Eigen::Map<const Eigen::VectorXd>(ensemble[i].kernel.data(), d);
    }
    return X;
}

void fix_sign(Eigen::VectorXd& v) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            arg = i;
        }
    }
    if (v[arg] < 0.0) v = -v;
}

}  // namespace

PsfBasis learn_basis(const std::vector<Psf>& ensemble, int p) {
    require(!ensemble.empty(), "learn_basis: empty ensemble");
    require(p >= 0 && p <= static_cast<int>(ensemble.size()), "learn_basis: need ensemble size >= p");
    const int k = ensemble[0].kernel.width();
    const int d = k * k;
    const int m = static_cast<int>(ensemble.size());
    require(p <= d, "learn_basis: p exceeds kernel dimension");

    Eigen::MatrixXd X = flatten_ensemble(ensemble);
    Eigen::VectorXd mean = X.rowwise().mean();
    X.colwise() -= mean;

    PsfBasis basis;
    basis.kernel_size = k;
    basis.mean_kernel = Image(k, k);
    Eigen::Map<Eigen::VectorXd>(basis.mean_kernel.data(), d) = mean;
    basis.ensemble_size = static_cast<uint32_t>(m);

    // Eigendecomposition on the smaller side: Gram matrix when m <= d.
    std::vector<std::pair<double, Eigen::VectorXd>> pairs;
    if (m <= d) {
        Eigen::MatrixXd G = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        for (int i = m - 1; i >= 0; --i) {
            const double lambda = es.eigenvalues()[i];
            if (lambda <= 0.0) continue;
            Eigen::VectorXd u = X * es.eigenvectors().col(i);
            const double norm = u.norm();
            if (norm <= 0.0) continue;
            pairs.emplace_back(lambda, u / norm);
        }
    } else {
        Eigen::MatrixXd C = X * X.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        for (int i = d - 1; i >= 0; --i) pairs.emplace_back(es.eigenvalues()[i], es.eigenvectors().col(i));
    }

    const double lam_max = pairs.empty() ? 0.0 : pairs.front().first;
    int kept = 0;
    for (auto& [lambda, vec] : pairs) {
        if (kept >= p) break;
        if (lambda <= std::max(1e-12 * lam_max, 1e-14)) break;  // degenerate tail
        fix_sign(vec);
        Image comp(k, k);
        Eigen::Map<Eigen::VectorXd>(comp.data(), d) = vec;
        basis.components.push_back(std::move(comp));
        ++kept;
    }
    if (kept < p)
        std::cerr << "learn_basis: ensemble rank " << kept << " < requested p " << p << "; basis reduced\n";
    return basis;
}

std::vector<double> pca_explained_variance(const std::vector<Psf>& ensemble) {
    Eigen::MatrixXd X = flatten_ensemble(ensemble);
    X.colwise() -= X.rowwise().mean().eval();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
    Eigen::VectorXd sv = svd.singularValues();
    double total = 0.0;
    for (int i = 0; i < sv.size(); ++i) total += sv[i] * sv[i];
    std::vector<double> cum(sv.size());
    double acc = 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        acc += sv[i] * sv[i];
        cum[i] = total > 0.0 ? acc / total : 1.0;
    }
    return cum;
}

SparseCode omp_sparse_code(const Psf& h, const PsfBasis& basis, double tau) {
    require(tau > 0.0, "omp_sparse_code: tau must be positive");
    require(h.kernel.width() == basis.kernel_size && h.kernel.height() == basis.kernel_size,
            "omp_sparse_code: kernel dims do not match basis");
    const int d = basis.kernel_size * basis.kernel_size;
    const int p = basis.p();

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(h.kernel.data(), d) -
                        Eigen::Map<const Eigen::VectorXd>(basis.mean_kernel.data(), d);
    Eigen::MatrixXd U(d, p);
    for (int j = 0; j < p; ++j) U.col(j) = Eigen::Map<const Eigen::VectorXd>(basis.components[j].data(), d);

    SparseCode code;
    code.w.assign(p, 0.0);
    Eigen::VectorXd r = x;
    code.residual = r.squaredNorm();
    if (code.residual <= tau) {
        code.reached_tau = true;
        return code;
    }

    std::vector<bool> used(p, false);
    Eigen::MatrixXd Us(d, 0);
    while (static_cast<int>(code.support.size()) < p) {
        int best = -1;
        double best_corr = 0.0;
        for (int j = 0; j < p; ++j) {
            if (used[j]) continue;
            const double c = std::abs(U.col(j).dot(r));
            if (c > best_corr) {
                best_corr = c;
                best = j;
            }
        }
        if (best < 0) break;
        used[best] = true;
        code.support.push_back(best);
        Us.conservativeResize(Eigen::NoChange, Us.cols() + 1);
        Us.col(Us.cols() - 1) = U.col(best);
        Eigen::VectorXd ws = Us.colPivHouseholderQr().solve(x);
        r = x - Us * ws;
        code.residual = r.squaredNorm();
        for (size_t i = 0; i < code.support.size(); ++i) code.w[code.support[i]] = ws[static_cast<int>(i)];
        if (code.residual <= tau) {
            code.reached_tau = true;
            break;
        }
    }
    return code;
}

std::vector<double> estimate_sigmas(const std::vector<SparseCode>& codes) {
    require(codes.size() >= 2, "estimate_sigmas: need at least two codes");
    const size_t p = codes[0].w.size();
    for (const auto& c : codes) require(c.w.size() == p, "estimate_sigmas: inconsistent code lengths");
    std::vector<double> sigmas(p, 0.0);
    for (size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (const auto& c : codes) mean += c.w[j];
        mean /= codes.size();
        double var = 0.0;
        for (const auto& c : codes) {
            const double dv = c.w[j] - mean;
            var += dv * dv;
        }
        var /= codes.size();  // population variance: zeros are part of the prior
        sigmas[j] = std::max(std::sqrt(var), 1e-6);
    }
    return sigmas;
}

PsfBasis train_prior(const std::vector<double>& dr0_set, const OpticsParams& params, uint64_t seed,
                     const TrainOptions& opts, int threads, EnsembleStats* stats) {
    std::vector<Psf> ensemble = generate_ensemble(opts.ensemble_m, dr0_set, opts.kappa, params, seed, threads, stats);
    PsfBasis basis = learn_basis(ensemble, opts.p);
    std::vector<SparseCode> codes(ensemble.size());
    parallel_for(static_cast<int>(ensemble.size()),
                 [&](int i) {
                     const double energy =
                         Eigen::Map<const Eigen::VectorXd>(ensemble[i].kernel.data(),
                                                           basis.kernel_size * basis.kernel_size)
                             .squaredNorm();
                     codes[i] = omp_sparse_code(ensemble[i], basis, opts.tau_rel * energy);
                 },
                 threads);
    basis.sigmas = estimate_sigmas(codes);
    basis.kappa = opts.kappa;
    basis.tau = opts.tau_rel;
    basis.dr0_min = *std::min_element(dr0_set.begin(), dr0_set.end());
    basis.dr0_max = *std::max_element(dr0_set.begin(), dr0_set.end());
    basis.validate();
    return basis;
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& buf, size_t& pos) {
    require(pos + 4 <= buf.size(), "PSFB: truncated file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

double get_f64(const std::string& buf, size_t& pos) {
    require(pos + 8 <= buf.size(), "PSFB: truncated file");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_psfb(const PsfBasis& basis, const std::string& path) {
    basis.validate();
    require(basis.sigmas.size() == basis.components.size(), "save_psfb: sigmas not estimated");
    std::string buf;
    buf += "PSFB";
    put_u32(buf, 1);  // version
    put_u32(buf, static_cast<uint32_t>(basis.kernel_size));
    put_u32(buf, static_cast<uint32_t>(basis.p()));
    put_u32(buf, basis.ensemble_size);
    put_f64(buf, basis.kappa);
    put_f64(buf, basis.tau);
    put_f64(buf, basis.dr0_min);
    put_f64(buf, basis.dr0_max);
    const int d = basis.kernel_size * basis.kernel_size;
    for (int i = 0; i < d; ++i) put_f64(buf, basis.mean_kernel.data()[i]);
    for (const Image& c : basis.components)
        for (int i = 0; i < d; ++i) put_f64(buf, c.data()[i]);
    for (double s : basis.sigmas) put_f64(buf, s);

    std::ofstream out(path, std::ios::binary);
    require(out.good(), "save_psfb: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(out.good(), "save_psfb: write failed for " + path);
}

PsfBasis load_psfb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_psfb: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(buf.size() >= 4 && buf.compare(0, 4, "PSFB") == 0, "load_psfb: bad magic in " + path);
    size_t pos = 4;
    const uint32_t version = get_u32(buf, pos);
    require(version == 1, "load_psfb: unsupported version");
    PsfBasis basis;
    basis.kernel_size = static_cast<int>(get_u32(buf, pos));
    const uint32_t p = get_u32(buf, pos);
    basis.ensemble_size = get_u32(buf, pos);
    basis.kappa = get_f64(buf, pos);
    basis.tau = get_f64(buf, pos);
    basis.dr0_min = get_f64(buf, pos);
    basis.dr0_max = get_f64(buf, pos);
    const int d = basis.kernel_size * basis.kernel_size;
    basis.mean_kernel = Image(basis.kernel_size, basis.kernel_size);
    for (int i = 0; i < d; ++i) basis.mean_kernel.data()[i] = get_f64(buf, pos);
    basis.components.resize(p);
    for (uint32_t j = 0; j < p; ++j) {
        basis.components[j] = Image(basis.kernel_size, basis.kernel_size);
        for (int i = 0; i < d; ++i) basis.components[j].data()[i] = get_f64(buf, pos);
    }
    basis.sigmas.resize(p);
    for (uint32_t j = 0; j < p; ++j) basis.sigmas[j] = get_f64(buf, pos);
    require(pos == buf.size(), "load_psfb: trailing bytes in " + path);
    basis.validate();
    return basis;
}

}  // namespace turbmit
