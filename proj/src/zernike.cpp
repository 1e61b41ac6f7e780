#include "turbmit/zernike.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

namespace turbmit {

NollNM noll_to_nm(int j) {
    require(j >= 1, "noll_to_nm: index must be >= 1");
    int n = 0;
    int len = 1;
    for (int i = 1; len < j; ++i) len += (n = i) + 1;
    const int dl = n + 1 - len + j;
    const int m = 2 * ((dl + (n % 2)) / 2) + !(n % 2) - 1;
    return {n, m};
}

namespace {

double radial_poly(int n, int m, double rho) {
    double r = 0.0;
    for (int s = 0; s <= (n - m) / 2; ++s) {
        double c = (s % 2 == 0) ? 1.0 : -1.0;
        c *= std::tgamma(n - s + 1.0);
        c /= std::tgamma(s + 1.0) * std::tgamma((n + m) / 2 - s + 1.0) * std::tgamma((n - m) / 2 - s + 1.0);
        r += c * std::pow(rho, n - 2 * s);
    }
    return r;
}

}  // namespace

double zernike_value(int j, double rho, double theta) {
    const auto [n, m] = noll_to_nm(j);
    const double rp = radial_poly(n, m, rho);
    if (m == 0) return std::sqrt(n + 1.0) * rp;
    const double norm = std::sqrt(2.0 * (n + 1.0));
    return (j % 2 == 0) ? norm * rp * std::cos(m * theta) : norm * rp * std::sin(m * theta);
}

ZernikeBasis::ZernikeBasis(int grid, int n_modes) : grid_(grid), n_modes_(n_modes) {
    require(grid >= 4, "ZernikeBasis: grid too small");
    require(n_modes >= 1, "ZernikeBasis: need at least one mode");
    mask_ = Image(grid, grid, 0.0);
    const double c = (grid - 1) / 2.0;
    const double R = grid / 2.0;
    mask_pixels_ = 0;
    for (int y = 0; y < grid; ++y) {
        for (int x = 0; x < grid; ++x) {
            const double rho = std::hypot(x - c, y - c) / R;
            if (rho <= 1.0) {
                mask_(x, y) = 1.0;
                ++mask_pixels_;
            }
        }
    }
    modes_.reserve(n_modes);
    for (int j = 1; j <= n_modes; ++j) {
        Image zj(grid, grid, 0.0);
        for (int y = 0; y < grid; ++y) {
            for (int x = 0; x < grid; ++x) {
                if (mask_(x, y) == 0.0) continue;
                const double dx = x - c, dy = y - c;
                const double rho = std::hypot(dx, dy) / R;
                const double theta = std::atan2(dy, dx);
                zj(x, y) = zernike_value(j, rho, theta);
            }
        }
        modes_.push_back(std::move(zj));
    }
}

Image ZernikeBasis::synthesize(const ZernikeCoeffs& coeffs) const {
    require(coeffs.modes() <= n_modes_, "synthesize: more coefficients than basis modes");
    Image phi(grid_, grid_, 0.0);
    for (int j = 1; j <= coeffs.modes(); ++j) {
        const double aj = coeffs[j];
        if (aj == 0.0) continue;
        const Image& zj = mode(j);
        for (size_t i = 0; i < phi.size(); ++i) phi.data()[i] += aj * zj.data()[i];
    }
    return phi;
}

namespace {

// Noll (1976) covariance of Kolmogorov Zernike coefficients, in units of
// (D/r0)^(5/3). Nonzero only for equal azimuthal order and matching
// cos/sin parity.
double noll_cov_entry(int i, int j) {
    if (i < 2 || j < 2) return 0.0;
    const auto [n, m] = noll_to_nm(i);
    const auto [p, o] = noll_to_nm(j);
    if (m != o) return 0.0;
    if (m != 0 && ((i + j) % 2)) return 0.0;
    double k = std::pow(4.8 * std::exp(std::lgamma(6.0 / 5.0)), 5.0 / 6.0) *
               std::exp(std::lgamma(14.0 / 3.0) + 2.0 * std::lgamma(11.0 / 6.0)) /
               (std::pow(2.0, 8.0 / 3.0) * M_PI);
    k *= ((n + p - 2 * m) / 2 % 2 == 0 ? 1.0 : -1.0) * std::sqrt(static_cast<double>((n + 1) * (p + 1)));
    const double g1 = std::lgamma((n + p - 5.0 / 3.0) / 2.0);
    const double g2 = std::lgamma((n - p + 17.0 / 3.0) / 2.0);
    const double g3 = std::lgamma((p - n + 17.0 / 3.0) / 2.0);
    const double g4 = std::lgamma((n + p + 23.0 / 3.0) / 2.0);
    return k * std::exp(g1 - g2 - g3 - g4);
}

}  // namespace

std::vector<double> noll_covariance(int n_modes) {
    require(n_modes >= 1, "noll_covariance: bad size");
    std::vector<double> cov(static_cast<size_t>(n_modes) * n_modes, 0.0);
    for (int i = 1; i <= n_modes; ++i)
        for (int j = 1; j <= n_modes; ++j)
            cov[static_cast<size_t>(i - 1) * n_modes + (j - 1)] = noll_cov_entry(i, j);
    return cov;
}

ZernikeSampler::ZernikeSampler(int n_modes, double dr0) : n_modes_(n_modes), dr0_(dr0) {
    require(n_modes >= 4, "ZernikeSampler: need n >= 4");
    require(dr0 >= 0.0, "ZernikeSampler: D/r0 must be >= 0");
    const int m = n_modes - 1;  // modes 2..N
    Eigen::MatrixXd C(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) C(i, j) = noll_cov_entry(i + 2, j + 2);
    // tiny jitter keeps the factorization stable for large mode counts
    C.diagonal().array() += 1e-12;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    require(llt.info() == Eigen::Success, "ZernikeSampler: covariance not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    L *= std::pow(dr0, 5.0 / 6.0);
    chol_.assign(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) chol_[static_cast<size_t>(i) * m + j] = L(i, j);
}

ZernikeCoeffs ZernikeSampler::sample(Rng& rng) const {
    std::vector<double> g(n_modes_ - 1);
    for (double& v : g) v = rng.normal();
    return from_standard_normal(g);
}

ZernikeCoeffs ZernikeSampler::from_standard_normal(const std::vector<double>& g) const {
    const int m = n_modes_ - 1;
    require(static_cast<int>(g.size()) == m, "from_standard_normal: wrong length");
    ZernikeCoeffs c;
    c.a.assign(n_modes_, 0.0);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        const double* row = &chol_[static_cast<size_t>(i) * m];
        for (int j = 0; j <= i; ++j) s += row[j] * g[j];
        c.a[i + 1] = s;
    }
    return c;
}

double ZernikeSampler::variance(int noll_j) const {
    require(noll_j >= 1 && noll_j <= n_modes_, "variance: index out of range");
    if (noll_j == 1) return 0.0;
    const int m = n_modes_ - 1;
    const int i = noll_j - 2;
    double s = 0.0;
    const double* row = &chol_[static_cast<size_t>(i) * m];
    for (int j = 0; j <= i; ++j) s += row[j] * row[j];
    return s;
}

ZernikeCoeffs remove_tilt(ZernikeCoeffs coeffs) {
    require(coeffs.modes() >= 3, "remove_tilt: need at least 3 modes");
    coeffs.a[1] = 0.0;
    coeffs.a[2] = 0.0;
    return coeffs;
}

}  // namespace turbmit
