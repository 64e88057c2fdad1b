#include "lfboot/fgn.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "lfboot/error.hpp"
#include "lfboot/random.hpp"

namespace lfboot {
namespace {

// Coefficients of sum_{a,b} w_a w_b B_{h - a v1 + b v2} grouped by offset.
struct Stencil {
    std::array<int, 9> offset{};
    std::array<double, 9> weight{};
    int count = 0;
    int reach = 0;
};

Stencil make_stencil(int v1, int v2) {
    constexpr std::array<double, 3> w{1.0, -2.0, 1.0};
    Stencil s;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const int off = -a * v1 + b * v2;
            const double c = w[a] * w[b];
            int slot = 0;
            while (slot < s.count && s.offset[slot] != off) ++slot;
            if (slot == s.count) {
                s.offset[slot] = off;
                s.weight[slot] = 0.0;
                ++s.count;
            }
            s.weight[slot] += c;
            s.reach = std::max(s.reach, std::abs(off));
        }
    }
    return s;
}

// sum_k W_k |h + off_k|^{2H}. The weights annihilate polynomials of degree < 4,
// so for large |h| the sum is expanded in powers of off/|h| to avoid cancellation.
double stencil_sum(const Stencil& s, double two_h, long h) {
    const double ah = std::abs(static_cast<double>(h));
    if (ah <= 8.0 * s.reach) {
        double acc = 0.0;
        for (int k = 0; k < s.count; ++k) {
            const double d = std::abs(static_cast<double>(h + s.offset[k]));
            if (d > 0.0) acc += s.weight[k] * std::pow(d, two_h);
        }
        return acc;
    }
    const double sign = h > 0 ? 1.0 : -1.0;
    std::array<double, 9> ratio{};
    std::array<double, 9> power{};
    for (int k = 0; k < s.count; ++k) {
        ratio[k] = sign * s.offset[k] / ah;
        power[k] = 1.0;
    }
    double binom = 1.0;
    double acc = 0.0;
    for (int m = 0; m <= 40; ++m) {
        if (m > 0) {
            binom *= (two_h - (m - 1)) / m;
            for (int k = 0; k < s.count; ++k) power[k] *= ratio[k];
        }
        double moment = 0.0;
        for (int k = 0; k < s.count; ++k) moment += s.weight[k] * power[k];
        acc += binom * moment;
    }
    return acc * std::pow(ah, two_h);
}

void check_lag(int v) {
    if (v < 1) throw UsageError("second-difference lag must be >= 1, got " + std::to_string(v));
}

}  // namespace

HurstIndex::HurstIndex(double h) : h_(h) {
    if (!(h > 0.0 && h < 1.0)) {
        throw UsageError("Hurst index must lie in (0, 1), got " + std::to_string(h));
    }
}

HurstIndex HurstIndex::from_alpha(double alpha) {
    if (!(alpha > -0.5 && alpha < 0.5)) {
        throw UsageError("roughness index alpha must lie in (-0.5, 0.5), got " +
                         std::to_string(alpha));
    }
    return HurstIndex(alpha + 0.5);
}

double fgn_autocovariance(HurstIndex hurst, double delta, long k) {
    if (!(delta > 0.0)) throw UsageError("grid spacing must be positive");
    const double two_h = 2.0 * hurst.value();
    const auto ak = static_cast<double>(k < 0 ? -k : k);
    const double core = std::pow(ak + 1.0, two_h) - 2.0 * std::pow(ak, two_h) +
                        std::pow(std::abs(ak - 1.0), two_h);
    return 0.5 * std::pow(delta, two_h) * core;
}

double second_diff_covariance(HurstIndex hurst, double delta, int v1, int v2, long h) {
    check_lag(v1);
    check_lag(v2);
    if (!(delta > 0.0)) throw UsageError("grid spacing must be positive");
    const double two_h = 2.0 * hurst.value();
    const Stencil s = make_stencil(v1, v2);
    if (v1 == v2) h = std::abs(h);  // exact symmetry in floating point
    return -0.5 * std::pow(delta, two_h) * stencil_sum(s, two_h, h);
}

double second_diff_variance(HurstIndex hurst, double delta, int v) {
    check_lag(v);
    const double two_h = 2.0 * hurst.value();
    return std::pow(delta, two_h) * (4.0 * std::pow(v, two_h) - std::pow(2.0 * v, two_h));
}

double rho_second_diff(HurstIndex hurst, int v1, int v2, long h) {
    const bool supported = (v1 == 1 && v2 == 1) || (v1 == 2 && v2 == 2) || (v1 == 1 && v2 == 2);
    if (!supported) {
        throw UsageError("second-difference correlation defined only for lag pairs (1,1), (2,2), "
                         "(1,2); got (" +
                         std::to_string(v1) + "," + std::to_string(v2) + ")");
    }
    if (v1 == v2 && h == 0) return 1.0;
    const double cov = second_diff_covariance(hurst, 1.0, v1, v2, h);
    return cov / std::sqrt(second_diff_variance(hurst, 1.0, v1) *
                           second_diff_variance(hurst, 1.0, v2));
}

double gaussian_abs_moment(double p) {
    if (!(p > 0.0)) throw UsageError("moment order must be positive");
    return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(std::numbers::pi);
}

SecondDiffMoments exact_pv_moments(HurstIndex hurst, std::size_t n, double delta) {
    if (n < 5) {
        throw UsageError("exact power-variation moments need n >= 5 (lag-2 second differences), got " +
                         std::to_string(n));
    }
    if (!(delta > 0.0)) throw UsageError("grid spacing must be positive");

    // Everything is computed on the unit grid and rescaled: covariances carry delta^{2H}.
    const double two_h = 2.0 * hurst.value();
    const double scale = std::pow(delta, two_h);
    const long nn = static_cast<long>(n);
    const long n1 = nn - 1;  // lag-1 terms, i = 2..n
    const long n2 = nn - 3;  // lag-2 terms, i = 4..n

    const Stencil s11 = make_stencil(1, 1);
    const Stencil s22 = make_stencil(2, 2);
    const Stencil s12 = make_stencil(1, 2);
    auto cov = [&](const Stencil& s, long h) { return -0.5 * stencil_sum(s, two_h, h); };

    auto toeplitz_square_sum = [&](const Stencil& s, long count) {
        const double c0 = cov(s, 0);
        double acc = static_cast<double>(count) * c0 * c0;
        for (long h = 1; h < count; ++h) {
            const double c = cov(s, h);
            acc += 2.0 * static_cast<double>(count - h) * c * c;
        }
        return acc;
    };

    const double sum11 = toeplitz_square_sum(s11, n1);
    const double sum22 = toeplitz_square_sum(s22, n2);

    // Cov(D_i, E_j) with i in [2,n], j in [4,n], indexed by d = i - j.
    double sum12 = 0.0;
    for (long d = 2 - nn; d <= nn - 4; ++d) {
        const long lo = std::max(4L, 2 - d);
        const long hi = std::min(nn, nn - d);
        if (hi < lo) continue;
        const double c = cov(s12, d);
        sum12 += static_cast<double>(hi - lo + 1) * c * c;
    }

    const double tau1 = second_diff_variance(hurst, 1.0, 1);
    const double tau2 = second_diff_variance(hurst, 1.0, 2);

    SecondDiffMoments m{hurst, n, delta, 0, 0, 0, 0, 0, 0, 0, 0};
    m.mu1 = static_cast<double>(n1) * scale * (4.0 - std::pow(2.0, two_h));
    m.mu2 = static_cast<double>(n2) * scale * (4.0 * std::pow(2.0, two_h) - std::pow(4.0, two_h));
    m.var_v1 = 2.0 * sum11 * scale * scale;
    m.var_v2 = 2.0 * sum22 * scale * scale;
    m.cov_v12 = 2.0 * sum12 * scale * scale;
    // lambda^{ij}_{2,n} = delta^{-1} Cov(Vbar_i, Vbar_j), Vbar_v = delta tau(v)^{-2} V_v.
    m.lambda11 = delta * 2.0 * sum11 / (tau1 * tau1);
    m.lambda22 = delta * 2.0 * sum22 / (tau2 * tau2);
    m.lambda12 = delta * 2.0 * sum12 / (tau1 * tau2);
    return m;
}

LambdaMatrix lambda_asymptotic(HurstIndex hurst, double tol) {
    if (!(tol > 0.0)) throw UsageError("series tolerance must be positive");
    constexpr std::size_t min_terms = 10000;
    constexpr std::size_t max_terms = 50'000'000;

    const double hh = hurst.value();
    auto rho = [&](long h) { return rho_second_diff(hurst, 1, 1, h); };

    auto sum_series = [&](long start, auto&& term) {
        double acc = 0.0;
        std::size_t count = 0;
        for (long h = start;; ++h) {
            const double t = term(h);
            acc += t;
            ++count;
            if ((count >= min_terms && std::abs(t) < tol) || count >= max_terms) break;
        }
        return std::make_pair(acc, count);
    };

    const auto [s11, c11] = sum_series(1, [&](long h) {
        const double r = rho(h);
        return r * r;
    });
    const auto [s22, c22] = sum_series(1, [&](long h) {
        const double b = rho(h - 2) + 4.0 * rho(h - 1) + 6.0 * rho(h) + 4.0 * rho(h + 1) + rho(h + 2);
        return b * b;
    });
    const auto [s12, c12] = sum_series(0, [&](long h) {
        const double b = rho(h) + 2.0 * rho(h + 1) + rho(h + 2);
        return b * b;
    });

    LambdaMatrix lam{};
    lam.l11 = 2.0 + 4.0 * s11;
    lam.l22 = 2.0 + std::pow(2.0, 2.0 - 4.0 * hh) * s22;
    const double r1 = rho(1) + 1.0;
    lam.l12 = std::pow(2.0, 3.0 - 2.0 * hh) * r1 * r1 + std::pow(2.0, 2.0 - 2.0 * hh) * s12;
    lam.tolerance = tol;
    lam.terms = std::max({c11, c22, c12});
    return lam;
}

FbmSampler::FbmSampler(HurstIndex hurst, std::size_t n, double delta, FbmMethod preferred)
    : hurst_(hurst), n_(n), delta_(delta), method_(preferred) {
    if (n == 0) throw UsageError("fBm path needs n >= 1 increments");
    if (!(delta > 0.0)) throw UsageError("grid spacing must be positive");

    if (method_ == FbmMethod::CirculantEmbedding) {
        const std::size_t m = 2 * n;
        std::vector<std::complex<double>> c(m);
        for (std::size_t j = 0; j <= n; ++j) c[j] = fgn_autocovariance(hurst, delta, static_cast<long>(j));
        for (std::size_t j = 1; j < n; ++j) c[m - j] = c[j];
        detail::fft_forward(c);

        double max_eig = 0.0;
        double min_eig = 0.0;
        for (const auto& v : c) {
            max_eig = std::max(max_eig, v.real());
            min_eig = std::min(min_eig, v.real());
        }
        if (min_eig < -1e-10 * max_eig) {
            method_ = FbmMethod::Cholesky;
        } else {
            sqrt_eigen_.resize(m);
            const double inv_m = 1.0 / static_cast<double>(m);
            for (std::size_t k = 0; k < m; ++k) {
                sqrt_eigen_[k] = std::sqrt(std::max(c[k].real(), 0.0) * inv_m);
            }
        }
    }

    if (method_ == FbmMethod::Cholesky) {
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                cov(i, j) = fgn_autocovariance(hurst, delta, static_cast<long>(i) - static_cast<long>(j));
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Cholesky factorization of the fGn covariance failed");
        }
        const Eigen::MatrixXd l = llt.matrixL();
        chol_.assign(n * (n + 1) / 2, 0.0);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) chol_[pos++] = l(i, j);
        }
    }
}

void FbmSampler::increments_circulant(std::span<double> incr, std::uint64_t seed) const {
    const std::size_t m = sqrt_eigen_.size();
    NormalSource normal(seed);
    std::vector<std::complex<double>> z(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double re = normal();
        const double im = normal();
        z[k] = {sqrt_eigen_[k] * re, sqrt_eigen_[k] * im};
    }
    detail::fft_forward(z);
    for (std::size_t j = 0; j < n_; ++j) incr[j] = z[j].real();
}

void FbmSampler::increments_cholesky(std::span<double> incr, std::uint64_t seed) const {
    NormalSource normal(seed);
    std::vector<double> z(n_);
    for (auto& v : z) v = normal();
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += chol_[pos++] * z[j];
        incr[i] = acc;
    }
}

void FbmSampler::sample_into(std::span<double> out, std::uint64_t seed) const {
    if (out.size() != n_ + 1) throw UsageError("output span must hold n + 1 values");
    std::span<double> incr = out.subspan(1);
    if (method_ == FbmMethod::CirculantEmbedding) {
        increments_circulant(incr, seed);
    } else {
        increments_cholesky(incr, seed);
    }
    out[0] = 0.0;
    for (std::size_t i = 1; i <= n_; ++i) out[i] += out[i - 1];
}

FbmPath FbmSampler::sample(std::uint64_t seed) const {
    FbmPath path{std::vector<double>(n_ + 1), delta_, hurst_, seed, method_};
    sample_into(path.values, seed);
    return path;
}

FbmPath simulate_fbm(HurstIndex hurst, std::size_t n, double delta, std::uint64_t seed) {
    return FbmSampler(hurst, n, delta).sample(seed);
}

}  // namespace lfboot
