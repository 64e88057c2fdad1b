#include "lfboot/bss_sim.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "fft.hpp"
#include "lfboot/error.hpp"
#include "lfboot/random.hpp"

namespace lfboot {
namespace {

constexpr std::uint64_t kVolTag = stream_tag("bss-volatility");
constexpr std::uint64_t kWienerTag = stream_tag("bss-wiener");
constexpr std::uint64_t kExactTag = stream_tag("bss-exact");

const double kLogOneHalf = std::log(1.5);

// Direct evaluation below this many multiply-adds, FFT convolution above.
constexpr double kDirectSumLimit = 4e6;

// Cell-level coupling of an OU factor d tau = xi tau dt + dB with its driver:
// tau' = e^{xi dt} tau + eta, where (eta, dB) are jointly Gaussian.
struct OuStep {
    double decay;
    double eta_given_db;  // regression coefficient of eta on dB
    double eta_resid_sd;

    OuStep(double xi, double dt) {
        decay = std::exp(xi * dt);
        const double var_eta = std::expm1(2.0 * xi * dt) / (2.0 * xi);
        const double cov = std::expm1(xi * dt) / xi;
        eta_given_db = cov / dt;
        eta_resid_sd = std::sqrt(std::max(var_eta - cov * cov / dt, 0.0));
    }

    double advance(double tau, double db, double z) const {
        return decay * tau + eta_given_db * db + eta_resid_sd * z;
    }
};

// Brownian increments over `m` substeps conditioned to sum to `total`.
void bridge_substeps(double total, double dt, NormalSource& normal, std::vector<double>& out) {
    const std::size_t m = out.size();
    const double sd = std::sqrt(dt / static_cast<double>(m));
    double mean = 0.0;
    for (auto& v : out) {
        v = sd * normal();
        mean += v;
    }
    mean /= static_cast<double>(m);
    const double shift = total / static_cast<double>(m) - mean;
    for (auto& v : out) v += shift;
}

// Lower Cholesky factor of the covariance of (W increment, kappa Wiener
// integrals of the power kernel) over one cell of width 1/n.
Eigen::MatrixXd wiener_integral_factor(double alpha, int kappa, std::size_t n) {
    const double nn = static_cast<double>(n);
    const int dim = kappa + 1;
    Eigen::MatrixXd sigma(dim, dim);
    sigma(0, 0) = 1.0 / nn;
    for (int k = 1; k <= kappa; ++k) {
        const double v = (std::pow(k, alpha + 1.0) - std::pow(k - 1.0, alpha + 1.0)) /
                         ((alpha + 1.0) * std::pow(nn, alpha + 1.0));
        sigma(0, k) = sigma(k, 0) = v;
        sigma(k, k) = (std::pow(k, 2.0 * alpha + 1.0) - std::pow(k - 1.0, 2.0 * alpha + 1.0)) /
                      ((2.0 * alpha + 1.0) * std::pow(nn, 2.0 * alpha + 1.0));
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (int k = 1; k <= kappa; ++k) {
        for (int l = k + 1; l <= kappa; ++l) {
            auto f = [&](double v) { return std::pow(v + k - 1.0, alpha) * std::pow(v + l - 1.0, alpha); };
            const double val = integrator.integrate(f, 0.0, 1.0) / std::pow(nn, 2.0 * alpha + 1.0);
            sigma(k, l) = sigma(l, k) = val;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("hybrid scheme: Wiener-integral covariance is not positive definite");
    }
    return llt.matrixL();
}

std::vector<double> weighted_sum(std::span<const double> a, std::span<const double> h, std::size_t n,
                                 std::size_t history) {
    // X_i = sum_k h_k a_{i + history - k}, i = 0..n, with h_k = 0 for k > history.
    std::vector<double> x(n + 1, 0.0);
    const double work = static_cast<double>(n + 1) * static_cast<double>(h.size());
    if (work <= kDirectSumLimit) {
        for (std::size_t i = 0; i <= n; ++i) {
            const std::size_t top = i + history;
            double acc = 0.0;
            for (std::size_t k = 1; k < h.size(); ++k) acc += h[k] * a[top - k];
            x[i] = acc;
        }
    } else {
        const auto y = detail::fft_convolve(a, h);
        for (std::size_t i = 0; i <= n; ++i) x[i] = y[i + history];
    }
    return x;
}

}  // namespace

GammaKernel::GammaKernel(double alpha, double lambda) : alpha_(alpha), lambda_(lambda) {
    if (!(alpha > -0.5 && alpha < 0.5)) {
        throw UsageError("alpha must lie in the open interval (-0.5, 0.5), got " + std::to_string(alpha));
    }
    if (!(lambda > 0.0)) throw UsageError("lambda must be positive, got " + std::to_string(lambda));
}

double GammaKernel::operator()(double x) const {
    if (!(x > 0.0)) return 0.0;
    return std::pow(x, alpha_) * std::exp(-lambda_ * x);
}

std::string model_name(const VolatilityModel& model) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NoSV>) return "nosv";
            if constexpr (std::is_same_v<T, SV1F>) return "sv1f";
            return "sv2f";
        },
        model);
}

VolatilityModel parse_model(const std::string& name) {
    std::string t = name;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "nosv") return NoSV{};
    if (t == "sv1f") return SV1F{};
    if (t == "sv2f") return SV2F{};
    throw UsageError("unknown volatility model '" + name + "' (expected nosv, sv1f or sv2f)");
}

HybridConfig HybridConfig::defaults_for(double alpha) {
    return HybridConfig{alpha < 0.0 ? 1 : 3, 0.5};
}

double optimal_point(double alpha, long k) {
    if (alpha == 0.0) throw UsageError("optimal_point is undefined for alpha = 0");
    if (!(alpha > -0.5 && alpha < 0.5)) throw UsageError("alpha must lie in (-0.5, 0.5)");
    if (k < 1) throw UsageError("optimal_point needs k >= 1");
    const double a1 = alpha + 1.0;
    const double kk = static_cast<double>(k);
    // k^{a1} - (k-1)^{a1} = -k^{a1} expm1(a1 log1p(-1/k)), exact for k = 1.
    const double log_diff =
        k == 1 ? 0.0 : a1 * std::log(kk) + std::log(-std::expm1(a1 * std::log1p(-1.0 / kk)));
    return std::exp((log_diff - std::log(a1)) / alpha);
}

double s_exp(double x) {
    if (x <= kLogOneHalf) return std::exp(x);
    return 1.5 * std::sqrt(1.0 - kLogOneHalf + x * x / kLogOneHalf);
}

double kernel_covariance(const GammaKernel& kernel, double lag) {
    if (!(lag >= 0.0)) throw UsageError("lag must be nonnegative");
    const double a = kernel.alpha();
    const double lam = kernel.lambda();
    auto f = [&](double u) {
        if (!(u > 0.0)) return 0.0;
        return std::pow(u, a) * std::pow(u + lag, a) * std::exp(-lam * (2.0 * u + lag));
    };
    const double split = 1.0 / lam;
    boost::math::quadrature::tanh_sinh<double> head;
    boost::math::quadrature::exp_sinh<double> tail;
    double err = 0.0;
    const double near = head.integrate(f, 0.0, split, 1e-13, &err);
    const double far = tail.integrate([&](double u) { return f(u + split); }, 1e-13, &err);
    const double total = near + far;
    if (!std::isfinite(total)) throw NumericalError("kernel covariance quadrature failed");
    return total;
}

VolatilityPath simulate_volatility(const VolatilityModel& model, std::size_t n, std::size_t history,
                                   std::uint64_t seed) {
    if (n == 0) throw UsageError("volatility path needs n >= 1");
    const std::size_t cells = history + n;
    const double dt = 1.0 / static_cast<double>(n);
    const double sd = std::sqrt(dt);
    NormalSource normal(derive_seed(seed, kVolTag, 0));

    VolatilityPath out{history, std::vector<double>(cells + 1, 1.0), std::vector<double>(cells), {}};

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NoSV>) {
                for (auto& w : out.dw) w = sd * normal();
            } else if constexpr (std::is_same_v<T, SV1F>) {
                const OuStep step(m.xi, dt);
                const double rho_perp = std::sqrt(1.0 - m.rho * m.rho);
                out.factors.assign(1, std::vector<double>(cells + 1));
                auto& taus = out.factors[0];
                double tau = normal() / std::sqrt(-2.0 * m.xi);
                taus[0] = tau;
                out.sigma[0] = std::exp(m.beta0 + m.beta1 * tau);
                for (std::size_t c = 0; c < cells; ++c) {
                    const double db = sd * normal();
                    out.dw[c] = m.rho * db + rho_perp * sd * normal();
                    tau = step.advance(tau, db, normal());
                    taus[c + 1] = tau;
                    out.sigma[c + 1] = std::exp(m.beta0 + m.beta1 * tau);
                }
            } else {
                const OuStep step1(m.xi1, dt);
                const double rho_perp = std::sqrt(std::max(1.0 - m.rho1 * m.rho1 - m.rho2 * m.rho2, 0.0));
                const int sub = std::max(1, m.euler_substeps);
                const double h = dt / sub;
                std::vector<double> dbs(static_cast<std::size_t>(sub));

                double tau1 = normal() / std::sqrt(-2.0 * m.xi1);
                double tau2 = 0.0;
                const auto burn_cells = static_cast<std::size_t>(std::ceil(m.burn_in * static_cast<double>(n)));
                for (std::size_t c = 0; c < burn_cells * static_cast<std::size_t>(sub); ++c) {
                    tau2 += m.xi2 * tau2 * h + (1.0 + m.phi * tau2) * std::sqrt(h) * normal();
                }
                out.factors.assign(2, std::vector<double>(cells + 1));
                out.factors[0][0] = tau1;
                out.factors[1][0] = tau2;
                out.sigma[0] = s_exp(m.beta0 + m.beta1 * tau1 + m.beta2 * tau2);
                for (std::size_t c = 0; c < cells; ++c) {
                    const double db1 = sd * normal();
                    const double db2 = sd * normal();
                    out.dw[c] = m.rho1 * db1 + m.rho2 * db2 + rho_perp * sd * normal();
                    tau1 = step1.advance(tau1, db1, normal());
                    bridge_substeps(db2, dt, normal, dbs);
                    for (const double d : dbs) tau2 += m.xi2 * tau2 * h + (1.0 + m.phi * tau2) * d;
                    out.factors[0][c + 1] = tau1;
                    out.factors[1][c + 1] = tau2;
                    out.sigma[c + 1] = s_exp(m.beta0 + m.beta1 * tau1 + m.beta2 * tau2);
                }
            }
        },
        model);
    return out;
}

VolatilityPath simulate_volatility(const VolatilityModel& model, std::size_t n, std::uint64_t seed) {
    return simulate_volatility(model, n, 0, seed);
}

BssPath simulate_bss_hybrid(const GammaKernel& kernel, const VolatilityModel& model, std::size_t n,
                            const HybridConfig& cfg, std::uint64_t seed) {
    if (n < 5) throw UsageError("hybrid scheme needs n >= 5");
    if (cfg.kappa < 0) throw UsageError("kappa must be nonnegative");
    if (!(cfg.delta_trunc > 0.0)) throw UsageError("truncation exponent must be positive");

    const double nn = static_cast<double>(n);
    const auto horizon = static_cast<std::size_t>(std::floor(std::pow(nn, 1.0 + cfg.delta_trunc)));
    const std::size_t kappa = std::min<std::size_t>(static_cast<std::size_t>(cfg.kappa), horizon);
    const VolatilityPath vol = simulate_volatility(model, n, horizon, seed);
    const std::size_t cells = horizon + n;
    const double alpha = kernel.alpha();
    const double lam = kernel.lambda();

    BssPath path{std::vector<double>(n + 1), std::vector<double>(n + 1), kernel, model, Scheme::Hybrid, seed};
    for (std::size_t i = 0; i <= n; ++i) path.volatility[i] = vol.sigma[horizon + i];

    if (alpha == 0.0) {
        // g(x) = exp(-lambda x): X_{t+dt} = e^{-lambda dt} X_t + sigma_t eta with
        // (eta, dW) jointly Gaussian per cell.
        const double dt = 1.0 / nn;
        const OuStep step(-lam, dt);
        NormalSource normal(derive_seed(seed, kWienerTag, 0));
        double x = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            if (c >= horizon) path.values[c - horizon] = x;
            x = step.decay * x + vol.sigma[c] * (step.eta_given_db * vol.dw[c] + step.eta_resid_sd * normal());
        }
        path.values[n] = x;
        return path;
    }

    // Riemann part: weights g(b*_k / n) on cells k = kappa+1 .. horizon.
    std::vector<double> weights(horizon + 1, 0.0);
    for (std::size_t k = kappa + 1; k <= horizon; ++k) {
        weights[k] = kernel(optimal_point(alpha, static_cast<long>(k)) / nn);
    }
    std::vector<double> driven(cells);
    for (std::size_t c = 0; c < cells; ++c) driven[c] = vol.sigma[c] * vol.dw[c];
    path.values = weighted_sum(driven, weights, n, horizon);

    if (kappa > 0) {
        // Wiener integrals over each cell, drawn conditionally on that cell's W increment.
        const Eigen::MatrixXd factor = wiener_integral_factor(alpha, static_cast<int>(kappa), n);
        NormalSource normal(derive_seed(seed, kWienerTag, 0));
        const std::size_t first = horizon - kappa;  // earliest cell reached by the exact terms at i = 0
        std::vector<double> integrals((cells - first) * kappa);
        std::vector<double> zeta(kappa + 1);
        for (std::size_t c = first; c < cells; ++c) {
            zeta[0] = vol.dw[c] / factor(0, 0);
            for (std::size_t k = 1; k <= kappa; ++k) zeta[k] = normal();
            for (std::size_t k = 1; k <= kappa; ++k) {
                double acc = 0.0;
                for (std::size_t l = 0; l <= k; ++l) acc += factor(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * zeta[l];
                integrals[(c - first) * kappa + (k - 1)] = acc;
            }
        }
        for (std::size_t i = 0; i <= n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 1; k <= kappa; ++k) {
                const std::size_t c = i + horizon - k;
                acc += std::exp(-lam * static_cast<double>(k) / nn) * vol.sigma[c] *
                       integrals[(c - first) * kappa + (k - 1)];
            }
            path.values[i] += acc;
        }
    }
    return path;
}

ExactBssSampler::ExactBssSampler(const GammaKernel& kernel, std::size_t n) : kernel_(kernel), n_(n) {
    if (n == 0) throw UsageError("exact simulation needs n >= 1");
    const std::size_t dim = n + 1;
    lag_cov_.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        lag_cov_[k] = kernel_covariance(kernel, static_cast<double>(k) / static_cast<double>(n));
    }
    Eigen::MatrixXd cov(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) cov(i, j) = lag_cov_[i > j ? i - j : j - i];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Cholesky factorization of the BSS covariance failed");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    chol_.assign(dim * (dim + 1) / 2, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) chol_[pos++] = l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
}

double ExactBssSampler::covariance(std::size_t i, std::size_t j) const {
    return lag_cov_.at(i > j ? i - j : j - i);
}

void ExactBssSampler::sample_into(std::vector<double>& out, std::uint64_t seed) const {
    const std::size_t dim = n_ + 1;
    NormalSource normal(derive_seed(seed, kExactTag, 0));
    std::vector<double> z(dim);
    for (auto& v : z) v = normal();
    out.assign(dim, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += chol_[pos++] * z[j];
        out[i] = acc;
    }
}

BssPath ExactBssSampler::sample(std::uint64_t seed) const {
    BssPath path{{}, std::vector<double>(n_ + 1, 1.0), kernel_, NoSV{}, Scheme::ExactCholesky, seed};
    sample_into(path.values, seed);
    return path;
}

std::shared_ptr<const ExactBssSampler> exact_sampler_cached(const GammaKernel& kernel, std::size_t n) {
    static std::mutex mutex;
    static std::map<std::tuple<double, double, std::size_t>, std::shared_ptr<const ExactBssSampler>> cache;
    const auto key = std::make_tuple(kernel.alpha(), kernel.lambda(), n);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto sampler = std::make_shared<const ExactBssSampler>(kernel, n);
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(sampler)).first->second;
}

BssPath simulate_bss_exact_gaussian(const GammaKernel& kernel, std::size_t n, std::uint64_t seed) {
    return exact_sampler_cached(kernel, n)->sample(seed);
}

BssPath simulate_bss(const GammaKernel& kernel, const VolatilityModel& model, std::size_t n,
                     Scheme scheme, std::uint64_t seed) {
    if (scheme == Scheme::ExactCholesky) {
        if (!std::holds_alternative<NoSV>(model)) {
            throw UsageError("exact Cholesky simulation requires constant volatility (nosv)");
        }
        return simulate_bss_exact_gaussian(kernel, n, seed);
    }
    return simulate_bss_hybrid(kernel, model, n, HybridConfig::defaults_for(kernel.alpha()), seed);
}

}  // namespace lfboot
