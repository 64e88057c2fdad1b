#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace lfboot {

/// g(x) = x^alpha exp(-lambda x), x > 0.
class GammaKernel {
public:
    GammaKernel(double alpha, double lambda);

    double alpha() const noexcept { return alpha_; }
    double lambda() const noexcept { return lambda_; }
    double operator()(double x) const;

private:
    double alpha_;
    double lambda_;
};

struct NoSV {};

/// sigma = exp(beta0 + beta1 tau), d tau = xi tau dt + dB, d[W,B] = rho dt.
struct SV1F {
    double beta0 = -0.3125;
    double beta1 = 0.125;
    double xi = -0.025;
    double rho = -0.3;
};

/// sigma = s-exp(beta0 + beta1 tau1 + beta2 tau2) with
/// d tau1 = xi1 tau1 dt + dB1, d tau2 = xi2 tau2 dt + (1 + phi tau2) dB2,
/// d[W,B1] = rho1 dt, d[W,B2] = rho2 dt, B1 independent of B2.
struct SV2F {
    double beta0 = -1.20;
    double beta1 = 0.040;
    double beta2 = 1.50;
    double xi1 = -0.00137;
    double xi2 = -1.386;
    double phi = 0.250;
    double rho1 = -0.30;
    double rho2 = -0.30;
    int euler_substeps = 10;  ///< Euler steps per grid cell for tau2
    double burn_in = 1.0;     ///< time units discarded for tau2, started at 0
};

using VolatilityModel = std::variant<NoSV, SV1F, SV2F>;

std::string model_name(const VolatilityModel& model);
/// "nosv", "sv1f" or "sv2f" with default parameters; throws UsageError otherwise.
VolatilityModel parse_model(const std::string& name);

struct HybridConfig {
    int kappa = 1;             ///< number of exactly simulated Wiener integrals
    double delta_trunc = 0.5;  ///< truncation N_n = floor(n^{1 + delta_trunc})

    /// kappa = 1 for alpha < 0 and kappa = 3 otherwise, delta = 0.5.
    static HybridConfig defaults_for(double alpha);
};

enum class Scheme { Hybrid, ExactCholesky };

struct BssPath {
    std::vector<double> values;      ///< X at 0, 1/n, ..., 1
    std::vector<double> volatility;  ///< sigma at the same points
    GammaKernel kernel;
    VolatilityModel model;
    Scheme scheme;
    std::uint64_t seed;
};

/// b*_k = ((k^{alpha+1} - (k-1)^{alpha+1}) / (alpha+1))^{1/alpha}; alpha != 0.
double optimal_point(double alpha, long k);

/// exp(x) for x <= log 1.5, otherwise 1.5 sqrt(1 - log 1.5 + x^2 / log 1.5).
double s_exp(double x);

/// Cov(G_s, G_{s+lag}) = int_0^inf g(u) g(u + lag) du, by adaptive quadrature.
double kernel_covariance(const GammaKernel& kernel, double lag);

/// Volatility and driving noise on the grid j/n, j = -history, ..., n.
struct VolatilityPath {
    std::size_t history;        ///< number of cells before time 0
    std::vector<double> sigma;  ///< sigma at j/n; size history + n + 1
    std::vector<double> dw;     ///< W increment over [j/n, (j+1)/n]; size history + n
    /// Latent factors on the same grid as sigma: none (NoSV), tau (SV1F), tau1 and tau2 (SV2F).
    std::vector<std::vector<double>> factors;
};

/// W increments are correlated with the volatility drivers per the model. OU
/// factors use the exact Gaussian transition; tau2 uses Euler substeps.
VolatilityPath simulate_volatility(const VolatilityModel& model, std::size_t n,
                                   std::size_t history, std::uint64_t seed);
VolatilityPath simulate_volatility(const VolatilityModel& model, std::size_t n, std::uint64_t seed);

/// Hybrid scheme on [0, 1] with step 1/n. Requires n >= 5. For alpha = 0 the
/// kernel is exponential and X follows an exact OU recursion per cell instead.
BssPath simulate_bss_hybrid(const GammaKernel& kernel, const VolatilityModel& model, std::size_t n,
                            const HybridConfig& cfg, std::uint64_t seed);

/// Exact Gaussian sampler (constant volatility) for a fixed (kernel, n). The
/// Cholesky factor of the (n+1)x(n+1) covariance is computed once.
class ExactBssSampler {
public:
    ExactBssSampler(const GammaKernel& kernel, std::size_t n);

    BssPath sample(std::uint64_t seed) const;
    void sample_into(std::vector<double>& out, std::uint64_t seed) const;

    /// Covariance of X_{i/n} and X_{j/n} used for the factorization.
    double covariance(std::size_t i, std::size_t j) const;
    std::size_t size() const noexcept { return n_; }

private:
    GammaKernel kernel_;
    std::size_t n_;
    std::vector<double> lag_cov_;
    std::vector<double> chol_;  // row-major lower triangle
};

std::shared_ptr<const ExactBssSampler> exact_sampler_cached(const GammaKernel& kernel, std::size_t n);

/// Exact simulation, NoSV only. Requires n >= 1.
BssPath simulate_bss_exact_gaussian(const GammaKernel& kernel, std::size_t n, std::uint64_t seed);

/// Dispatches on scheme; ExactCholesky with a stochastic-volatility model throws UsageError.
BssPath simulate_bss(const GammaKernel& kernel, const VolatilityModel& model, std::size_t n,
                     Scheme scheme, std::uint64_t seed);

}  // namespace lfboot
