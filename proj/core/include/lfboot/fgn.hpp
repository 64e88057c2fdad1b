#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lfboot {

/// Hurst parameter of a fractional Brownian motion, H in (0, 1).
class HurstIndex {
public:
    explicit HurstIndex(double h);

    /// H = alpha + 1/2.
    static HurstIndex from_alpha(double alpha);

    double value() const noexcept { return h_; }
    double alpha() const noexcept { return h_ - 0.5; }

    friend bool operator==(HurstIndex, HurstIndex) = default;

private:
    double h_;
};

/// gamma(k) = Cov(B_{(j+1)d} - B_{jd}, B_{(j+k+1)d} - B_{(j+k)d}).
double fgn_autocovariance(HurstIndex hurst, double delta, long k);

/// Cov(D^{v1}_{i+h}, D^{v2}_i) where D^v_i = B_i - 2 B_{i-v} + B_{i-2v} on a grid of
/// spacing `delta`. Accurate for large |h| (no cancellation in the tail).
double second_diff_covariance(HurstIndex hurst, double delta, int v1, int v2, long h);

/// Correlation between lag-v1 and lag-v2 second differences at shift h. Defined
/// for (v1, v2) in {(1,1), (2,2), (1,2)}; any other pair throws UsageError.
double rho_second_diff(HurstIndex hurst, int v1, int v2, long h);

/// m_p = E|U|^p for U ~ N(0,1).
double gaussian_abs_moment(double p);

/// Variance of the lag-v second difference of fBm: delta^{2H} (4 v^{2H} - (2v)^{2H}).
double second_diff_variance(HurstIndex hurst, double delta, int v);

/// Exact first and second moments of the quadratic variations V(B^H; 2, v),
/// v = 1, 2, of an fBm observed at 0, delta, ..., n*delta.
struct SecondDiffMoments {
    HurstIndex hurst;
    std::size_t n;
    double delta;
    double mu1;      ///< E V(B^H;2,1)
    double mu2;      ///< E V(B^H;2,2)
    double var_v1;   ///< Var V(B^H;2,1)
    double var_v2;   ///< Var V(B^H;2,2)
    double cov_v12;  ///< Cov(V(B^H;2,1), V(B^H;2,2))
    double lambda11; ///< delta^{-1} Var of the normalized lag-1 variation
    double lambda22;
    double lambda12;
};

/// Requires n >= 5. Variances use Var(sum D_i^2) = 2 sum_ij Cov(D_i, D_j)^2.
SecondDiffMoments exact_pv_moments(HurstIndex hurst, std::size_t n, double delta);

/// Limit of the normalized covariance matrix of (V(B^H;2,1), V(B^H;2,2)).
struct LambdaMatrix {
    double l11;
    double l22;
    double l12;
    double tolerance;
    std::size_t terms;

    /// (-1, 1) Lambda (-1, 1)^T
    double contrast() const noexcept { return l11 + l22 - 2.0 * l12; }
};

/// Series summed until the term drops below tol and at least 10^4 terms are in.
LambdaMatrix lambda_asymptotic(HurstIndex hurst, double tol = 1e-12);

enum class FbmMethod { CirculantEmbedding, Cholesky };

struct FbmPath {
    std::vector<double> values;  ///< B_0 = 0, B_delta, ..., B_{n delta}
    double delta;
    HurstIndex hurst;
    std::uint64_t seed;
    FbmMethod method;
};

/// Exact fBm sampler for a fixed (H, n, delta). Set-up cost is paid once; draws
/// are cheap and thread-safe. Uses circulant embedding and falls back to a
/// Cholesky factor of the fGn covariance if the embedding is not nonnegative.
class FbmSampler {
public:
    FbmSampler(HurstIndex hurst, std::size_t n, double delta,
               FbmMethod preferred = FbmMethod::CirculantEmbedding);

    FbmPath sample(std::uint64_t seed) const;

    /// Writes n+1 path values into `out`.
    void sample_into(std::span<double> out, std::uint64_t seed) const;

    FbmMethod method() const noexcept { return method_; }
    std::size_t size() const noexcept { return n_; }
    HurstIndex hurst() const noexcept { return hurst_; }
    double delta() const noexcept { return delta_; }

private:
    void increments_circulant(std::span<double> incr, std::uint64_t seed) const;
    void increments_cholesky(std::span<double> incr, std::uint64_t seed) const;

    HurstIndex hurst_;
    std::size_t n_;
    double delta_;
    FbmMethod method_;
    std::vector<double> sqrt_eigen_;  // scaled by 1/sqrt(m)
    std::vector<double> chol_;        // row-major lower triangle
};

/// Convenience wrapper around FbmSampler. Requires n >= 1.
FbmPath simulate_fbm(HurstIndex hurst, std::size_t n, double delta, std::uint64_t seed);

}  // namespace lfboot
