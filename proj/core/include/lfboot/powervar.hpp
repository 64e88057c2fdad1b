#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfboot/fgn.hpp"

namespace lfboot {

/// Equidistant observations X_0, X_delta, ..., X_{n delta}.
class TimeSeries {
public:
    /// Throws DataError on non-finite values, UsageError on delta <= 0.
    TimeSeries(std::vector<double> values, double delta, std::string label = {});

    /// Unit horizon: delta = 1/n.
    static TimeSeries unit_horizon(std::vector<double> values, std::string label = {});

    std::span<const double> values() const noexcept { return values_; }
    double delta() const noexcept { return delta_; }
    const std::string& label() const noexcept { return label_; }
    /// Number of increments (observations minus one).
    std::size_t n() const noexcept { return values_.empty() ? 0 : values_.size() - 1; }

private:
    std::vector<double> values_;
    double delta_;
    std::string label_;
};

struct PowerVariationSet {
    double p;
    double v1;    ///< V(X;p,1)
    double v2;    ///< V(X;p,2)
    double v2p1;  ///< V(X;2p,1)
    std::size_t n;
    double delta;
};

struct RoughnessEstimate {
    double alpha_hat;
    double cof;
    /// Asymptotic variance of sqrt(n)(alpha_hat - alpha); only available for p = 2.
    std::optional<double> var_hat;
    PowerVariationSet pv;
    std::optional<LambdaMatrix> lambda;
};

/// sum_{i=2v}^{n} |X_i - 2 X_{i-v} + X_{i-2v}|^p; n - 2v + 1 terms.
double power_variation(std::span<const double> values, double p, int v);
double power_variation(const TimeSeries& ts, double p, int v);

PowerVariationSet power_variations(const TimeSeries& ts, double p);

/// Standard deviation of the lag-v second difference of fBm on a grid of spacing delta.
double tau_n(HurstIndex hurst, double delta, int v);

/// COF(p) = V(X;p,2) / V(X;p,1). Throws DataError if the denominator vanishes.
double cof(const TimeSeries& ts, double p);

/// h_p(x) = log2(x)/p - 1/2.
double cof_to_alpha(double cof_value, double p);

/// n m_{2p}^{-1} V(X;2p,1) (-1,1) Lambda (-1,1)^T / (p log 2 V(X;p,1))^2, p = 2 only.
double clt_variance(const PowerVariationSet& pv, const LambdaMatrix& lambda);

/// COF estimate of alpha. The variance uses Lambda at `lambda_hurst`, or at
/// alpha_hat + 1/2 (clamped into the admissible range) when not given.
RoughnessEstimate estimate_alpha(const TimeSeries& ts, double p = 2.0);
RoughnessEstimate estimate_alpha(const TimeSeries& ts, double p, HurstIndex lambda_hurst);

/// Hurst index used for Lambda when evaluating at an estimate; keeps H inside
/// [0.01, 0.99] so the series stays defined for estimates outside (-1/2, 1/2).
HurstIndex clamp_hurst_for_lambda(double alpha);

/// Cached lambda_asymptotic at tolerance 1e-12; thread-safe.
const LambdaMatrix& lambda_cached(HurstIndex hurst);

}  // namespace lfboot
