#include "lfboot/powervar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "lfboot/error.hpp"

namespace lfboot {
namespace {

double abs_pow(double x, double p) {
    const double a = std::abs(x);
    if (p == 2.0) return a * a;
    if (p == 4.0) {
        const double s = a * a;
        return s * s;
    }
    if (p == 1.0) return a;
    return std::pow(a, p);
}

void check_power(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("power p must be >= 1");
}

void check_lag(int v) {
    if (v != 1 && v != 2) throw UsageError("second-difference lag must be 1 or 2");
}

// True if some lag-1 second difference is above floating-point roundoff of its inputs.
bool has_signal(std::span<const double> x) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 2; i < x.size(); ++i) {
        const double d = x[i] - 2.0 * x[i - 1] + x[i - 2];
        const double size = std::abs(x[i]) + 2.0 * std::abs(x[i - 1]) + std::abs(x[i - 2]);
        if (std::abs(d) > 64.0 * eps * size) return true;
    }
    return false;
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> values, double delta, std::string label)
    : values_(std::move(values)), delta_(delta), label_(std::move(label)) {
    if (!(delta_ > 0.0) || !std::isfinite(delta_)) throw UsageError("grid spacing must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw DataError("non-finite observation at index " + std::to_string(i));
        }
    }
}

TimeSeries TimeSeries::unit_horizon(std::vector<double> values, std::string label) {
    if (values.size() < 2) throw DataError("series needs at least two observations");
    const double delta = 1.0 / static_cast<double>(values.size() - 1);
    return TimeSeries(std::move(values), delta, std::move(label));
}

double power_variation(std::span<const double> x, double p, int v) {
    check_power(p);
    check_lag(v);
    const std::size_t lag = static_cast<std::size_t>(v);
    if (x.size() < 2 * lag + 1) {
        throw DataError("series too short for lag-" + std::to_string(v) +
                        " second differences: need n >= " + std::to_string(2 * v));
    }
    double acc = 0.0;
    for (std::size_t i = 2 * lag; i < x.size(); ++i) {
        acc += abs_pow(x[i] - 2.0 * x[i - lag] + x[i - 2 * lag], p);
    }
    return acc;
}

double power_variation(const TimeSeries& ts, double p, int v) {
    return power_variation(ts.values(), p, v);
}

PowerVariationSet power_variations(const TimeSeries& ts, double p) {
    return PowerVariationSet{p,
                             power_variation(ts, p, 1),
                             power_variation(ts, p, 2),
                             power_variation(ts, 2.0 * p, 1),
                             ts.n(),
                             ts.delta()};
}

double tau_n(HurstIndex hurst, double delta, int v) {
    if (!(delta > 0.0)) throw UsageError("grid spacing must be positive");
    return std::sqrt(second_diff_variance(hurst, delta, v));
}

double cof(const TimeSeries& ts, double p) {
    const double v1 = power_variation(ts, p, 1);
    const double v2 = power_variation(ts, p, 2);
    if (v1 == 0.0 || !has_signal(ts.values())) {
        throw DataError("degenerate series: second differences vanish");
    }
    return v2 / v1;
}

double cof_to_alpha(double cof_value, double p) {
    if (!(cof_value > 0.0)) throw DataError("COF must be positive to estimate alpha");
    return std::log2(cof_value) / p - 0.5;
}

double clt_variance(const PowerVariationSet& pv, const LambdaMatrix& lambda) {
    if (pv.p != 2.0) throw UsageError("asymptotic variance known only for p = 2");
    if (!(pv.v1 > 0.0)) throw DataError("degenerate series: V(X;2,1) = 0");
    const double m4 = gaussian_abs_moment(4.0);
    const double denom = 2.0 * std::numbers::ln2 * pv.v1;
    const double q = std::max(lambda.contrast(), 0.0);
    return static_cast<double>(pv.n) * (pv.v2p1 / m4) * q / (denom * denom);
}

HurstIndex clamp_hurst_for_lambda(double alpha) {
    return HurstIndex(std::clamp(alpha + 0.5, 0.01, 0.99));
}

const LambdaMatrix& lambda_cached(HurstIndex hurst) {
    static std::mutex mutex;
    static std::map<double, LambdaMatrix> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(hurst.value());
    if (it == cache.end()) it = cache.emplace(hurst.value(), lambda_asymptotic(hurst)).first;
    return it->second;
}

namespace {

RoughnessEstimate estimate_impl(const TimeSeries& ts, double p, const HurstIndex* lambda_hurst) {
    check_power(p);
    if (ts.n() < 4) throw DataError("series too short: need n >= 4 increments");
    const PowerVariationSet pv = power_variations(ts, p);
    if (pv.v1 == 0.0 || !has_signal(ts.values())) {
        throw DataError("degenerate series: second differences vanish");
    }
    const double c = pv.v2 / pv.v1;
    RoughnessEstimate est{cof_to_alpha(c, p), c, std::nullopt, pv, std::nullopt};
    if (p == 2.0) {
        const HurstIndex h = lambda_hurst ? *lambda_hurst : clamp_hurst_for_lambda(est.alpha_hat);
        est.lambda = lambda_cached(h);
        est.var_hat = clt_variance(pv, *est.lambda);
    }
    return est;
}

}  // namespace

RoughnessEstimate estimate_alpha(const TimeSeries& ts, double p) {
    return estimate_impl(ts, p, nullptr);
}

RoughnessEstimate estimate_alpha(const TimeSeries& ts, double p, HurstIndex lambda_hurst) {
    return estimate_impl(ts, p, &lambda_hurst);
}

}  // namespace lfboot
