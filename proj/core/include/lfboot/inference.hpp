#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lfboot/fgn.hpp"
#include "lfboot/powervar.hpp"

namespace lfboot {

enum class Method { CLT, LFB };

std::string to_string(Method m);
/// Parses "clt" / "lfb" (case-insensitive); throws UsageError otherwise.
Method parse_method(const std::string& text);

/// Parameters of a test of H0: alpha = alpha0 at level gamma.
struct TestSpec {
    double alpha0 = 0.0;
    double level = 0.05;
    double p = 2.0;
    std::size_t bootstrap_reps = 999;
    std::uint64_t seed = 0;
    Method method = Method::LFB;
    /// Worker threads for bootstrap draws; 0 selects default_thread_count().
    std::size_t threads = 0;
};

/// Throws UsageError if the test specification cannot be run.
void validate(const TestSpec& spec);

struct BootstrapDraw {
    double t_star;
    double alpha_star;  ///< alpha*-hat minus alpha-tilde
    double vhat_star;
    bool fallback_flag;  ///< variance clamped to a tiny positive value
};

struct TestResult {
    Method method;
    double alpha_hat;
    double alpha0;
    double statistic;  ///< (alpha_hat - alpha0) / sqrt(var_hat / n)
    double var_hat;    ///< Step-1 variance, Lambda at alpha0 + 1/2
    double ci_low;
    double ci_high;
    double q_low;   ///< bootstrap q*_{gamma/2}, or -z_{1-gamma/2}
    double q_high;  ///< bootstrap q*_{1-gamma/2}, or z_{1-gamma/2}
    bool reject;
    std::size_t bootstrap_used;
    std::size_t n;
    std::map<std::string, long> diagnostics;
};

/// Precomputed state for bootstrap draws under H0 at sample size n on the unit
/// horizon (delta = 1/n): the fBm sampler and the exact moments of V(B^H;2,v).
class LfbEngine {
public:
    LfbEngine(HurstIndex null_hurst, std::size_t n);

    BootstrapDraw draw(std::uint64_t seed) const;

    const SecondDiffMoments& moments() const noexcept { return moments_; }
    const FbmSampler& sampler() const noexcept { return sampler_; }

private:
    SecondDiffMoments moments_;
    FbmSampler sampler_;
};

/// Shared engine for (H0, n); built once and reused across calls.
std::shared_ptr<const LfbEngine> lfb_engine_cached(HurstIndex null_hurst, std::size_t n);

/// One bootstrap replication given precomputed moments.
BootstrapDraw lfb_bootstrap_draw(std::size_t n, double delta, HurstIndex null_hurst,
                                 const SecondDiffMoments& moments, std::uint64_t seed);

/// Studentized draw computed from the two fBm quadratic variations.
BootstrapDraw bootstrap_statistic(double v1_star, double v2_star, const SecondDiffMoments& moments,
                                  double p = 2.0);

/// q*_gamma is the ceil(gamma (B+1))-th smallest draw.
std::pair<double, double> bootstrap_quantiles(std::span<const double> t_star, double gamma);
std::pair<double, double> bootstrap_quantiles(std::span<const BootstrapDraw> draws, double gamma);

/// Per-draw seed for replication j of a test seeded with `master`.
std::uint64_t bootstrap_seed(std::uint64_t master, std::size_t j);

TestResult clt_test(const TimeSeries& ts, const TestSpec& spec);
TestResult lfb_test(const TimeSeries& ts, const TestSpec& spec);
/// Dispatches on spec.method.
TestResult run_test(const TimeSeries& ts, const TestSpec& spec);

/// Bootstrap T* values only (no data needed); used by lfb_test and for diagnostics.
std::vector<BootstrapDraw> bootstrap_draws(HurstIndex null_hurst, std::size_t n, std::size_t reps,
                                           std::uint64_t seed, std::size_t threads = 0);

/// Standalone CLT interval with Lambda evaluated at alpha_hat + 1/2.
std::pair<double, double> clt_confidence_interval(const TimeSeries& ts, double level);

/// z such that P(U <= z) = prob for U ~ N(0,1).
double normal_quantile(double prob);

}  // namespace lfboot
