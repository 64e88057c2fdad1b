#include "lfboot/inference.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "lfboot/error.hpp"
#include "lfboot/parallel.hpp"
#include "lfboot/random.hpp"

namespace lfboot {
namespace {

constexpr std::uint64_t kDrawTag = stream_tag("lfb-draw");

// 1-based order-statistic index ceil(q (B+1)), robust to representation error in q.
std::size_t order_index(double q, std::size_t reps) {
    const double x = q * static_cast<double>(reps + 1);
    const double r = std::round(x);
    const double k = std::abs(x - r) < 1e-9 ? r : std::ceil(x);
    return static_cast<std::size_t>(k);
}

void check_level_for_reps(double level, std::size_t reps) {
    if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
    const double lower = static_cast<double>(reps + 1) * level / 2.0;
    if (lower < 1.0 - 1e-9) throw UsageError("B too small for requested level");
}

void check_series(const TimeSeries& ts) {
    if (ts.n() < 5) throw DataError("series too short: need at least 6 observations");
}

}  // namespace

std::string to_string(Method m) { return m == Method::CLT ? "clt" : "lfb"; }

Method parse_method(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "clt") return Method::CLT;
    if (t == "lfb" || t == "boot" || t == "bootstrap") return Method::LFB;
    throw UsageError("unknown method '" + text + "' (expected clt or lfb)");
}

void validate(const TestSpec& spec) {
    if (!(spec.alpha0 > -0.5 && spec.alpha0 < 0.5)) {
        throw UsageError("alpha0 must lie in (-0.5, 0.5)");
    }
    if (spec.p != 2.0) throw UsageError("tests are available only for p = 2");
    if (!(spec.level > 0.0 && spec.level < 1.0)) throw UsageError("level must lie in (0, 1)");
    if (spec.method == Method::LFB) {
        check_level_for_reps(spec.level, spec.bootstrap_reps);
        if (spec.bootstrap_reps < 19) throw UsageError("bootstrap needs B >= 19");
    }
}

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw UsageError("probability must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

std::uint64_t bootstrap_seed(std::uint64_t master, std::size_t j) {
    return derive_seed(master, kDrawTag, j);
}

BootstrapDraw bootstrap_statistic(double v1, double v2, const SecondDiffMoments& m, double p) {
    const double mu1 = m.mu1;
    const double mu2 = m.mu2;
    const double inv_delta = 1.0 / m.delta;

    // COF* = (mu1/mu2) V*(2)/V*(1) times the data COF; the data factor equals
    // alpha-tilde's and cancels in alpha*-hat - alpha-tilde.
    const double diff = std::log2((mu1 / mu2) * (v2 / v1)) / p;

    const double x1 = v1 / (mu1 * mu1);
    const double x2 = v2 / (mu2 * mu2);
    const double a = inv_delta * x1 * x1 * m.var_v1;
    const double b = inv_delta * x2 * x2 * m.var_v2;
    const double c = -2.0 * x1 * x2 * inv_delta * m.cov_v12;
    double varsigma = a + b + c;
    bool clamped = false;
    if (!(varsigma > 0.0)) {
        varsigma = 1e-15 * (a + b);
        clamped = true;
    }
    const double scale = p * std::numbers::ln2;
    const double vhat = varsigma / (scale * scale);
    const double t = std::sqrt(inv_delta) * diff / std::sqrt(vhat);
    return BootstrapDraw{t, diff, vhat, clamped};
}

LfbEngine::LfbEngine(HurstIndex null_hurst, std::size_t n)
    : moments_(exact_pv_moments(null_hurst, n, 1.0 / static_cast<double>(n))),
      sampler_(null_hurst, n, 1.0 / static_cast<double>(n)) {}

BootstrapDraw LfbEngine::draw(std::uint64_t seed) const {
    std::vector<double> path(sampler_.size() + 1);
    sampler_.sample_into(path, seed);
    const double v1 = power_variation(path, 2.0, 1);
    const double v2 = power_variation(path, 2.0, 2);
    return bootstrap_statistic(v1, v2, moments_);
}

std::shared_ptr<const LfbEngine> lfb_engine_cached(HurstIndex null_hurst, std::size_t n) {
    static std::mutex mutex;
    static std::map<std::pair<double, std::size_t>, std::shared_ptr<const LfbEngine>> cache;
    const auto key = std::make_pair(null_hurst.value(), n);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto engine = std::make_shared<const LfbEngine>(null_hurst, n);
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(engine)).first->second;
}

BootstrapDraw lfb_bootstrap_draw(std::size_t n, double delta, HurstIndex null_hurst,
                                 const SecondDiffMoments& moments, std::uint64_t seed) {
    if (moments.n != n || moments.hurst != null_hurst) {
        throw UsageError("moments were computed for a different (H0, n)");
    }
    FbmSampler sampler(null_hurst, n, delta);
    std::vector<double> path(n + 1);
    sampler.sample_into(path, seed);
    return bootstrap_statistic(power_variation(path, 2.0, 1), power_variation(path, 2.0, 2),
                               moments);
}

std::pair<double, double> bootstrap_quantiles(std::span<const double> t_star, double gamma) {
    const std::size_t reps = t_star.size();
    check_level_for_reps(gamma, reps);
    std::vector<double> sorted(t_star.begin(), t_star.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t lo = order_index(gamma / 2.0, reps);
    const std::size_t hi = order_index(1.0 - gamma / 2.0, reps);
    return {sorted[lo - 1], sorted[std::min(hi, reps) - 1]};
}

std::pair<double, double> bootstrap_quantiles(std::span<const BootstrapDraw> draws, double gamma) {
    std::vector<double> t(draws.size());
    std::transform(draws.begin(), draws.end(), t.begin(), [](const BootstrapDraw& d) { return d.t_star; });
    return bootstrap_quantiles(t, gamma);
}

std::vector<BootstrapDraw> bootstrap_draws(HurstIndex null_hurst, std::size_t n, std::size_t reps,
                                           std::uint64_t seed, std::size_t threads) {
    const auto engine = lfb_engine_cached(null_hurst, n);
    std::vector<BootstrapDraw> draws(reps);
    parallel_for(
        reps, [&](std::size_t j) { draws[j] = engine->draw(bootstrap_seed(seed, j)); }, threads);
    return draws;
}

namespace {

struct NullVariance {
    RoughnessEstimate estimate;
    double var_hat;
};

NullVariance null_imposed(const TimeSeries& ts, const TestSpec& spec) {
    validate(spec);
    check_series(ts);
    const auto h0 = HurstIndex::from_alpha(spec.alpha0);
    RoughnessEstimate est = estimate_alpha(ts, spec.p, h0);
    const double v = est.var_hat.value();
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericalError("non-positive variance estimate");
    return {std::move(est), v};
}

}  // namespace

TestResult clt_test(const TimeSeries& ts, const TestSpec& spec) {
    TestSpec s = spec;
    s.method = Method::CLT;
    const auto [est, v] = null_imposed(ts, s);
    const double n = static_cast<double>(ts.n());
    const double se = std::sqrt(v / n);
    const double z = normal_quantile(1.0 - s.level / 2.0);

    TestResult r{};
    r.method = Method::CLT;
    r.alpha_hat = est.alpha_hat;
    r.alpha0 = s.alpha0;
    r.statistic = (est.alpha_hat - s.alpha0) / se;
    r.var_hat = v;
    r.ci_low = est.alpha_hat - z * se;
    r.ci_high = est.alpha_hat + z * se;
    r.q_low = -z;
    r.q_high = z;
    r.reject = s.alpha0 < r.ci_low || s.alpha0 > r.ci_high;
    r.bootstrap_used = 0;
    r.n = ts.n();
    return r;
}

TestResult lfb_test(const TimeSeries& ts, const TestSpec& spec) {
    TestSpec s = spec;
    s.method = Method::LFB;
    const auto [est, v] = null_imposed(ts, s);
    const auto h0 = HurstIndex::from_alpha(s.alpha0);
    const std::size_t n = ts.n();

    const auto draws = bootstrap_draws(h0, n, s.bootstrap_reps, s.seed, s.threads);
    const auto [q_lo, q_hi] = bootstrap_quantiles(std::span<const BootstrapDraw>(draws), s.level);
    long clamps = 0;
    for (const auto& d : draws) clamps += d.fallback_flag ? 1 : 0;

    const double se = std::sqrt(v / static_cast<double>(n));
    TestResult r{};
    r.method = Method::LFB;
    r.alpha_hat = est.alpha_hat;
    r.alpha0 = s.alpha0;
    r.statistic = (est.alpha_hat - s.alpha0) / se;
    r.var_hat = v;
    r.ci_low = est.alpha_hat - q_hi * se;
    r.ci_high = est.alpha_hat - q_lo * se;
    r.q_low = q_lo;
    r.q_high = q_hi;
    r.reject = s.alpha0 < r.ci_low || s.alpha0 > r.ci_high;
    r.bootstrap_used = draws.size();
    r.n = n;
    r.diagnostics["variance_clamps"] = clamps;
    r.diagnostics["cholesky_fallback"] =
        lfb_engine_cached(h0, n)->sampler().method() == FbmMethod::Cholesky ? 1 : 0;
    return r;
}

TestResult run_test(const TimeSeries& ts, const TestSpec& spec) {
    return spec.method == Method::CLT ? clt_test(ts, spec) : lfb_test(ts, spec);
}

std::pair<double, double> clt_confidence_interval(const TimeSeries& ts, double level) {
    if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
    check_series(ts);
    const RoughnessEstimate est = estimate_alpha(ts, 2.0);
    const double se = std::sqrt(est.var_hat.value() / static_cast<double>(ts.n()));
    const double z = normal_quantile(1.0 - level / 2.0);
    return {est.alpha_hat - z * se, est.alpha_hat + z * se};
}

}  // namespace lfboot
