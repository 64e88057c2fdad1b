#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "lfboot/bss_sim.hpp"
#include "lfboot/error.hpp"
#include "lfboot/inference.hpp"
#include "lfboot/random.hpp"
#include "test_support.hpp"

using namespace lfboot;

namespace {

TimeSeries fbm_series(double alpha, std::size_t n, std::uint64_t seed) {
    return TimeSeries::unit_horizon(simulate_fbm(HurstIndex::from_alpha(alpha), n, 1.0 / n, seed).values);
}

TestSpec spec_for(double alpha0, Method m, std::size_t reps = 199, std::uint64_t seed = 1) {
    TestSpec s;
    s.alpha0 = alpha0;
    s.method = m;
    s.bootstrap_reps = reps;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Method, ParseAndPrint) {
    EXPECT_EQ(parse_method("CLT"), Method::CLT);
    EXPECT_EQ(parse_method("lfb"), Method::LFB);
    EXPECT_EQ(to_string(Method::LFB), "lfb");
    EXPECT_THROW(parse_method("wild"), UsageError);
}

TEST(TestSpecValidation, Errors) {
    TestSpec s = spec_for(0.0, Method::LFB, 9);
    try {
        validate(s);
        FAIL() << "expected UsageError";
    } catch (const UsageError& e) {
        EXPECT_STREQ(e.what(), "B too small for requested level");
    }
    s.bootstrap_reps = 39;
    EXPECT_NO_THROW(validate(s));
    s.bootstrap_reps = 19;
    s.level = 0.1;
    EXPECT_NO_THROW(validate(s));
    s.alpha0 = 0.5;
    EXPECT_THROW(validate(s), UsageError);
    s.alpha0 = 0.0;
    s.p = 1.0;
    EXPECT_THROW(validate(s), UsageError);
    // The CLT does not care about B.
    EXPECT_NO_THROW(validate(spec_for(0.0, Method::CLT, 1)));
}

TEST(BootstrapQuantiles, OrderStatistics) {
    std::vector<double> d(19);
    std::iota(d.begin(), d.end(), 1.0);
    const auto [lo, hi] = bootstrap_quantiles(std::span<const double>(d), 0.1);
    EXPECT_EQ(lo, 1.0);
    EXPECT_EQ(hi, 19.0);

    std::vector<double> e(999);
    std::iota(e.rbegin(), e.rend(), 1.0);  // descending input; sorted internally
    const auto [lo2, hi2] = bootstrap_quantiles(std::span<const double>(e), 0.05);
    EXPECT_EQ(lo2, 25.0);
    EXPECT_EQ(hi2, 975.0);

    std::vector<double> c(99, 2.5);
    const auto [lo3, hi3] = bootstrap_quantiles(std::span<const double>(c), 0.05);
    EXPECT_EQ(lo3, 2.5);
    EXPECT_EQ(hi3, 2.5);

    std::vector<double> few(10, 0.0);
    EXPECT_THROW(bootstrap_quantiles(std::span<const double>(few), 0.05), UsageError);
}

TEST(LfbDraw, DeterministicAndConsistentWithEngine) {
    const HurstIndex h(0.5);
    const auto m = exact_pv_moments(h, 100, 0.01);
    const auto a = lfb_bootstrap_draw(100, 0.01, h, m, 1234);
    const auto b = lfb_bootstrap_draw(100, 0.01, h, m, 1234);
    EXPECT_EQ(a.t_star, b.t_star);
    EXPECT_EQ(a.vhat_star, b.vhat_star);
    const auto e = lfb_engine_cached(h, 100)->draw(1234);
    EXPECT_EQ(a.t_star, e.t_star);
    EXPECT_GT(a.vhat_star, 0.0);
    EXPECT_FALSE(a.fallback_flag);
    EXPECT_THROW(lfb_bootstrap_draw(101, 0.01, h, m, 1), UsageError);
}

TEST(LfbDraw, MuRatioAtBrownianMotion) {
    for (std::size_t n : {10u, 100u, 10000u}) {
        const auto m = exact_pv_moments(HurstIndex(0.5), n, 1.0 / n);
        EXPECT_NEAR(m.mu1 / m.mu2, 2.0 * (n - 1) / (4.0 * (n - 3)), 1e-12);
    }
}

TEST(LfbDraw, StatisticAtMeansIsZero) {
    const auto m = exact_pv_moments(HurstIndex(0.3), 200, 1.0 / 200);
    const auto d = bootstrap_statistic(m.mu1, m.mu2, m);
    EXPECT_NEAR(d.t_star, 0.0, 1e-12);
    // At the means A + B + C reduces to the delta-method variance of log(V2/V1).
    const double expected = 200.0 *
                            (m.var_v1 / (m.mu1 * m.mu1) + m.var_v2 / (m.mu2 * m.mu2) -
                             2 * m.cov_v12 / (m.mu1 * m.mu2)) /
                            std::pow(2 * std::log(2.0), 2);
    EXPECT_NEAR(d.vhat_star, expected, 1e-12 * expected);
}

TEST(LfbDraw, NullDistributionIsNearStandardNormal) {
    // Reference means of T* at n = 500 from an independent simulation (numpy
    // Cholesky of the fGn covariance, moments by brute force, 2e5 draws each,
    // SE 0.0022). The studentized log-ratio has an O(n^{-1/2}) bias that
    // grows with H.
    const std::pair<double, double> cases[] = {{0.2, -0.0076}, {0.5, -0.0223}, {0.8, -0.0432}};
    for (const auto& [h, ref_mean] : cases) {
        const auto draws = bootstrap_draws(HurstIndex(h), 500, 10000, 42);
        std::vector<double> t;
        for (const auto& d : draws) t.push_back(d.t_star);
        const double mean = std::accumulate(t.begin(), t.end(), 0.0) / t.size();
        double var = 0;
        for (double x : t) var += (x - mean) * (x - mean);
        var /= t.size() - 1;
        const double se = std::sqrt(var / t.size() + 0.0022 * 0.0022);
        EXPECT_LT(std::abs(mean - ref_mean), 3 * se) << h;
        EXPECT_GT(var, 0.9) << h;
        EXPECT_LT(var, 1.1) << h;
        EXPECT_LT(testing_support::ks_distance_normal(t), 0.02) << h;
    }
}

TEST(CltTest, ExactNullGivesZeroStatistic) {
    const auto ts = fbm_series(0.0, 300, 5);
    const double ah = estimate_alpha(ts).alpha_hat;
    const auto r = clt_test(ts, spec_for(ah, Method::CLT));
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_FALSE(r.reject);
}

TEST(CltTest, RejectMatchesIntervalAndThreshold) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto ts = fbm_series(0.15, 80, seed);
        for (double a0 : {-0.2, 0.0, 0.2}) {
            const auto r = clt_test(ts, spec_for(a0, Method::CLT));
            EXPECT_LE(r.ci_low, r.ci_high);
            EXPECT_EQ(r.reject, a0 < r.ci_low || a0 > r.ci_high);
            EXPECT_EQ(r.reject, std::abs(r.statistic) > normal_quantile(0.975));
            EXPECT_EQ(r.bootstrap_used, 0u);
        }
    }
}

TEST(CltTest, StandaloneIntervalUsesEstimate) {
    const auto ts = fbm_series(-0.2, 400, 9);
    const auto [lo, hi] = clt_confidence_interval(ts, 0.05);
    const auto est = estimate_alpha(ts);
    EXPECT_NEAR(0.5 * (lo + hi), est.alpha_hat, 1e-14);
    EXPECT_NEAR(hi - lo, 2 * normal_quantile(0.975) * std::sqrt(*est.var_hat / 400), 1e-12);
}

TEST(CltTest, ErrorsOnBadInput) {
    EXPECT_THROW(clt_test(TimeSeries(std::vector<double>(30, 2.0), 1.0), spec_for(0, Method::CLT)), DataError);
    EXPECT_THROW(clt_test(fbm_series(0, 4, 1), spec_for(0, Method::CLT)), DataError);
    EXPECT_THROW(clt_test(fbm_series(0, 50, 1), spec_for(-0.5, Method::CLT)), UsageError);
}

TEST(LfbTest, RejectMatchesInterval) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ts = fbm_series(0.1, 60, 100 + seed);
        for (double a0 : {-0.25, 0.0, 0.25}) {
            const auto r = lfb_test(ts, spec_for(a0, Method::LFB, 199, seed));
            EXPECT_LE(r.ci_low, r.ci_high);
            EXPECT_LE(r.q_low, r.q_high);
            EXPECT_EQ(r.reject, a0 < r.ci_low || a0 > r.ci_high);
            EXPECT_EQ(r.bootstrap_used, 199u);
            EXPECT_EQ(r.diagnostics.at("variance_clamps"), 0);
        }
    }
}

TEST(LfbTest, QuantilesDoNotDependOnData) {
    const auto a = fbm_series(-0.3, 150, 1);
    std::vector<double> other(151);
    Rng rng = make_rng(99);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& x : other) x = u(rng);
    const auto b = TimeSeries::unit_horizon(other);
    const auto spec = spec_for(0.1, Method::LFB, 499, 2024);
    const auto ra = lfb_test(a, spec);
    const auto rb = lfb_test(b, spec);
    EXPECT_EQ(ra.q_low, rb.q_low);
    EXPECT_EQ(ra.q_high, rb.q_high);
    EXPECT_NE(ra.alpha_hat, rb.alpha_hat);
}

TEST(LfbTest, IndependentOfThreadCount) {
    const auto ts = fbm_series(0.0, 120, 3);
    auto spec = spec_for(0.0, Method::LFB, 299, 8);
    spec.threads = 1;
    const auto one = lfb_test(ts, spec);
    spec.threads = 4;
    const auto four = lfb_test(ts, spec);
    EXPECT_EQ(one.q_low, four.q_low);
    EXPECT_EQ(one.q_high, four.q_high);
    EXPECT_EQ(one.ci_low, four.ci_low);
}

TEST(LfbTest, SmallBRejectedBeforeWork) {
    auto spec = spec_for(0.0, Method::LFB, 9);
    EXPECT_THROW(lfb_test(fbm_series(0, 50, 1), spec), UsageError);
}

TEST(RunTest, Dispatches) {
    const auto ts = fbm_series(0.0, 50, 2);
    EXPECT_EQ(run_test(ts, spec_for(0, Method::CLT)).method, Method::CLT);
    EXPECT_EQ(run_test(ts, spec_for(0, Method::LFB)).method, Method::LFB);
}

TEST(NormalQuantile, Values) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
    EXPECT_THROW(normal_quantile(1.0), UsageError);
}
