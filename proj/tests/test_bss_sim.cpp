#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lfboot/bss_sim.hpp"
#include "lfboot/error.hpp"
#include "lfboot/powervar.hpp"
#include "lfboot/random.hpp"

using namespace lfboot;

namespace {

// int_0^inf g(u) g(u+t) du for the gamma kernel via the modified Bessel function.
double bessel_covariance(double alpha, double lambda, double t) {
    if (t == 0.0) return std::tgamma(2 * alpha + 1) / std::pow(2 * lambda, 2 * alpha + 1);
    return std::tgamma(alpha + 1) / std::sqrt(std::numbers::pi) * std::pow(t / (2 * lambda), alpha + 0.5) *
           std::cyl_bessel_k(alpha + 0.5, lambda * t);
}

double sample_sd(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= x.size();
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (x.size() - 1));
}

}  // namespace

TEST(GammaKernel, ValidatesAndEvaluates) {
    EXPECT_THROW(GammaKernel(0.5, 1.0), UsageError);
    EXPECT_THROW(GammaKernel(-0.5, 1.0), UsageError);
    EXPECT_THROW(GammaKernel(0.1, 0.0), UsageError);
    const GammaKernel g(-1.0 / 3, 2.0);
    EXPECT_NEAR(g(0.5), std::pow(0.5, -1.0 / 3) * std::exp(-1.0), 1e-15);
}

TEST(OptimalPoint, Examples) {
    EXPECT_NEAR(optimal_point(-1.0 / 3, 1), 8.0 / 27, 1e-14);
    EXPECT_NEAR(optimal_point(1.0 / 3, 1), 27.0 / 64, 1e-14);
    const double b = optimal_point(-1.0 / 3, 1000);
    EXPECT_GT(b, 999.0);
    EXPECT_LT(b, 1000.0);
    EXPECT_THROW(optimal_point(0.0, 3), UsageError);
}

TEST(OptimalPoint, LiesInCell) {
    for (double a : {-0.49, -0.3, -0.01, 0.01, 0.2, 0.49}) {
        for (long k : {1L, 2L, 3L, 10L, 1000L, 100000L, 10000000L}) {
            const double b = optimal_point(a, k);
            EXPECT_GT(b, static_cast<double>(k - 1)) << a << " " << k;
            EXPECT_LE(b, static_cast<double>(k)) << a << " " << k;
        }
    }
}

TEST(SExp, Values) {
    EXPECT_DOUBLE_EQ(s_exp(0.0), 1.0);
    const double knot = std::log(1.5);
    EXPECT_NEAR(s_exp(knot), 1.5, 1e-15);
    EXPECT_NEAR(1.5 * std::sqrt(1 - knot + knot * knot / knot), 1.5, 1e-15);
    EXPECT_NEAR(s_exp(1.0), 2.6243, 1e-4);
    double prev = s_exp(-5);
    for (double x = -4.99; x < 5; x += 0.01) {
        EXPECT_GT(s_exp(x), prev);
        prev = s_exp(x);
    }
}

TEST(KernelCovariance, MatchesBesselClosedForm) {
    for (double a : {-0.45, -1.0 / 3, -0.1, 0.0, 0.2, 1.0 / 3, 0.45}) {
        for (double lam : {0.5, 1.0, 3.0}) {
            for (double t : {0.0, 1e-4, 0.005, 0.05, 0.5, 2.0, 10.0}) {
                const double expected = bessel_covariance(a, lam, t);
                EXPECT_NEAR(kernel_covariance(GammaKernel(a, lam), t), expected, 1e-8 * expected)
                    << a << " " << lam << " " << t;
            }
        }
    }
    EXPECT_NEAR(kernel_covariance(GammaKernel(-1.0 / 3, 1.0), 0.0), 2.12628, 1e-5);
}

TEST(ExactBssSampler, CovarianceStructure) {
    const ExactBssSampler s(GammaKernel(-1.0 / 3, 1.0), 40);
    EXPECT_EQ(s.size(), 40u);
    for (std::size_t i = 0; i <= 40; i += 5) {
        EXPECT_NEAR(s.covariance(i, i), std::tgamma(1.0 / 3) / std::cbrt(2.0), 1e-8);
        for (std::size_t j = 0; j <= 40; j += 7) EXPECT_EQ(s.covariance(i, j), s.covariance(j, i));
    }
    const auto a = s.sample(3);
    const auto b = s.sample(3);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values.size(), 41u);
    EXPECT_EQ(a.scheme, Scheme::ExactCholesky);
    for (double v : a.volatility) EXPECT_EQ(v, 1.0);
}

TEST(ExactBssSampler, EmpiricalCovariance) {
    const GammaKernel k(0.2, 1.0);
    const ExactBssSampler s(k, 10);
    const std::size_t paths = 20000;
    std::vector<double> x;
    double c00 = 0, c05 = 0;
    for (std::size_t p = 0; p < paths; ++p) {
        s.sample_into(x, derive_seed(1, 2, p));
        c00 += x[0] * x[0];
        c05 += x[0] * x[5];
    }
    c00 /= paths;
    c05 /= paths;
    const double v = s.covariance(0, 0);
    EXPECT_LT(std::abs(c00 - v), 3 * v * std::sqrt(2.0 / paths));
    EXPECT_LT(std::abs(c05 - s.covariance(0, 5)), 3 * v * std::sqrt(2.0 / paths));
}

TEST(SimulateBss, ExactRejectsStochasticVolatility) {
    EXPECT_THROW(simulate_bss(GammaKernel(0.1, 1.0), SV1F{}, 50, Scheme::ExactCholesky, 1), UsageError);
    EXPECT_NO_THROW(simulate_bss(GammaKernel(0.1, 1.0), NoSV{}, 50, Scheme::ExactCholesky, 1));
}

TEST(Volatility, ModelNames) {
    EXPECT_EQ(model_name(parse_model("SV2F")), "sv2f");
    EXPECT_EQ(model_name(NoSV{}), "nosv");
    EXPECT_THROW(parse_model("garch"), UsageError);
    EXPECT_NEAR(SV1F{}.beta0, SV1F{}.beta1 * SV1F{}.beta1 / (2 * SV1F{}.xi), 1e-15);
}

TEST(Volatility, NoSvIsConstant) {
    const auto v = simulate_volatility(NoSV{}, 100, 1);
    for (double s : v.sigma) EXPECT_EQ(s, 1.0);
    EXPECT_EQ(v.dw.size(), 100u);
    EXPECT_TRUE(v.factors.empty());
}

TEST(Volatility, Sv1fStationaryVariance) {
    const SV1F m;
    const std::size_t paths = 20000;
    double s0 = 0, s1 = 0;
    for (std::size_t p = 0; p < paths; ++p) {
        const auto v = simulate_volatility(m, 20, derive_seed(4, 0, p));
        const double t0 = v.factors[0].front(), t1 = v.factors[0].back();
        s0 += t0 * t0;
        s1 += t1 * t1;
        EXPECT_NEAR(v.sigma.back(), std::exp(m.beta0 + m.beta1 * t1), 1e-12);
    }
    const double target = -1.0 / (2 * m.xi);
    const double se = target * std::sqrt(2.0 / paths);
    EXPECT_LT(std::abs(s0 / paths - target), 3 * se);
    EXPECT_LT(std::abs(s1 / paths - target), 3 * se);
}

TEST(Volatility, Sv1fCorrelationWithW) {
    // Corr(dW, d tau) over a cell is approximately rho for small cells.
    const SV1F m;
    double sw = 0, st = 0, swt = 0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < 200; ++p) {
        const auto v = simulate_volatility(m, 500, derive_seed(6, 0, p));
        for (std::size_t c = 0; c < 500; ++c) {
            const double dtau = v.factors[0][c + 1] - v.factors[0][c];
            sw += v.dw[c] * v.dw[c];
            st += dtau * dtau;
            swt += v.dw[c] * dtau;
            ++count;
        }
    }
    EXPECT_NEAR(swt / std::sqrt(sw * st), m.rho, 0.01);
}

TEST(Volatility, Sv2fSExpIdentity) {
    const SV2F m;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto v = simulate_volatility(m, 80, 30, seed);
        ASSERT_EQ(v.factors.size(), 2u);
        ASSERT_EQ(v.sigma.size(), 111u);
        for (std::size_t j = 0; j < v.sigma.size(); ++j) {
            EXPECT_EQ(v.sigma[j], s_exp(m.beta0 + m.beta1 * v.factors[0][j] + m.beta2 * v.factors[1][j]));
        }
    }
}

TEST(SimulateBssHybrid, DeterministicAndShapes) {
    for (double a : {-0.3, 0.0, 0.3}) {
        const GammaKernel k(a, 1.0);
        const auto cfg = HybridConfig::defaults_for(a);
        const auto p1 = simulate_bss_hybrid(k, SV2F{}, 50, cfg, 5);
        const auto p2 = simulate_bss_hybrid(k, SV2F{}, 50, cfg, 5);
        EXPECT_EQ(p1.values, p2.values);
        EXPECT_EQ(p1.volatility, p2.volatility);
        EXPECT_EQ(p1.values.size(), 51u);
        const auto n1 = simulate_bss_hybrid(k, NoSV{}, 50, cfg, 5);
        for (double s : n1.volatility) EXPECT_EQ(s, 1.0);
    }
    EXPECT_EQ(HybridConfig::defaults_for(-0.2).kappa, 1);
    EXPECT_EQ(HybridConfig::defaults_for(0.2).kappa, 3);
    EXPECT_THROW(simulate_bss_hybrid(GammaKernel(0.1, 1), NoSV{}, 4, HybridConfig{}, 1), UsageError);
}

TEST(SimulateBssHybrid, MarginalSdMatchesExact) {
    for (double a : {-1.0 / 3, 0.0, 1.0 / 3}) {
        const GammaKernel k(a, 1.0);
        const auto cfg = HybridConfig::defaults_for(a);
        std::vector<double> x1;
        for (std::size_t p = 0; p < 10000; ++p) {
            x1.push_back(simulate_bss_hybrid(k, NoSV{}, 200, cfg, derive_seed(8, 0, p)).values.back());
        }
        const double exact = std::sqrt(kernel_covariance(k, 0.0));
        EXPECT_NEAR(sample_sd(x1) / exact, 1.0, 0.02) << a;
    }
}

TEST(SimulateBssHybrid, IncrementVarianceMatchesExact) {
    // Var(X_{1/n} - X_0) is where the near-singular kernel part matters most.
    for (double a : {-1.0 / 3, 1.0 / 3}) {
        const GammaKernel k(a, 1.0);
        const auto cfg = HybridConfig::defaults_for(a);
        const std::size_t n = 100;
        std::vector<double> inc;
        for (std::size_t p = 0; p < 10000; ++p) {
            const auto path = simulate_bss_hybrid(k, NoSV{}, n, cfg, derive_seed(9, 0, p));
            inc.push_back(path.values[n] - path.values[n - 1]);
        }
        const double exact = std::sqrt(2 * (kernel_covariance(k, 0.0) - kernel_covariance(k, 1.0 / n)));
        EXPECT_NEAR(sample_sd(inc) / exact, 1.0, 0.03) << a;
    }
}

TEST(SimulateBssHybrid, RoughnessRecovered) {
    for (double a : {-1.0 / 3, 0.0, 1.0 / 3}) {
        const auto path = simulate_bss_hybrid(GammaKernel(a, 1.0), SV1F{}, 10000, HybridConfig::defaults_for(a), 21);
        EXPECT_NEAR(estimate_alpha(TimeSeries::unit_horizon(path.values)).alpha_hat, a, 0.05) << a;
    }
}
