#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "lfboot/error.hpp"
#include "lfboot/harness.hpp"

using namespace lfboot;

namespace {

ExperimentPlan small_plan() {
    ExperimentPlan p;
    p.n_grid = {20, 40};
    p.mc_reps = 100;
    p.bootstrap_reps = 39;
    return p;
}

void expect_same_rates(const std::vector<CellResult>& a, const std::vector<CellResult>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].n, b[i].n);
        EXPECT_EQ(a[i].method, b[i].method);
        EXPECT_EQ(a[i].rejections, b[i].rejections);
        EXPECT_EQ(a[i].rejection_rate, b[i].rejection_rate);
        EXPECT_EQ(a[i].mc_se, b[i].mc_se);
        EXPECT_EQ(a[i].critical_value, b[i].critical_value);
    }
}

}  // namespace

TEST(ExperimentPlan, Validation) {
    auto p = small_plan();
    p.mc_reps = 0;
    EXPECT_THROW(validate(p), UsageError);
    EXPECT_THROW(run_size_experiment(p), UsageError);
    p = small_plan();
    p.n_grid = {};
    EXPECT_THROW(validate(p), UsageError);
    p.n_grid = {4};
    EXPECT_THROW(validate(p), UsageError);
    p = small_plan();
    p.bootstrap_reps = 9;
    EXPECT_THROW(validate(p), UsageError);
    p = small_plan();
    p.vol_model = SV1F{};
    p.scheme = Scheme::ExactCholesky;
    EXPECT_THROW(validate(p), UsageError);
    p = small_plan();
    p.alpha_true = 0.1;
    EXPECT_THROW(run_size_experiment(p), UsageError);
    p.alpha_true = 0.0;
    EXPECT_THROW(run_power_experiment(p), UsageError);
}

TEST(SizeAdjustedCriticalValue, CountsExceedances) {
    std::vector<double> s(100);
    std::iota(s.begin(), s.end(), 1.0);
    const double c = size_adjusted_critical_value(s, 0.05);
    EXPECT_EQ(std::count_if(s.begin(), s.end(), [&](double x) { return x > c; }), 5);
    const double c2 = size_adjusted_critical_value(s, 0.2);
    EXPECT_EQ(std::count_if(s.begin(), s.end(), [&](double x) { return x > c2; }), 20);
    EXPECT_THROW(size_adjusted_critical_value(s, 0.0), UsageError);
    EXPECT_THROW(size_adjusted_critical_value(s, 1.0), UsageError);
    EXPECT_THROW(size_adjusted_critical_value({}, 0.05), UsageError);
}

TEST(SizeExperiment, CellsAndBinomialSe) {
    const auto cells = run_size_experiment(small_plan());
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[0].method, Method::CLT);
    EXPECT_EQ(cells[1].method, Method::LFB);
    EXPECT_EQ(cells[2].n, 40u);
    for (const auto& c : cells) {
        EXPECT_EQ(c.reps, 100u);
        EXPECT_DOUBLE_EQ(c.rejection_rate, c.rejections / 100.0);
        EXPECT_DOUBLE_EQ(c.mc_se, std::sqrt(c.rejection_rate * (1 - c.rejection_rate) / 100.0));
        EXPECT_GE(c.runtime_ms, 0.0);
    }
}

TEST(SizeExperiment, ReproducibleAcrossRunsAndThreads) {
    auto p = small_plan();
    p.threads = 1;
    const auto one = run_size_experiment(p);
    p.threads = 4;
    const auto four = run_size_experiment(p);
    const auto again = run_size_experiment(p);
    expect_same_rates(one, four);
    expect_same_rates(four, again);
    p.master_seed += 1;
    const auto other = run_size_experiment(p);
    bool any_diff = false;
    for (std::size_t i = 0; i < other.size(); ++i) any_diff |= other[i].rejections != one[i].rejections;
    EXPECT_TRUE(any_diff);
}

TEST(SizeExperiment, StochasticVolatilityPanelsRun) {
    for (VolatilityModel m : {VolatilityModel{SV1F{}}, VolatilityModel{SV2F{}}}) {
        auto p = small_plan();
        p.vol_model = m;
        p.n_grid = {20};
        p.alpha_true = p.alpha0 = -1.0 / 3;
        const auto cells = run_size_experiment(p);
        ASSERT_EQ(cells.size(), 2u);
        for (const auto& c : cells) {
            EXPECT_GE(c.rejection_rate, 0.0);
            EXPECT_LE(c.rejection_rate, 0.5);
        }
    }
}

TEST(SizeExperiment, CltOversizedRelativeToLfbAtSmallN) {
    // One-sided two-proportion z-test at the 1% level, 1000 replications per panel.
    for (VolatilityModel m : {VolatilityModel{NoSV{}}, VolatilityModel{SV1F{}}, VolatilityModel{SV2F{}}}) {
        ExperimentPlan p;
        p.vol_model = m;
        p.n_grid = {20};
        p.mc_reps = 1000;
        p.bootstrap_reps = 199;
        const auto cells = run_size_experiment(p);
        const double clt = cells[0].rejection_rate, lfb = cells[1].rejection_rate;
        const double z = (clt - lfb) / std::hypot(cells[0].mc_se, cells[1].mc_se);
        EXPECT_GT(z, 2.326) << model_name(m) << " clt=" << clt << " lfb=" << lfb;
    }
}

TEST(PowerExperiment, SizeAdjustmentAndShape) {
    auto p = small_plan();
    p.n_grid = {40};
    p.mc_reps = 200;
    p.alpha_true = -0.3;
    const auto cells = run_power_experiment(p);
    ASSERT_EQ(cells.size(), 2u);
    ASSERT_TRUE(cells[0].critical_value.has_value());
    ASSERT_TRUE(cells[0].target_size.has_value());
    EXPECT_GT(*cells[0].target_size, 0.0);
    EXPECT_LT(*cells[0].target_size, 1.0);
    EXPECT_GT(*cells[0].critical_value, 0.0);
    EXPECT_FALSE(cells[1].critical_value.has_value());
    // Far from H0 the bootstrap rejects well above its nominal 5%.
    EXPECT_GT(cells[1].rejection_rate, 0.15);
}

TEST(CellsToCsv, Format) {
    std::vector<CellResult> cells{
        CellResult{20, Method::CLT, 0.1, 0.03, 12.5, 10, 100, std::nullopt, std::nullopt},
        CellResult{20, Method::LFB, 1.0 / 3, 0.0, 1.0, 1, 3, std::nullopt, std::nullopt}};
    const std::string csv = cells_to_csv(cells);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "n,method,rejection_rate,mc_se,runtime_ms");
    std::getline(in, line);
    EXPECT_EQ(line, "20,clt,0.10000000000000001,0.029999999999999999,12.5");
    std::getline(in, line);
    EXPECT_EQ(line, "20,lfb,0.33333333333333331,0,1");
}
