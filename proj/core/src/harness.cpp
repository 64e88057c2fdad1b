#include "lfboot/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lfboot/error.hpp"
#include "lfboot/parallel.hpp"
#include "lfboot/random.hpp"

namespace lfboot {
namespace {

struct Replication {
    bool clt_reject = false;
    bool lfb_reject = false;
    double abs_stat = 0.0;
};

struct Batch {
    std::vector<Replication> reps;
    double runtime_ms = 0.0;
};

Scheme scheme_for(const ExperimentPlan& plan) {
    if (plan.scheme) return *plan.scheme;
    return std::holds_alternative<NoSV>(plan.vol_model) ? Scheme::ExactCholesky : Scheme::Hybrid;
}

// Simulates `plan.mc_reps` paths with roughness `alpha` at size n and runs both tests.
Batch run_batch(const ExperimentPlan& plan, double alpha, std::size_t n, std::uint64_t stream) {
    const GammaKernel kernel(alpha, plan.lambda);
    const Scheme scheme = scheme_for(plan);
    const auto path_tag = stream_tag("path") ^ stream;
    const auto boot_tag = stream_tag("bootstrap") ^ stream;

    TestSpec spec;
    spec.alpha0 = plan.alpha0;
    spec.level = plan.level;
    spec.p = plan.p;
    spec.bootstrap_reps = plan.bootstrap_reps;
    spec.threads = 1;

    if (scheme == Scheme::ExactCholesky) exact_sampler_cached(kernel, n);
    lfb_engine_cached(HurstIndex::from_alpha(plan.alpha0), n);

    const auto start = std::chrono::steady_clock::now();
    Batch batch{std::vector<Replication>(plan.mc_reps), 0.0};
    parallel_for(
        plan.mc_reps,
        [&](std::size_t r) {
            const std::uint64_t cell = (static_cast<std::uint64_t>(n) << 32) ^ r;
            const BssPath path =
                simulate_bss(kernel, plan.vol_model, n, scheme, derive_seed(plan.master_seed, path_tag, cell));
            const TimeSeries ts = TimeSeries::unit_horizon(path.values);
            TestSpec s = spec;
            s.seed = derive_seed(plan.master_seed, boot_tag, cell);
            const TestResult clt = clt_test(ts, s);
            const TestResult lfb = lfb_test(ts, s);
            batch.reps[r] = Replication{clt.reject, lfb.reject, std::abs(clt.statistic)};
        },
        plan.threads);
    batch.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return batch;
}

CellResult make_cell(std::size_t n, Method method, std::size_t rejections, std::size_t reps,
                     double runtime_ms) {
    const double r = static_cast<double>(rejections) / static_cast<double>(reps);
    return CellResult{n,          method, r, std::sqrt(r * (1.0 - r) / static_cast<double>(reps)),
                      runtime_ms, rejections, reps, std::nullopt, std::nullopt};
}

std::size_t count_if_reps(const Batch& b, bool Replication::*field) {
    return static_cast<std::size_t>(
        std::count_if(b.reps.begin(), b.reps.end(), [&](const Replication& r) { return r.*field; }));
}

constexpr std::uint64_t kSizeStream = 0x51ce;
constexpr std::uint64_t kCalibrationStream = 0xca11b;
constexpr std::uint64_t kPowerStream = 0x90e4;

}  // namespace

void validate(const ExperimentPlan& plan) {
    if (plan.n_grid.empty()) throw UsageError("n grid is empty");
    for (const auto n : plan.n_grid) {
        if (n < 5) throw UsageError("every n in the grid must be >= 5");
    }
    if (plan.mc_reps < 100) throw UsageError("mc_reps must be >= 100 for a reportable cell");
    if (plan.p != 2.0) throw UsageError("experiments are defined for p = 2 only");
    if (!(plan.lambda > 0.0)) throw UsageError("lambda must be positive");
    (void)GammaKernel(plan.alpha_true, plan.lambda);
    TestSpec spec;
    spec.alpha0 = plan.alpha0;
    spec.level = plan.level;
    spec.bootstrap_reps = plan.bootstrap_reps;
    spec.method = Method::LFB;
    validate(spec);
    if (scheme_for(plan) == Scheme::ExactCholesky && !std::holds_alternative<NoSV>(plan.vol_model)) {
        throw UsageError("exact Cholesky simulation requires constant volatility (nosv)");
    }
}

std::vector<CellResult> run_size_experiment(const ExperimentPlan& plan) {
    validate(plan);
    if (plan.alpha_true != plan.alpha0) {
        throw UsageError("size experiment requires alpha_true == alpha0");
    }
    std::vector<CellResult> cells;
    for (const auto n : plan.n_grid) {
        const Batch b = run_batch(plan, plan.alpha_true, n, kSizeStream);
        cells.push_back(make_cell(n, Method::CLT, count_if_reps(b, &Replication::clt_reject), plan.mc_reps,
                                  b.runtime_ms));
        cells.push_back(make_cell(n, Method::LFB, count_if_reps(b, &Replication::lfb_reject), plan.mc_reps,
                                  b.runtime_ms));
    }
    return cells;
}

double size_adjusted_critical_value(std::vector<double> abs_stats, double target) {
    const std::size_t count = abs_stats.size();
    if (count == 0) throw UsageError("no statistics to calibrate against");
    if (!(target > 0.0 && target < 1.0)) {
        throw UsageError("unadjustable: target size must lie strictly between 0 and 1");
    }
    auto k = static_cast<std::size_t>(std::llround(target * static_cast<double>(count)));
    k = std::clamp<std::size_t>(k, 1, count - 1);
    std::sort(abs_stats.begin(), abs_stats.end());
    // Exactly k statistics lie strictly above the (count - k)-th smallest, barring ties.
    return abs_stats[count - k - 1];
}

std::vector<CellResult> run_power_experiment(const ExperimentPlan& plan) {
    validate(plan);
    if (plan.alpha_true == plan.alpha0) {
        throw UsageError("power experiment requires alpha_true != alpha0");
    }
    ExperimentPlan null_plan = plan;
    null_plan.alpha_true = plan.alpha0;

    std::vector<CellResult> cells;
    for (const auto n : plan.n_grid) {
        const Batch calib = run_batch(null_plan, plan.alpha0, n, kCalibrationStream);
        const std::size_t boot_rejections = count_if_reps(calib, &Replication::lfb_reject);
        if (boot_rejections == 0 || boot_rejections == plan.mc_reps) {
            throw UsageError("unadjustable: bootstrap empirical size is 0 or 1 at n = " + std::to_string(n));
        }
        const double target = static_cast<double>(boot_rejections) / static_cast<double>(plan.mc_reps);
        std::vector<double> abs_stats;
        abs_stats.reserve(calib.reps.size());
        for (const auto& r : calib.reps) abs_stats.push_back(r.abs_stat);
        const double crit = size_adjusted_critical_value(abs_stats, target);

        const Batch alt = run_batch(plan, plan.alpha_true, n, kPowerStream);
        std::size_t clt_rej = 0;
        for (const auto& r : alt.reps) clt_rej += r.abs_stat > crit ? 1 : 0;
        CellResult clt = make_cell(n, Method::CLT, clt_rej, plan.mc_reps, calib.runtime_ms + alt.runtime_ms);
        clt.critical_value = crit;
        clt.target_size = target;
        cells.push_back(clt);
        cells.push_back(make_cell(n, Method::LFB, count_if_reps(alt, &Replication::lfb_reject), plan.mc_reps,
                                  alt.runtime_ms));
    }
    return cells;
}

std::string cells_to_csv(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "n,method,rejection_rate,mc_se,runtime_ms\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& c : cells) {
        out << c.n << ',' << to_string(c.method) << ',' << num(c.rejection_rate) << ',' << num(c.mc_se) << ','
            << num(c.runtime_ms) << '\n';
    }
    return out.str();
}

}  // namespace lfboot
