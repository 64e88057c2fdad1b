#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfboot/bss_sim.hpp"
#include "lfboot/inference.hpp"

namespace lfboot {

/// Monte Carlo design for size and size-adjusted power of the two tests.
struct ExperimentPlan {
    VolatilityModel vol_model = NoSV{};
    double alpha_true = 0.0;
    double alpha0 = 0.0;
    std::vector<std::size_t> n_grid{20, 40, 80, 160, 320};
    std::size_t mc_reps = 1000;
    std::size_t bootstrap_reps = 199;
    double level = 0.05;
    std::uint64_t master_seed = 20160101;
    double lambda = 1.0;
    double p = 2.0;
    /// Exact Cholesky for NoSV, hybrid scheme otherwise, unless set.
    std::optional<Scheme> scheme;
    /// Workers across replications; 0 selects default_thread_count().
    std::size_t threads = 0;
};

struct CellResult {
    std::size_t n;
    Method method;
    double rejection_rate;
    double mc_se;  ///< sqrt(r (1 - r) / reps)
    double runtime_ms;
    std::size_t rejections;
    std::size_t reps;
    /// Size-adjusted CLT cells: the recalibrated critical value and its target size.
    std::optional<double> critical_value;
    std::optional<double> target_size;
};

/// Throws UsageError for an invalid plan (empty grid, n < 5, fewer than 100 reps, ...).
void validate(const ExperimentPlan& plan);

/// Rejection rates under H0 (requires alpha_true == alpha0). Both tests see the
/// same simulated path within a replication. Two cells per n: CLT then LFB.
std::vector<CellResult> run_size_experiment(const ExperimentPlan& plan);

/// Size-adjusted power (requires alpha_true != alpha0). The CLT critical value
/// is recalibrated under H0 on an independent seed stream so that the CLT's
/// empirical size equals the bootstrap's; the bootstrap keeps its nominal rule.
std::vector<CellResult> run_power_experiment(const ExperimentPlan& plan);

/// Smallest c with #{|stat| > c} = round(target * count).
double size_adjusted_critical_value(std::vector<double> abs_stats, double target);

/// CSV with header n,method,rejection_rate,mc_se,runtime_ms; 17 significant digits.
std::string cells_to_csv(const std::vector<CellResult>& cells);

}  // namespace lfboot
