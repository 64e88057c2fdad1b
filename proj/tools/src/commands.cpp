#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "csv_io.hpp"
#include "lfboot/bss_sim.hpp"
#include "lfboot/error.hpp"
#include "lfboot/harness.hpp"
#include "lfboot/inference.hpp"
#include "lfboot/parallel.hpp"
#include "lfboot/random.hpp"
#include "lfboot/version.hpp"
#include "manifest.hpp"

namespace lfboot::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct SeedChoice {
    std::uint64_t value;
    bool from_entropy;
};

SeedChoice resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return {*seed, false};
    return {entropy_seed(), true};
}

RunManifest start_manifest(const std::string& command, const SeedChoice& seed) {
    RunManifest m;
    m.command = command;
    m.master_seed = seed.value;
    m.seed_from_entropy = seed.from_entropy;
    m.library_version = kVersion;
    m.started_at = utc_timestamp();
    return m;
}

Scheme parse_scheme(const std::string& s) {
    if (s == "hybrid") return Scheme::Hybrid;
    if (s == "exact") return Scheme::ExactCholesky;
    throw UsageError("unknown scheme '" + s + "' (expected hybrid or exact)");
}

std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument(item);
            grid.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw UsageError("invalid --n-grid entry '" + item + "'");
        }
    }
    if (grid.empty()) throw UsageError("--n-grid is empty");
    return grid;
}

json result_record(const std::string& series, const TestResult& r, const TestSpec& spec) {
    json j;
    j["series"] = series;
    j["n"] = r.n;
    j["alpha_hat"] = r.alpha_hat;
    j["alpha0"] = r.alpha0;
    j["method"] = to_string(r.method);
    j["statistic"] = r.statistic;
    j["var_hat"] = r.var_hat;
    j["ci"] = {r.ci_low, r.ci_high};
    j["quantiles"] = {r.q_low, r.q_high};
    j["level"] = spec.level;
    j["reject"] = r.reject;
    j["B"] = r.bootstrap_used;
    j["seed"] = spec.seed;
    j["diagnostics"] = json::object();
    for (const auto& [k, v] : r.diagnostics) j["diagnostics"][k] = v;
    return j;
}

// ---- simulate ----

struct SimulateArgs {
    double alpha = 0.0;
    double lambda = 1.0;
    std::size_t n = 320;
    std::size_t paths = 1;
    std::string vol = "nosv";
    std::string scheme = "hybrid";
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const SeedChoice seed = resolve_seed(a.seed);
    RunManifest manifest = start_manifest("simulate", seed);
    const GammaKernel kernel(a.alpha, a.lambda);
    const VolatilityModel model = parse_model(a.vol);
    const Scheme scheme = parse_scheme(a.scheme);
    if (scheme == Scheme::ExactCholesky && !std::holds_alternative<NoSV>(model)) {
        throw UsageError("--scheme exact requires --vol nosv");
    }
    if (a.paths == 0) throw UsageError("--paths must be >= 1");
    if (a.n < 5) throw UsageError("--n must be >= 5");

    const fs::path dir(a.out);
    const int width = std::max<int>(3, static_cast<int>(std::to_string(a.paths - 1).size()));
    const auto tag = stream_tag("simulate");
    std::vector<std::string> files;
    for (std::size_t p = 0; p < a.paths; ++p) {
        const BssPath path = simulate_bss(kernel, model, a.n, scheme, derive_seed(seed.value, tag, p));
        std::string csv = "t,value,sigma\n";
        for (std::size_t i = 0; i <= a.n; ++i) {
            csv += format_double(static_cast<double>(i) / static_cast<double>(a.n)) + ',' +
                   format_double(path.values[i]) + ',' + format_double(path.volatility[i]) + '\n';
        }
        std::ostringstream name;
        name << "path_" << std::setw(width) << std::setfill('0') << p << ".csv";
        write_atomically(dir / name.str(), csv);
        files.push_back(name.str());
    }

    manifest.parameters = {{"alpha", a.alpha}, {"lambda", a.lambda}, {"n", a.n},       {"paths", a.paths},
                           {"vol", a.vol},     {"scheme", a.scheme}, {"out", a.out}};
    manifest.finished_at = utc_timestamp();
    json doc = manifest.to_json();
    doc["files"] = files;
    write_atomically(dir / "manifest.json", doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return kSuccess;
}

// ---- estimate ----

struct InputArgs {
    std::string input;
    std::optional<double> delta;
    bool log = false;
};

std::vector<TimeSeries> load_inputs(const InputArgs& a) {
    std::vector<TimeSeries> series;
    for (const auto& f : list_inputs(a.input)) series.push_back(read_series(f, ReadOptions{a.delta, a.log}));
    return series;
}

int cmd_estimate(const InputArgs& in, double level, std::ostream& out) {
    const auto series = load_inputs(in);
    json records = json::array();
    for (const auto& ts : series) {
        const auto est = estimate_alpha(ts, 2.0);
        const auto [lo, hi] = clt_confidence_interval(ts, level);
        json j;
        j["series"] = ts.label();
        j["n"] = ts.n();
        j["alpha_hat"] = est.alpha_hat;
        j["cof"] = est.cof;
        j["var_hat"] = est.var_hat.value();
        j["ci"] = {lo, hi};
        j["level"] = level;
        records.push_back(j);
    }
    out << records.dump(2) << "\n";
    return kSuccess;
}

// ---- test ----

struct TestArgs {
    InputArgs input;
    double alpha0 = 0.0;
    std::string method = "lfb";
    double level = 0.05;
    std::size_t reps = 999;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::string out;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
    const SeedChoice seed = resolve_seed(a.seed);
    RunManifest manifest = start_manifest("test", seed);

    std::vector<Method> methods;
    if (a.method == "both") {
        methods = {Method::CLT, Method::LFB};
    } else {
        methods = {parse_method(a.method)};
    }
    TestSpec base;
    base.alpha0 = a.alpha0;
    base.level = a.level;
    base.bootstrap_reps = a.reps;
    for (const Method m : methods) {
        TestSpec s = base;
        s.method = m;
        validate(s);  // fail before reading any data
    }

    const auto files = list_inputs(a.input.input);
    const bool batch = fs::is_directory(a.input.input);
    const auto series_tag = stream_tag("series");

    std::vector<std::vector<json>> records(files.size());
    std::vector<std::vector<bool>> rejects(files.size());
    const std::size_t workers = a.threads == 0 ? default_thread_count() : a.threads;
    // Parallel across series in batch mode, across bootstrap draws otherwise.
    const std::size_t inner = files.size() > 1 ? 1 : workers;
    parallel_for(
        files.size(),
        [&](std::size_t i) {
            const TimeSeries ts = read_series(files[i], ReadOptions{a.input.delta, a.input.log});
            for (const Method m : methods) {
                TestSpec s = base;
                s.method = m;
                s.seed = derive_seed(seed.value, series_tag, i);
                s.threads = inner;
                const TestResult r = run_test(ts, s);
                records[i].push_back(result_record(ts.label(), r, s));
                rejects[i].push_back(r.reject);
            }
        },
        files.size() > 1 ? workers : 1);

    json doc;
    manifest.parameters = {{"input", a.input.input}, {"alpha0", a.alpha0}, {"method", a.method},
                           {"level", a.level},       {"B", a.reps},        {"log", a.input.log}};
    if (a.input.delta) manifest.parameters["delta"] = *a.input.delta;
    json results = json::array();
    for (const auto& per_series : records) {
        for (const auto& r : per_series) results.push_back(r);
    }
    doc["results"] = results;
    if (batch) {
        json agg = json::array();
        for (std::size_t k = 0; k < methods.size(); ++k) {
            std::size_t count = 0;
            for (const auto& r : rejects) count += r[k] ? 1 : 0;
            agg.push_back({{"method", to_string(methods[k])},
                           {"num_series", files.size()},
                           {"rejection_rate", static_cast<double>(count) / static_cast<double>(files.size())}});
        }
        doc["aggregate"] = agg;
    }
    manifest.finished_at = utc_timestamp();
    doc["manifest"] = manifest.to_json();

    const std::string text = doc.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_atomically(a.out, text);
    }
    return kSuccess;
}

// ---- montecarlo ----

struct MonteCarloArgs {
    std::string panel = "nosv";
    double alpha_true = 0.0;
    double alpha0 = 0.0;
    std::size_t reps = 1000;
    std::size_t boot = 199;
    std::string n_grid = "20,40,80,160,320";
    std::optional<std::uint64_t> seed;
    std::string mode = "size";
    double level = 0.05;
    double lambda = 1.0;
    std::string scheme;
    std::size_t threads = 0;
    std::string out;
};

int cmd_montecarlo(const MonteCarloArgs& a, std::ostream& out) {
    ExperimentPlan plan;
    plan.vol_model = parse_model(a.panel);
    plan.alpha_true = a.alpha_true;
    plan.alpha0 = a.alpha0;
    plan.mc_reps = a.reps;
    plan.bootstrap_reps = a.boot;
    plan.n_grid = parse_grid(a.n_grid);
    plan.level = a.level;
    plan.lambda = a.lambda;
    plan.threads = a.threads;
    if (!a.scheme.empty()) plan.scheme = parse_scheme(a.scheme);
    if (a.mode != "size" && a.mode != "power") throw UsageError("--mode must be size or power");
    if (a.mode == "size" && a.alpha_true != a.alpha0) {
        throw UsageError("--mode size requires --alpha-true equal to --alpha0");
    }
    if (a.mode == "power" && a.alpha_true == a.alpha0) {
        throw UsageError("--mode power requires --alpha-true different from --alpha0");
    }
    const SeedChoice seed = resolve_seed(a.seed);
    plan.master_seed = seed.value;
    RunManifest manifest = start_manifest("montecarlo", seed);
    validate(plan);

    const auto cells = a.mode == "size" ? run_size_experiment(plan) : run_power_experiment(plan);
    const std::string csv = cells_to_csv(cells);

    manifest.parameters = {{"panel", a.panel}, {"alpha_true", a.alpha_true}, {"alpha0", a.alpha0},
                           {"reps", a.reps},   {"B", a.boot},                {"n_grid", plan.n_grid},
                           {"mode", a.mode},   {"level", a.level},           {"lambda", a.lambda},
                           {"scheme", a.scheme.empty() ? "default" : a.scheme}};
    manifest.finished_at = utc_timestamp();
    json doc = manifest.to_json();
    json jc = json::array();
    for (const auto& c : cells) {
        json j{{"n", c.n},
               {"method", to_string(c.method)},
               {"rejection_rate", c.rejection_rate},
               {"mc_se", c.mc_se},
               {"runtime_ms", c.runtime_ms},
               {"rejections", c.rejections},
               {"reps", c.reps}};
        if (c.critical_value) j["critical_value"] = *c.critical_value;
        if (c.target_size) j["target_size"] = *c.target_size;
        jc.push_back(j);
    }
    doc["cells"] = jc;

    if (a.out.empty()) {
        out << csv;
    } else {
        const fs::path csv_path(a.out);
        fs::path json_path = csv_path;
        json_path.replace_extension(".json");
        write_atomically(csv_path, csv);
        write_atomically(json_path, doc.dump(2) + "\n");
        out << csv;
    }
    return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Roughness estimation and local fractional bootstrap tests", "lfboot"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate BSS paths with the gamma kernel");
    s->add_option("--alpha", sim.alpha, "Roughness index in (-0.5, 0.5)")->required();
    s->add_option("--lambda", sim.lambda, "Kernel decay rate")->capture_default_str();
    s->add_option("--n", sim.n, "Number of increments on [0, 1]")->capture_default_str();
    s->add_option("--paths", sim.paths, "Number of paths")->capture_default_str();
    s->add_option("--vol", sim.vol, "Volatility model: nosv, sv1f or sv2f")->capture_default_str();
    s->add_option("--scheme", sim.scheme, "hybrid or exact (nosv only)")->capture_default_str();
    s->add_option("--seed", sim.seed, "Master seed; drawn from entropy when omitted");
    s->add_option("--out", sim.out, "Output directory")->required();

    InputArgs est_in;
    double est_level = 0.05;
    auto* e = app.add_subcommand("estimate", "Estimate alpha with the COF estimator");
    e->add_option("--input", est_in.input, "CSV file or directory of CSV files")->required();
    e->add_option("--delta", est_in.delta, "Grid spacing for one-column input (default 1/n)");
    e->add_flag("--log", est_in.log, "Take natural logs first");
    e->add_option("--level", est_level, "Level of the confidence interval")->capture_default_str();

    TestArgs test;
    auto* t = app.add_subcommand("test", "Test H0: alpha = alpha0");
    t->add_option("--input", test.input.input, "CSV file or directory of CSV files")->required();
    t->add_option("--delta", test.input.delta, "Grid spacing for one-column input (default 1/n)");
    t->add_flag("--log", test.input.log, "Take natural logs first");
    t->add_option("--alpha0", test.alpha0, "Null value of alpha")->capture_default_str();
    t->add_option("--method", test.method, "clt, lfb or both")->capture_default_str();
    t->add_option("--level", test.level, "Test level")->capture_default_str();
    t->add_option("--B", test.reps, "Bootstrap replications")->capture_default_str();
    t->add_option("--seed", test.seed, "Master seed; drawn from entropy when omitted");
    t->add_option("--threads", test.threads, "Worker threads (0: LFBOOT_THREADS or all cores)");
    t->add_option("--out", test.out, "Write JSON here instead of stdout");

    MonteCarloArgs mc;
    auto* m = app.add_subcommand("montecarlo", "Monte Carlo size / size-adjusted power tables");
    m->add_option("--panel", mc.panel, "nosv, sv1f or sv2f")->capture_default_str();
    m->add_option("--alpha-true", mc.alpha_true, "Alpha of the simulated data")->capture_default_str();
    m->add_option("--alpha0", mc.alpha0, "Null value of alpha")->capture_default_str();
    m->add_option("--reps", mc.reps, "Monte Carlo replications per cell")->capture_default_str();
    m->add_option("--B", mc.boot, "Bootstrap replications")->capture_default_str();
    m->add_option("--n-grid", mc.n_grid, "Comma-separated sample sizes")->capture_default_str();
    m->add_option("--seed", mc.seed, "Master seed; drawn from entropy when omitted");
    m->add_option("--mode", mc.mode, "size or power")->capture_default_str();
    m->add_option("--level", mc.level, "Test level")->capture_default_str();
    m->add_option("--lambda", mc.lambda, "Kernel decay rate")->capture_default_str();
    m->add_option("--scheme", mc.scheme, "hybrid or exact (default: exact for nosv)");
    m->add_option("--threads", mc.threads, "Worker threads (0: LFBOOT_THREADS or all cores)");
    m->add_option("--out", mc.out, "CSV output path; the manifest goes next to it as .json");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*s) return cmd_simulate(sim, out);
        if (*e) return cmd_estimate(est_in, est_level, out);
        if (*t) return cmd_test(test, out);
        if (*m) return cmd_montecarlo(mc, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return kUsage;
    } catch (const DataError& ex) {
        err << "error: " << ex.what() << "\n";
        return kData;
    } catch (const NumericalError& ex) {
        err << "error: " << ex.what() << "\n";
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& ex) {
        err << "error: " << ex.what() << "\n";
        return kData;
    }
    return kUsage;
}

}  // namespace lfboot::cli
