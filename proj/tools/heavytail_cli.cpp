// Batch front end: run an experiment config or preset and write a CSV.
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "heavytail/error.hpp"
#include "heavytail/experiments.hpp"
#include "heavytail/harness.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfigParse = 2, kRegime = 3, kRuntime = 4, kPropertyFailed = 5 };

constexpr std::uint64_t kDefaultSeed = 20240601;

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("HEAVYTAIL_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos, 0);
        if (pos != std::string(s).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw heavytail::ConfigParseError(std::string("HEAVYTAIL_SEED is not an unsigned integer: '") + s + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Importance-sampling estimators for heavy-tailed random walks"};
    std::string config_path, preset_name, out_path, plot_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> threads_flag;
    bool no_timing = false, quiet = false;
    auto* cfg = app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    auto* pre = app.add_option("--preset", preset_name, "table1 | table2 | table3 | property_suite");
    cfg->excludes(pre);
    app.add_option("--seed", seed_flag, "root seed (falls back to the config, then HEAVYTAIL_SEED)");
    app.add_option("--threads", threads_flag, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_path, "CSV output path (default: stdout)");
    app.add_option("--emit-plots", plot_path, "write an SVG plot of estimate and CV to this path");
    app.add_flag("--no-timing", no_timing, "leave wall_seconds empty so the CSV is byte-stable");
    app.add_flag("--quiet", quiet, "no progress messages");
    try {
        app.parse(argc, argv);
        if (config_path.empty() && preset_name.empty()) throw CLI::RequiredError("--config or --preset");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    using namespace heavytail;
    ExperimentConfig config;
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;
    try {
        config = config_path.empty() ? preset(preset_name) : parse_config_file(config_path);
        if (seed_flag)
            seed = *seed_flag;
        else if (config.seed)
            seed = *config.seed;
        else if (auto s = env_seed())
            seed = *s;
        threads = threads_flag ? *threads_flag : config.threads.value_or(0);
        if (out_path.empty() && config.out) out_path = *config.out;
    } catch (const ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigParse;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigParse;
    }

    ExperimentOutput result;
    try {
        result = run_experiment(config, seed, threads, quiet ? nullptr : &std::cerr);
    } catch (const ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigParse;
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kRegime;
    } catch (const PartialRunError& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        const RunStats& p = e.partial();
        std::cerr << "partial results: " << p.n_reps << " replications, mean " << p.mean << ", std error "
                  << p.std_error << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kRuntime;
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

    std::ostringstream csv;
    write_csv(csv, result.rows, !no_timing);
    if (!result.rows.empty()) {
        if (out_path.empty()) {
            std::cout << csv.str();
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f || !(f << csv.str())) {
                std::cerr << "runtime error: cannot write '" << out_path << "'\n";
                return kRuntime;
            }
        }
    }
    std::ostream& summary = out_path.empty() && !result.rows.empty() ? std::cerr : std::cout;
    write_summary(summary, result);

    if (!plot_path.empty() && !result.rows.empty()) {
        std::ofstream f(plot_path);
        write_svg(f, result.rows, kind_name(config.kind) + " (seed " + std::to_string(seed) + ")");
        if (!f) {
            std::cerr << "runtime error: cannot write '" << plot_path << "'\n";
            return kRuntime;
        }
    }
    for (const auto& c : result.checks)
        if (!c.passed) return kPropertyFailed;
    return kOk;
}
