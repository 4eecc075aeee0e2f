#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heavytail/crossing_estimator.hpp"
#include "heavytail/tail_models.hpp"

namespace heavytail {

// Malformed or incomplete experiment configuration (as opposed to a
// well-formed one that violates a regime constraint, which is ConfigError).
class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { LargeDeviation, LevelCrossing, Table1, Table2, Table3, PropertySuite };

std::string kind_name(ExperimentKind k);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::LevelCrossing;
    nlohmann::json model;  // validated model descriptor
    std::vector<std::int64_t> n_grid;
    std::vector<double> b_grid;
    bool b_equals_n = false;
    std::vector<std::uint64_t> r_grid{2};
    std::optional<double> mu;  // defaults to the queue drift for queue models
    RegimeSpec regime;
    std::uint64_t n_reps = 10000;
    std::optional<double> epsilon, delta;  // sample-size planning from a pilot run
    std::uint64_t pilot = 1000;
    double epsilon_regime = 0.1;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
};

IncrementModel build_model(const nlohmann::json& descriptor);
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig preset(const std::string& name);

struct ResultRow {
    std::string experiment;
    std::optional<std::int64_t> n;
    double b = 0.0;
    std::optional<std::uint64_t> r;
    std::string regime;
    std::uint64_t n_reps = 0;
    double estimate = 0.0, std_error = 0.0, cv = 0.0, mean_work = 0.0;
    std::uint64_t max_work = 0;
    double mean_max_index = 0.0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    double baseline = 0.0;  // asymptotic approximation, summary only
};

struct PropertyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<PropertyCheck> checks;
    std::vector<std::string> warnings;
};

// Validates every estimator of the grid first, then runs them.
ExperimentOutput run_experiment(const ExperimentConfig& config, std::uint64_t seed, int threads,
                                std::ostream* progress = nullptr);

// Property checks on the standard models (bounds, pmf normalisation,
// log-MGF identities, determinism across thread counts).
std::vector<PropertyCheck> property_suite(std::uint64_t seed);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool with_timing = true);
void write_summary(std::ostream& os, const ExperimentOutput& out);
// Two-panel SVG: estimate and CV against the grid variable.
void write_svg(std::ostream& os, const std::vector<ResultRow>& rows, const std::string& title);

} // namespace heavytail
