#pragma once

#include "longgreeks/estimators.hpp"
#include "longgreeks/riccati.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace longgreeks::cli {

using Json = nlohmann::json;

enum ExitCode : int { Ok = 0, ValidationFailure = 2, NumericalFailure = 3, SelftestFailure = 4 };

inline constexpr const char* kVersion = "0.1.0";

// Fully resolved experiment: every field carries its default when absent.
struct ExperimentConfig {
    ModelSpec model;
    std::optional<PayoffSpec> payoff;
    McConfig mc;
    double T = 1.0;
    std::vector<double> T_grid;
    double steps_per_year = 32.0;

    std::string param;
    std::optional<Method> method;
    std::string measure = "Q";  // price: Q, P or both; density: Q or P

    // density
    std::optional<double> density_t;  // unset selects the invariant law
    double r_min = 0.0, r_max = 0.2;
    int points = 200;

    // riccati
    std::optional<CareProblem> care;

    // finite differences
    FdOptions fd;

    std::string csv_path;
    std::string json_path;

    Json resolved;  // echo written to the report
};

// Reads a JSON file (or an empty object), applies dotted key=value overrides
// and the LONGGREEKS_SEED environment variable, and returns the document.
Json load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

// Schema validation and defaults. Unknown keys raise ConfigError.
ExperimentConfig parse_config(const Json& doc, const std::string& command);

// 17 significant digits, the shortest form that round-trips every double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string str() const;  // RFC 4180, LF line endings
};

struct TaskResult {
    CsvTable table;
    Json results = Json::array();
    Json diagnostics = Json::object();
    Json stdout_json;  // printed for tasks that report JSON
};

TaskResult run_task(const std::string& command, const ExperimentConfig& config);

struct SelftestRow {
    std::string criterion;
    bool pass = false;
    double measured = 0.0;
    std::string detail;
};

// Fast oracle subset: eigenpair defects, Riccati properties, density
// normalization and decomposition identities.
std::vector<SelftestRow> selftest(std::uint64_t seed, int threads);

struct RunOptions {
    std::string command;
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<int> threads;
    std::string out_dir = ".";
    std::optional<double> debug_lambda_bump;
};

// Runs a subcommand end to end and returns the process exit code. Errors are
// reported as one JSON object on err.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace longgreeks::cli
