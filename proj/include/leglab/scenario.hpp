#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace leglab::cli {

using Json = nlohmann::ordered_json;

// Malformed or invalid scenario input. Carries a line/column for syntax errors and a
// JSON pointer for validation errors.
struct InputError : std::runtime_error {
    InputError(std::string source_, std::string field_, std::size_t line_, std::size_t column_,
               const std::string& message);
    std::string source;
    std::string field;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct Expectation {
    std::string path;  // dotted path into the report, e.g. "results.energy" or "results.bars.0.death"
    std::string op;    // < <= > >= == != empty nonempty size true false
    Json value;
    double tol = 0.0;  // for ==, != and size: absolute tolerance before --tol-scale
};

struct Scenario {
    std::string name;
    std::string operation;
    Json params = Json::object();
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 0;
    std::string output_dir;  // empty: "out"
    std::vector<Expectation> expect;
    std::string source;      // file the scenario came from
};

std::vector<std::string> operations();

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
    double tol_scale = 1.0;
    double grid_scale = 1.0;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::filesystem::path output_dir;  // overrides the scenario's when non-empty
    bool write = true;                 // write the report and CSV files
};

struct RunReport {
    Json json;
    bool pass = false;
    std::vector<std::filesystem::path> files;
};

// Numerical failures become entries of "errors"; the verdict only looks at expectations.
RunReport run_scenario(const Scenario& s, const RunOptions& opt = {});

// Stable text form: two-space indent, keys in insertion order, shortest round-trip doubles.
std::string format_report(const Json& report);

struct PlotOutput {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> skipped;  // "name: reason"
};

// One CSV per entry of report["plot_data"]; a missing or empty plot_data writes nothing.
PlotOutput emit_plots(const Json& report, const std::filesystem::path& dir);

// Output directory: LEGLAB_OUTPUT_DIR, then the option, then the scenario, then "out".
std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& opt);

}  // namespace leglab::cli
