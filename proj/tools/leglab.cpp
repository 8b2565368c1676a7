#include "leglab/parallel.hpp"
#include "leglab/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace leglab::cli;

namespace {

enum Exit { kPass = 0, kFail = 1, kInput = 2 };

struct Outcome {
    int code = kPass;
    std::string text;
};

Outcome run_one(const fs::path& file, const RunOptions& opt)
{
    std::ostringstream os;
    try {
        const Scenario s = load_scenario(file);
        const RunReport r = run_scenario(s, opt);
        const auto& ex = r.json["expectations"];
        const auto passed = std::count_if(ex.begin(), ex.end(), [](const Json& e) { return e["pass"].get<bool>(); });
        os << (r.pass ? "PASS " : "FAIL ") << s.name << " (" << passed << "/" << ex.size() << " expectations";
        if (!r.json["errors"].empty())
            os << ", " << r.json["errors"].size() << " step errors";
        os << ")\n";
        for (const auto& e : ex) {
            if (e["pass"].get<bool>())
                continue;
            os << "  failed: " << e["path"].get<std::string>() << " " << e["op"].get<std::string>();
            if (e.contains("value"))
                os << " " << e["value"].dump();
            os << " (actual " << e["actual"].dump() << ")\n";
        }
        for (const auto& e : r.json["errors"])
            os << "  error in " << e["step"].get<std::string>() << ": " << e["message"].get<std::string>() << "\n";
        if (!r.files.empty())
            os << "  report: " << r.files.front().string() << "\n";
        return {r.pass ? kPass : kFail, os.str()};
    } catch (const InputError& e) {
        return {kInput, std::string("input error: ") + e.what() + "\n"};
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Desk-scale experiments on Legendrian isotopies, generating functions and persistence"};
    app.require_subcommand(1);
    app.fallthrough();

    RunOptions opt;
    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--tol-scale", opt.tol_scale, "Multiply every scenario tolerance")->check(CLI::PositiveNumber);
    app.add_option("--grid-scale", opt.grid_scale, "Multiply grid sizes and divide integrator steps")
        ->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--jobs", opt.jobs, "Worker threads (0: one per hardware thread)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out, "Output directory (LEGLAB_OUTPUT_DIR takes precedence)");

    std::string scenario;
    auto* run = app.add_subcommand("run", "Run one scenario file");
    run->add_option("scenario", scenario, "Scenario JSON")->required();

    std::string dir;
    bool parallel = false;
    auto* suite = app.add_subcommand("suite", "Run every *.json scenario in a directory");
    suite->add_option("dir", dir, "Scenario directory")->required();
    suite->add_flag("--parallel", parallel, "Run scenarios concurrently, --jobs at a time");

    std::string report_path;
    auto* plots = app.add_subcommand("emit-plots", "Write CSV plot data from a report");
    plots->add_option("report", report_path, "Report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (opt.jobs == 0)
        opt.jobs = leglab::default_jobs();
    if (*seed_opt)
        opt.seed = seed;
    opt.output_dir = out;

    if (*run) {
        const Outcome o = run_one(scenario, opt);
        (o.code == kInput ? std::cerr : std::cout) << o.text;
        return o.code;
    }

    if (*suite) {
        std::vector<fs::path> files;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(dir, ec))
            if (e.is_regular_file() && e.path().extension() == ".json")
                files.push_back(e.path());
        if (ec) {
            std::cerr << "input error: " << dir << ": " << ec.message() << "\n";
            return kInput;
        }
        std::sort(files.begin(), files.end());
        std::vector<Outcome> outcomes(files.size());
        if (parallel) {
            RunOptions inner = opt;
            inner.jobs = 1;
            leglab::parallel_for(long(files.size()), opt.jobs,
                                 [&](long i) { outcomes[std::size_t(i)] = run_one(files[std::size_t(i)], inner); });
        } else {
            for (std::size_t i = 0; i < files.size(); ++i)
                outcomes[i] = run_one(files[i], opt);
        }
        int code = kPass, passed = 0;
        for (const auto& o : outcomes) {
            (o.code == kInput ? std::cerr : std::cout) << o.text;
            code = std::max(code, o.code);
            passed += o.code == kPass;
        }
        std::cout << passed << "/" << outcomes.size() << " scenarios passed\n";
        return code;
    }

    // emit-plots
    std::ifstream in(report_path, std::ios::binary);
    if (!in) {
        std::cerr << "input error: " << report_path << ": cannot open file\n";
        return kInput;
    }
    Json report;
    try {
        report = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "input error: " << report_path << ": " << e.what() << "\n";
        return kInput;
    }
    fs::path target;
    if (const char* env = std::getenv("LEGLAB_OUTPUT_DIR"); env && *env)
        target = env;
    else if (!out.empty())
        target = out;
    else
        target = fs::path(report_path).parent_path();
    if (report.is_object() && report.contains("scenario") && report["scenario"].is_string())
        target /= report["scenario"].get<std::string>();
    const PlotOutput po = emit_plots(report, target);
    for (const auto& f : po.written)
        std::cout << "wrote " << f.string() << "\n";
    for (const auto& s : po.skipped)
        std::cout << "skipped " << s << "\n";
    std::cout << po.written.size() << " files written\n";
    return kPass;
}
