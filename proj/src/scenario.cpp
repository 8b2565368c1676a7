#include "leglab/scenario.hpp"

#include "scenario_ops.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace leglab::cli {

namespace {

std::string describe(const std::string& source, const std::string& field, std::size_t line, std::size_t column,
                     const std::string& message)
{
    std::ostringstream os;
    os << source;
    if (line > 0)
        os << ':' << line << ':' << column;
    os << ": ";
    if (!field.empty())
        os << "field " << field << ": ";
    os << message;
    return os.str();
}

const std::vector<std::string> kComparisons = {"<", "<=", ">", ">=", "==", "!=", "empty", "nonempty",
                                               "size", "true", "false"};

Expectation parse_expectation(const Json& j, const std::string& ptr, const std::string& source)
{
    auto bad = [&](const std::string& f, const std::string& m) { return InputError(source, ptr + f, 0, 0, m); };
    if (!j.is_object())
        throw bad("", "expectation must be an object");
    for (const auto& [k, v] : j.items()) {
        if (k != "path" && k != "op" && k != "value" && k != "tol")
            throw bad("/" + k, "unknown key (allowed: path, op, value, tol)");
    }
    Expectation e;
    if (!j.contains("path") || !j["path"].is_string() || j["path"].get<std::string>().empty())
        throw bad("/path", "required non-empty string");
    e.path = j["path"].get<std::string>();
    if (!j.contains("op") || !j["op"].is_string())
        throw bad("/op", "required string");
    e.op = j["op"].get<std::string>();
    if (std::find(kComparisons.begin(), kComparisons.end(), e.op) == kComparisons.end())
        throw bad("/op", "unknown comparison '" + e.op + "'");
    const bool unary = e.op == "empty" || e.op == "nonempty" || e.op == "true" || e.op == "false";
    if (unary) {
        if (j.contains("value"))
            throw bad("/value", "'" + e.op + "' takes no value");
    } else {
        if (!j.contains("value"))
            throw bad("/value", "required for '" + e.op + "'");
        e.value = j["value"];
        const bool numeric = e.op != "==" && e.op != "!=";
        if (numeric && !e.value.is_number())
            throw bad("/value", "'" + e.op + "' needs a number");
    }
    if (j.contains("tol")) {
        if (!j["tol"].is_number() || j["tol"].get<double>() < 0)
            throw bad("/tol", "must be a non-negative number");
        e.tol = j["tol"].get<double>();
    }
    return e;
}

const Json* lookup(const Json& root, const std::string& path)
{
    const Json* cur = &root;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (cur->is_object()) {
            auto it = cur->find(part);
            if (it == cur->end())
                return nullptr;
            cur = &*it;
        } else if (cur->is_array()) {
            std::size_t idx = 0;
            auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
            if (ec != std::errc() || p != part.data() + part.size() || idx >= cur->size())
                return nullptr;
            cur = &(*cur)[idx];
        } else {
            return nullptr;
        }
        if (dot == std::string::npos)
            break;
        pos = dot + 1;
    }
    return cur;
}

Json check(const Expectation& e, const Json& report, double tol_scale)
{
    Json out = Json::object();
    out["path"] = e.path;
    out["op"] = e.op;
    if (!e.value.is_null())
        out["value"] = e.value;
    const Json* a = lookup(report, e.path);
    out["actual"] = a ? *a : Json();
    bool pass = false;
    std::string note;
    const double tol = e.tol * tol_scale;
    if (!a) {
        note = "path not found";
    } else if (e.op == "empty" || e.op == "nonempty") {
        if (a->is_array() || a->is_object() || a->is_string())
            pass = (a->empty() || (a->is_string() && a->get<std::string>().empty())) == (e.op == "empty");
        else
            note = "not a collection";
    } else if (e.op == "true" || e.op == "false") {
        if (a->is_boolean())
            pass = a->get<bool>() == (e.op == "true");
        else
            note = "not a boolean";
    } else if (e.op == "size") {
        if (a->is_array() || a->is_object())
            pass = std::abs(double(a->size()) - e.value.get<double>()) <= tol;
        else
            note = "not a collection";
    } else if (e.op == "==" || e.op == "!=") {
        bool eq = false;
        if (a->is_number() && e.value.is_number())
            eq = std::abs(a->get<double>() - e.value.get<double>()) <= tol;
        else
            eq = *a == e.value;
        pass = eq == (e.op == "==");
    } else if (!a->is_number()) {
        note = "not a number";
    } else {
        const double x = a->get<double>(), v = e.value.get<double>();
        if (e.op == "<")
            pass = x < v;
        else if (e.op == "<=")
            pass = x <= v;
        else if (e.op == ">")
            pass = x > v;
        else
            pass = x >= v;
    }
    if (tol > 0)
        out["tol"] = tol;
    out["pass"] = pass;
    if (!note.empty())
        out["note"] = note;
    return out;
}

std::string csv_cell(const Json& v)
{
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!std::isfinite(d))
            return std::isnan(d) ? "nan" : (d > 0 ? "inf" : "-inf");
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
        return std::string(buf, p);
    }
    if (v.is_number() || v.is_boolean())
        return v.dump();
    if (v.is_null())
        return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

InputError::InputError(std::string source_, std::string field_, std::size_t line_, std::size_t column_,
                       const std::string& message)
    : std::runtime_error(describe(source_, field_, line_, column_, message)),
      source(std::move(source_)), field(std::move(field_)), line(line_), column(column_)
{
}

std::vector<std::string> operations()
{
    std::vector<std::string> out;
    for (const auto& [name, fn] : detail::registry())
        out.push_back(name);
    return out;
}

Scenario parse_scenario(const std::string& text, const std::string& source)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, column = 0;
        const std::size_t end = std::min<std::size_t>(e.byte, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 0;
            } else {
                ++column;
            }
        }
        std::string msg = e.what();
        if (auto p = msg.find(": syntax error"); p != std::string::npos)
            msg = msg.substr(p + 2);
        throw InputError(source, "", line, std::max<std::size_t>(column, 1), msg);
    }
    auto bad = [&](const std::string& f, const std::string& m) { return InputError(source, f, 0, 0, m); };
    if (!j.is_object())
        throw bad("", "scenario must be a JSON object");

    static const std::vector<std::string> keys = {"name", "description", "operation", "params",
                                                  "tolerances", "seed", "output_dir", "expect"};
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw bad("/" + k, "unknown key");

    Scenario s;
    s.source = source;
    if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
        throw bad("/name", "required non-empty string");
    s.name = j["name"].get<std::string>();
    if (s.name.find_first_of("/\\") != std::string::npos || s.name == "." || s.name == "..")
        throw bad("/name", "must be usable as a file name");
    if (!j.contains("operation") || !j["operation"].is_string())
        throw bad("/operation", "required string");
    s.operation = j["operation"].get<std::string>();
    if (!detail::registry().count(s.operation)) {
        std::string known;
        for (const auto& op : operations())
            known += (known.empty() ? "" : ", ") + op;
        throw bad("/operation", "unknown operation '" + s.operation + "' (known: " + known + ")");
    }
    if (j.contains("params")) {
        if (!j["params"].is_object())
            throw bad("/params", "must be an object");
        s.params = j["params"];
    }
    if (j.contains("tolerances")) {
        if (!j["tolerances"].is_object())
            throw bad("/tolerances", "must be an object");
        for (const auto& [k, v] : j["tolerances"].items()) {
            if (!v.is_number() || !(v.get<double>() > 0))
                throw bad("/tolerances/" + k, "must be a positive number");
            s.tolerances[k] = v.get<double>();
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw bad("/seed", "must be a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string())
            throw bad("/output_dir", "must be a string");
        s.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("expect")) {
        if (!j["expect"].is_array())
            throw bad("/expect", "must be an array");
        for (std::size_t i = 0; i < j["expect"].size(); ++i)
            s.expect.push_back(parse_expectation(j["expect"][i], "/expect/" + std::to_string(i), source));
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(path.string(), "", 0, 0, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& opt)
{
    if (const char* env = std::getenv("LEGLAB_OUTPUT_DIR"); env && *env)
        return env;
    if (!opt.output_dir.empty())
        return opt.output_dir;
    if (!s.output_dir.empty())
        return s.output_dir;
    return "out";
}

RunReport run_scenario(const Scenario& s, const RunOptions& opt)
{
    if (!(opt.tol_scale > 0) || !(opt.grid_scale > 0))
        throw InputError(s.source, "", 0, 0, "--tol-scale and --grid-scale must be positive");
    detail::Context ctx(s, opt);
    detail::registry().at(s.operation)(ctx);

    Json report = Json::object();
    report["scenario"] = s.name;
    report["operation"] = s.operation;
    report["results"] = std::move(ctx.results);
    report["errors"] = std::move(ctx.errors);

    Json meta = Json::object();
    meta["format"] = "leglab-report/1";
    meta["seed"] = ctx.seed();
    meta["tol_scale"] = opt.tol_scale;
    meta["grid_scale"] = opt.grid_scale;
    Json tol = Json::object();
    for (const auto& [k, v] : s.tolerances)
        tol[k] = v * opt.tol_scale;
    meta["tolerances"] = tol;
    for (auto& [k, v] : ctx.metadata.items())
        meta[k] = v;
    report["metadata"] = std::move(meta);
    report["plot_data"] = std::move(ctx.plot_data);

    Json verdicts = Json::array();
    bool pass = true;
    for (const auto& e : s.expect) {
        Json v = check(e, report, opt.tol_scale);
        pass = pass && v["pass"].get<bool>();
        verdicts.push_back(std::move(v));
    }
    report["expectations"] = std::move(verdicts);
    report["pass"] = pass;

    RunReport out;
    out.pass = pass;
    if (opt.write) {
        const auto dir = resolve_output_dir(s, opt);
        std::filesystem::create_directories(dir);
        const auto file = dir / (s.name + ".json");
        std::ofstream(file, std::ios::binary) << format_report(report);
        out.files.push_back(file);
        auto plots = emit_plots(report, dir / s.name);
        out.files.insert(out.files.end(), plots.written.begin(), plots.written.end());
    }
    out.json = std::move(report);
    return out;
}

std::string format_report(const Json& report) { return report.dump(2) + "\n"; }

PlotOutput emit_plots(const Json& report, const std::filesystem::path& dir)
{
    PlotOutput out;
    if (!report.is_object() || !report.contains("plot_data") || !report["plot_data"].is_object())
        return out;
    for (const auto& [name, data] : report["plot_data"].items()) {
        if (!data.is_object()) {
            out.skipped.push_back(name + ": not a table");
            continue;
        }
        if (data.contains("skipped")) {
            out.skipped.push_back(name + ": " + data["skipped"].get<std::string>());
            continue;
        }
        if (!data.contains("columns") || !data.contains("rows") || !data["rows"].is_array()) {
            out.skipped.push_back(name + ": missing columns or rows");
            continue;
        }
        std::filesystem::create_directories(dir);
        const auto file = dir / (name + ".csv");
        std::ofstream os(file, std::ios::binary);
        if (data.contains("schema"))
            os << "# " << data["schema"].get<std::string>() << '\n';
        bool first = true;
        for (const auto& c : data["columns"]) {
            os << (first ? "" : ",") << csv_cell(c);
            first = false;
        }
        os << '\n';
        for (const auto& row : data["rows"]) {
            first = true;
            for (const auto& v : row) {
                os << (first ? "" : ",") << csv_cell(v);
                first = false;
            }
            os << '\n';
        }
        out.written.push_back(file);
    }
    return out;
}

}  // namespace leglab::cli
