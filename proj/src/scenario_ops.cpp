#include "scenario_ops.hpp"

#include "leglab/energy.hpp"
#include "leglab/genfun.hpp"
#include "leglab/lifting.hpp"
#include "leglab/persistence.hpp"
#include "leglab/planar.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace leglab::cli::detail {

Context::Context(const Scenario& s, const RunOptions& opt)
    : s_(s), opt_(opt), seed_(opt.seed.value_or(s.seed))
{
}

InputError Context::bad(const std::string& field, const std::string& message) const
{
    return InputError(s_.source, "/params/" + field, 0, 0, message);
}

void Context::allow(std::initializer_list<const char*> keys) const
{
    for (const auto& [k, v] : s_.params.items()) {
        bool ok = false;
        for (const char* a : keys)
            ok = ok || k == a;
        if (!ok) {
            std::string list;
            for (const char* a : keys)
                list += (list.empty() ? "" : ", ") + std::string(a);
            throw bad(k, "unknown parameter for " + s_.operation + " (allowed: " + list + ")");
        }
    }
}

const Json& Context::raw(const char* key) const
{
    if (!has(key))
        throw bad(key, "required");
    return s_.params[key];
}

double Context::number(const char* key, double def) const
{
    if (!has(key))
        return def;
    const Json& v = s_.params[key];
    if (!v.is_number())
        throw bad(key, "expected a number");
    return v.get<double>();
}

double Context::positive(const char* key, double def) const
{
    const double v = number(key, def);
    if (!(v > 0))
        throw bad(key, "must be positive");
    return v;
}

Eigen::Index Context::count(const char* key, Eigen::Index def, Eigen::Index min) const
{
    if (!has(key))
        return def;
    const Json& v = s_.params[key];
    if (!v.is_number_integer() || v.get<long long>() < min)
        throw bad(key, "expected an integer >= " + std::to_string(min));
    return Eigen::Index(v.get<long long>());
}

bool Context::flag(const char* key, bool def) const
{
    if (!has(key))
        return def;
    const Json& v = s_.params[key];
    if (!v.is_boolean())
        throw bad(key, "expected true or false");
    return v.get<bool>();
}

std::string Context::text(const char* key, const std::string& def) const
{
    if (!has(key))
        return def;
    const Json& v = s_.params[key];
    if (!v.is_string())
        throw bad(key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> Context::numbers(const char* key, std::vector<double> def) const
{
    if (!has(key))
        return def;
    const Json& v = s_.params[key];
    if (v.is_number())
        return {v.get<double>()};
    if (!v.is_array() || v.empty())
        throw bad(key, "expected a number or a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw bad(std::string(key) + "/" + std::to_string(i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

expr::Expr Context::function(const char* key, std::vector<std::string> vars, const Json& def) const
{
    const Json& j = has(key) ? s_.params[key] : def;
    try {
        return expr::Expr::parse(j, std::move(vars), "/params/" + std::string(key));
    } catch (const expr::ExprError& e) {
        std::string msg = e.what();
        msg = msg.substr(e.pointer.size() + 2);
        throw InputError(s_.source, e.pointer, 0, 0, msg);
    }
}

const Json& Context::object(const char* key) const
{
    const Json& v = raw(key);
    if (!v.is_object())
        throw bad(key, "expected an object");
    return v;
}

double Context::tol(const std::string& key, double def) const
{
    auto it = s_.tolerances.find(key);
    return (it == s_.tolerances.end() ? def : it->second) * opt_.tol_scale;
}

Eigen::Index Context::grid(Eigen::Index n, Eigen::Index min) const
{
    return std::max(min, Eigen::Index(std::llround(double(n) * opt_.grid_scale)));
}

bool Context::step(const std::string& name, const std::function<void()>& f)
{
    try {
        f();
        return true;
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        Json err = Json::object();
        err["step"] = name;
        std::string type = "error";
        std::optional<double> defect;
        if (auto* x = dynamic_cast<const LiftError*>(&e)) {
            type = "lift";
            defect = x->defect;
        } else if (auto* y = dynamic_cast<const ExactnessError*>(&e)) {
            type = "exactness";
            defect = y->defect;
        } else if (dynamic_cast<const CutoffError*>(&e)) {
            type = "cutoff";
        } else if (dynamic_cast<const DomainError*>(&e)) {
            type = "domain";
        } else if (dynamic_cast<const ComputationError*>(&e)) {
            type = "computation";
        } else if (dynamic_cast<const ArgumentError*>(&e)) {
            type = "argument";
        }
        err["type"] = type;
        err["message"] = e.what();
        if (defect)
            err["defect"] = *defect;
        errors.push_back(std::move(err));
        return false;
    }
}

Json skipped(const std::string& reason)
{
    Json t = Json::object();
    t["skipped"] = reason;
    return t;
}

namespace {

Json schema_table(const std::string& schema, std::vector<std::string> columns, Json rows)
{
    Json t = Json::object();
    t["schema"] = schema;
    t["columns"] = std::move(columns);
    t["rows"] = std::move(rows);
    return t;
}

std::function<double(double)> of_t(const expr::Expr& e)
{
    return [e](double t) { return e({t}); };
}

// ---- fig_deformation_family ------------------------------------------------

void run_fig(Context& ctx)
{
    ctx.allow({"c", "nt", "schedule", "gain", "tau", "gain_t", "shift_t", "stage_split", "template_refine",
               "line_samples", "frames", "frame_samples", "horizon"});
    const double c = ctx.positive("c", 0.01);
    const std::string kind = ctx.text("schedule", ctx.has("tau") ? "custom" : "standard");
    const Eigen::Index nt = ctx.grid(ctx.count("nt", 201, 2), 3);

    DeformationSchedule sched;
    if (kind == "standard") {
        sched = DeformationSchedule::standard(c, nt, ctx.number("gain", 0.5));
    } else if (kind == "frozen") {
        sched = DeformationSchedule::frozen(c, nt);
    } else if (kind == "custom") {
        sched.grid = TimeGrid::uniform(nt);
        sched.c = c;
        sched.tau = of_t(ctx.function("tau", {"t"}, 0));
        sched.gain = of_t(ctx.function("gain_t", {"t"}, 0));
        sched.shift = of_t(ctx.function("shift_t", {"t"}, 0));
        sched.stage_split = ctx.number("stage_split", 0.5);
    } else {
        throw ctx.bad("schedule", "expected standard, frozen or custom");
    }

    FigOptions opt;
    opt.template_refine = ctx.grid(ctx.count("template_refine", 16), 1);
    opt.line_samples = ctx.grid(ctx.count("line_samples", 600, 8), 8);
    opt.area_tol = ctx.tol("area", 1e-6);
    opt.jobs = ctx.jobs();
    const Eigen::Index frames = ctx.count("frames", 11, 2);
    const Eigen::Index frame_samples = ctx.count("frame_samples", 400, 8);
    const double horizon = ctx.positive("horizon", 3.0);

    Json grid = Json::object();
    grid["times"] = nt;
    grid["template_samples"] = 114 * opt.template_refine;
    grid["line_samples"] = opt.line_samples;
    ctx.metadata["grid"] = grid;
    ctx.metadata["c"] = c;
    ctx.metadata["schedule"] = kind;

    FigFamily F;
    if (!ctx.step("family", [&] { F = fig_deformation_family(sched, opt); })) {
        ctx.plot_data["frames"] = skipped("family step failed");
        ctx.plot_data["fig_series"] = skipped("family step failed");
        return;
    }
    const auto& fam = F.family;
    const Eigen::Index last = fam.num_times() - 1;
    auto& r = ctx.results;
    r["energy"] = F.energy;
    r["stage1_energy"] = F.stage1_energy;
    r["stage2_energy"] = F.stage2_energy;
    r["area_min"] = F.area.minCoeff();
    r["area_max"] = F.area.maxCoeff();
    r["area_deviation"] = (F.area.array() - F.area[0]).abs().maxCoeff();
    std::set<int> signs(F.rightmost_sign.begin(), F.rightmost_sign.end());
    r["rightmost_signs"] = Json(std::vector<int>(signs.begin(), signs.end()));
    if (!F.bookkeeping.empty()) {
        double resid = 0.0;
        for (const auto& b : F.bookkeeping)
            resid = std::max(resid, std::abs(b.combination() - b.total));
        const auto& b = F.bookkeeping.back();
        Json areas = Json::object();
        areas["A1"] = b.A1;
        areas["A2"] = b.A2;
        areas["A3"] = b.A3;
        areas["total"] = b.total;
        r["terminal_areas"] = areas;
        r["area_combination_residual"] = resid;
    }
    // Original loop bounds the area-1 disk.
    const double r0 = 1.0 / std::sqrt(std::numbers::pi);
    const double rmax = fam.points[last].rowwise().norm().maxCoeff();
    r["terminal_max_radius"] = rmax / r0;
    r["terminal_inside"] = rmax < r0;

    ctx.step("chords", [&] {
        const auto l0 = legendrian_lift(fam.loop(0));
        const auto l1 = legendrian_lift(fam.loop(last));
        Json chords = Json::array();
        for (const auto& ch : chord_detect(l0, l1, horizon)) {
            Json j = Json::object();
            j["x0"] = ch.x0;
            j["x1"] = ch.x1;
            j["point"] = {ch.point.x(), ch.point.y()};
            j["actions"] = ch.actions;
            j["transverse"] = ch.transverse;
            chords.push_back(std::move(j));
        }
        r["chords"] = std::move(chords);
    });

    Json rows = Json::array();
    const Eigen::Index np = fam.params.size();
    const Eigen::Index stride = std::max<Eigen::Index>(1, (np + frame_samples - 1) / frame_samples);
    for (Eigen::Index f = 0; f < frames; ++f) {
        const Eigen::Index t = (f * last) / (frames - 1);
        for (Eigen::Index i = 0; i < np; i += stride)
            rows.push_back({f, fam.grid[t], i, fam.params[i], fam.points[t](i, 0), fam.points[t](i, 1)});
    }
    ctx.plot_data["frames"] = schema_table("leglab-frames/1", {"frame", "t", "sample", "x", "X", "Y"}, std::move(rows));

    Json series = Json::array();
    for (Eigen::Index t = 0; t <= last; ++t) {
        Json row = {fam.grid[t], F.area[t], F.mu[t], F.rightmost_sign[std::size_t(t)]};
        if (!F.bookkeeping.empty()) {
            const auto& b = F.bookkeeping[std::size_t(t)];
            row.push_back(b.A1);
            row.push_back(b.A2);
            row.push_back(b.A3);
        }
        series.push_back(std::move(row));
    }
    std::vector<std::string> cols = {"t", "area", "mu", "rightmost_sign"};
    if (!F.bookkeeping.empty())
        cols.insert(cols.end(), {"A1", "A2", "A3"});
    ctx.plot_data["fig_series"] = schema_table("leglab-fig-series/1", cols, std::move(series));
}

// ---- tb_difference ---------------------------------------------------------

void run_tb(Context& ctx)
{
    ctx.allow({"epsilon", "reverse"});
    const auto eps = ctx.numbers("epsilon", {0.02, 0.05, 0.1});
    const bool reverse = ctx.flag("reverse", false);
    ctx.metadata["epsilon"] = eps;

    Json per = Json::array();
    Json rows = Json::array();
    std::set<int> values;
    for (double e : eps) {
        ctx.step("tb epsilon=" + Json(e).dump(), [&] {
            const TbResult tb = tb_difference(e, reverse);
            Json j = Json::object();
            j["epsilon"] = e;
            j["difference"] = tb.difference;
            j["count1"] = tb.count1;
            j["count2"] = tb.count2;
            j["tb_lambda"] = tb.tb_lambda;
            j["contradicts_bennequin"] = tb.contradicts_bennequin;
            j["intersections"] = tb.points.size();
            per.push_back(std::move(j));
            values.insert(tb.difference);
            for (const auto& p : tb.points)
                rows.push_back({e, p.side, p.s, p.t, p.sign});
        });
    }
    ctx.results["runs"] = std::move(per);
    if (values.size() == 1)
        ctx.results["difference"] = *values.begin();
    else
        ctx.results["difference"] = nullptr;
    ctx.results["constant"] = values.size() == 1;
    ctx.plot_data["tb_points"] = schema_table("leglab-tb-points/1", {"epsilon", "side", "s", "t", "sign"},
                                              std::move(rows));
}

// ---- tetragon --------------------------------------------------------------

void run_tetragon(Context& ctx)
{
    ctx.allow({"k", "delta", "T", "arc_samples", "E", "sigma"});
    const double k = ctx.positive("k", 2.0);
    const double delta = ctx.positive("delta", 0.1);
    const double T = ctx.positive("T", 1.0);
    const int arc = int(ctx.grid(ctx.count("arc_samples", 64, 2), 2));
    ctx.metadata["arc_samples"] = arc;
    auto& r = ctx.results;

    ctx.step("rectangle", [&] {
        TetragonSpec rect{k, delta, T, rectangle_loop(k, T)};
        const double a = tetragon_area(rect);
        r["rectangle_area"] = a;
        r["rectangle_expected"] = (k - 1) * T;
        r["rectangle_error"] = std::abs(a - (k - 1) * T);
    });
    ctx.step("canonical", [&] {
        const CanonicalTetragon ct = canonical_tetragon(k, delta, T, arc);
        r["target"] = ct.target;
        r["area"] = ct.area;
        r["error"] = std::abs(ct.area - ct.target);
        r["offset"] = ct.offset;
        bool mono = true;
        for (std::size_t i = 1; i < ct.lower.size(); ++i)
            mono = mono && ct.lower[i] >= ct.lower[i - 1];
        r["bisection_monotone"] = mono;
        r["bisection_from_below"] = std::all_of(ct.lower.begin(), ct.lower.end(),
                                                [&](double a) { return a <= ct.target + 1e-12; });
        Json poly = Json::array();
        for (Eigen::Index i = 0; i < ct.spec.gamma.rows(); ++i)
            poly.push_back({i, ct.spec.gamma(i, 0), ct.spec.gamma(i, 1)});
        ctx.plot_data["tetragon"] = schema_table("leglab-tetragon/1", {"vertex", "s", "t"}, std::move(poly));
        Json hist = Json::array();
        for (std::size_t i = 0; i < ct.lower.size(); ++i)
            hist.push_back({i, ct.lower[i]});
        ctx.plot_data["tetragon_bisection"] = schema_table("leglab-bisection/1", {"step", "area"}, std::move(hist));
    });
    if (ctx.has("E")) {
        const auto chk = energy_contradiction(ctx.positive("E", 0.0), T, k, delta);
        Json j = Json::object();
        j["lhs"] = chk.lhs;
        j["rhs"] = chk.rhs;
        j["contradiction"] = chk.contradiction;
        r["contradiction"] = j;
    }
    if (ctx.has("sigma"))
        r["displacement_constant"] = displacement_constant(ctx.positive("sigma", 0.0), k, delta);
}

// ---- barcode ---------------------------------------------------------------

void run_barcode(Context& ctx)
{
    ctx.allow({"complex", "values", "size", "shape", "periodic", "R", "jitter"});
    const std::string kind = ctx.text("complex", "cycle");
    const double R = ctx.positive("R", 1e6);
    std::vector<Eigen::Index> shape;
    if (kind == "cubical") {
        for (double s : ctx.numbers("shape", {}))
            shape.push_back(Eigen::Index(s));
        if (shape.empty())
            throw ctx.bad("shape", "required for cubical complexes");
    } else if (kind != "cycle" && kind != "path") {
        throw ctx.bad("complex", "expected cycle, path or cubical");
    }

    Eigen::VectorXd values;
    if (ctx.has("values") && ctx.raw("values").is_string()) {
        if (ctx.raw("values").get<std::string>() != "random")
            throw ctx.bad("values", "expected an array or \"random\"");
        Eigen::Index n = 1;
        if (kind == "cubical") {
            for (auto s : shape)
                n *= s;
        } else {
            n = ctx.count("size", 0, 3);
            if (n < 3)
                throw ctx.bad("size", "required with random values");
        }
        values = jitter_values(Eigen::VectorXd::Zero(n), 1.0, ctx.seed());
    } else {
        const auto v = ctx.numbers("values", {0.0, 3.0, 1.0, 4.0});
        values = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    }
    if (const double j = ctx.number("jitter", 0.0); j > 0)
        values = jitter_values(values, j, ctx.seed());

    FiltrationComplex cx;
    if (kind == "cycle") {
        cx = FiltrationComplex::cycle(values);
    } else if (kind == "path") {
        cx = FiltrationComplex::path(values);
    } else {
        std::vector<bool> periodic(shape.size(), false);
        if (ctx.has("periodic")) {
            const Json& p = ctx.raw("periodic");
            if (!p.is_array() || p.size() != shape.size())
                throw ctx.bad("periodic", "expected one boolean per axis");
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!p[i].is_boolean())
                    throw ctx.bad("periodic/" + std::to_string(i), "expected true or false");
                periodic[i] = p[i].get<bool>();
            }
        }
        if (!ctx.step("complex", [&] { cx = FiltrationComplex::cubical(values, shape, periodic); })) {
            ctx.plot_data["barcode"] = skipped("complex step failed");
            return;
        }
    }
    ctx.metadata["cells"] = cx.size();
    ctx.metadata["vertices"] = values.size();

    Barcode bc;
    if (!ctx.step("barcode", [&] { bc = sublevel_barcode(cx, R); })) {
        ctx.plot_data["barcode"] = skipped("barcode step failed");
        return;
    }
    Json bars = Json::array();
    Json rows = Json::array();
    for (const auto& b : bc.bars) {
        Json j = Json::object();
        j["degree"] = b.degree;
        j["birth"] = b.birth;
        j["death"] = b.death;
        j["capped"] = b.capped;
        bars.push_back(std::move(j));
        rows.push_back({b.degree, b.birth, b.death, b.capped});
    }
    ctx.results["bars"] = std::move(bars);
    ctx.results["longest"] = bc.longest;
    ctx.plot_data["barcode"] = schema_table("leglab-barcode/1", {"degree", "birth", "death", "capped"},
                                            std::move(rows));

    ctx.step("barannikov", [&] {
        BarannikovPairing pairing;
        try {
            pairing = barannikov_pairing(cx, R);
        } catch (const StrongMorseError&) {
            ctx.results["strong_morse"] = false;
            return;
        }
        ctx.results["strong_morse"] = true;
        auto key = [](const Bar& b) { return std::tuple(b.degree, b.birth, b.death); };
        std::vector<std::tuple<int, double, double>> a, b;
        for (const auto& p : pairing.pairs())
            if (p.length() > 0)
                a.push_back(key(p));
        for (const auto& f : bc.finite())
            if (f.length() > 0)
                b.push_back(key(f));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        ctx.results["barannikov_pairs"] = a.size();
        ctx.results["pairs_match_finite_bars"] = a == b;
    });
}

// ---- cerf_diagram ----------------------------------------------------------

void run_cerf(Context& ctx)
{
    ctx.allow({"family", "t0", "nt", "nx", "s", "g", "scale", "tol"});
    const std::string fam = ctx.text("family", "fold");
    const Eigen::Index nt = ctx.grid(ctx.count("nt", 41, 2), 3);
    const auto time = TimeGrid::uniform(nt);
    GeneratingFunctionFamily K;
    bool ok = false;
    if (fam == "fold") {
        const double t0 = ctx.number("t0", 0.25);
        const Eigen::Index nx = ctx.grid(ctx.count("nx", 64, 4), 4);
        ok = ctx.step("family", [&] { K = families::fold(time, t0, nx); });
    } else if (fam == "cubic_fiber") {
        const auto s = ctx.function("s", {"t", "x"}, Json({{"-", {"t", 0.25}}}));
        const auto g = ctx.function("g", {"x"}, 0);
        const Eigen::Index nx = ctx.grid(ctx.count("nx", 32, 4), 4);
        const double scale = ctx.positive("scale", 1.0);
        ok = ctx.step("family", [&] {
            K = families::cubic_fiber(time, nx, [s](double t, double x) { return s({t, x}); },
                                      [g](double x) { return g({x}); }, scale);
        });
    } else {
        throw ctx.bad("family", "expected fold or cubic_fiber");
    }
    ctx.metadata["times"] = nt;
    if (!ok) {
        ctx.plot_data["cerf_branches"] = skipped("family step failed");
        return;
    }
    ctx.metadata["base_samples"] = K.xs().size();
    ctx.metadata["fiber_samples"] = K.n1() * K.n2();

    SingularDiagram d;
    if (!ctx.step("cerf", [&] {
            const auto trace = critical_value_trace(K);
            d = cerf_diagram(K, &trace, ctx.tol("cerf", 1e-6));
        })) {
        ctx.plot_data["cerf_branches"] = skipped("cerf step failed");
        return;
    }
    Json events = Json::array();
    int births = 0, deaths = 0;
    for (const auto& e : d.events) {
        Json j = Json::object();
        j["t"] = e.t;
        j["kind"] = e.kind;
        j["branch"] = e.branch;
        events.push_back(std::move(j));
        births += e.kind == "birth";
        deaths += e.kind == "death";
    }
    auto& r = ctx.results;
    r["branches"] = d.branches.size();
    r["births"] = births;
    r["deaths"] = deaths;
    r["events"] = std::move(events);
    r["band_violation"] = d.band_violation;
    r["max_step_residual"] = d.max_step_residual;

    Json rows = Json::array();
    for (const auto& b : d.branches)
        for (const auto& p : b.points)
            rows.push_back({b.id, p.t, p.x, p.value, p.dt_value});
    ctx.plot_data["cerf_branches"] = schema_table("leglab-cerf/1", {"branch", "t", "x", "z", "p"}, std::move(rows));
}

// ---- energy ----------------------------------------------------------------

void run_energy(Context& ctx)
{
    ctx.allow({"family", "nt", "nx", "contractions"});
    const std::string name = ctx.text("family", "rotating_circle");
    const Eigen::Index nt = ctx.grid(ctx.count("nt", 101, 3), 3);
    const Eigen::Index nx = ctx.grid(ctx.count("nx", 256, 8), 8);
    const auto cs = ctx.numbers("contractions", {0.5, 0.1, 0.01});
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (!(cs[i] > 0))
            throw ctx.bad("contractions/" + std::to_string(i), "must be positive");
    const auto grid = TimeGrid::uniform(nt);
    LoopFamily fam;
    if (name == "rotating_circle")
        fam = corpus::rotating_circle(grid, nx);
    else if (name == "translating_circle")
        fam = corpus::translating_circle(grid, nx);
    else if (name == "squeezed_circle")
        fam = corpus::squeezed_circle(grid, nx);
    else if (name == "wobbling_circle")
        fam = corpus::wobbling_circle(grid, nx);
    else
        throw ctx.bad("family", "expected rotating_circle, translating_circle, squeezed_circle or wobbling_circle");
    Json g = Json::object();
    g["times"] = nt;
    g["samples"] = nx;
    ctx.metadata["grid"] = g;

    auto& r = ctx.results;
    double lag = 0.0;
    const bool have_lag = ctx.step("lagrangian", [&] { lag = lagrangian_osc_energy(fam, ctx.tol("exactness", 1e-7)); });
    if (have_lag)
        r["lagrangian"] = lag;
    ctx.step("legendrian", [&] {
        const auto iso = legendrian_isotopy(fam);
        const auto trace = contact_hamiltonian(iso);
        const auto rep = energy_of(trace);
        r["legendrian"] = rep.oscillation;
        r["length"] = rep.length;
        if (have_lag)
            r["difference"] = std::abs(rep.oscillation - lag);
        Json rows = Json::array();
        for (Eigen::Index t = 0; t < trace.grid().size(); ++t)
            rows.push_back({trace.grid()[t], trace.min()[t], trace.max()[t], rep.spread[t]});
        ctx.plot_data["hamiltonian"] = schema_table("leglab-hamiltonian/1", {"t", "h_min", "h_max", "spread"},
                                                    std::move(rows));
    });
    if (!have_lag)
        return;
    Json scaling = Json::array();
    double worst = 0.0;
    for (double c : cs) {
        ctx.step("contraction c=" + Json(c).dump(), [&] {
            const double e = lagrangian_osc_energy(conjugate_by_contraction(fam, c), ctx.tol("exactness", 1e-7));
            Json j = Json::object();
            j["c"] = c;
            j["lagrangian"] = e;
            j["ratio"] = e / lag;
            j["relative_error"] = std::abs(e / lag / c - 1.0);
            worst = std::max(worst, std::abs(e / lag / c - 1.0));
            scaling.push_back(std::move(j));
        });
    }
    r["scaling"] = std::move(scaling);
    r["max_scaling_error"] = worst;
}

// ---- lifting ---------------------------------------------------------------

HamiltonianSpec hamiltonian_param(Context& ctx)
{
    const std::string model = ctx.text("model", "plane");
    if (model != "plane" && model != "cylinder")
        throw ctx.bad("model", "expected plane or cylinder");
    HamiltonianSpec H;
    if (ctx.has("hamiltonian")) {
        if (ctx.has("H"))
            throw ctx.bad("H", "give either hamiltonian or H");
        const std::string name = ctx.text("hamiltonian", "");
        bool found = false;
        std::string known;
        for (auto& [n, spec] : corpus::lifting_hamiltonians()) {
            known += (known.empty() ? "" : ", ") + n;
            if (n == name) {
                H = spec;
                found = true;
            }
        }
        if (!found)
            throw ctx.bad("hamiltonian", "unknown corpus Hamiltonian (known: " + known + ")");
        if (ctx.has("model") && H.model != (model == "plane" ? SY1Model::PuncturedPlane : SY1Model::Cylinder))
            throw ctx.bad("model", "does not match the corpus Hamiltonian");
    } else {
        H.model = model == "plane" ? SY1Model::PuncturedPlane : SY1Model::Cylinder;
        const std::vector<std::string> vars =
            H.model == SY1Model::PuncturedPlane ? std::vector<std::string>{"t", "x", "y"}
                                                : std::vector<std::string>{"t", "s", "theta"};
        const auto e = ctx.function("H", vars, 0);
        const auto d1 = e.derivative(1), d2 = e.derivative(2);
        H.H = [e](double t, const Eigen::Vector2d& p) { return e({t, p.x(), p.y()}); };
        H.gradient = [d1, d2](double t, const Eigen::Vector2d& p) {
            return Eigen::Vector2d(d1({t, p.x(), p.y()}), d2({t, p.x(), p.y()}));
        };
    }
    if (ctx.has("cutoff_radius"))
        H.cutoff_radius = ctx.positive("cutoff_radius", 0.0);
    if (ctx.has("domain_radius"))
        H.domain_radius = ctx.positive("domain_radius", 10.0);
    ctx.metadata["model"] = to_string(H.model);
    return H;
}

Points3 seeds_param(Context& ctx)
{
    if (!ctx.has("seeds")) {
        Points3 s(6, 3);
        s << 0, 0.3, 0, 0.1, 0.5, 0.2, 0, -0.7, 0.1, 0.2, 1.0, 0.4, 0, 0.05, 0.0, 0, 2, 2;
        return s;
    }
    const Json& j = ctx.raw("seeds");
    if (!j.is_array() || j.empty())
        throw ctx.bad("seeds", "expected a non-empty array of [theta0, p1, p2]");
    Points3 s(Eigen::Index(j.size()), 3);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != 3)
            throw ctx.bad("seeds/" + std::to_string(i), "expected [theta0, p1, p2]");
        for (std::size_t k = 0; k < 3; ++k) {
            if (!j[i][k].is_number())
                throw ctx.bad("seeds/" + std::to_string(i) + "/" + std::to_string(k), "expected a number");
            s(Eigen::Index(i), Eigen::Index(k)) = j[i][k].get<double>();
        }
    }
    return s;
}

Eigen::Vector2d point_param(Context& ctx, const Json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ctx.bad(field, "expected [a, b]");
    return {j[0].get<double>(), j[1].get<double>()};
}

// Straight segment j(y) = a + y (b - a), y in [0, 1], with its exact primitive.
ProductLiftData segment_lift(SY1Model m, const Eigen::Vector2d& a, const Eigen::Vector2d& b, Eigen::Index n)
{
    ProductLiftData d;
    d.model = m;
    d.aux = {0.0};
    d.ys = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    d.j.resize(n, 2);
    d.f.resize(n);
    const Eigen::Vector2d v = b - a;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = d.ys[i];
        d.j.row(i) = (a + y * v).transpose();
        if (m == SY1Model::PuncturedPlane) {
            d.f[i] = 0.5 * (a.x() * v.y() - a.y() * v.x()) * y;
        } else if (std::abs(v.x()) < 1e-14) {
            d.f[i] = std::exp(a.x()) * v.y() * y;
        } else {
            d.f[i] = v.y() * (std::exp(a.x() + y * v.x()) - std::exp(a.x())) / v.x();
        }
    }
    return d;
}

void run_lift(Context& ctx)
{
    ctx.allow({"model", "hamiltonian", "H", "cutoff_radius", "domain_radius", "seeds", "step", "t1",
               "record_every", "fd_step", "transport"});
    const HamiltonianSpec H = hamiltonian_param(ctx);
    const Points3 seeds = seeds_param(ctx);
    LiftOptions opt;
    opt.step = ctx.positive("step", 1e-3) / ctx.grid_scale();
    opt.t1 = ctx.positive("t1", 1.0);
    opt.record_every = ctx.count("record_every", 10, 1);
    opt.fd_step = ctx.positive("fd_step", 1e-3);
    opt.jobs = ctx.jobs();
    Json integ = Json::object();
    integ["method"] = "rk4";
    integ["step"] = opt.step;
    integ["t1"] = opt.t1;
    integ["record_every"] = opt.record_every;
    integ["fd_step"] = opt.fd_step;
    ctx.metadata["integrator"] = integ;
    ctx.metadata["seeds"] = seeds.rows();

    auto& r = ctx.results;
    const bool ok = ctx.step("lift", [&] {
        const auto L = lift_hamiltonian(H, seeds, opt);
        r["a_drift"] = L.a_drift;
        r["error_estimate"] = L.error_estimate;
        r["drift_bound"] = 10.0 * L.error_estimate + 1e-9;
        r["strict"] = L.a_drift <= 10.0 * L.error_estimate + 1e-9;
        r["hamiltonian_defect"] = L.hamiltonian_defect;
        r["oscillation"] = L.oscillation;
        Json rows = Json::array();
        for (Eigen::Index t = 0; t < L.grid.size(); ++t)
            for (Eigen::Index s = 0; s < seeds.rows(); ++s)
                rows.push_back({L.grid[t], s, L.flow[std::size_t(t)](s, 0), L.flow[std::size_t(t)](s, 1),
                                L.flow[std::size_t(t)](s, 2)});
        ctx.plot_data["lift_flow"] = schema_table("leglab-lift-flow/1", {"t", "seed", "theta0", "p1", "p2"},
                                                  std::move(rows));
    });
    if (!ok)
        ctx.plot_data["lift_flow"] = skipped("lift step failed");

    if (ctx.has("transport")) {
        const Json& tj = ctx.object("transport");
        for (const auto& [k, v] : tj.items())
            if (k != "from" && k != "to" && k != "samples")
                throw ctx.bad("transport/" + k, "unknown key (allowed: from, to, samples)");
        const bool plane = H.model == SY1Model::PuncturedPlane;
        const Eigen::Vector2d a = tj.contains("from") ? point_param(ctx, tj["from"], "transport/from")
                                                      : Eigen::Vector2d(plane ? 0.2 : 0.1, plane ? 0.0 : 0.1);
        const Eigen::Vector2d b = tj.contains("to") ? point_param(ctx, tj["to"], "transport/to")
                                                    : Eigen::Vector2d(plane ? 0.7 : 0.1, plane ? 0.1 : 0.9);
        Eigen::Index n = 41;
        if (tj.contains("samples")) {
            if (!tj["samples"].is_number_integer() || tj["samples"].get<long long>() < 3)
                throw ctx.bad("transport/samples", "expected an integer >= 3");
            n = Eigen::Index(tj["samples"].get<long long>());
        }
        ctx.step("transport", [&] {
            const auto data = segment_lift(H.model, a, b, n);
            const auto T = transport_primitive(data, H, opt);
            r["primitive_defect"] = data.primitive_defect();
            r["transport_agreement"] = T.agreement;
        });
    }
}

// ---- sikorav ---------------------------------------------------------------

void run_sikorav(Context& ctx)
{
    ctx.allow({"model", "hamiltonian", "H", "cutoff_radius", "domain_radius", "k", "nt", "samples",
               "action_points", "action_k", "step"});
    const HamiltonianSpec H = hamiltonian_param(ctx);
    const auto ks = ctx.numbers("k", {0.0, 1.0, 5.0});
    const Eigen::Index nt = ctx.grid(ctx.count("nt", 11, 2), 2);
    const Eigen::Index n = ctx.grid(ctx.count("samples", 41, 3), 3);
    const auto aks = ctx.numbers("action_k", {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    const double step = ctx.positive("step", 1e-3);
    Points2 ys(5, 2);
    ys << 0.1, 0, 0.3, 0.1, 0, 0.5, -0.2, -0.2, 0.05, 0.0;
    if (ctx.has("action_points")) {
        const Json& j = ctx.raw("action_points");
        if (!j.is_array() || j.empty())
            throw ctx.bad("action_points", "expected a non-empty array of [x, y]");
        ys.resize(Eigen::Index(j.size()), 2);
        for (std::size_t i = 0; i < j.size(); ++i)
            ys.row(Eigen::Index(i)) = point_param(ctx, j[i], "action_points/" + std::to_string(i)).transpose();
    }
    Json g = Json::object();
    g["times"] = nt;
    g["samples_per_axis"] = n;
    g["action_step"] = step;
    ctx.metadata["grid"] = g;

    auto& r = ctx.results;
    Json per = Json::array();
    double worst = 0.0;
    ctx.step("rescale", [&] {
        const auto samples = region_samples(H, n);
        const auto grid = TimeGrid::uniform(nt);
        for (double k : ks) {
            const auto S = sikorav_rescale(H, k, grid, samples);
            Json j = Json::object();
            j["k"] = k;
            j["oscillation"] = S.oscillation;
            j["rescaled_oscillation"] = S.rescaled_oscillation;
            j["ratio"] = S.ratio;
            j["expected"] = std::exp(-k);
            j["error"] = std::abs(S.ratio - std::exp(-k));
            worst = std::max(worst, std::abs(S.ratio - std::exp(-k)));
            per.push_back(std::move(j));
        }
    });
    r["rescaling"] = std::move(per);
    r["max_ratio_error"] = worst;

    ctx.step("actions", [&] {
        Json rows = Json::array();
        double bound = 0.0;
        Json maxes = Json::array();
        for (double k : aks) {
            const Eigen::VectorXd a = sikorav_actions(H, k, ys, step);
            const double m = a.cwiseAbs().maxCoeff();
            bound = std::max(bound, m);
            maxes.push_back(m);
            for (Eigen::Index i = 0; i < a.size(); ++i)
                rows.push_back({k, i, a[i]});
        }
        r["action_k"] = aks;
        r["action_max_abs"] = std::move(maxes);
        r["action_bound"] = bound;
        ctx.plot_data["sikorav_actions"] = schema_table("leglab-actions/1", {"k", "point", "a"}, std::move(rows));
    });
}

// ---- disjoinment -----------------------------------------------------------

void run_disjoin(Context& ctx)
{
    ctx.allow({"c", "A", "m", "a", "eps", "nt", "nx"});
    const auto c = ctx.function("c", {"t"}, Json({{"*", {0.3, "t"}}}));
    const auto dc = c.derivative(0);
    families::DriftProfile prof;
    prof.A = ctx.positive("A", 1.0);
    prof.m = ctx.positive("m", prof.m);
    prof.a = ctx.positive("a", prof.a);
    const double eps = ctx.number("eps", 0.01);
    if (eps < 0)
        throw ctx.bad("eps", "must be non-negative");
    const Eigen::Index nt = ctx.grid(ctx.count("nt", 41, 2), 3);
    const Eigen::Index nx = ctx.grid(ctx.count("nx", 8, 2), 2);
    Json g = Json::object();
    g["times"] = nt;
    g["base_samples"] = nx;
    ctx.metadata["grid"] = g;
    ctx.metadata["c"] = c.str();

    ctx.step("disjoinment", [&] {
        const auto K = families::drift(TimeGrid::uniform(nt), [c](double t) { return c({t}); },
                                       [dc](double t) { return dc({t}); }, prof, nx);
        const auto trace = critical_value_trace(K);
        const auto chk = disjoinment_bound_check(K, trace, prof.A, eps, ctx.tol("bound", 1e-6), ctx.jobs());
        auto& r = ctx.results;
        r["L0"] = chk.track.L[0];
        r["L1"] = chk.L1;
        r["oscillation"] = chk.oscillation;
        r["rhs"] = chk.rhs;
        r["margin"] = chk.margin;
        r["derivative_bound"] = chk.derivative_bound;
        r["slope_bound"] = chk.slope_bound;
        r["chord_persists"] = chk.chord_persists;
        r["corollary_applies"] = chk.corollary_applies;
        r["verdict"] = to_string(chk.verdict);
        r["jumps"] = std::count_if(chk.track.events.begin(), chk.track.events.end(),
                                   [](const TrackEvent& e) { return e.kind == "jump"; });
        Json rows = Json::array();
        for (Eigen::Index t = 0; t < chk.track.grid.size(); ++t)
            rows.push_back({chk.track.grid[t], chk.track.L[t], trace.min()[t], trace.max()[t]});
        ctx.plot_data["longest_bar"] = schema_table("leglab-longest-bar/1", {"t", "L", "h_min", "h_max"},
                                                    std::move(rows));
    });
}

}  // namespace

const std::map<std::string, Operation>& registry()
{
    static const std::map<std::string, Operation> ops = {
        {"barcode", run_barcode},
        {"cerf_diagram", run_cerf},
        {"disjoinment", run_disjoin},
        {"energy", run_energy},
        {"fig_deformation_family", run_fig},
        {"lift_hamiltonian", run_lift},
        {"sikorav", run_sikorav},
        {"tb_difference", run_tb},
        {"tetragon", run_tetragon},
    };
    return ops;
}

}  // namespace leglab::cli::detail
