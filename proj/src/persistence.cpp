#include "leglab/persistence.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace leglab {

int FiltrationComplex::add_cell(int d, double v, std::vector<int> faces)
{
    std::sort(faces.begin(), faces.end());
    dim.push_back(d);
    value.push_back(v);
    boundary.push_back(std::move(faces));
    return int(dim.size()) - 1;
}

void FiltrationComplex::validate() const
{
    const auto n = dim.size();
    if (value.size() != n || boundary.size() != n)
        throw ArgumentError("FiltrationComplex: field sizes differ");
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(value[i]))
            throw ArgumentError("FiltrationComplex: NaN filtration value");
        if (dim[i] == 0 && !boundary[i].empty())
            throw ArgumentError("FiltrationComplex: vertex with faces");
        for (std::size_t k = 0; k < boundary[i].size(); ++k) {
            const int f = boundary[i][k];
            if (f < 0 || std::size_t(f) >= n || dim[f] != dim[i] - 1)
                throw ArgumentError("FiltrationComplex: bad face of cell " + std::to_string(i));
            if (value[f] > value[i])
                throw ArgumentError("FiltrationComplex: face " + std::to_string(f) +
                                    " enters after cell " + std::to_string(i));
            if (k > 0 && boundary[i][k - 1] == f)
                throw ArgumentError("FiltrationComplex: repeated face");
        }
    }
}

FiltrationComplex FiltrationComplex::cycle(const Eigen::VectorXd& v)
{
    if (v.size() < 3)
        throw ArgumentError("FiltrationComplex::cycle: need >= 3 vertices");
    return cubical(v, {v.size()}, {true});
}

FiltrationComplex FiltrationComplex::path(const Eigen::VectorXd& v)
{
    if (v.size() < 1)
        throw ArgumentError("FiltrationComplex::path: need a vertex");
    return cubical(v, {v.size()}, {false});
}

FiltrationComplex FiltrationComplex::cubical(const Eigen::VectorXd& vv, const std::vector<Eigen::Index>& shape,
                                             const std::vector<bool>& periodic)
{
    const int d = int(shape.size());
    if (d < 1 || d > 3 || periodic.size() != shape.size())
        throw ArgumentError("FiltrationComplex::cubical: one to three axes expected");
    Eigen::Index nv = 1;
    for (int a = 0; a < d; ++a) {
        if (shape[a] < 1 || (periodic[a] && shape[a] < 3))
            throw ArgumentError("FiltrationComplex::cubical: axis too short");
        nv *= shape[a];
    }
    if (vv.size() != nv)
        throw ArgumentError("FiltrationComplex::cubical: vertex count does not match the shape");

    std::vector<Eigen::Index> stride(d, 1);
    for (int a = d - 2; a >= 0; --a)
        stride[a] = stride[a + 1] * shape[a + 1];
    auto coords = [&](Eigen::Index lin) {
        std::array<Eigen::Index, 3> c{0, 0, 0};
        for (int a = 0; a < d; ++a)
            c[a] = (lin / stride[a]) % shape[a];
        return c;
    };
    auto exists = [&](const std::array<Eigen::Index, 3>& c, int mask) {
        for (int a = 0; a < d; ++a)
            if ((mask >> a & 1) && !periodic[a] && c[a] + 1 >= shape[a])
                return false;
        return true;
    };
    auto shift = [&](Eigen::Index lin, int a) {
        const Eigen::Index c = (lin / stride[a]) % shape[a];
        return c + 1 < shape[a] ? lin + stride[a] : lin - c * stride[a];
    };

    FiltrationComplex out;
    const int nmask = 1 << d;
    std::vector<int> id(std::size_t(nmask) * std::size_t(nv), -1);
    std::vector<int> masks(nmask);
    std::iota(masks.begin(), masks.end(), 0);
    std::stable_sort(masks.begin(), masks.end(),
                     [](int a, int b) { return std::popcount(unsigned(a)) < std::popcount(unsigned(b)); });
    for (int mask : masks) {
        const int k = std::popcount(unsigned(mask));
        for (Eigen::Index lin = 0; lin < nv; ++lin) {
            if (!exists(coords(lin), mask))
                continue;
            std::vector<int> faces;
            double val = 0.0;
            if (k == 0) {
                val = vv[lin];
            } else {
                val = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < d; ++a) {
                    if (!(mask >> a & 1))
                        continue;
                    const int sub = mask & ~(1 << a);
                    const int f0 = id[std::size_t(sub) * nv + lin];
                    const int f1 = id[std::size_t(sub) * nv + shift(lin, a)];
                    faces.push_back(f0);
                    faces.push_back(f1);
                    val = std::max({val, out.value[f0], out.value[f1]});
                }
            }
            id[std::size_t(mask) * nv + lin] = out.add_cell(k, val, std::move(faces));
        }
    }
    return out;
}

FiltrationComplex FiltrationComplex::from_family(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    std::vector<Eigen::Index> shape{K.xs().size(), K.n1()};
    std::vector<bool> periodic{K.circle(), false};
    if (K.fiber_dim() > 1) {
        shape.push_back(K.n2());
        periodic.push_back(false);
    }
    return cubical(K.values(t), shape, periodic);
}

Eigen::VectorXd jitter_values(const Eigen::VectorXd& values, double rel, std::uint64_t seed)
{
    if (values.size() == 0)
        return values;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double range = values.maxCoeff() - values.minCoeff();
    const double amp = rel * (range > 0 ? range : 1.0);
    Eigen::VectorXd out = values;
    for (auto& v : out)
        v += amp * u(rng);
    return out;
}

std::vector<Bar> Barcode::finite() const
{
    std::vector<Bar> out;
    std::copy_if(bars.begin(), bars.end(), std::back_inserter(out), [](const Bar& b) { return !b.capped; });
    return out;
}

namespace {

void sort_bars(std::vector<Bar>& bars)
{
    std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
        if (a.degree != b.degree)
            return a.degree < b.degree;
        if (a.birth != b.birth)
            return a.birth < b.birth;
        return a.death < b.death;
    });
}

void add_mod2(std::vector<int>& a, const std::vector<int>& b)
{
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    a.swap(out);
}

struct Reduction {
    std::vector<std::pair<int, int>> pairs;  // (birth position, death position)
    std::vector<int> essential;
};

// Column reduction with clearing; columns hold face positions in filtration order.
Reduction reduce(std::vector<std::vector<int>> cols, const std::vector<int>& dims)
{
    const int n = int(cols.size());
    const int top = dims.empty() ? 0 : *std::max_element(dims.begin(), dims.end());
    std::vector<int> owner(n, -1);
    std::vector<char> cleared(n, 0), negative(n, 0);
    Reduction r;
    for (int d = top; d >= 1; --d)
        for (int j = 0; j < n; ++j) {
            if (dims[j] != d || cleared[j])
                continue;
            auto& col = cols[j];
            while (!col.empty() && owner[col.back()] >= 0)
                add_mod2(col, cols[owner[col.back()]]);
            if (col.empty())
                continue;
            const int low = col.back();
            owner[low] = j;
            negative[j] = 1;
            cleared[low] = 1;
            cols[low].clear();
            r.pairs.emplace_back(low, j);
        }
    for (int i = 0; i < n; ++i)
        if (!negative[i] && owner[i] < 0)
            r.essential.push_back(i);
    return r;
}

std::vector<int> filtration_order(const std::vector<double>& value, const std::vector<int>& dim)
{
    std::vector<int> order(value.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (value[a] != value[b])
            return value[a] < value[b];
        if (dim[a] != dim[b])
            return dim[a] < dim[b];
        return a < b;
    });
    return order;
}

}  // namespace

Barcode sublevel_barcode(const FiltrationComplex& c, double R)
{
    c.validate();
    if (!(R > 0.0))
        throw ArgumentError("sublevel_barcode: cap R must be positive");
    const int n = int(c.size());

    // Cone the relative part {value <= -R}.
    std::vector<double> value = c.value;
    std::vector<int> dim = c.dim;
    std::vector<std::vector<int>> bnd = c.boundary;
    std::vector<int> cone(n, -1);
    int apex = -1;
    for (int i = 0; i < n; ++i) {
        if (c.value[i] > -R)
            continue;
        if (apex < 0) {
            apex = int(value.size());
            value.push_back(-std::numeric_limits<double>::infinity());
            dim.push_back(0);
            bnd.emplace_back();
        }
        cone[i] = int(value.size());
        value.push_back(c.value[i]);
        dim.push_back(c.dim[i] + 1);
        bnd.emplace_back();
    }
    for (int i = 0; i < n; ++i) {
        if (cone[i] < 0)
            continue;
        auto& b = bnd[cone[i]];
        b.push_back(i);
        if (c.dim[i] == 0)
            b.push_back(apex);
        for (int f : c.boundary[i])
            b.push_back(cone[f]);
    }

    const std::vector<int> order = filtration_order(value, dim);
    std::vector<int> pos(order.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        pos[order[k]] = int(k);
    std::vector<std::vector<int>> cols(order.size());
    std::vector<int> dims(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int cell = order[k];
        dims[k] = dim[cell];
        for (int f : bnd[cell])
            cols[k].push_back(pos[f]);
        std::sort(cols[k].begin(), cols[k].end());
    }
    const Reduction red = reduce(std::move(cols), dims);

    Barcode out;
    for (auto [b, d] : red.pairs) {
        const double vb = value[order[b]], vd = value[order[d]];
        if (vd > vb && vd > -R)
            out.bars.push_back({vb, vd, dims[b], false});
    }
    for (int e : red.essential) {
        if (order[e] == apex)
            continue;
        const double vb = value[order[e]];
        if (vb >= R)
            throw ArgumentError("sublevel_barcode: a class is born at or above the cap R; R is too small");
        out.bars.push_back({vb, R, dims[e], true});
    }
    sort_bars(out.bars);
    for (const auto& b : out.bars)
        out.longest = std::max(out.longest, b.length());
    return out;
}

Barcode sublevel_barcode(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    const double R = K.grid().R;
    const int dim = K.fiber_dim();
    const Eigen::Index nx = K.xs().size(), n1 = K.n1(), n2 = K.n2();
    const Tail& tail = K.grid().tail;
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
        const double c0 = K.sample(t, ix, 0, 0) - tail(K.fiber_point(0, 0), dim);
        for (Eigen::Index i1 = 0; i1 < n1; ++i1)
            for (Eigen::Index i2 = 0; i2 < n2; ++i2) {
                const double v = K.sample(t, ix, i1, i2);
                if (v > -R)
                    continue;
                const double dev = v - tail(K.fiber_point(i1, i2), dim) - c0;
                if (std::abs(dev) > 1e-8 * (1.0 + std::abs(v))) {
                    std::ostringstream os;
                    os << "sublevel_barcode: {K <= -R} meets the compact part at t index " << t
                       << " (R = " << R << ")";
                    throw ArgumentError(os.str());
                }
            }
    }
    return sublevel_barcode(FiltrationComplex::from_family(K, t), R);
}

std::vector<Bar> BarannikovPairing::pairs() const
{
    std::vector<Bar> out;
    for (int i = 0; i < int(partner.size()); ++i)
        if (partner[i] > i)
            out.push_back({values[i], values[partner[i]], degree[i], false});
    sort_bars(out);
    return out;
}

namespace {

void toggle(std::vector<int>& v, int x)
{
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x)
        v.erase(it);
    else
        v.insert(it, x);
}

void erase(std::vector<int>& v, int x)
{
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x)
        v.erase(it);
}

}  // namespace

BarannikovPairing barannikov_pairing(const FiltrationComplex& c, double R)
{
    c.validate();
    // Quotient by the relative part.
    const int n0 = int(c.size());
    std::vector<int> keep(n0, -1);
    std::vector<double> value;
    std::vector<int> dim;
    for (int i = 0; i < n0; ++i)
        if (c.value[i] > -R) {
            keep[i] = int(value.size());
            value.push_back(c.value[i]);
            dim.push_back(c.dim[i]);
        }
    const int n = int(value.size());
    std::vector<std::vector<int>> bnd(n), cob(n);
    for (int i = 0; i < n0; ++i) {
        if (keep[i] < 0)
            continue;
        for (int f : c.boundary[i])
            if (keep[f] >= 0)
                bnd[keep[i]].push_back(keep[f]);
        std::sort(bnd[keep[i]].begin(), bnd[keep[i]].end());
        for (int f : bnd[keep[i]])
            cob[f].push_back(keep[i]);
    }
    for (auto& v : cob)
        std::sort(v.begin(), v.end());

    // Cancel incidences between cells of equal value. Each cancellation is a
    // filtered chain homotopy equivalence, so the barcode is unchanged.
    std::vector<char> alive(n, 1);
    const std::vector<int> order = filtration_order(value, dim);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int tau : order) {
            if (!alive[tau])
                continue;
            int sigma = -1;
            for (int f : bnd[tau])
                if (value[f] == value[tau]) {
                    sigma = f;
                    break;
                }
            if (sigma < 0)
                continue;
            const std::vector<int> bt = bnd[tau];
            const std::vector<int> rhos = cob[sigma];
            for (int rho : rhos) {
                if (rho == tau)
                    continue;
                for (int x : bt) {
                    toggle(bnd[rho], x);
                    toggle(cob[x], rho);
                }
            }
            for (int rho : cob[tau])
                erase(bnd[rho], tau);
            for (int x : bnd[tau])
                erase(cob[x], tau);
            for (int x : bnd[sigma])
                erase(cob[x], sigma);
            bnd[tau].clear();
            cob[tau].clear();
            bnd[sigma].clear();
            cob[sigma].clear();
            alive[tau] = alive[sigma] = 0;
            changed = true;
        }
    }

    std::vector<int> crit;
    for (int i : order)
        if (alive[i])
            crit.push_back(i);
    for (std::size_t k = 1; k < crit.size(); ++k)
        if (value[crit[k]] == value[crit[k - 1]]) {
            std::ostringstream os;
            os << "barannikov_pairing: critical value " << value[crit[k]]
               << " is attained more than once; perturb to strong Morse data";
            throw StrongMorseError(os.str());
        }
    std::vector<int> pos(n, -1);
    for (std::size_t k = 0; k < crit.size(); ++k)
        pos[crit[k]] = int(k);
    std::vector<std::vector<int>> cols(crit.size());
    std::vector<int> dims(crit.size());
    for (std::size_t k = 0; k < crit.size(); ++k) {
        dims[k] = dim[crit[k]];
        for (int f : bnd[crit[k]])
            cols[k].push_back(pos[f]);
        std::sort(cols[k].begin(), cols[k].end());
    }
    const Reduction red = reduce(std::move(cols), dims);

    BarannikovPairing out;
    out.values.resize(Eigen::Index(crit.size()));
    out.degree = dims;
    out.partner.assign(crit.size(), -1);
    for (std::size_t k = 0; k < crit.size(); ++k)
        out.values[Eigen::Index(k)] = value[crit[k]];
    for (auto [b, d] : red.pairs) {
        out.partner[b] = d;
        out.partner[d] = b;
    }
    return out;
}

BarTrack longest_bar_track(const GeneratingFunctionFamily& K, const HamiltonianTrace* trace, double tol,
                           int jobs)
{
    const TimeGrid& g = K.time();
    const Eigen::Index nt = g.size();
    if (trace && trace->grid().size() != nt)
        throw ArgumentError("longest_bar_track: trace time grid differs");
    BarTrack tr;
    tr.grid = g;
    tr.barcodes.resize(nt);
    tr.L.resize(nt);

    std::atomic<Eigen::Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&] {
        for (Eigen::Index t; (t = next++) < nt;) {
            try {
                tr.barcodes[t] = sublevel_barcode(K, t);
            } catch (...) {
                std::lock_guard lk(failure_lock);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, int(nt)));
    std::vector<std::thread> pool;
    for (int i = 1; i < nthreads; ++i)
        pool.emplace_back(work);
    work();
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);

    for (Eigen::Index t = 0; t < nt; ++t)
        tr.L[t] = tr.barcodes[t].longest;

    // Bar count and degree pattern in birth order; a change marks a degenerate step.
    auto pattern = [](const Barcode& b) {
        std::vector<std::pair<double, int>> v;
        for (const auto& bar : b.bars)
            v.emplace_back(bar.birth, bar.degree);
        std::sort(v.begin(), v.end());
        std::vector<int> out;
        for (auto& p : v)
            out.push_back(p.second);
        return out;
    };
    for (Eigen::Index t = 0; t + 1 < nt; ++t) {
        const double dt = g[t + 1] - g[t];
        if (pattern(tr.barcodes[t]) != pattern(tr.barcodes[t + 1]))
            tr.events.push_back({t, "reorder", g[t + 1]});
        if (!trace)
            continue;
        const double spread = std::max(trace->max()[t] - trace->min()[t], trace->max()[t + 1] - trace->min()[t + 1]);
        const double dL = tr.L[t + 1] - tr.L[t];
        if (std::abs(dL) > (spread + tol) * dt)
            tr.events.push_back({t, "jump", dL});
        tr.worst_slope_excess = std::max(tr.worst_slope_excess, -dL / dt - spread);
    }
    return tr;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::Fail:
        return "fail";
    case Verdict::HypothesesViolated:
        return "hypotheses violated";
    }
    return "unknown";
}

DisjoinmentCheck disjoinment_bound_check(const GeneratingFunctionFamily& K, const HamiltonianTrace& trace,
                                         double A, double eps, double tol, int jobs)
{
    if (!(A > 0.0))
        throw ArgumentError("disjoinment_bound_check: A must be positive");
    if (!(eps >= 0.0))
        throw ArgumentError("disjoinment_bound_check: eps must be nonnegative");
    DisjoinmentCheck r;
    r.track = longest_bar_track(K, &trace, tol, jobs);
    r.L1 = r.track.L[r.track.L.size() - 1];
    r.oscillation = energy_of(trace).oscillation;
    r.rhs = A - 5 * eps - r.oscillation;
    r.margin = r.L1 - r.rhs;
    r.derivative_bound = derivative_bound_report(K, trace, tol).pass;
    r.slope_bound = r.track.worst_slope_excess <= 2 * eps + tol;
    r.chord_persists = r.L1 > tol;
    r.corollary_applies = r.oscillation < A - 5 * eps;
    if (!r.derivative_bound || !r.slope_bound)
        r.verdict = Verdict::HypothesesViolated;
    else if (r.margin > -tol && (!r.corollary_applies || r.chord_persists))
        r.verdict = Verdict::Pass;
    else
        r.verdict = Verdict::Fail;
    return r;
}

}  // namespace leglab
