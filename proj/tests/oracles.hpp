#pragma once

// Independent reference computations and corpora shared by the unit tests and the
// acceptance binary.

#include "leglab/energy.hpp"
#include "leglab/genfun.hpp"
#include "leglab/persistence.hpp"
#include "leglab/planar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace leglab::oracle {

using std::numbers::pi;

// Textbook Z/2 column reduction of the quotient complex C(X) / C({value <= -R}),
// with columns as std::set so nothing is shared with the library's reduction.
inline std::vector<Bar> oracle_barcode(const FiltrationComplex& c, double R)
{
    const int n = int(c.size());
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (c.value[i] > -R)
            keep.push_back(i);
    std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) {
        return c.value[a] != c.value[b] ? c.value[a] < c.value[b] : c.dim[a] < c.dim[b];
    });
    std::vector<int> pos(n, -1);
    for (int k = 0; k < int(keep.size()); ++k)
        pos[keep[k]] = k;
    const int m = int(keep.size());
    std::vector<std::set<int>> col(m);
    for (int k = 0; k < m; ++k)
        for (int f : c.boundary[keep[k]])
            if (pos[f] >= 0)
                col[k].insert(pos[f]);
    std::vector<int> low_owner(m, -1);
    std::vector<bool> paired(m, false);
    std::vector<Bar> bars;
    for (int k = 0; k < m; ++k) {
        while (!col[k].empty()) {
            const int low = *col[k].rbegin();
            if (low_owner[low] < 0)
                break;
            for (int r : col[low_owner[low]])
                if (!col[k].erase(r))
                    col[k].insert(r);
        }
        if (col[k].empty())
            continue;
        const int low = *col[k].rbegin();
        low_owner[low] = k;
        paired[low] = paired[k] = true;
        const double b = c.value[keep[low]], d = c.value[keep[k]];
        if (d > b)
            bars.push_back({b, d, c.dim[keep[low]], false});
    }
    for (int k = 0; k < m; ++k)
        if (!paired[k])
            bars.push_back({c.value[keep[k]], R, c.dim[keep[k]], true});
    std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
        return std::tie(a.degree, a.birth, a.death, a.capped) < std::tie(b.degree, b.birth, b.death, b.capped);
    });
    return bars;
}

inline std::vector<Bar> sorted(std::vector<Bar> v)
{
    std::sort(v.begin(), v.end(), [](const Bar& a, const Bar& b) {
        return std::tie(a.degree, a.birth, a.death, a.capped) < std::tie(b.degree, b.birth, b.death, b.capped);
    });
    return v;
}

inline Eigen::VectorXd random_values(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
}

inline Eigen::VectorXd circle_params(Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n + 1, 0.0, 1.0).head(n); }

// 1-jet of g_t on the circle, (q, p, z) = (x, g_t'(x), g_t(x)).
inline SampledIsotopy jet_isotopy(Eigen::Index nt, Eigen::Index nx, const std::function<double(double, double)>& g,
                           const std::function<double(double, double)>& dg)
{
    IsotopyData d;
    d.space = ModelSpace::jet1(BaseKind::Circle);
    d.grid = TimeGrid::uniform(nt);
    d.params = circle_params(nx);
    d.closed = true;
    d.period_shift = Point3(1.0, 0.0, 0.0);
    std::vector<Points3> tangents;
    for (Eigen::Index t = 0; t < nt; ++t) {
        Points3 p(nx, 3), dp(nx, 3);
        const double s = d.grid[t], h = 1e-5;
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double x = d.params[i];
            const double ddg = (dg(s, x + h) - dg(s, x - h)) / (2 * h);
            p.row(i) << x, dg(s, x), g(s, x);
            dp.row(i) << 1.0, ddg, dg(s, x);
        }
        d.points.push_back(p);
        tangents.push_back(dp);
    }
    d.tangents = tangents;
    return SampledIsotopy(d);
}

inline SampledIsotopy cos_jet(Eigen::Index nt = 11, Eigen::Index nx = 64)
{
    return jet_isotopy(
        nt, nx, [](double t, double x) { return t * std::cos(2 * pi * x); },
        [](double t, double x) { return -2 * pi * t * std::sin(2 * pi * x); });
}

inline std::vector<std::pair<std::string, LoopFamily>> planar_families(const TimeGrid& g, Eigen::Index nx)
{
    return {{"rotating", corpus::rotating_circle(g, nx)},
            {"translating", corpus::translating_circle(g, nx)},
            {"squeezed", corpus::squeezed_circle(g, nx)},
            {"wobbling", corpus::wobbling_circle(g, nx)},
            {"rotating-about-centre", corpus::rotating_circle(g, nx, 0.3, 0.0)}};
}

inline const TimeGrid kOne = TimeGrid::uniform(2);

inline double g0(double x) { return 0.3 * std::sin(2 * pi * x); }

inline std::vector<std::pair<std::string, GeneratingFunctionFamily>> genfun_corpus()
{
    return {
        {"stabilized", families::stabilized(kOne, 32, [](double, double x) { return g0(x); })},
        {"stabilized-2d", families::stabilized(kOne, 16, [](double, double x) { return g0(x); }, 2,
                                               FiberAxis{-2.0, 2.0, 21})},
        {"cubic", families::cubic_fiber(
                      kOne, 32, [](double, double) { return 1.0; }, [](double x) { return 0.1 * std::cos(2 * pi * x); })},
        {"double-well", families::double_well(kOne, 32, [](double x) { return 0.1 * std::sin(2 * pi * x); })},
        {"fold", families::fold(TimeGrid::uniform(5), 0.25, 32)},
        {"drift", families::drift(kOne, [](double t) { return 0.3 * t; }, [](double) { return 0.3; })},
    };
}

}  // namespace leglab::oracle
