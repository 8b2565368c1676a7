#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leglab/persistence.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

using namespace leglab;
using namespace leglab::oracle;
using std::numbers::pi;

namespace {

// Mod-2 boundary of boundary, and the Euler characteristic.
void check_complex(const FiltrationComplex& c, int euler)
{
    c.validate();
    int chi = 0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        chi += (c.dim[i] % 2 == 0) ? 1 : -1;
        std::map<int, int> dd;
        for (int f : c.boundary[i])
            for (int g : c.boundary[f])
                dd[g] ^= 1;
        for (auto [g, bit] : dd)
            CHECK(bit == 0);
    }
    CHECK(chi == euler);
}

void check_barcode(const Barcode& b, double R)
{
    double longest = 0.0;
    for (const auto& bar : b.bars) {
        CHECK(bar.birth < bar.death);
        CHECK(bar.death <= R);
        CHECK(bar.capped == (bar.death == R));
        longest = std::max(longest, bar.length());
    }
    CHECK(b.longest == longest);
}

HamiltonianTrace zero_trace(const TimeGrid& g)
{
    return HamiltonianTrace(g, Eigen::MatrixXd::Zero(g.size(), 2));
}

}  // namespace

TEST_CASE("cubical complexes are chain complexes with the right Euler characteristic")
{
    std::mt19937_64 rng(5);
    check_complex(FiltrationComplex::cubical(random_values(rng, 30), {5, 6}, {false, false}), 1);
    check_complex(FiltrationComplex::cubical(random_values(rng, 30), {5, 6}, {true, false}), 0);
    check_complex(FiltrationComplex::cubical(random_values(rng, 30), {5, 6}, {true, true}), 0);
    check_complex(FiltrationComplex::cubical(random_values(rng, 60), {3, 4, 5}, {false, false, false}), 1);
    check_complex(FiltrationComplex::cubical(random_values(rng, 60), {3, 4, 5}, {true, true, true}), 0);
    check_complex(FiltrationComplex::cycle(random_values(rng, 7)), 0);
    check_complex(FiltrationComplex::path(random_values(rng, 7)), 1);

    FiltrationComplex bad;
    bad.add_cell(0, 1.0, {});
    bad.add_cell(0, 0.0, {});
    bad.add_cell(1, 0.5, {0, 1});
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("sublevel barcode examples")
{
    SUBCASE("circle (0, 3, 1, 4)")
    {
        Eigen::VectorXd v(4);
        v << 0, 3, 1, 4;
        const auto b = sublevel_barcode(FiltrationComplex::cycle(v), 10.0);
        const std::vector<Bar> want = {{0, 10, 0, true}, {1, 3, 0, false}, {4, 10, 1, true}};
        CHECK(b.bars == want);
        CHECK(b.longest == 10.0);
    }
    SUBCASE("linear function on an interval")
    {
        for (double R : {0.5, 1.0, 2.5}) {
            const Eigen::VectorXd eta = Eigen::VectorXd::LinSpaced(61, -3.0, 3.0);
            CHECK(sublevel_barcode(FiltrationComplex::path(eta), R).bars.empty());
        }
    }
    SUBCASE("linear function on circle x fiber")
    {
        FamilyGrid fg;
        fg.time = TimeGrid::uniform(2);
        fg.xs = Eigen::VectorXd::LinSpaced(17, 0.0, 1.0).head(16);
        fg.fiber = {FiberAxis{-3.0, 3.0, 61}};
        fg.tail = Tail{TailKind::Linear, {1.0, 0.0}};
        fg.R = 2.0;
        const auto K = GeneratingFunctionFamily::from_function(fg, [](double, double, const Eigen::Vector2d& e) {
            return e[0];
        });
        CHECK(sublevel_barcode(K, 0).bars.empty());
    }
    SUBCASE("Morse-Bott circle at 0 with neighbours at +-A")
    {
        const families::DriftProfile prof;
        const auto K = families::drift(TimeGrid::uniform(2), [](double) { return 0.0; },
                                       [](double) { return 0.0; }, prof, 16);
        const auto b = sublevel_barcode(K, 0);
        check_barcode(b, K.grid().R);
        bool found = false;
        for (const auto& bar : b.bars)
            if (!bar.capped && (std::abs(bar.birth) < 1e-9 || std::abs(bar.death) < 1e-9))
                found |= bar.length() >= prof.A - 1e-3;
        CHECK(found);
    }
    SUBCASE("R below the compact part")
    {
        const families::DriftProfile prof;
        const auto K = families::drift(TimeGrid::uniform(2), [](double) { return 0.0; },
                                       [](double) { return 0.0; }, prof, 8, {-6.0, 6.0, 601}, 0.1);
        CHECK_THROWS_AS(sublevel_barcode(K, 0), ArgumentError);
    }
}

TEST_CASE("sublevel barcode agrees with a brute-force reduction")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> rr(0.3, 1.2);
    int cases = 0;
    auto run = [&](const FiltrationComplex& c) {
        REQUIRE(c.size() <= 10000);
        for (double R : {5.0, rr(rng)}) {
            const auto b = sublevel_barcode(c, R);
            CHECK(sorted(b.bars) == oracle_barcode(c, R));
            check_barcode(b, R);
            ++cases;
        }
    };
    // Below every R tried, so nothing is born above the cap; R < 1.5 makes the pair relative.
    auto vals = [&](Eigen::Index n) { return random_values(rng, n, -1.5, 0.25); };
    for (int rep = 0; rep < 10; ++rep) {
        run(FiltrationComplex::cycle(vals(3 + rep * 7)));
        run(FiltrationComplex::path(vals(2 + rep * 9)));
        run(FiltrationComplex::cubical(vals(12 * 15), {12, 15}, {rep % 2 == 0, rep % 3 == 0}));
    }
    // Values on a quarter grid: lots of ties.
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd v = (vals(10 * 10) * 4.0).array().round() / 4.0;
        run(FiltrationComplex::cubical(v, {10, 10}, {true, false}));
    }
    run(FiltrationComplex::cubical(vals(1000), {10, 10, 10}, {false, false, false}));
    run(FiltrationComplex::cubical(vals(8 * 8 * 8), {8, 8, 8}, {true, true, false}));
    CHECK(cases == 2 * (30 + 5 + 2));
}

TEST_CASE("bar endpoints are critical values")
{
    const auto K = families::stabilized(TimeGrid::uniform(2), 64, [](double, double x) {
        return 0.3 * std::sin(2 * pi * x) + 0.1 * std::cos(4 * pi * x);
    });
    const auto b = sublevel_barcode(K, 0);
    REQUIRE_FALSE(b.bars.empty());
    const auto crit = critical_points(K, 0);
    REQUIRE_FALSE(crit.empty());
    for (const auto& bar : b.bars) {
        double best = 1e9;
        for (const auto& c : crit)
            best = std::min(best, std::abs(c.value - bar.birth));
        CHECK(best < 1e-3);
        if (bar.capped)
            continue;
        best = 1e9;
        for (const auto& c : crit)
            best = std::min(best, std::abs(c.value - bar.death));
        CHECK(best < 1e-3);
    }
}

TEST_CASE("bar endpoints move by at most the sup-norm perturbation")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double delta = 0.01;
        const Eigen::VectorXd v = random_values(rng, 14 * 14);
        const Eigen::VectorXd w = v + delta * Eigen::VectorXd::NullaryExpr(v.size(), [&](Eigen::Index) { return u(rng); });
        const auto b1 = sublevel_barcode(FiltrationComplex::cubical(v, {14, 14}, {true, true}), 5.0);
        const auto b2 = sublevel_barcode(FiltrationComplex::cubical(w, {14, 14}, {true, true}), 5.0);
        auto covered = [&](const Barcode& from, const Barcode& to) {
            for (const auto& a : from.bars) {
                if (a.length() <= 2 * delta)
                    continue;
                bool hit = false;
                for (const auto& c : to.bars)
                    hit |= c.degree == a.degree && std::abs(c.birth - a.birth) <= delta + 1e-12 &&
                           std::abs(c.death - a.death) <= delta + 1e-12;
                CHECK(hit);
            }
        };
        covered(b1, b2);
        covered(b2, b1);
    }
}

TEST_CASE("Barannikov pairing examples")
{
    SUBCASE("single min and max on an interval")
    {
        Eigen::VectorXd v(4);
        v << -5, 1, 0, 5;
        const auto p = barannikov_pairing(FiltrationComplex::path(v), 4.0);
        const std::vector<Bar> want = {{0, 1, 0, false}};
        CHECK(p.pairs() == want);
    }
    SUBCASE("circle (0, 3, 1, 4)")
    {
        Eigen::VectorXd v(4);
        v << 0, 3, 1, 4;
        const auto p = barannikov_pairing(FiltrationComplex::cycle(v), 10.0);
        CHECK(p.values.size() == 4);
        const std::vector<Bar> want = {{1, 3, 0, false}};
        CHECK(p.pairs() == want);
        for (int i = 0; i < int(p.values.size()); ++i)
            CHECK(p.partner[i] == ((p.values[i] == 0.0 || p.values[i] == 4.0) ? -1 : p.partner[i]));
    }
    SUBCASE("two disjoint intervals")
    {
        FiltrationComplex c;
        for (auto vals : {std::array<double, 4>{-5, 1, 0, 5}, std::array<double, 4>{-5, 0.9, 0.1, 5}}) {
            int prev = -1;
            for (double x : vals) {
                const int vtx = c.add_cell(0, x, {});
                if (prev >= 0)
                    c.add_cell(1, std::max(x, c.value[prev]), {prev, vtx});
                prev = vtx;
            }
        }
        const auto p = barannikov_pairing(c, 4.0);
        const std::vector<Bar> want = {{0, 1, 0, false}, {0.1, 0.9, 0, false}};
        CHECK(p.pairs() == want);
    }
    SUBCASE("repeated critical values")
    {
        Eigen::VectorXd v(4);
        v << 0, 3, 0, 3;
        CHECK_THROWS_AS(barannikov_pairing(FiltrationComplex::cycle(v), 10.0), StrongMorseError);
    }
}

TEST_CASE("Barannikov pairing is an involution matching the finite bars")
{
    std::mt19937_64 rng(8);
    int checked = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const Eigen::VectorXd v = random_values(rng, 5 + rep);
        const FiltrationComplex c = rep % 2 ? FiltrationComplex::cycle(v) : FiltrationComplex::path(v);
        const double R = 5.0;
        const auto p = barannikov_pairing(c, R);
        for (int i = 0; i < int(p.partner.size()); ++i) {
            const int j = p.partner[i];
            if (j < 0)
                continue;
            CHECK(j != i);
            CHECK(p.partner[j] == i);
            CHECK(std::abs(p.degree[i] - p.degree[j]) == 1);
        }
        std::vector<Bar> finite;
        for (const auto& b : sublevel_barcode(c, R).bars)
            if (!b.capped)
                finite.push_back(b);
        CHECK(sorted(p.pairs()) == sorted(finite));
        ++checked;
    }
    CHECK(checked == 40);
}

TEST_CASE("jitter is deterministic and small")
{
    std::mt19937_64 rng(4);
    const Eigen::VectorXd v = random_values(rng, 50);
    const auto a = jitter_values(v, 1e-6, 9), b = jitter_values(v, 1e-6, 9), c = jitter_values(v, 1e-6, 10);
    CHECK(a == b);
    CHECK(a != c);
    CHECK((a - v).cwiseAbs().maxCoeff() <= 1e-6 * (v.maxCoeff() - v.minCoeff()));
}

TEST_CASE("longest bar track examples")
{
    const families::DriftProfile prof;
    SUBCASE("autonomous family")
    {
        const auto g = TimeGrid::uniform(6);
        const auto K = families::drift(g, [](double) { return 0.0; }, [](double) { return 0.0; }, prof);
        const auto tr = longest_bar_track(K);
        CHECK(tr.L.maxCoeff() - tr.L.minCoeff() == 0.0);
        CHECK(tr.L[0] > 0.0);
    }
    SUBCASE("drift with |K'| <= 1")
    {
        const auto g = TimeGrid::uniform(11);
        // dK/dt = c' w with |w| <= 1/2.
        const auto K = families::drift(g, [](double t) { return 0.8 * t; }, [](double) { return 0.8; }, prof);
        const auto trace = critical_value_trace(K);
        const auto tr = longest_bar_track(K, &trace);
        for (Eigen::Index i = 0; i < g.size(); ++i)
            CHECK(std::abs(tr.L[i] - tr.L[0]) <= 2.0 * g[i] + 1e-6);
    }
    SUBCASE("chord annihilation")
    {
        const auto g = TimeGrid::uniform(41);
        const double rate = 1.6;
        const auto K = families::drift(g, [=](double t) { return rate * t; }, [=](double) { return rate; }, prof);
        const auto tr = longest_bar_track(K, nullptr, 1e-9, 2);
        Eigen::Index first_zero = -1;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            // Direct per-t barcode as the oracle.
            CHECK(tr.L[i] == sublevel_barcode(K, i).longest);
            if (first_zero < 0 && tr.L[i] == 0.0)
                first_zero = i;
        }
        REQUIRE(first_zero > 0);
        for (Eigen::Index i = first_zero; i < g.size(); ++i)
            CHECK(tr.L[i] == 0.0);
        for (Eigen::Index i = 1; i < first_zero; ++i)
            CHECK(tr.L[i] < tr.L[i - 1]);
        // The last chord has action A - c(t).
        const double t_star = prof.A / rate;
        CHECK(std::abs(g[first_zero] - t_star) <= g[1] - g[0] + 1e-12);
    }
}

TEST_CASE("L(t) obeys the slope bound along drift families")
{
    const families::DriftProfile prof;
    const auto g = TimeGrid::uniform(21);
    for (double rate : {0.3, 0.9, -0.5}) {
        CAPTURE(rate);
        const auto K = families::drift(g, [=](double t) { return rate * std::sin(3 * t); },
                                       [=](double t) { return 3 * rate * std::cos(3 * t); }, prof);
        const auto trace = critical_value_trace(K);
        const auto tr = longest_bar_track(K, &trace);
        for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
            const double dt = g[i + 1] - g[i];
            const double osc = std::max(trace.max()[i] - trace.min()[i], trace.max()[i + 1] - trace.min()[i + 1]);
            CHECK((tr.L[i] - tr.L[i + 1]) / dt <= osc + 1e-6);
        }
        for (const auto& e : tr.events)
            CHECK(e.kind != "jump");
    }
}

TEST_CASE("disjoinment bound examples")
{
    const families::DriftProfile prof;
    const double eps = 0.01;
    const auto g = TimeGrid::uniform(21);
    SUBCASE("no motion")
    {
        const auto K = families::drift(g, [](double) { return 0.0; }, [](double) { return 0.0; }, prof);
        const auto r = disjoinment_bound_check(K, zero_trace(g), prof.A, eps);
        CHECK(r.verdict == Verdict::Pass);
        CHECK(r.L1 == r.track.L[0]);
        CHECK(r.L1 >= prof.A - 2 * eps);
        CHECK(r.margin > 0.0);
        CHECK(r.chord_persists);
        CHECK(r.corollary_applies);
    }
    SUBCASE("oscillation 0.3 A")
    {
        const auto K = families::drift(g, [&](double t) { return 0.3 * prof.A * t; },
                                       [&](double) { return 0.3 * prof.A; }, prof);
        const auto r = disjoinment_bound_check(K, critical_value_trace(K), prof.A, eps);
        CHECK(r.verdict == Verdict::Pass);
        CHECK(std::abs(r.oscillation - 0.3 * prof.A) < 1e-6);
        CHECK(r.L1 >= 0.7 * prof.A - 5 * eps - 1e-6);
        CHECK(r.chord_persists);
    }
    SUBCASE("hypotheses violated")
    {
        const auto K = families::drift(g, [](double t) { return 0.5 * t; }, [](double) { return 0.5; }, prof);
        const auto r = disjoinment_bound_check(K, zero_trace(g), prof.A, eps);
        CHECK(r.verdict == Verdict::HypothesesViolated);
        CHECK_FALSE(r.derivative_bound);
        CHECK(to_string(r.verdict) != to_string(Verdict::Fail));
    }
    SUBCASE("bad A")
    {
        const auto K = families::drift(g, [](double) { return 0.0; }, [](double) { return 0.0; }, prof);
        CHECK_THROWS_AS(disjoinment_bound_check(K, zero_trace(g), 0.0, eps), ArgumentError);
        CHECK_THROWS_AS(disjoinment_bound_check(K, zero_trace(g), -1.0, eps), ArgumentError);
    }
}
