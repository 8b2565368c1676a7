#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leglab/energy.hpp"
#include "leglab/planar.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace leglab;
using namespace leglab::oracle;
using std::numbers::pi;

namespace {

HamiltonianTrace trace_of(const TimeGrid& g, Eigen::Index nx, const std::function<double(double, double)>& h)
{
    Eigen::MatrixXd v(g.size(), nx);
    const auto x = circle_params(nx);
    for (Eigen::Index t = 0; t < g.size(); ++t)
        for (Eigen::Index i = 0; i < nx; ++i)
            v(t, i) = h(g[t], x[i]);
    return HamiltonianTrace(g, v);
}

}  // namespace

TEST_CASE("contact Hamiltonian examples")
{
    SUBCASE("Reeb push")
    {
        const auto iso = jet_isotopy(
            11, 32, [](double t, double x) { return 0.2 * std::sin(2 * pi * x) + t; },
            [](double, double x) { return 0.4 * pi * std::cos(2 * pi * x); });
        const auto h = contact_hamiltonian(iso);
        CHECK((h.values().array() - 1.0).abs().maxCoeff() < 1e-12);
        const auto rep = energy_of(h);
        CHECK(rep.length == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.oscillation < 1e-12);
    }
    SUBCASE("stationary")
    {
        const auto iso = jet_isotopy(
            5, 32, [](double, double x) { return std::sin(2 * pi * x); },
            [](double, double x) { return 2 * pi * std::cos(2 * pi * x); });
        const auto rep = energy_of(contact_hamiltonian(iso));
        CHECK(rep.length == 0.0);
        CHECK(rep.oscillation == 0.0);
    }
    SUBCASE("jet of t cos(2 pi x)")
    {
        const auto iso = cos_jet();
        const auto h = contact_hamiltonian(iso);
        double worst = 0.0;
        for (Eigen::Index t = 0; t < h.grid().size(); ++t)
            for (Eigen::Index i = 0; i < iso.num_params(); ++i)
                worst = std::max(worst, std::abs(h(t, i) - std::cos(2 * pi * iso.params()[i])));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("energy_of examples")
{
    const auto g = TimeGrid::uniform(21);
    const auto one = energy_of(trace_of(g, 16, [](double, double) { return 1.0; }));
    CHECK(one.length == doctest::Approx(1.0));
    CHECK(one.oscillation == 0.0);
    const auto c = energy_of(trace_of(g, 64, [](double, double x) { return std::cos(2 * pi * x); }));
    CHECK(std::abs(c.length - 1.0) < 1e-4);
    CHECK(std::abs(c.oscillation - 2.0) < 1e-4);
    const auto z = energy_of(trace_of(g, 16, [](double, double) { return 0.0; }));
    CHECK(z.length == 0.0);
    CHECK(z.oscillation == 0.0);
}

TEST_CASE("trace caches and report invariants on random traces")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const auto g = TimeGrid::uniform(15);
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::MatrixXd v = Eigen::MatrixXd::NullaryExpr(15, 40, [&](Eigen::Index, Eigen::Index) { return u(rng); });
        const HamiltonianTrace h(g, v);
        CHECK((h.max() - v.rowwise().maxCoeff()).norm() == 0.0);
        CHECK((h.min() - v.rowwise().minCoeff()).norm() == 0.0);
        CHECK((h.max().array() >= h.min().array()).all());
        const auto r = energy_of(h);
        CHECK(r.length >= 0.0);
        CHECK(r.oscillation >= 0.0);
        CHECK(r.oscillation <= 2.0 * r.length + 1e-12);

        const double shift = u(rng) * 5.0;
        const auto s = energy_of(HamiltonianTrace(g, (v.array() + shift).matrix()));
        CHECK(std::abs(s.oscillation - r.oscillation) < 1e-12);
        CHECK(std::abs(s.length - r.length) > 1e-6);
    }
}

TEST_CASE("reparametrization examples")
{
    // 0.3 * 120 is a whole number of samples, so the shift is a pure relabeling.
    const auto iso = cos_jet(11, 120);
    const auto base = energy_of(contact_hamiltonian(iso));

    const auto same = reparametrize(iso, [](double, double x) { return x; });
    for (Eigen::Index t = 0; t < iso.num_times(); ++t)
        CHECK((same.points(t) - iso.points(t)).cwiseAbs().maxCoeff() < 1e-12);

    const auto shifted = reparametrize(iso, [](double, double x) { return x + 0.3; });
    const auto es = energy_of(contact_hamiltonian(shifted));
    CHECK(std::abs(es.length - base.length) < 1e-6);
    CHECK(std::abs(es.oscillation - base.oscillation) < 1e-6);

    const auto fine = cos_jet(11, 256);
    const auto wavy = reparametrize(fine, [](double t, double x) { return x + 0.1 * std::sin(2 * pi * x) * t; });
    const auto ew = energy_of(contact_hamiltonian(wavy));
    CHECK(std::abs(ew.length - base.length) < 1e-3);
    CHECK(std::abs(ew.oscillation - base.oscillation) < 1e-3);

    // Resampling oracle: the Hamiltonian of the reparametrized family is h o sigma.
    const auto hw = contact_hamiltonian(wavy);
    double worst = 0.0;
    for (Eigen::Index t = 0; t < wavy.num_times(); ++t) {
        const double s = wavy.grid()[t];
        for (Eigen::Index i = 0; i < wavy.num_params(); ++i) {
            const double x = wavy.params()[i];
            worst = std::max(worst, std::abs(hw(t, i) - std::cos(2 * pi * (x + 0.1 * std::sin(2 * pi * x) * s))));
        }
    }
    CHECK(worst < 1e-3);

    CHECK_THROWS_AS(reparametrize(iso, [](double, double x) { return x + 0.3 * std::sin(2 * pi * x); }),
                    ArgumentError);
}

TEST_CASE("reparametrization invariance for 20 random sigma")
{
    const auto iso = jet_isotopy(
        11, 256, [](double t, double x) { return t * (std::cos(2 * pi * x) + 0.3 * std::sin(4 * pi * x)); },
        [](double t, double x) { return t * (-2 * pi * std::sin(2 * pi * x) + 1.2 * pi * std::cos(4 * pi * x)); });
    const auto base = energy_of(contact_hamiltonian(iso));
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(-0.06, 0.06), phase(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double a = amp(rng), b = amp(rng) / 2, ph = phase(rng), sh = phase(rng);
        // |d sigma/dx - 1| <= 2 pi (|a| + 2|b|) < 1: orientation preserving.
        auto sigma = [=](double t, double x) {
            return x + sh * t + t * (a * std::sin(2 * pi * (x + ph)) + b * std::sin(4 * pi * x));
        };
        const auto r = energy_of(contact_hamiltonian(reparametrize(iso, sigma)));
        CHECK(std::abs(r.length - base.length) < 1e-3);
        CHECK(std::abs(r.oscillation - base.oscillation) < 1e-3);
    }
}

TEST_CASE("Lagrangian primitive examples")
{
    const auto g = TimeGrid::uniform(21);
    LoopFamily still = corpus::translating_circle(g, 64, 0.3, {0.0, 0.0});
    const auto P = lagrangian_primitive(still);
    CHECK(P.F.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(lagrangian_osc_energy(still) < 1e-14);

    const auto rot = corpus::rotating_circle(g, 128, 0.3, 0.0);
    const auto Pr = lagrangian_primitive(rot);
    double spread = 0.0;
    for (Eigen::Index t = 0; t < g.size(); ++t)
        spread = std::max(spread, Pr.F.row(t).maxCoeff() - Pr.F.row(t).minCoeff());
    CHECK(spread < 1e-10);
    CHECK(lagrangian_osc_energy(rot) < 1e-10);

    const auto off = corpus::rotating_circle(g, 128, 0.3, 0.2);
    CHECK(lagrangian_osc_energy(off) > 0.01);
}

TEST_CASE("area change raises an exactness error with the defect")
{
    const auto g = TimeGrid::uniform(11);
    LoopFamily f;
    f.grid = g;
    f.params = circle_params(64);
    for (Eigen::Index t = 0; t < g.size(); ++t) {
        const double r = 0.3 * (1.0 + g[t]);
        Points2 p(64, 2), dp(64, 2), v(64, 2);
        for (Eigen::Index i = 0; i < 64; ++i) {
            const double a = 2 * pi * f.params[i];
            p.row(i) << r * std::cos(a), r * std::sin(a);
            dp.row(i) << -2 * pi * r * std::sin(a), 2 * pi * r * std::cos(a);
            v.row(i) << 0.3 * std::cos(a), 0.3 * std::sin(a);
        }
        f.points.push_back(p);
        f.tangents.push_back(dp);
        f.velocities.push_back(v);
    }
    try {
        lagrangian_primitive(f);
        FAIL("growing circle accepted");
    } catch (const ExactnessError& e) {
        // d/dt (pi r^2) = 2 pi r r' = 2 pi 0.3^2 (1 + t) at t = 0 already.
        CHECK(e.defect > 0.5);
    }
}

TEST_CASE("Lagrangian and Legendrian oscillation agree on the corpus")
{
    const auto g = TimeGrid::uniform(101);
    for (const auto& [name, fam] : planar_families(g, 256)) {
        CAPTURE(name);
        const double lag = lagrangian_osc_energy(fam);
        const double leg = legendrian_osc_energy(fam);
        CHECK(std::abs(lag - leg) < 1e-4);
    }
}

TEST_CASE("contraction scales the oscillation by c")
{
    const auto g = TimeGrid::uniform(51);
    for (const auto& [name, fam] : planar_families(g, 128)) {
        const double e = lagrangian_osc_energy(fam);
        if (e < 1e-8)
            continue;
        CAPTURE(name);
        CHECK(lagrangian_osc_energy(conjugate_by_contraction(fam, 1.0)) == e);
        for (double c : {0.5, 0.25, 0.1, 0.01}) {
            const double ec = lagrangian_osc_energy(conjugate_by_contraction(fam, c));
            CHECK(std::abs(ec / e / c - 1.0) < 1e-6);
        }
    }
    const auto fam = corpus::wobbling_circle(g, 64);
    CHECK_THROWS_AS(conjugate_by_contraction(fam, 0.0), ArgumentError);
    CHECK_THROWS_AS(conjugate_by_contraction(fam, -0.5), ArgumentError);
}
