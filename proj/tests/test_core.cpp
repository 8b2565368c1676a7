#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leglab/core.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace leglab;
using std::numbers::pi;

namespace {

const std::vector<SpaceKind> kKinds = {SpaceKind::Jet1, SpaceKind::Contactization, SpaceKind::ProductPlane,
                                       SpaceKind::ProductCylinder, SpaceKind::SymplectizationRectangle};

// Closed-form coefficients, written out separately from the library.
Eigen::RowVector3d expected_form(SpaceKind k, const Point3& p)
{
    switch (k) {
    case SpaceKind::Jet1: return {-p[1], 0.0, 1.0};
    case SpaceKind::Contactization: return {1.0, 0.5 * p[2], -0.5 * p[1]};
    case SpaceKind::ProductPlane: return {1.0, 0.5 * p[2], -0.5 * p[1]};
    case SpaceKind::ProductCylinder: return {1.0, 0.0, -std::exp(p[1])};
    case SpaceKind::SymplectizationRectangle: return {0.0, std::exp(p[0]), 0.0};
    }
    return {};
}

Point3 random_point(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("integrate_1d examples")
{
    const auto g11 = TimeGrid::uniform(11);
    CHECK(integrate_1d(Eigen::VectorXd::Ones(11), g11) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrate_1d(g11.nodes(), g11) == doctest::Approx(0.5).epsilon(1e-15));

    const auto g101 = TimeGrid::uniform(101);
    const Eigen::VectorXd t2 = g101.nodes().array().square();
    CHECK(std::abs(integrate_1d(t2, g101) - 1.0 / 3.0) < 1e-4);
    CHECK(std::abs(integrate_1d(t2, g101, Quadrature::Simpson) - 1.0 / 3.0) < 1e-14);

    // Non-uniform grid, odd interval count: Simpson with the quadratic tail is exact for quadratics.
    Eigen::VectorXd nodes(6);
    nodes << 0.0, 0.1, 0.35, 0.5, 0.8, 1.0;
    const TimeGrid g(nodes);
    CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((g.weights().array() > 0).all());
    const Eigen::VectorXd q = nodes.array().square() * 3.0 - nodes.array() + 2.0;
    CHECK(std::abs(integrate_1d(q, g, Quadrature::Simpson) - 2.5) < 1e-14);

    CHECK_THROWS_AS(integrate_1d(Eigen::VectorXd::Ones(10), g11), ArgumentError);
}

TEST_CASE("integrate_1d is linear and converges at second order")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const auto g = TimeGrid::uniform(57);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(57, [&](Eigen::Index) { return u(rng); });
        const Eigen::VectorXd h = Eigen::VectorXd::NullaryExpr(57, [&](Eigen::Index) { return u(rng); });
        const double a = u(rng), b = u(rng);
        for (auto rule : {Quadrature::Trapezoid, Quadrature::Simpson}) {
            const double lhs = integrate_1d((a * f + b * h).eval(), g, rule);
            const double rhs = a * integrate_1d(f, g, rule) + b * integrate_1d(h, g, rule);
            CHECK(std::abs(lhs - rhs) < 1e-13);
        }
    }
    auto err = [](Eigen::Index n) {
        const auto g = TimeGrid::uniform(n);
        const Eigen::VectorXd f = (g.nodes().array() * 3.0).exp();
        return std::abs(integrate_1d(f, g) - (std::exp(3.0) - 1.0) / 3.0);
    };
    const double ratio = err(41) / err(81);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("differentiate_path examples")
{
    const auto g = TimeGrid::uniform(21);
    Eigen::MatrixX2d p(21, 2);
    p.col(0).setConstant(0.7);
    p.col(1).setConstant(-1.0);
    CHECK(differentiate_path(p, g).cwiseAbs().maxCoeff() == 0.0);

    p.col(0) = g.nodes();
    p.col(1).setZero();
    const auto d = differentiate_path(p, g);
    CHECK((d.col(0).array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(d.col(1).cwiseAbs().maxCoeff() == 0.0);

    const auto g201 = TimeGrid::uniform(201);
    Eigen::MatrixX2d s(201, 2);
    s.col(0) = (2 * pi * g201.nodes().array()).sin();
    s.col(1).setZero();
    const auto ds = differentiate_path(s, g201);
    const Eigen::VectorXd exact = 2 * pi * (2 * pi * g201.nodes().array()).cos();
    // Relative to the amplitude 2 pi: the central stencil alone is off by (2 pi)^3 h^2 / 6 = 1.03e-3.
    CHECK((ds.col(0) - exact).cwiseAbs().maxCoeff() / (2 * pi) < 1e-3);
    auto err = [](Eigen::Index n) {
        const auto g = TimeGrid::uniform(n);
        Eigen::MatrixXd q(n, 1);
        q.col(0) = (2 * pi * g.nodes().array()).sin();
        const Eigen::VectorXd e = 2 * pi * (2 * pi * g.nodes().array()).cos();
        return (differentiate_path(q, g).col(0) - e).cwiseAbs().maxCoeff();
    };
    CHECK(err(101) / err(201) == doctest::Approx(4.0).epsilon(0.02));

    CHECK_THROWS_AS(differentiate_path(p.topRows(2), TimeGrid::uniform(2)), ArgumentError);
}

TEST_CASE("differentiate_path is second order on non-uniform grids")
{
    Eigen::VectorXd nodes(9);
    nodes << 0.0, 0.05, 0.2, 0.3, 0.45, 0.6, 0.7, 0.9, 1.0;
    const TimeGrid g(nodes);
    Eigen::MatrixXd q(9, 1);
    q.col(0) = nodes.array().square() * 2.0 - nodes.array() * 3.0;
    const auto d = differentiate_path(q, g);
    const Eigen::VectorXd exact = nodes.array() * 4.0 - 3.0;
    CHECK((d.col(0) - exact).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("time grid validation")
{
    Eigen::VectorXd bad(3);
    bad << 0.0, 0.5, 0.5;
    CHECK_THROWS_AS(TimeGrid{bad}, ArgumentError);
    CHECK_THROWS_AS(TimeGrid::uniform(1), ArgumentError);
}

TEST_CASE("model forms match their closed forms")
{
    std::mt19937_64 rng(11);
    for (auto k : kKinds) {
        const ModelSpace m(k);
        for (int i = 0; i < 200; ++i) {
            const Point3 p = random_point(rng);
            CHECK((m.form(p) - expected_form(k, p)).norm() < 1e-15);
        }
    }
}

TEST_CASE("dform agrees with a finite-difference exterior derivative")
{
    std::mt19937_64 rng(12);
    const double h = 1e-5;
    for (auto k : kKinds) {
        const ModelSpace m(k);
        for (int i = 0; i < 50; ++i) {
            const Point3 p = random_point(rng);
            // d(alpha)_{ab} = d_a alpha_b - d_b alpha_a.
            Eigen::Matrix3d J;
            for (int a = 0; a < 3; ++a) {
                const Point3 e = Point3::Unit(a) * h;
                J.row(a) = (m.form(p + e) - m.form(p - e)) / (2 * h);
            }
            const Eigen::Matrix3d fd = J - J.transpose();
            CHECK((m.dform(p) - fd).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("Reeb fields at 1000 random points")
{
    std::mt19937_64 rng(13);
    for (auto k : kKinds) {
        const ModelSpace m(k);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Point3 p = random_point(rng);
            worst = std::max(worst, m.reeb_defect(p));
            if (m.is_contact()) {
                CHECK(std::abs(m.form(p, m.reeb(p)) - 1.0) < 1e-10);
            } else {
                // Liouville: R ⌟ d(alpha) = alpha.
                const Eigen::RowVector3d contraction = m.reeb(p).transpose() * m.dform(p);
                CHECK((contraction - m.form(p)).norm() < 1e-10);
            }
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("jet points reduce circle coordinates")
{
    const auto j = make_jet_point(2.25, 0.3, -1.0, BaseKind::Circle);
    CHECK(j.q == doctest::Approx(0.25));
    CHECK(make_jet_point(-0.25, 0, 0, BaseKind::Circle).q == doctest::Approx(0.75));
    CHECK(make_jet_point(2.25, 0, 0, BaseKind::Line).q == 2.25);
    CHECK_THROWS_AS(make_jet_point(std::nan(""), 0, 0, BaseKind::Line), ArgumentError);
    CHECK(reduce_mod1(1.0) == 0.0);
}

namespace {

// 1-jet of s(t) sin(2 pi x) on the circle, optionally with analytic tangents.
IsotopyData jet_family(Eigen::Index nx, bool tilt, bool tangents)
{
    IsotopyData d;
    d.space = ModelSpace::jet1(BaseKind::Circle);
    d.grid = TimeGrid::uniform(11);
    d.params = Eigen::VectorXd::LinSpaced(nx + 1, 0.0, 1.0).head(nx);
    d.closed = true;
    d.period_shift = Point3(1.0, 0.0, 0.0);
    std::vector<Points3> tan;
    for (Eigen::Index t = 0; t < d.grid.size(); ++t) {
        const double s = 1.0 + d.grid[t];
        Points3 p(nx, 3), dp(nx, 3);
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double x = d.params[i], c = std::cos(2 * pi * x), sn = std::sin(2 * pi * x);
            p.row(i) << x, s * 2 * pi * c + (tilt ? 0.01 : 0.0), s * sn;
            dp.row(i) << 1.0, -s * 4 * pi * pi * sn, s * 2 * pi * c;
        }
        d.points.push_back(p);
        tan.push_back(dp);
    }
    if (tangents)
        d.tangents = tan;
    return d;
}

}  // namespace

TEST_CASE("SampledIsotopy accepts Legendrian data and rejects the rest")
{
    SampledIsotopy iso(jet_family(64, false, true));
    CHECK(iso.legendrian_defect() < 1e-12);
    CHECK(iso.velocity_source() == VelocitySource::FiniteDifference);

    // Three-point tangents only reach the default tolerance on fine grids; a relaxed one passes.
    auto fd = jet_family(400, false, false);
    fd.legendrian_tol = 1e-3;
    CHECK_NOTHROW(SampledIsotopy{fd});

    try {
        SampledIsotopy bad(jet_family(64, true, true));
        FAIL("tilted family accepted");
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("SampledIsotopy") != std::string::npos);
    }

    CHECK_THROWS_AS(SampledIsotopy{jet_family(7, false, true)}, ArgumentError);

    auto rect = jet_family(64, false, true);
    rect.space = ModelSpace(SpaceKind::SymplectizationRectangle);
    CHECK_THROWS_AS(SampledIsotopy{rect}, ArgumentError);
}
