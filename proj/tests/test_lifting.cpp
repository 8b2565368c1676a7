#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leglab/lifting.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace leglab;
using std::numbers::pi;

namespace {

Points2 poly(std::initializer_list<std::array<double, 2>> pts)
{
    Points2 p(Eigen::Index(pts.size()), 2);
    Eigen::Index i = 0;
    for (const auto& q : pts)
        p.row(i++) << q[0], q[1];
    return p;
}

Points3 seeds_on_circle(double r, int n, double theta0 = 0.0)
{
    Points3 s(n, 3);
    for (int i = 0; i < n; ++i) {
        const double a = 2 * pi * i / n;
        s.row(i) << theta0, r * std::cos(a), r * std::sin(a);
    }
    return s;
}

double wrap(double a)
{
    return std::remainder(a, 2 * pi);
}

}  // namespace

TEST_CASE("tetragon area examples")
{
    TetragonSpec rect{2.0, 0.1, 1.0, rectangle_loop(2.0, 1.0)};
    CHECK(std::abs(tetragon_area(rect) - 1.0) < 1e-6);

    const auto can = canonical_tetragon(2.0, 0.1, 1.0);
    CHECK(std::abs(can.area - std::exp(-0.1)) < 1e-6);
    CHECK(can.target == doctest::Approx(0.904837418).epsilon(1e-9));
    CHECK(std::abs(tetragon_area(can.spec) - can.area) < 1e-12);

    TetragonSpec flat{2.0, 0.1, 1.0, poly({{0.1, 0.5}, {0.4, 0.5}, {0.6, 0.5}})};
    CHECK(tetragon_area(flat) == 0.0);
}

TEST_CASE("tetragon area against e^s over rectangles and L shapes")
{
    std::mt19937_64 rng(6);
    const double k = 3.0, T = 2.0, S = std::log(k);
    std::uniform_real_distribution<double> us(0.0, S), ut(0.0, T);
    for (int rep = 0; rep < 30; ++rep) {
        double a = us(rng), b = us(rng), c = ut(rng), d = ut(rng);
        if (a > b)
            std::swap(a, b);
        if (c > d)
            std::swap(c, d);
        // Counter-clockwise in (s, t).
        TetragonSpec r{k, 0.1, T, poly({{a, c}, {b, c}, {b, d}, {a, d}})};
        CHECK(std::abs(tetragon_area(r) - (std::exp(b) - std::exp(a)) * (d - c)) < 1e-12);

        // L shape: [a, b] x [c, d] minus the upper-right quarter.
        const double m = 0.5 * (a + b), n = 0.5 * (c + d);
        TetragonSpec L{k, 0.1, T, poly({{a, c}, {b, c}, {b, n}, {m, n}, {m, d}, {a, d}})};
        const double want = (std::exp(b) - std::exp(a)) * (d - c) - (std::exp(b) - std::exp(m)) * (d - n);
        CHECK(std::abs(tetragon_area(L) - want) < 1e-12);
    }
}

TEST_CASE("tetragon input validation")
{
    TetragonSpec bow{2.0, 0.1, 1.0, poly({{0.1, 0.1}, {0.6, 0.9}, {0.6, 0.1}, {0.1, 0.9}})};
    CHECK_THROWS_AS(tetragon_area(bow), ArgumentError);
    TetragonSpec out{2.0, 0.1, 1.0, poly({{0.1, 0.1}, {0.9, 0.1}, {0.9, 0.9}, {0.1, 0.9}})};
    CHECK_THROWS_AS(tetragon_area(out), ArgumentError);
}

TEST_CASE("canonical tetragon bisection increases to the target from below")
{
    for (auto [k, delta, T] : {std::tuple{2.0, 0.1, 1.0}, {3.0, 0.05, 2.0}, {1.5, 0.3, 0.5}}) {
        const auto can = canonical_tetragon(k, delta, T);
        const double target = std::exp(-delta) * (k - 1) * T;
        CHECK(can.target == doctest::Approx(target).epsilon(1e-14));
        REQUIRE(can.lower.size() >= 2);
        for (std::size_t i = 0; i < can.lower.size(); ++i) {
            CHECK(can.lower[i] <= target + 1e-12);
            if (i > 0)
                CHECK(can.lower[i] > can.lower[i - 1]);
        }
        CHECK(target - can.lower.back() < 1e-6);
        CHECK(std::abs(can.area - target) < 1e-6);
    }
}

TEST_CASE("energy contradiction and displacement constant")
{
    const double k = 2.0, d = 0.1, T = 1.0;
    const auto yes = energy_contradiction(0.3, T, k, d);
    CHECK(yes.lhs == doctest::Approx(std::exp(d) * k * 0.3));
    CHECK(yes.rhs == doctest::Approx(std::exp(-d) * (k - 1) * T));
    CHECK(yes.contradiction);
    CHECK_FALSE(energy_contradiction(0.6, T, k, d).contradiction);
    CHECK(displacement_constant(0.7, k, d) == doctest::Approx(0.7 / (std::exp(d) * k)));
}

TEST_CASE("product lift examples")
{
    SUBCASE("constant point")
    {
        ProductLiftData data;
        data.aux = {0.0, 0.25, 0.5};
        data.ys = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
        data.j = Points2::Constant(11, 2, 0.4);
        data.f = Eigen::VectorXd::Zero(11);
        const auto L = lift_legendrian_product(data);
        CHECK(L.pullback_y == 0.0);
        CHECK(L.pullback_aux == 0.0);
        REQUIRE(L.points.rows() == 33);
        CHECK(L.points(11 * 2 + 3, 0) == 0.5);
    }
    SUBCASE("cylinder graph s = s0")
    {
        const double s0 = 0.4;
        ProductLiftData data;
        data.model = SY1Model::Cylinder;
        data.aux = {0.0};
        data.ys = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
        data.j.resize(101, 2);
        data.j.col(0).setConstant(s0);
        data.j.col(1) = data.ys;
        data.f = std::exp(s0) * data.ys;
        const auto L = lift_legendrian_product(data);
        CHECK(L.pullback_y < 1e-8);
        CHECK(data.primitive_defect() < 1e-8);

        data.f = data.ys;  // wrong slope
        CHECK_THROWS_AS(lift_legendrian_product(data), LiftError);
    }
    SUBCASE("radial segment in the plane")
    {
        const double phi = 0.7;
        ProductLiftData data;
        data.aux = {0.0, 1.0};
        data.ys = Eigen::VectorXd::LinSpaced(51, 0.1, 1.5);
        data.j.resize(51, 2);
        data.j.col(0) = data.ys * std::cos(phi);
        data.j.col(1) = data.ys * std::sin(phi);
        data.f = Eigen::VectorXd::Zero(51);
        CHECK(lift_legendrian_product(data).pullback_y < 1e-12);
    }
}

TEST_CASE("lifted flow examples")
{
    SUBCASE("zero Hamiltonian")
    {
        const auto seeds = seeds_on_circle(0.5, 6, 0.2);
        const auto L = lift_hamiltonian(corpus::zero_hamiltonian(), seeds);
        for (const auto& f : L.flow)
            CHECK((f - seeds).cwiseAbs().maxCoeff() == 0.0);
        CHECK(L.a_drift == 0.0);
    }
    SUBCASE("radial bump rotates circles")
    {
        const double a = 1.0, w = 0.7;
        const auto H = corpus::radial_bump(a, w);
        LiftOptions opt;
        opt.step = 1e-3;
        for (double r : {0.2, 0.5, 0.9}) {
            const auto seeds = seeds_on_circle(r, 8);
            const auto L = lift_hamiltonian(H, seeds, opt);
            // X = (-H_y, H_x): clockwise at 2 a / w^2 exp(-r^2 / w^2).
            const double omega = 2 * a / (w * w) * std::exp(-r * r / (w * w));
            const auto& last = L.flow.back();
            for (Eigen::Index i = 0; i < seeds.rows(); ++i) {
                const Eigen::Vector2d p0 = seeds.row(i).tail<2>().transpose(), p1 = last.row(i).tail<2>().transpose();
                CHECK(std::abs(p1.norm() - r) < 1e-9);
                const double turned = wrap(std::atan2(p1.y(), p1.x()) - std::atan2(p0.y(), p0.x()));
                CHECK(std::abs(turned - wrap(-omega * opt.t1)) < 1e-9);
            }
            CHECK(L.a_drift < 1e-8);
        }
    }
    SUBCASE("constant Hamiltonian is a Reeb translation")
    {
        const double c = 0.5;
        const auto H = corpus::constant_hamiltonian(c, 4.0);
        const auto seeds = seeds_on_circle(1.0, 5, 0.3);
        const auto L = lift_hamiltonian(H, seeds);
        for (std::size_t k = 0; k < L.flow.size(); ++k) {
            const double t = L.grid[Eigen::Index(k)];
            CHECK((L.flow[k].rightCols<2>() - seeds.rightCols<2>()).cwiseAbs().maxCoeff() < 1e-14);
            CHECK((L.flow[k].col(0).array() - (0.3 - c * t)).abs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("the Reeb part of the lifted field is vertical")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (double c : {-1.0, 0.25, 2.0}) {
        const auto H = corpus::constant_hamiltonian(c, 4.0);
        for (int i = 0; i < 50; ++i) {
            const Eigen::Vector3d q(u(rng), u(rng), u(rng));
            const auto N = H.lifted_field(0.3, q);
            CHECK(N.tail<2>().norm() < 1e-14);
            CHECK(N[0] == doctest::Approx(-c));
        }
    }
}

TEST_CASE("lifted flows are strict on the corpus")
{
    for (const auto& [name, H] : corpus::lifting_hamiltonians()) {
        CAPTURE(name);
        Points3 seeds(6, 3);
        if (H.model == SY1Model::Cylinder)
            seeds << 0, -0.3, 0.1, 0, 0, 0.4, 0, 0.2, 0.7, 0, 0.5, 0.0, 0, -0.1, 0.55, 0, 0.1, 0.9;
        else
            seeds << 0, 0.3, 0.1, 0, -0.5, 0.2, 0, 0.1, -0.8, 0, 0.9, 0.4, 0, -0.2, -0.2, 0, 0.6, -0.6;
        const auto L = lift_hamiltonian(H, seeds);
        CHECK(L.a_drift <= 10 * L.error_estimate + 1e-9);
        CHECK(L.hamiltonian_defect < 1e-6);
    }
}

TEST_CASE("non-decaying Hamiltonians need a cutoff")
{
    HamiltonianSpec H;
    H.H = [](double, const Eigen::Vector2d& p) { return p.x(); };
    H.domain_radius = 3.0;
    CHECK_THROWS_AS(H.check_decay(), CutoffError);
    CHECK_THROWS_AS(lift_hamiltonian(H, seeds_on_circle(0.5, 3)), CutoffError);
    H.cutoff_radius = 2.0;
    CHECK_NOTHROW(H.check_decay());
    CHECK(H.value(0.0, {1.0, 0.5}) == doctest::Approx(1.0));
    CHECK(H.value(0.0, {0.0, 2.0}) == 0.0);
    CHECK(H.value(0.0, {4.1, 0.0}) == 0.0);
    CHECK(std::abs(H.value(0.0, {2.9, 0.0})) < 2.9);
}

TEST_CASE("primitive transport examples")
{
    ProductLiftData data;
    data.aux = {0.1};
    data.ys = Eigen::VectorXd::LinSpaced(201, 0.0, 1.0);
    data.j.resize(201, 2);
    for (Eigen::Index i = 0; i < 201; ++i) {
        const double a = 2 * pi * data.ys[i];
        data.j.row(i) << 0.5 * std::cos(a), 0.5 * std::sin(a);
    }
    // lambda = r^2 / 2 d theta along the circle: f = (0.25 / 2) 2 pi y.
    data.f = 0.25 * pi * data.ys;
    data.tol = 1e-3;
    REQUIRE(data.primitive_defect() < data.tol);

    SUBCASE("zero Hamiltonian")
    {
        const auto tr = transport_primitive(data, corpus::zero_hamiltonian());
        for (Eigen::Index t = 0; t < tr.f.rows(); ++t)
            CHECK((tr.f.row(t).transpose() - data.f).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("constant Hamiltonian")
    {
        const double c = 0.5;
        const auto tr = transport_primitive(data, corpus::constant_hamiltonian(c, 4.0));
        for (Eigen::Index t = 0; t < tr.f.rows(); ++t)
            CHECK((tr.f.row(t).transpose() - (data.f.array() - c * tr.grid[t]).matrix()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(tr.agreement < 1e-10);
    }
    SUBCASE("radial bump")
    {
        const auto tr = transport_primitive(data, corpus::radial_bump());
        CHECK(tr.agreement < 1e-6);
        // Rotation by a constant angle keeps the circle and shifts f by a constant.
        const Eigen::VectorXd d = tr.f.bottomRows<1>().transpose() - data.f;
        CHECK(d.maxCoeff() - d.minCoeff() < 1e-9);
    }
    SUBCASE("drifting bump")
    {
        CHECK(transport_primitive(data, corpus::drifting_bump()).agreement < 1e-6);
    }
}

TEST_CASE("Sikorav rescaling examples")
{
    const auto H = corpus::drifting_bump();
    const auto grid = TimeGrid::uniform(11);
    const auto samples = region_samples(H, 31);
    for (double k : {0.0, 1.0, 2.5, 5.0}) {
        CAPTURE(k);
        const auto r = sikorav_rescale(H, k, grid, samples);
        CHECK(std::abs(r.ratio - std::exp(-k)) < 1e-9);
        CHECK(std::abs(r.rescaled_oscillation / r.oscillation - std::exp(-k)) < 1e-13);
        // H^k(z) = e^-k H(e^{k/2} z) at a few points.
        for (const Eigen::Vector2d z : {Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(-0.3, 0.05)})
            CHECK(r.rescaled.value(0.4, z) == doctest::Approx(std::exp(-k) * H.value(0.4, std::exp(k / 2) * z)));
    }
    CHECK_THROWS_AS(sikorav_rescale(corpus::cylinder_wave(), 1.0, grid, region_samples(corpus::cylinder_wave(), 11)),
                    ArgumentError);
}

TEST_CASE("Sikorav actions stay bounded in k")
{
    const auto H = corpus::radial_bump(0.8, 0.6);
    Points2 ys(5, 2);
    ys << 0.1, 0.0, 0.3, 0.2, -0.4, 0.1, 0.0, -0.6, 0.5, 0.5;
    double at0 = 0.0, worst = 0.0;
    for (int i = 0; i <= 10; ++i) {
        const double k = 0.5 * i;
        const auto a = sikorav_actions(H, k, ys);
        REQUIRE(a.allFinite());
        if (i == 0)
            at0 = a.cwiseAbs().maxCoeff();
        worst = std::max(worst, a.cwiseAbs().maxCoeff());
    }
    // H^k shrinks like e^-k and its flow lines of length O(1) shrink too.
    CHECK(worst <= std::max(at0, 1e-12) * 1.000001);
}
