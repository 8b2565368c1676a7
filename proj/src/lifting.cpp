#include "leglab/lifting.hpp"

#include "leglab/numerics.hpp"
#include "leglab/parallel.hpp"

#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include <array>
#include <cmath>
#include <sstream>

namespace leglab {

// ---- Lagrangian tetragon ---------------------------------------------------

namespace {

double edge_integral(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const double ds = b.x() - a.x(), dt = b.y() - a.y();
    if (std::abs(ds) < 1e-12)
        return dt * std::exp(0.5 * (a.x() + b.x())) * (1.0 + ds * ds / 24.0);
    return dt * (std::exp(b.x()) - std::exp(a.x())) / ds;
}

}  // namespace

double tetragon_area(const TetragonSpec& spec)
{
    if (!(spec.k > 1.0) || !(spec.T > 0.0) || !(spec.delta >= 0.0))
        throw ArgumentError("tetragon_area: need k > 1, T > 0, delta >= 0");
    const Points2& g = spec.gamma;
    const Eigen::Index n = g.rows();
    if (n < 2)
        throw ArgumentError("tetragon_area: loop needs at least two points");
    const double L = std::log(spec.k), eps = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i)
        if (g(i, 0) < -eps || g(i, 0) > L + eps || g(i, 1) < -eps || g(i, 1) > spec.T + eps) {
            std::ostringstream os;
            os << "tetragon_area: point " << i << " (" << g(i, 0) << ", " << g(i, 1)
               << ") lies outside [0, log k] x [0, T]";
            throw ArgumentError(os.str());
        }
    Points2 closed(n + 1, 2);
    closed << g, g.row(0);
    for (const auto& c : polyline_crossings(closed)) {
        // The closing vertex is shared by the first and last segments.
        if (c.xa < 1.0 && c.xb >= double(n) - 1.0 - 1e-12 && (c.point - g.row(0).transpose()).norm() < 1e-12)
            continue;
        std::ostringstream os;
        os << "tetragon_area: loop is not embedded, segments " << int(c.xa) << " and " << int(c.xb)
           << " meet at (" << c.point.x() << ", " << c.point.y() << ")";
        throw ArgumentError(os.str());
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        acc += edge_integral(g.row(i), g.row((i + 1) % n));
    return acc;
}

Points2 rectangle_loop(double k, double T)
{
    const double L = std::log(k);
    Points2 g(4, 2);
    g << 0.0, 0.0, L, 0.0, L, T, 0.0, T;
    return g;
}

namespace {

Points2 rounded_rectangle(double x0, double y0, double x1, double y1, double r, int m)
{
    // Corner centres, counter-clockwise from the lower right.
    const double cx[4] = {x1 - r, x1 - r, x0 + r, x0 + r};
    const double cy[4] = {y0 + r, y1 - r, y1 - r, y0 + r};
    const double start[4] = {-0.5 * M_PI, 0.0, 0.5 * M_PI, M_PI};
    Points2 g(4 * (m + 1), 2);
    Eigen::Index row = 0;
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i <= m; ++i) {
            const double a = start[c] + 0.5 * M_PI * double(i) / double(m);
            g.row(row++) << cx[c] + r * std::cos(a), cy[c] + r * std::sin(a);
        }
    return g;
}

}  // namespace

CanonicalTetragon canonical_tetragon(double k, double delta, double T, int arc_samples)
{
    if (!(k > 1.0) || !(T > 0.0) || !(delta > 0.0))
        throw ArgumentError("canonical_tetragon: need k > 1, T > 0, delta > 0");
    if (arc_samples < 2)
        throw ArgumentError("canonical_tetragon: need at least two samples per corner");
    const double L = std::log(k);
    CanonicalTetragon out;
    out.target = std::exp(-delta) * (k - 1.0) * T;
    out.spec.k = k;
    out.spec.delta = delta;
    out.spec.T = T;
    auto loop = [&](double o) {
        return o > 0.0 ? rounded_rectangle(o, o, L - o, T - o, o, arc_samples) : rectangle_loop(k, T);
    };
    auto area = [&](double o) {
        TetragonSpec s = out.spec;
        s.gamma = loop(o);
        return tetragon_area(s);
    };
    // Offset o: the loop is a rectangle inset by 2o with corners rounded by o, so it stays
    // in [o, L - o] x [o, T - o]. Area decreases in o.
    double lo = 0.0, hi = 0.2 * std::min(L, T);
    const double ahi = area(hi);
    if (ahi > out.target)
        throw ArgumentError("canonical_tetragon: delta too large to reach the target by offsetting");
    out.lower.push_back(ahi);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi), am = area(mid);
        if (am > out.target) {
            lo = mid;
        } else {
            hi = mid;
            out.lower.push_back(am);
        }
    }
    out.offset = hi;
    out.spec.gamma = loop(hi);
    out.area = tetragon_area(out.spec);
    return out;
}

ContradictionCheck energy_contradiction(double E, double T, double k, double delta)
{
    if (!(k > 1.0) || !(T > 0.0) || !(E >= 0.0))
        throw ArgumentError("energy_contradiction: need k > 1, T > 0, E >= 0");
    ContradictionCheck c;
    c.lhs = std::exp(delta) * k * E;
    c.rhs = std::exp(-delta) * (k - 1.0) * T;
    c.contradiction = c.lhs < c.rhs;
    return c;
}

double displacement_constant(double sigma, double k, double delta)
{
    if (!(k > 0.0))
        throw ArgumentError("displacement_constant: k must be positive");
    return sigma / (std::exp(delta) * k);
}

// ---- SY_1 models -----------------------------------------------------------

std::string to_string(SY1Model m)
{
    return m == SY1Model::PuncturedPlane ? "punctured-plane" : "cylinder";
}

Eigen::RowVector2d liouville_form(SY1Model m, const Eigen::Vector2d& p)
{
    if (m == SY1Model::PuncturedPlane)
        return {-0.5 * p.y(), 0.5 * p.x()};
    return {0.0, std::exp(p.x())};
}

double symplectic_density(SY1Model m, const Eigen::Vector2d& p)
{
    return m == SY1Model::PuncturedPlane ? 1.0 : std::exp(p.x());
}

namespace {

double radius(SY1Model m, const Eigen::Vector2d& p)
{
    return m == SY1Model::PuncturedPlane ? p.norm() : std::abs(p.x());
}

Eigen::Vector2d radius_grad(SY1Model m, const Eigen::Vector2d& p)
{
    if (m == SY1Model::PuncturedPlane) {
        const double r = p.norm();
        return r > 0.0 ? Eigen::Vector2d(p / r) : Eigen::Vector2d::Zero();
    }
    return {p.x() > 0 ? 1.0 : (p.x() < 0 ? -1.0 : 0.0), 0.0};
}

// Plateau bump: 1 up to R, 0 beyond 2R.
double plateau(double r, double R)
{
    return 1.0 - num::smoothstep((r - R) / R);
}

double plateau_d(double r, double R)
{
    return -num::smoothstep_d((r - R) / R) / R;
}

}  // namespace

double HamiltonianSpec::value(double t, const Eigen::Vector2d& p) const
{
    const double h = H(t, p);
    return cutoff_radius > 0.0 ? h * plateau(radius(model, p), cutoff_radius) : h;
}

Eigen::Vector2d HamiltonianSpec::grad(double t, const Eigen::Vector2d& p) const
{
    Eigen::Vector2d g;
    if (gradient) {
        g = gradient(t, p);
    } else {
        // Five-point stencil.
        const double h = 1e-3 * std::max(1.0, p.norm());
        for (int i = 0; i < 2; ++i) {
            Eigen::Vector2d e = Eigen::Vector2d::Zero();
            e[i] = h;
            g[i] = (-H(t, p + 2 * e) + 8 * H(t, p + e) - 8 * H(t, p - e) + H(t, p - 2 * e)) / (12 * h);
        }
    }
    if (cutoff_radius > 0.0) {
        const double r = radius(model, p);
        g = plateau(r, cutoff_radius) * g + H(t, p) * plateau_d(r, cutoff_radius) * radius_grad(model, p);
    }
    return g;
}

Eigen::Vector2d HamiltonianSpec::field(double t, const Eigen::Vector2d& p) const
{
    const Eigen::Vector2d g = grad(t, p);
    const double rho = symplectic_density(model, p);
    return {-g.y() / rho, g.x() / rho};
}

Eigen::Vector3d HamiltonianSpec::lifted_field(double t, const Eigen::Vector3d& q) const
{
    const Eigen::Vector2d p = q.tail<2>();
    const Eigen::Vector2d X = field(t, p);
    const double reeb = liouville_form(model, p).dot(X) - value(t, p);
    return {reeb, X.x(), X.y()};
}

void HamiltonianSpec::check_decay() const
{
    if (!H)
        throw ArgumentError("HamiltonianSpec: no Hamiltonian given");
    if (cutoff_radius > 0.0)
        return;
    double worst = 0.0, scale = 0.0;
    for (double t : {0.0, 0.5, 1.0}) {
        for (int i = 0; i < 64; ++i) {
            Eigen::Vector2d p;
            if (model == SY1Model::PuncturedPlane) {
                const double a = 2.0 * M_PI * i / 64.0;
                p = domain_radius * Eigen::Vector2d(std::cos(a), std::sin(a));
            } else {
                p = {i % 2 ? domain_radius : -domain_radius, double(i / 2) / 32.0};
            }
            worst = std::max(worst, std::abs(H(t, p)));
        }
        scale = std::max(scale, std::abs(H(t, Eigen::Vector2d(0.1, 0.1))));
    }
    if (worst > 1e-9 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << "Hamiltonian does not decay: |H| reaches " << worst << " at radius " << domain_radius
           << "; set a cutoff radius";
        throw CutoffError(os.str());
    }
}

namespace {

template <std::size_t N>
using State = std::array<double, N>;

// Fixed-step RK4 from t0 to t1 in n steps; calls obs(step, t, x) before the first and after
// every step.
template <std::size_t N, typename Rhs, typename Obs>
State<N> integrate_rk4(Rhs&& rhs, State<N> x, double t0, double t1, Eigen::Index n, Obs&& obs)
{
    boost::numeric::odeint::runge_kutta4<State<N>> stepper;
    const double h = (t1 - t0) / double(n);
    obs(Eigen::Index(0), t0, x);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = t0 + h * double(i);
        stepper.do_step(rhs, x, t, h);
        obs(i + 1, t0 + h * double(i + 1), x);
    }
    return x;
}

Eigen::Index steps_for(double t0, double t1, double step)
{
    if (!(step > 0.0))
        throw ArgumentError("flow: step must be positive");
    return std::max<Eigen::Index>(1, Eigen::Index(std::llround(std::abs(t1 - t0) / step)));
}

auto lifted_rhs(const HamiltonianSpec& H)
{
    return [&H](const State<3>& x, State<3>& dx, double t) {
        const Eigen::Vector3d v = H.lifted_field(t, Eigen::Vector3d(x[0], x[1], x[2]));
        dx = {v[0], v[1], v[2]};
    };
}

auto planar_rhs(const HamiltonianSpec& H)
{
    return [&H](const State<2>& x, State<2>& dx, double t) {
        const Eigen::Vector2d v = H.field(t, Eigen::Vector2d(x[0], x[1]));
        dx = {v[0], v[1]};
    };
}

Eigen::Vector3d vec3(const State<3>& s)
{
    return {s[0], s[1], s[2]};
}

double form_A(SY1Model m, const Eigen::Vector3d& q, const Eigen::Vector3d& v)
{
    return v[0] - liouville_form(m, q.tail<2>()).dot(v.tail<2>());
}

}  // namespace

Eigen::Vector3d flow_lifted(const HamiltonianSpec& H, const Eigen::Vector3d& q, double t0, double t1, double step)
{
    const auto end = integrate_rk4<3>(lifted_rhs(H), State<3>{q[0], q[1], q[2]}, t0, t1, steps_for(t0, t1, step),
                                      [](Eigen::Index, double, const State<3>&) {});
    return vec3(end);
}

LiftedIsotopy lift_hamiltonian(const HamiltonianSpec& H, const Points3& seeds, const LiftOptions& opt)
{
    H.check_decay();
    if (opt.record_every < 1)
        throw ArgumentError("lift_hamiltonian: record_every must be >= 1");
    const Eigen::Index n = steps_for(0.0, opt.t1, opt.step);
    const Eigen::Index nrec = n / opt.record_every + 1;
    if (n % opt.record_every != 0)
        throw ArgumentError("lift_hamiltonian: record_every must divide the number of steps");
    const Eigen::Index ns = seeds.rows();

    LiftedIsotopy out;
    out.hamiltonian = H;
    out.options = opt;
    out.grid = TimeGrid::uniform(nrec, 0.0, opt.t1);
    out.flow.assign(std::size_t(nrec), Points3(ns, 3));
    std::vector<double> drift(std::size_t(ns), 0.0), err(std::size_t(ns), 0.0), hdef(std::size_t(ns), 0.0);

    const double fd = opt.fd_step;
    parallel_for(long(ns), opt.jobs, [&](long s) {
        const Eigen::Vector3d q0 = seeds.row(s);
        // Seed and the variational equation dV/dt = DN V on the three unit vectors.
        State<12> x{};
        for (int d = 0; d < 3; ++d) {
            x[std::size_t(d)] = q0[d];
            x[std::size_t(3 + 4 * d)] = 1.0;
        }
        auto rhs = [&H, fd](const State<12>& y, State<12>& dy, double t) {
            const Eigen::Vector3d q(y[0], y[1], y[2]);
            const Eigen::Vector3d v = H.lifted_field(t, q);
            Eigen::Matrix3d J;
            for (int c = 0; c < 3; ++c) {
                const Eigen::Vector3d e = fd * Eigen::Vector3d::Unit(c);
                J.col(c) = (-H.lifted_field(t, q + 2 * e) + 8 * H.lifted_field(t, q + e) -
                            8 * H.lifted_field(t, q - e) + H.lifted_field(t, q - 2 * e)) /
                           (12 * fd);
            }
            for (int d = 0; d < 3; ++d)
                dy[std::size_t(d)] = v[d];
            for (int m = 0; m < 3; ++m) {
                const Eigen::Vector3d V(y[std::size_t(3 + 3 * m)], y[std::size_t(4 + 3 * m)], y[std::size_t(5 + 3 * m)]);
                const Eigen::Vector3d dV = J * V;
                for (int d = 0; d < 3; ++d)
                    dy[std::size_t(3 + 3 * m + d)] = dV[d];
            }
        };
        boost::numeric::odeint::runge_kutta4<State<12>> stepper;
        const double h = opt.t1 / double(n);
        auto record = [&](Eigen::Index i) {
            if (i % opt.record_every != 0)
                return;
            const Eigen::Vector3d q(x[0], x[1], x[2]);
            out.flow[std::size_t(i / opt.record_every)].row(s) = q;
            for (int m = 0; m < 3; ++m) {
                const Eigen::Vector3d V(x[std::size_t(3 + 3 * m)], x[std::size_t(4 + 3 * m)], x[std::size_t(5 + 3 * m)]);
                drift[std::size_t(s)] = std::max(
                    drift[std::size_t(s)],
                    std::abs(form_A(H.model, q, V) - form_A(H.model, q0, Eigen::Vector3d::Unit(m))));
            }
        };
        record(0);
        for (Eigen::Index i = 0; i < n; ++i) {
            stepper.do_step(rhs, x, h * double(i), h);
            record(i + 1);
        }
        const Eigen::Vector3d end(x[0], x[1], x[2]);
        // Half-step rerun for the error estimate.
        const Eigen::Vector3d fine = flow_lifted(H, q0, 0.0, opt.t1, 0.5 * h);
        err[std::size_t(s)] = (fine - end).norm();
        // X ⌟ omega + dH against an independent central difference of H.
        const Eigen::Vector2d p = q0.tail<2>();
        const Eigen::Vector2d X = H.field(0.0, p);
        const double rho = symplectic_density(H.model, p);
        const double e = 1e-6;
        const Eigen::Vector2d dH((H.value(0.0, p + Eigen::Vector2d(e, 0)) - H.value(0.0, p - Eigen::Vector2d(e, 0))) / (2 * e),
                                 (H.value(0.0, p + Eigen::Vector2d(0, e)) - H.value(0.0, p - Eigen::Vector2d(0, e))) / (2 * e));
        const Eigen::Vector2d contraction(-rho * X.y(), rho * X.x());
        hdef[std::size_t(s)] = (contraction + dH).cwiseAbs().maxCoeff();
    });
    for (Eigen::Index s = 0; s < ns; ++s) {
        out.a_drift = std::max(out.a_drift, drift[std::size_t(s)]);
        out.error_estimate = std::max(out.error_estimate, err[std::size_t(s)]);
        out.hamiltonian_defect = std::max(out.hamiltonian_defect, hdef[std::size_t(s)]);
    }
    out.oscillation = hamiltonian_oscillation(H, TimeGrid::uniform(21, 0.0, opt.t1), region_samples(H));
    return out;
}

// ---- Product lifts ---------------------------------------------------------

namespace {

Eigen::VectorXd diff_open(const Eigen::VectorXd& v, const Eigen::VectorXd& x)
{
    Points3 p(v.size(), 3);
    p.setZero();
    p.col(0) = v;
    return parameter_derivative(p, x, false, Point3::Zero()).col(0);
}

}  // namespace

double ProductLiftData::primitive_defect() const
{
    const Eigen::Index n = ys.size();
    if (j.rows() != n || f.size() != n)
        throw ArgumentError("ProductLiftData: ys, j and f must have the same length");
    if (n < 3)
        return 0.0;
    const Eigen::VectorXd df = diff_open(f, ys);
    const Eigen::VectorXd dx = diff_open(j.col(0), ys), dy = diff_open(j.col(1), ys);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lam = liouville_form(model, j.row(i).transpose()).dot(Eigen::Vector2d(dx[i], dy[i]));
        worst = std::max(worst, std::abs(df[i] - lam));
    }
    return worst;
}

ProductLift lift_legendrian_product(const ProductLiftData& data)
{
    const double defect = data.primitive_defect();
    if (defect > data.tol) {
        std::ostringstream os;
        os << "lift_legendrian_product: j*lambda = df fails by " << defect;
        throw LiftError(os.str(), defect);
    }
    if (data.aux.empty())
        throw ArgumentError("lift_legendrian_product: empty auxiliary Legendrian");
    const Eigen::Index ny = data.ys.size(), na = Eigen::Index(data.aux.size());
    ProductLift out;
    out.points.resize(na * ny, 3);
    for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index b = 0; b < ny; ++b) {
            double th = data.aux[std::size_t(a)] + data.f[b];
            if (data.circle_y0)
                th -= std::floor(th);
            out.points.row(a * ny + b) << th, data.j(b, 0), data.j(b, 1);
        }
    out.pullback_y = defect;
    return out;
}

PrimitiveTransport transport_primitive(const ProductLiftData& data, const HamiltonianSpec& H, const LiftOptions& opt)
{
    const ProductLift lift = lift_legendrian_product(data);
    H.check_decay();
    const Eigen::Index n = steps_for(0.0, opt.t1, opt.step);
    if (opt.record_every < 2 || opt.record_every % 2 != 0 || n % opt.record_every != 0)
        throw ArgumentError("transport_primitive: record_every must be even and divide the number of steps");
    const Eigen::Index nrec = n / opt.record_every + 1, ny = data.ys.size();
    const double h = opt.t1 / double(n);
    const double theta0 = data.aux.empty() ? 0.0 : data.aux.front();

    PrimitiveTransport out;
    out.grid = TimeGrid::uniform(nrec, 0.0, opt.t1);
    out.f.resize(nrec, ny);
    out.j.assign(std::size_t(nrec), Points2(ny, 2));
    out.flowed.assign(std::size_t(nrec), Points3(ny, 3));
    out.rebuilt.assign(std::size_t(nrec), Points3(ny, 3));

    parallel_for(long(ny), opt.jobs, [&](long b) {
        const Eigen::Vector2d p0 = data.j.row(b);
        // Pipeline 1: base flow of X and Simpson quadrature of (X ⌟ lambda - H).
        std::vector<double> g(std::size_t(n + 1));
        std::vector<Eigen::Vector2d> path(static_cast<std::size_t>(nrec));
        integrate_rk4<2>(planar_rhs(H), State<2>{p0[0], p0[1]}, 0.0, opt.t1, n,
                         [&](Eigen::Index i, double t, const State<2>& x) {
                             const Eigen::Vector2d p(x[0], x[1]);
                             g[std::size_t(i)] = liouville_form(H.model, p).dot(H.field(t, p)) - H.value(t, p);
                             if (i % opt.record_every == 0)
                                 path[std::size_t(i / opt.record_every)] = p;
                         });
        double acc = 0.0;
        for (Eigen::Index r = 0; r < nrec; ++r) {
            if (r > 0)
                for (Eigen::Index i = (r - 1) * opt.record_every; i < r * opt.record_every; i += 2)
                    acc += h / 3.0 * (g[std::size_t(i)] + 4.0 * g[std::size_t(i + 1)] + g[std::size_t(i + 2)]);
            out.f(r, b) = data.f[b] + acc;
            out.j[std::size_t(r)].row(b) = path[std::size_t(r)];
            out.rebuilt[std::size_t(r)].row(b) << theta0 + out.f(r, b), path[std::size_t(r)].x(), path[std::size_t(r)].y();
        }
        // Pipeline 2: the lifted flow of the product lift point.
        const Eigen::Vector3d q0(theta0 + data.f[b], p0.x(), p0.y());
        integrate_rk4<3>(lifted_rhs(H), State<3>{q0[0], q0[1], q0[2]}, 0.0, opt.t1, n,
                         [&](Eigen::Index i, double, const State<3>& x) {
                             if (i % opt.record_every == 0)
                                 out.flowed[std::size_t(i / opt.record_every)].row(b) = vec3(x);
                         });
    });
    (void)lift;
    for (Eigen::Index r = 0; r < nrec; ++r) {
        const double d = (out.flowed[std::size_t(r)] - out.rebuilt[std::size_t(r)]).cwiseAbs().maxCoeff();
        if (!std::isfinite(d))
            throw DomainError("transport_primitive: flow left the representable range");
        out.agreement = std::max(out.agreement, d);
    }
    return out;
}

// ---- Sikorav conjugation ---------------------------------------------------

double hamiltonian_oscillation(const HamiltonianSpec& H, const TimeGrid& grid, const Points2& samples)
{
    if (samples.rows() == 0)
        throw ArgumentError("hamiltonian_oscillation: no samples");
    Eigen::VectorXd spread(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = 0; i < samples.rows(); ++i) {
            const double v = H.value(grid[k], samples.row(i).transpose());
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        spread[k] = hi - lo;
    }
    return grid.size() < 2 ? 0.0 : integrate_1d(spread, grid);
}

Points2 region_samples(const HamiltonianSpec& H, Eigen::Index n)
{
    if (n < 2)
        throw ArgumentError("region_samples: need n >= 2");
    const double R = H.cutoff_radius > 0.0 ? H.cutoff_radius : H.domain_radius;
    std::vector<Eigen::Vector2d> pts;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            const double u = -R + 2.0 * R * double(a) / double(n - 1);
            if (H.model == SY1Model::PuncturedPlane) {
                const Eigen::Vector2d p(u, -R + 2.0 * R * double(b) / double(n - 1));
                if (p.norm() <= R)
                    pts.push_back(p);
            } else {
                pts.emplace_back(u, double(b) / double(n));
            }
        }
    Points2 out(Eigen::Index(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i)
        out.row(Eigen::Index(i)) = pts[i];
    return out;
}

SikoravResult sikorav_rescale(const HamiltonianSpec& H, double k, const TimeGrid& grid, const Points2& samples)
{
    if (H.model != SY1Model::PuncturedPlane)
        throw ArgumentError("sikorav_rescale: the expansion conjugator is defined on the plane model");
    if (!(k >= 0.0))
        throw ArgumentError("sikorav_rescale: k must be >= 0");
    const double ek = std::exp(-k), grow = std::exp(0.5 * k);
    SikoravResult out;
    out.k = k;
    HamiltonianSpec& R = out.rescaled;
    R.model = H.model;
    // Cutoff and domain shrink with kappa_k^{-1}; the cutoff is folded into H itself.
    R.H = [H, ek, grow](double t, const Eigen::Vector2d& p) { return ek * H.value(t, grow * p); };
    R.gradient = [H, ek, grow](double t, const Eigen::Vector2d& p) -> Eigen::Vector2d {
        return ek * grow * H.grad(t, grow * p);
    };
    R.domain_radius = H.cutoff_radius > 0.0 ? 2.0 * H.cutoff_radius / grow : H.domain_radius / grow;
    out.oscillation = hamiltonian_oscillation(H, grid, samples);
    out.rescaled_oscillation = hamiltonian_oscillation(R, grid, samples / grow);
    out.ratio = out.oscillation > 0.0 ? out.rescaled_oscillation / out.oscillation : 0.0;
    return out;
}

Eigen::VectorXd sikorav_actions(const HamiltonianSpec& H, double k, const Points2& ys, double step)
{
    const TimeGrid g = TimeGrid::uniform(2);
    const SikoravResult r = sikorav_rescale(H, k, g, ys);
    const HamiltonianSpec& Hk = r.rescaled;
    Eigen::Index n = steps_for(0.0, 1.0, step);
    n += n % 2;
    const double h = 1.0 / double(n);
    Eigen::VectorXd a(ys.rows());
    for (Eigen::Index i = 0; i < ys.rows(); ++i) {
        std::vector<double> g2(std::size_t(n + 1));
        integrate_rk4<2>(planar_rhs(Hk), State<2>{ys(i, 0), ys(i, 1)}, 0.0, 1.0, n,
                         [&](Eigen::Index s, double t, const State<2>& x) {
                             const Eigen::Vector2d p(x[0], x[1]);
                             g2[std::size_t(s)] = liouville_form(Hk.model, p).dot(Hk.field(t, p)) - Hk.value(t, p);
                         });
        double acc = 0.0;
        for (Eigen::Index s = 0; s < n; s += 2)
            acc += h / 3.0 * (g2[std::size_t(s)] + 4.0 * g2[std::size_t(s + 1)] + g2[std::size_t(s + 2)]);
        a[i] = acc;
    }
    return a;
}

namespace corpus {

HamiltonianSpec zero_hamiltonian(SY1Model m)
{
    HamiltonianSpec h;
    h.model = m;
    h.H = [](double, const Eigen::Vector2d&) { return 0.0; };
    h.gradient = [](double, const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
    return h;
}

HamiltonianSpec radial_bump(double a, double w)
{
    HamiltonianSpec h;
    h.H = [a, w](double, const Eigen::Vector2d& p) { return a * std::exp(-p.squaredNorm() / (w * w)); };
    h.gradient = [a, w](double, const Eigen::Vector2d& p) -> Eigen::Vector2d {
        return -2.0 * a / (w * w) * std::exp(-p.squaredNorm() / (w * w)) * p;
    };
    return h;
}

HamiltonianSpec constant_hamiltonian(double c, double cutoff)
{
    HamiltonianSpec h;
    h.H = [c](double, const Eigen::Vector2d&) { return c; };
    h.gradient = [](double, const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
    h.cutoff_radius = cutoff;
    return h;
}

HamiltonianSpec drifting_bump(double a, Eigen::Vector2d centre, double w)
{
    HamiltonianSpec h;
    h.H = [a, centre, w](double t, const Eigen::Vector2d& p) {
        return a * (1.0 + 0.5 * std::sin(2.0 * M_PI * t)) * std::exp(-(p - centre).squaredNorm() / (w * w));
    };
    return h;
}

HamiltonianSpec cylinder_wave(double a, double w)
{
    HamiltonianSpec h;
    h.model = SY1Model::Cylinder;
    h.H = [a, w](double t, const Eigen::Vector2d& p) {
        return a * (1.0 + t) * std::exp(-p.x() * p.x() / (w * w)) * std::cos(2.0 * M_PI * p.y());
    };
    return h;
}

std::vector<std::pair<std::string, HamiltonianSpec>> lifting_hamiltonians()
{
    return {{"zero", zero_hamiltonian()},
            {"radial-bump", radial_bump()},
            {"constant", constant_hamiltonian()},
            {"drifting-bump", drifting_bump()},
            {"cylinder-wave", cylinder_wave()}};
}

}  // namespace corpus

}  // namespace leglab
