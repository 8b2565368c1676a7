#include "leglab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace leglab {

Points2 periodic_derivative(const Points2& pts, const Eigen::VectorXd& x)
{
    const Eigen::Index n = x.size();
    if (pts.rows() != n || n < 3)
        throw ArgumentError("periodic_derivative: need >= 3 samples matching the grid");
    Points2 d(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index im = (i + n - 1) % n, ip = (i + 1) % n;
        const double a = i == 0 ? x[im] - 1.0 : x[im];
        const double b = x[i];
        const double c = i == n - 1 ? x[ip] + 1.0 : x[ip];
        const double w0 = (b - c) / ((a - b) * (a - c));
        const double w1 = ((b - a) + (b - c)) / ((b - a) * (b - c));
        const double w2 = (b - a) / ((c - a) * (c - b));
        d.row(i) = w0 * pts.row(im) + w1 * pts.row(i) + w2 * pts.row(ip);
    }
    return d;
}

Points2 ImmersedLoop::derivative() const
{
    return tangents ? *tangents : periodic_derivative(points, params);
}

double ImmersedLoop::min_speed() const
{
    return derivative().rowwise().norm().minCoeff();
}

void ImmersedLoop::validate() const
{
    const Eigen::Index n = params.size();
    if (n < 8)
        throw ArgumentError("ImmersedLoop: need >= 8 samples");
    if (points.rows() != n || (tangents && tangents->rows() != n))
        throw ArgumentError("ImmersedLoop: sample count mismatch");
    if (params[0] < 0.0 || params[n - 1] >= 1.0)
        throw ArgumentError("ImmersedLoop: parameters must lie in [0, 1)");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(params[i] > params[i - 1]))
            throw ArgumentError("ImmersedLoop: parameters must increase");
    if (!points.allFinite())
        throw ArgumentError("ImmersedLoop: non-finite point");
    if (!(min_speed() > 0.0))
        throw ArgumentError("ImmersedLoop: not immersed (zero speed sample)");
}

void LoopFamily::validate() const
{
    const Eigen::Index nt = grid.size();
    if (nt < 1 || static_cast<Eigen::Index>(points.size()) != nt ||
        static_cast<Eigen::Index>(tangents.size()) != nt ||
        static_cast<Eigen::Index>(velocities.size()) != nt)
        throw ArgumentError("LoopFamily: per-time arrays do not match the time grid");
    for (Eigen::Index t = 0; t < nt; ++t) {
        if (velocities[t].rows() != params.size())
            throw ArgumentError("LoopFamily: velocity slice size mismatch");
        loop(t).validate();
    }
}

HamiltonianTrace::HamiltonianTrace(TimeGrid grid, Eigen::MatrixXd h)
    : grid_(std::move(grid)), h_(std::move(h))
{
    if (h_.rows() != grid_.size())
        throw ArgumentError("HamiltonianTrace: row count does not match the time grid");
    if (h_.cols() < 1)
        throw ArgumentError("HamiltonianTrace: empty parameter grid");
    max_ = h_.rowwise().maxCoeff();
    min_ = h_.rowwise().minCoeff();
}

HamiltonianTrace contact_hamiltonian(const SampledIsotopy& iso)
{
    const Eigen::Index nt = iso.num_times(), nx = iso.num_params();
    Eigen::MatrixXd h(nt, nx);
    for (Eigen::Index t = 0; t < nt; ++t) {
        const Points3& p = iso.points(t);
        const Points3& v = iso.velocities(t);
        for (Eigen::Index j = 0; j < nx; ++j)
            h(t, j) = iso.space().form(p.row(j).transpose(), v.row(j).transpose());
    }
    if (!h.allFinite())
        throw ComputationError("contact_hamiltonian: non-finite velocity sample");
    return HamiltonianTrace(iso.grid(), std::move(h));
}

EnergyReport energy_of(const HamiltonianTrace& trace, Quadrature rule)
{
    EnergyReport r;
    r.max_abs = trace.values().cwiseAbs().rowwise().maxCoeff();
    r.spread = trace.max() - trace.min();
    if (trace.grid().size() < 2)
        return r;
    r.length = integrate_1d(r.max_abs, trace.grid(), rule);
    r.oscillation = integrate_1d(r.spread, trace.grid(), rule);
    return r;
}

namespace {

struct Hermite {
    double a, b;
    Eigen::RowVector3d pa, pb, ma, mb;

    Eigen::RowVector3d value(double s) const
    {
        const double h = b - a, u = (s - a) / h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        return h00 * pa + h10 * h * ma + h01 * pb + h11 * h * mb;
    }
    Eigen::RowVector3d slope(double s) const
    {
        const double h = b - a, u = (s - a) / h;
        const double d00 = 6 * u * u - 6 * u, d10 = 3 * u * u - 4 * u + 1;
        const double d01 = -d00, d11 = 3 * u * u - 2 * u;
        return (d00 * pa + d01 * pb) / h + d10 * ma + d11 * mb;
    }
};

// Locates s in the sampled parameter domain and builds the Hermite piece.
Hermite hermite_piece(const Eigen::VectorXd& x, const Points3& p, const Points3& m, bool closed,
                      const Eigen::RowVector3d& shift, double& s, Eigen::RowVector3d& offset)
{
    const Eigen::Index n = x.size();
    offset.setZero();
    if (closed) {
        const double k = std::floor(s - x[0]);
        s -= k;
        offset = k * shift;
        if (s >= x[n - 1])
            return {x[n - 1], x[0] + 1.0, p.row(n - 1), p.row(0) + shift, m.row(n - 1), m.row(0)};
    }
    const auto* it = std::upper_bound(x.data(), x.data() + n, s);
    Eigen::Index i = std::clamp<Eigen::Index>(it - x.data() - 1, 0, n - 2);
    return {x[i], x[i + 1], p.row(i), p.row(i + 1), m.row(i), m.row(i + 1)};
}

}  // namespace

SampledIsotopy reparametrize(const SampledIsotopy& iso, const Reparametrization& sigma, double tol)
{
    const Eigen::Index nt = iso.num_times(), nx = iso.num_params();
    const Eigen::VectorXd& x = iso.params();
    const TimeGrid& grid = iso.grid();
    const bool closed = iso.closed();
    const Eigen::RowVector3d shift = iso.period_shift().transpose();
    const double lo = x[0], hi = x[nx - 1];

    IsotopyData out = iso.data();
    out.legendrian_tol = tol;
    std::vector<Points3> pts(nt, Points3(nx, 3)), tan(nt, Points3(nx, 3)), vel(nt, Points3(nx, 3));
    constexpr double eps = 1e-6;

    for (Eigen::Index t = 0; t < nt; ++t) {
        const double tt = grid[t];
        Eigen::VectorXd s(nx);
        for (Eigen::Index j = 0; j < nx; ++j)
            s[j] = sigma(tt, x[j]);
        for (Eigen::Index j = 1; j < nx; ++j)
            if (!(s[j] > s[j - 1]))
                throw ArgumentError("reparametrize: sigma is not increasing at t = " +
                                    std::to_string(tt));
        if (closed && !(s[0] + 1.0 > s[nx - 1]))
            throw ArgumentError("reparametrize: sigma does not wrap once around the circle");
        if (!closed && (std::abs(s[0] - lo) > 1e-12 || std::abs(s[nx - 1] - hi) > 1e-12))
            throw ArgumentError("reparametrize: sigma must fix the interval endpoints");

        const Points3& p = iso.points(t);
        const Points3& m = iso.tangents(t);
        const Points3& v = iso.velocities(t);
        const Points3 dv = parameter_derivative(v, x, closed, Point3::Zero());
        for (Eigen::Index j = 0; j < nx; ++j) {
            Eigen::RowVector3d off, unused;
            double local = s[j], vlocal = s[j];
            const Hermite hp = hermite_piece(x, p, m, closed, shift, local, off);
            const Hermite hv =
                hermite_piece(x, v, dv, closed, Eigen::RowVector3d::Zero(), vlocal, unused);
            const double ds_dx = (sigma(tt, x[j] + eps) - sigma(tt, x[j] - eps)) / (2 * eps);
            const double ds_dt = (sigma(tt + eps, x[j]) - sigma(tt - eps, x[j])) / (2 * eps);
            const Eigen::RowVector3d slope = hp.slope(local);
            pts[t].row(j) = hp.value(local) + off;
            tan[t].row(j) = slope * ds_dx;
            vel[t].row(j) = hv.value(vlocal) + slope * ds_dt;
        }
    }
    out.points = std::move(pts);
    out.tangents = std::move(tan);
    out.velocities = std::move(vel);
    return SampledIsotopy(std::move(out));
}

LagrangianPrimitive lagrangian_primitive(const LoopFamily& family, double tol)
{
    family.validate();
    const Eigen::Index nt = family.num_times(), nx = family.params.size();
    const Eigen::VectorXd& x = family.params;
    Eigen::VectorXd xc(nx + 1);
    xc << x, x[0] + 1.0;

    LagrangianPrimitive out;
    out.F.resize(nt, nx);
    out.defect.resize(nt);
    out.area.resize(nt);
    for (Eigen::Index t = 0; t < nt; ++t) {
        const Points2& j = family.points[t];
        const Points2& jx = family.tangents[t];
        const Points2& jt = family.velocities[t];
        Eigen::VectorXd g(nx + 1), a(nx + 1);
        for (Eigen::Index i = 0; i <= nx; ++i) {
            const Eigen::Index k = i % nx;
            g[i] = jt(k, 0) * jx(k, 1) - jt(k, 1) * jx(k, 0);
            a[i] = 0.5 * (j(k, 0) * jx(k, 1) - j(k, 1) * jx(k, 0));
        }
        const Eigen::VectorXd F = cumulative_integral(g, xc);
        out.F.row(t) = F.head(nx).transpose();
        out.defect[t] = F[nx];
        out.area[t] = cumulative_integral(a, xc)[nx];
    }
    for (Eigen::Index t = 0; t < nt; ++t) {
        const double drift = std::abs(out.area[t] - out.area[0]);
        const double worst = std::max(std::abs(out.defect[t]), drift);
        if (worst > tol) {
            std::ostringstream os;
            os << "lagrangian_primitive: not an exact deformation at t = " << family.grid[t]
               << " (closedness defect " << out.defect[t] << ", area drift " << drift << ")";
            throw ExactnessError(os.str(), worst);
        }
    }
    return out;
}

double lagrangian_osc_energy(const LagrangianPrimitive& primitive, const TimeGrid& grid)
{
    const Eigen::VectorXd spread =
        primitive.F.rowwise().maxCoeff() - primitive.F.rowwise().minCoeff();
    return grid.size() < 2 ? 0.0 : integrate_1d(spread, grid);
}

double lagrangian_osc_energy(const LoopFamily& family, double tol)
{
    return lagrangian_osc_energy(lagrangian_primitive(family, tol), family.grid);
}

LoopFamily conjugate_by_contraction(const LoopFamily& family, double c)
{
    if (!(c > 0.0))
        throw ArgumentError("conjugate_by_contraction: c must be positive");
    const double r = std::sqrt(c);
    LoopFamily out = family;
    for (Eigen::Index t = 0; t < family.num_times(); ++t) {
        out.points[t] *= r;
        out.tangents[t] *= r;
        out.velocities[t] *= r;
    }
    return out;
}

SampledIsotopy legendrian_isotopy(const LoopFamily& family, double tol)
{
    family.validate();
    const Eigen::Index nt = family.num_times(), nx = family.params.size();
    const Eigen::VectorXd& x = family.params;
    Eigen::VectorXd xc(nx + 1);
    xc << x, x[0] + 1.0;

    IsotopyData d;
    d.space = ModelSpace::contactization();
    d.grid = family.grid;
    d.params = x;
    d.closed = true;
    d.legendrian_tol = tol;
    std::vector<Points3> tan(nt, Points3(nx, 3));
    double area0 = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        const Points2& j = family.points[t];
        const Points2& jx = family.tangents[t];
        Eigen::VectorXd lam(nx + 1);
        for (Eigen::Index i = 0; i <= nx; ++i) {
            const Eigen::Index k = i % nx;
            lam[i] = 0.5 * (j(k, 0) * jx(k, 1) - j(k, 1) * jx(k, 0));
        }
        const Eigen::VectorXd f = cumulative_integral(lam, xc);
        if (t == 0)
            area0 = f[nx];
        Points3 p(nx, 3);
        p.col(0) = f.head(nx);
        p.rightCols<2>() = j;
        tan[t].col(0) = lam.head(nx);
        tan[t].rightCols<2>() = jx;
        d.points.push_back(std::move(p));
    }
    d.period_shift = Point3(area0, 0.0, 0.0);
    d.tangents = std::move(tan);
    return SampledIsotopy(std::move(d));
}

double legendrian_osc_energy(const LoopFamily& family)
{
    return energy_of(contact_hamiltonian(legendrian_isotopy(family))).oscillation;
}

}  // namespace leglab
