#include "leglab/numerics.hpp"
#include "leglab/parallel.hpp"
#include "leglab/planar.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace leglab {

namespace {

struct Segment {
    double length;
    double theta0, theta1;
    int kind;  // 0 plain, 1 counter-clockwise curl, 2 clockwise curl, 3 speed ramp up, 4 ramp down
};

constexpr double kRise = M_PI / 3.0;

// Finger: rise, hold, come back, clockwise curl, counter-clockwise curl, then the mirror
// image of the finger. The curl speed ramps on the straight pieces next to the
// counter-clockwise curl, where the direction is constant. All boundaries lie on
// multiples of 0.05.
const Segment kSegments[] = {
    {0.5, 0.0, kRise, 0},
    {0.25, kRise, kRise, 0},
    {0.5, kRise, 0.0, 0},
    {0.1, 0.0, 0.0, 0},
    {0.35, 0.0, -M_PI, 2},
    {0.35, -M_PI, -2.0 * M_PI, 2},
    {0.1, -2.0 * M_PI, -2.0 * M_PI, 3},
    {1.1, -2.0 * M_PI, -M_PI, 1},
    {1.1, -M_PI, 0.0, 1},
    {0.1, 0.0, 0.0, 4},
    {0.5, 0.0, -kRise, 0},
    {0.25, -kRise, -kRise, 0},
    {0.5, -kRise, 0.0, 0},
};
constexpr double kStep = 0.05;

// Tangent angle and curl weight at arc parameter s.
std::pair<double, double> profile(double s)
{
    double a = 0.0;
    for (const Segment& g : kSegments) {
        if (s <= a + g.length || &g == &kSegments[std::size(kSegments) - 1]) {
            const double u = (s - a) / g.length;
            const double th = g.theta0 + (g.theta1 - g.theta0) * num::smoothstep(u);
            double b = 0.0;
            if (g.kind == 1)
                b = 1.0;
            else if (g.kind == 3)
                b = num::smoothstep(u);
            else if (g.kind == 4)
                b = 1.0 - num::smoothstep(u);
            return {th, b};
        }
        a += g.length;
    }
    return {0.0, 0.0};
}

const double kGauss[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
const double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

double sinc(double z)
{
    return std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
}

}  // namespace

namespace fig {

Template::Template(Eigen::Index refine)
{
    if (refine < 1)
        throw ArgumentError("fig::Template: refine must be >= 1");
    S_ = 0.0;
    for (const Segment& g : kSegments) {
        if (g.kind == 1 && ccw_.second == 0.0)
            ccw_ = {S_, S_ + 2.2};
        if (g.kind == 2 && cw_.second == 0.0)
            cw_ = {S_, S_ + 0.7};
        S_ += g.length;
    }
    n_ = Eigen::Index(std::lround(S_ / kStep)) * refine;
    const double h = S_ / double(n_);
    theta_.resize(n_ + 1);
    b_.resize(n_ + 1);
    w_.resize(n_ + 1);
    gtheta_.resize(n_, 3);
    gb_.resize(n_, 3);
    gw_.resize(n_, 3);
    auto weight = [&](double s) { return 2.0 * std::pow(std::sin(M_PI * s / S_), 2); };
    for (Eigen::Index k = 0; k <= n_; ++k) {
        const double s = h * double(k);
        std::tie(theta_[k], b_[k]) = profile(s);
        w_[k] = weight(s);
        if (k == n_)
            break;
        for (int j = 0; j < 3; ++j) {
            const double sg = s + h * kGauss[j];
            std::tie(gtheta_(k, j), gb_(k, j)) = profile(sg);
            gw_(k, j) = weight(sg);
        }
    }
}

Template::Curve Template::evaluate(double tau, double mu, bool points) const
{
    if (!(mu > 0.0))
        throw ArgumentError("fig::Template: curl speed must be positive");
    const double h = S_ / double(n_);
    auto speed = [&](double b) { return 1.0 + (mu - 1.0) * b; };

    // V / tau is built from Theta sinc(tau Theta), so tau = 0 gives the linearization.
    Eigen::MatrixXd gg(n_, 3), gu(n_, 3);
    Eigen::VectorXd Ig(n_), Iu(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
        Ig[k] = Iu[k] = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double sp = speed(gb_(k, j)), th = gtheta_(k, j);
            gg(k, j) = sp * th * sinc(tau * th);
            gu(k, j) = sp * std::cos(tau * th);
            Ig[k] += h * kGaussW[j] * gg(k, j);
            Iu[k] += h * kGaussW[j] * gu(k, j);
        }
    }
    const double D = Ig.sum() / S_;
    auto Wc = [&](double s) { return s - S_ / (2.0 * M_PI) * std::sin(2.0 * M_PI * s / S_); };

    Eigen::VectorXd V(n_ + 1), Vs(n_ + 1), U(n_ + 1), Us(n_ + 1);
    double cg = 0.0, cu = 0.0;
    for (Eigen::Index k = 0; k <= n_; ++k) {
        const double s = h * double(k);
        if (k > 0) {
            cg += Ig[k - 1];
            cu += Iu[k - 1];
        }
        const double sp = speed(b_[k]), th = theta_[k];
        V[k] = cg - D * Wc(s);
        Vs[k] = sp * th * sinc(tau * th) - D * w_[k];
        U[k] = cu;
        Us[k] = sp * std::cos(tau * th);
    }
    V[n_] = 0.0;

    // G = -int V dU with V Hermite-interpolated between nodes.
    double G = 0.0;
    for (Eigen::Index k = 0; k < n_; ++k)
        for (int j = 0; j < 3; ++j) {
            const double u = kGauss[j], u2 = u * u, u3 = u2 * u;
            const double v = (2 * u3 - 3 * u2 + 1) * V[k] + (u3 - 2 * u2 + u) * h * Vs[k] +
                             (-2 * u3 + 3 * u2) * V[k + 1] + (u3 - u2) * h * Vs[k + 1];
            G -= h * kGaussW[j] * v * gu(k, j);
        }

    Curve c;
    c.G = G;
    if (points) {
        c.U = std::move(U);
        c.Us = std::move(Us);
        c.V = tau * V;
        c.Vs = tau * Vs;
    }
    return c;
}

double Template::solve_mu(double tau, double target) const
{
    constexpr double lo = 0.05, hi = 10.0;
    auto f = [&](double mu) { return evaluate(tau, mu, false).G - target; };
    const double flo = f(lo), fhi = f(hi);
    if (flo * fhi > 0.0) {
        std::ostringstream os;
        os << "fig::Template: no curl speed in [" << lo << ", " << hi << "] gives scaled area " << target
           << " at tau " << tau;
        throw ExactnessError(os.str(), std::min(std::abs(flo), std::abs(fhi)));
    }
    return num::bracketed_root(f, lo, hi, flo, fhi, 50);
}

}  // namespace fig

DeformationSchedule DeformationSchedule::standard(double c, Eigen::Index nt, double gain)
{
    if (!(c > 0.0))
        throw ArgumentError("DeformationSchedule: c must be positive");
    DeformationSchedule s;
    s.grid = TimeGrid::uniform(nt);
    s.c = c;
    const double split = s.stage_split;
    s.tau = [split](double t) { return num::smoothstep(t / split); };
    auto grow = [split, gain](double t) { return gain * num::smoothstep((t - split) / (1.0 - split)); };
    s.gain = grow;
    s.shift = grow;
    return s;
}

DeformationSchedule DeformationSchedule::frozen(double c, Eigen::Index nt)
{
    DeformationSchedule s;
    s.grid = TimeGrid::uniform(nt);
    s.c = c;
    s.tau = [](double) { return 0.0; };
    s.gain = [](double) { return 0.0; };
    s.shift = [](double) { return 0.0; };
    return s;
}

namespace {

constexpr double kTemplateSpan = 0.5;  // template occupies x in [0, 0.5)

struct Snapshot {
    Points2 J, Jx;
    Points2 template_uv;  // (U, V) in template units
    double mu = 0.0;
};

class Builder {
public:
    Builder(const DeformationSchedule& sched, const FigOptions& opt)
        : sched_(sched), tpl_(opt.template_refine), nl_(opt.line_samples)
    {
        if (!(sched.c > 0.0))
            throw ArgumentError("fig_deformation_family: c must be positive");
        if (nl_ < 8)
            throw ArgumentError("fig_deformation_family: need >= 8 line samples");
        nt_ = tpl_.intervals();
        params_.resize(nt_ + nl_);
        for (Eigen::Index k = 0; k < nt_; ++k)
            params_[k] = kTemplateSpan * double(k) / double(nt_);
        for (Eigen::Index k = 0; k < nl_; ++k)
            params_[nt_ + k] = kTemplateSpan + (1.0 - kTemplateSpan) * double(k) / double(nl_);
    }

    const Eigen::VectorXd& params() const { return params_; }

    Snapshot build(double t) const
    {
        const double tau = sched_.tau(t), gain = sched_.gain(t), shift = sched_.shift(t);
        if (std::abs(gain - shift) > 1e-12) {
            std::ostringstream os;
            os << "fig_deformation_family: curl gain " << gain << " and inward shift " << shift
               << " differ at t = " << t << ", area is not preserved";
            throw ExactnessError(os.str(), sched_.c * std::abs(gain - shift));
        }
        if (tau <= 0.0 && gain > 0.0)
            throw ExactnessError("fig_deformation_family: curl gain before the finger move exists", gain);
        Snapshot snap;
        snap.mu = tpl_.solve_mu(tau, tau > 0.0 ? gain / tau : 0.0);
        const auto cur = tpl_.evaluate(tau, snap.mu);

        const double rho0 = 1.0 / std::sqrt(M_PI), P = 2.0 * M_PI * rho0;
        const double sc = std::sqrt(sched_.c), S = tpl_.length();
        const double d = sched_.c * shift / P;
        const Eigen::Index n = nt_ + nl_;
        Eigen::VectorXd u(n), v(n), ux(n), vx(n);
        const double dsdx = S / kTemplateSpan;
        for (Eigen::Index k = 0; k < nt_; ++k) {
            u[k] = sc * cur.U[k];
            v[k] = sc * cur.V[k] + d;
            ux[k] = sc * cur.Us[k] * dsdx;
            vx[k] = sc * cur.Vs[k] * dsdx;
        }
        const double ua = sc * cur.U[nt_], V0 = sc * dsdx, LT = 1.0 - kTemplateSpan;
        const double rest = P - ua - V0 * LT;
        if (!(rest > 0.0))
            throw DomainError("fig_deformation_family: template too large for the circle, reduce c");
        for (Eigen::Index k = 0; k < nl_; ++k) {
            const double y = double(k) / double(nl_);
            u[nt_ + k] = ua + V0 * LT * y + rest * num::smoothstep(y);
            ux[nt_ + k] = V0 + rest * num::smoothstep_d(y) / LT;
            v[nt_ + k] = d;
            vx[nt_ + k] = 0.0;
        }
        snap.J.resize(n, 2);
        snap.Jx.resize(n, 2);
        const std::complex<double> I(0.0, 1.0);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double r2 = rho0 * rho0 - 2.0 * rho0 * v[k];
            if (!(r2 > 0.0))
                throw DomainError("fig_deformation_family: loop reaches the origin, reduce c");
            const double r = std::sqrt(r2);
            const std::complex<double> z = r * std::exp(I * (u[k] / rho0));
            const std::complex<double> dz = I / rho0 * z * ux[k] - rho0 / r2 * z * vx[k];
            snap.J.row(k) << z.real(), z.imag();
            snap.Jx.row(k) << dz.real(), dz.imag();
        }
        snap.template_uv.resize(nt_ + 1, 2);
        snap.template_uv.col(0) = cur.U;
        snap.template_uv.col(1) = cur.V;
        return snap;
    }

private:
    const DeformationSchedule& sched_;
    fig::Template tpl_;
    Eigen::Index nl_, nt_ = 0;
    Eigen::VectorXd params_;
};

int rightmost_crossing_sign(const Points2& uv)
{
    const auto cr = polyline_crossings(uv);
    const Crossing* best = nullptr;
    for (const auto& c : cr)
        if (c.transverse && (!best || c.point.x() > best->point.x()))
            best = &c;
    return best ? best->sign : 0;
}

}  // namespace

FigFamily fig_deformation_family(const DeformationSchedule& schedule, const FigOptions& opt)
{
    const Builder builder(schedule, opt);
    const Eigen::Index nt = schedule.grid.size();
    constexpr double dt = 1e-5;

    FigFamily out;
    out.schedule = schedule;
    out.family.grid = schedule.grid;
    out.family.params = builder.params();
    out.family.points.resize(std::size_t(nt));
    out.family.tangents.resize(std::size_t(nt));
    out.family.velocities.resize(std::size_t(nt));
    out.mu.resize(nt);
    out.area.resize(nt);
    out.bookkeeping.resize(std::size_t(nt));
    out.rightmost_sign.assign(std::size_t(nt), 0);

    const int jobs = opt.jobs > 0 ? opt.jobs : default_jobs();
    parallel_for(long(nt), jobs, [&](long k) {
        const double t = schedule.grid[k];
        Snapshot snap = builder.build(t);
        // Velocity of the whole construction, curl speed re-solved at each side.
        const Snapshot plus = builder.build(t + dt), minus = builder.build(t - dt);
        out.family.velocities[std::size_t(k)] = (plus.J - minus.J) / (2.0 * dt);
        out.mu[k] = snap.mu;
        if (t <= schedule.stage_split + 1e-12)
            out.rightmost_sign[std::size_t(k)] = rightmost_crossing_sign(snap.template_uv);
        out.family.points[std::size_t(k)] = std::move(snap.J);
        out.family.tangents[std::size_t(k)] = std::move(snap.Jx);
        const ImmersedLoop loop = out.family.loop(k);
        out.area[k] = signed_area(loop);
        if (opt.bookkeeping) {
            const auto w = winding_areas(loop);
            auto get = [&](int key) {
                const auto it = w.find(key);
                return it == w.end() ? 0.0 : it->second;
            };
            auto& b = out.bookkeeping[std::size_t(k)];
            b.A1 = get(1);
            b.A2 = get(-1);
            b.A3 = get(2);
            b.total = out.area[k];
        }
    });
    for (Eigen::Index k = 0; k < nt; ++k)
        if (std::abs(out.area[k] - out.area[0]) > opt.area_tol) {
            std::ostringstream os;
            os << "fig_deformation_family: area drifts by " << out.area[k] - out.area[0] << " at t = "
               << schedule.grid[k];
            throw ExactnessError(os.str(), std::abs(out.area[k] - out.area[0]));
        }

    const LagrangianPrimitive prim = lagrangian_primitive(out.family);
    out.energy = lagrangian_osc_energy(prim, schedule.grid);
    auto stage = [&](bool first) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index k = 0; k < nt; ++k) {
            const double t = schedule.grid[k];
            if (first ? t <= schedule.stage_split + 1e-12 : t >= schedule.stage_split - 1e-12)
                rows.push_back(k);
        }
        if (rows.size() < 2)
            return 0.0;
        LagrangianPrimitive sub;
        sub.F.resize(Eigen::Index(rows.size()), prim.F.cols());
        Eigen::VectorXd nodes(Eigen::Index(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sub.F.row(Eigen::Index(i)) = prim.F.row(rows[i]);
            nodes[Eigen::Index(i)] = schedule.grid[rows[i]];
        }
        return lagrangian_osc_energy(sub, TimeGrid(nodes));
    };
    out.stage1_energy = stage(true);
    out.stage2_energy = stage(false);
    return out;
}

}  // namespace leglab
