#include "leglab/core.hpp"

#include <cmath>
#include <sstream>

namespace leglab {

TimeGrid::TimeGrid(Eigen::VectorXd nodes) : nodes_(std::move(nodes))
{
    const Eigen::Index n = nodes_.size();
    if (n < 1)
        throw ArgumentError("TimeGrid: empty node list");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(nodes_[i]))
            throw ArgumentError("TimeGrid: non-finite node");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(nodes_[i] > nodes_[i - 1]))
            throw ArgumentError("TimeGrid: nodes must be strictly increasing (index " +
                                std::to_string(i) + ")");
    weights_ = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = nodes_[i + 1] - nodes_[i];
        weights_[i] += 0.5 * h;
        weights_[i + 1] += 0.5 * h;
    }
}

TimeGrid TimeGrid::uniform(Eigen::Index n, double a, double b)
{
    if (n < 2)
        throw ArgumentError("TimeGrid::uniform: need at least 2 nodes");
    return TimeGrid(Eigen::VectorXd::LinSpaced(n, a, b));
}

std::string ModelSpace::name() const
{
    switch (kind_) {
    case SpaceKind::Jet1:
        return base_ == BaseKind::Circle ? "jet1-circle"
               : base_ == BaseKind::Interval ? "jet1-interval"
                                             : "jet1-line";
    case SpaceKind::Contactization: return "contactization";
    case SpaceKind::ProductPlane: return "product-plane";
    case SpaceKind::ProductCylinder: return "product-cylinder";
    case SpaceKind::SymplectizationRectangle: return "symplectization-rectangle";
    }
    return "unknown";
}

Eigen::RowVector3d ModelSpace::form(const Point3& p) const
{
    switch (kind_) {
    case SpaceKind::Jet1:
        return {-p[1], 0.0, 1.0};
    case SpaceKind::Contactization:
    case SpaceKind::ProductPlane:
        return {1.0, 0.5 * p[2], -0.5 * p[1]};
    case SpaceKind::ProductCylinder:
        return {1.0, 0.0, -std::exp(p[1])};
    case SpaceKind::SymplectizationRectangle:
        return {0.0, std::exp(p[0]), 0.0};
    }
    return Eigen::RowVector3d::Zero();
}

Eigen::Matrix3d ModelSpace::dform(const Point3& p) const
{
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    auto wedge = [&m](int i, int j, double c) {
        m(i, j) += c;
        m(j, i) -= c;
    };
    switch (kind_) {
    case SpaceKind::Jet1:
        wedge(0, 1, 1.0);  // dq ^ dp
        break;
    case SpaceKind::Contactization:
    case SpaceKind::ProductPlane:
        wedge(1, 2, -1.0);  // -dx ^ dy
        break;
    case SpaceKind::ProductCylinder:
        wedge(1, 2, -std::exp(p[1]));  // -e^s ds ^ dtheta
        break;
    case SpaceKind::SymplectizationRectangle:
        wedge(0, 1, std::exp(p[0]));  // e^s ds ^ dt
        break;
    }
    return m;
}

Eigen::Vector3d ModelSpace::reeb(const Point3& p) const
{
    (void)p;
    switch (kind_) {
    case SpaceKind::Jet1:
        return {0.0, 0.0, 1.0};
    case SpaceKind::Contactization:
    case SpaceKind::ProductPlane:
    case SpaceKind::ProductCylinder:
        return {1.0, 0.0, 0.0};
    case SpaceKind::SymplectizationRectangle:
        return {1.0, 0.0, 0.0};
    }
    return Eigen::Vector3d::Zero();
}

double ModelSpace::reeb_defect(const Point3& p) const
{
    const Eigen::Vector3d r = reeb(p);
    const Eigen::RowVector3d contraction = r.transpose() * dform(p);
    if (is_contact())
        return std::abs(form(p, r) - 1.0) + contraction.cwiseAbs().sum();
    return (contraction - form(p)).cwiseAbs().sum();
}

double reduce_mod1(double q)
{
    double r = q - std::floor(q);
    return r >= 1.0 ? 0.0 : r;
}

JetPoint make_jet_point(double q, double p, double z, BaseKind base)
{
    if (!std::isfinite(q) || !std::isfinite(p) || !std::isfinite(z))
        throw ArgumentError("JetPoint: non-finite coordinate");
    return {base == BaseKind::Circle ? reduce_mod1(q) : q, p, z};
}

Points3 parameter_derivative(const Points3& pts, const Eigen::VectorXd& x, bool closed,
                             const Point3& period_shift)
{
    const Eigen::Index n = x.size();
    if (pts.rows() != n || n < 3)
        throw ArgumentError("parameter_derivative: need >= 3 samples matching the grid");
    Points3 d(n, 3);
    auto lagrange = [](double a, double b, double c, double s, const Eigen::RowVector3d& pa,
                       const Eigen::RowVector3d& pb, const Eigen::RowVector3d& pc) {
        const double w0 = ((s - b) + (s - c)) / ((a - b) * (a - c));
        const double w1 = ((s - a) + (s - c)) / ((b - a) * (b - c));
        const double w2 = ((s - a) + (s - b)) / ((c - a) * (c - b));
        return Eigen::RowVector3d(w0 * pa + w1 * pb + w2 * pc);
    };
    if (closed) {
        const Eigen::RowVector3d shift = period_shift.transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index im = (i + n - 1) % n, ip = (i + 1) % n;
            const double xm = i == 0 ? x[im] - 1.0 : x[im];
            const double xp = i == n - 1 ? x[ip] + 1.0 : x[ip];
            const Eigen::RowVector3d pm = i == 0 ? Eigen::RowVector3d(pts.row(im) - shift)
                                                 : Eigen::RowVector3d(pts.row(im));
            const Eigen::RowVector3d pp = i == n - 1 ? Eigen::RowVector3d(pts.row(ip) + shift)
                                                     : Eigen::RowVector3d(pts.row(ip));
            d.row(i) = lagrange(xm, x[i], xp, x[i], pm, pts.row(i), pp);
        }
        return d;
    }
    d.row(0) = lagrange(x[0], x[1], x[2], x[0], pts.row(0), pts.row(1), pts.row(2));
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        d.row(i) = lagrange(x[i - 1], x[i], x[i + 1], x[i], pts.row(i - 1), pts.row(i), pts.row(i + 1));
    d.row(n - 1) = lagrange(x[n - 3], x[n - 2], x[n - 1], x[n - 1], pts.row(n - 3), pts.row(n - 2),
                            pts.row(n - 1));
    return d;
}

SampledIsotopy::SampledIsotopy(IsotopyData data) : d_(std::move(data))
{
    const Eigen::Index nt = d_.grid.size();
    const Eigen::Index nx = d_.params.size();
    if (nt < 2)
        throw ArgumentError("SampledIsotopy: time grid needs >= 2 nodes");
    if (nx < 8)
        throw ArgumentError("SampledIsotopy: parameter grid needs >= 8 samples, got " +
                            std::to_string(nx));
    if (static_cast<Eigen::Index>(d_.points.size()) != nt)
        throw ArgumentError("SampledIsotopy: points do not match the time grid");
    for (const auto& p : d_.points)
        if (p.rows() != nx)
            throw ArgumentError("SampledIsotopy: point slice does not match the parameter grid");
    if (!d_.space.is_contact())
        throw ArgumentError("SampledIsotopy: " + d_.space.name() + " is not a contact model");

    if (d_.tangents) {
        if (static_cast<Eigen::Index>(d_.tangents->size()) != nt)
            throw ArgumentError("SampledIsotopy: tangents do not match the time grid");
        tangents_ = *d_.tangents;
    } else {
        tangents_.reserve(nt);
        for (const auto& p : d_.points)
            tangents_.push_back(parameter_derivative(p, d_.params, d_.closed, d_.period_shift));
    }

    if (d_.velocities) {
        if (static_cast<Eigen::Index>(d_.velocities->size()) != nt)
            throw ArgumentError("SampledIsotopy: velocities do not match the time grid");
        velocities_ = *d_.velocities;
        source_ = VelocitySource::Supplied;
    } else {
        if (nt < 3)
            throw ComputationError("SampledIsotopy: no velocities and fewer than 3 time nodes");
        source_ = VelocitySource::FiniteDifference;
        velocities_.assign(nt, Points3(nx, 3));
        Points3 path(nt, 3);
        for (Eigen::Index j = 0; j < nx; ++j) {
            for (Eigen::Index t = 0; t < nt; ++t)
                path.row(t) = d_.points[t].row(j);
            const Points3 v = differentiate_path(path, d_.grid);
            for (Eigen::Index t = 0; t < nt; ++t)
                velocities_[t].row(j) = v.row(t);
        }
    }

    Eigen::Index worst_t = 0, worst_x = 0;
    for (Eigen::Index t = 0; t < nt; ++t)
        for (Eigen::Index j = 0; j < nx; ++j) {
            const Point3 p = d_.points[t].row(j).transpose();
            const double r = std::abs(d_.space.form(p, tangents_[t].row(j).transpose()));
            if (!std::isfinite(r))
                throw ArgumentError("SampledIsotopy: non-finite sample");
            if (r > defect_) {
                defect_ = r;
                worst_t = t;
                worst_x = j;
            }
        }
    if (defect_ > d_.legendrian_tol) {
        std::ostringstream os;
        os << "SampledIsotopy: Legendrian condition violated, |alpha(di/dx)| = " << defect_
           << " at t-index " << worst_t << ", x-index " << worst_x << " (tolerance "
           << d_.legendrian_tol << ")";
        throw ArgumentError(os.str());
    }
}

}  // namespace leglab
