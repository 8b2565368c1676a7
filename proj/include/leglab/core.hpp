#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace leglab {

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Point3 = Eigen::Vector3d;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Strictly increasing nodes with trapezoid weights.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(Eigen::VectorXd nodes);

    static TimeGrid uniform(Eigen::Index n, double a = 0.0, double b = 1.0);

    Eigen::Index size() const { return nodes_.size(); }
    const Eigen::VectorXd& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double operator[](Eigen::Index i) const { return nodes_[i]; }
    double front() const { return nodes_[0]; }
    double back() const { return nodes_[nodes_.size() - 1]; }

private:
    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
};

enum class Quadrature { Trapezoid, Simpson };

namespace detail {

// Integral over [x0, x2] of the quadratic through three samples.
template <typename Scalar>
Scalar simpson_pair(Scalar x0, Scalar x1, Scalar x2, Scalar f0, Scalar f1, Scalar f2)
{
    const Scalar h0 = x1 - x0;
    const Scalar h1 = x2 - x1;
    const Scalar H = h0 + h1;
    return H / 6 * ((2 - h1 / h0) * f0 + H * H / (h0 * h1) * f1 + (2 - h0 / h1) * f2);
}

// Integral over [x1, x2] of the quadratic through three samples.
template <typename Scalar>
Scalar quadratic_tail(Scalar x0, Scalar x1, Scalar x2, Scalar f0, Scalar f1, Scalar f2)
{
    const Scalar h0 = x1 - x0;
    const Scalar h1 = x2 - x1;
    const Scalar c0 = -h1 * h1 * h1 / (6 * h0 * (h0 + h1));
    const Scalar c1 = h1 * (h1 + 3 * h0) / (6 * h0);
    const Scalar c2 = h1 * (2 * h1 + 3 * h0) / (6 * (h0 + h1));
    return c0 * f0 + c1 * f1 + c2 * f2;
}

}  // namespace detail

template <typename Derived>
typename Derived::Scalar integrate_1d(const Eigen::MatrixBase<Derived>& samples,
                                      const TimeGrid& grid,
                                      Quadrature rule = Quadrature::Trapezoid)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = grid.size();
    if (samples.size() != n)
        throw ArgumentError("integrate_1d: " + std::to_string(samples.size()) +
                            " samples for a grid of " + std::to_string(n) + " nodes");
    const auto& x = grid.nodes();
    if (rule == Quadrature::Trapezoid || n < 3) {
        Scalar acc(0);
        for (Eigen::Index i = 0; i < n; ++i)
            acc += Scalar(grid.weights()[i]) * samples(i);
        return acc;
    }
    Scalar acc(0);
    Eigen::Index i = 0;
    for (; i + 2 < n; i += 2)
        acc += detail::simpson_pair<Scalar>(x[i], x[i + 1], x[i + 2], samples(i), samples(i + 1),
                                            samples(i + 2));
    if (i + 1 < n)
        acc += detail::quadratic_tail<Scalar>(x[i - 1], x[i], x[i + 1], samples(i - 1),
                                              samples(i), samples(i + 1));
    return acc;
}

// Running trapezoid integral, starting at 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
cumulative_integral(const Eigen::MatrixBase<Derived>& f, const Eigen::VectorXd& x)
{
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.size());
    if (x.size() == 0)
        return out;
    out(0) = Scalar(0);
    for (Eigen::Index i = 1; i < x.size(); ++i)
        out(i) = out(i - 1) + Scalar(0.5 * (x[i] - x[i - 1])) * (f(i) + f(i - 1));
    return out;
}

// Rows are samples along the grid; returns d/dt row-wise.
// Three-point Lagrange stencils, second order at both ends.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>
differentiate_path(const Eigen::MatrixBase<Derived>& points, const TimeGrid& grid)
{
    using Out = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>;
    const Eigen::Index n = grid.size();
    if (n < 3)
        throw ArgumentError("differentiate_path: need at least 3 nodes, got " + std::to_string(n));
    if (points.rows() != n)
        throw ArgumentError("differentiate_path: row count does not match grid");
    const auto& t = grid.nodes();
    Out d(n, points.cols());
    auto stencil = [&](Eigen::Index i0, Eigen::Index at) {
        const double a = t[i0], b = t[i0 + 1], c = t[i0 + 2], s = t[at];
        const double w0 = ((s - b) + (s - c)) / ((a - b) * (a - c));
        const double w2 = ((s - a) + (s - b)) / ((c - a) * (c - b));
        // The weights sum to zero; differences keep constant paths exactly still.
        d.row(at) = w0 * (points.row(i0) - points.row(i0 + 1)) + w2 * (points.row(i0 + 2) - points.row(i0 + 1));
    };
    stencil(0, 0);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        stencil(i - 1, i);
    stencil(n - 3, n - 1);
    return d;
}

enum class SpaceKind {
    Jet1,                      // (q, p, z), dz - p dq
    Contactization,            // (t, x, y), dt - (x dy - y dx)/2
    ProductPlane,              // (theta0, x, y), dtheta0 - (x dy - y dx)/2
    ProductCylinder,           // (theta0, s, theta), dtheta0 - e^s dtheta
    SymplectizationRectangle,  // (s, t, -), primitive e^s dt
};

enum class BaseKind { Circle, Interval, Line };

class ModelSpace {
public:
    explicit ModelSpace(SpaceKind kind, BaseKind base = BaseKind::Line) : kind_(kind), base_(base) {}

    static ModelSpace jet1(BaseKind base) { return ModelSpace(SpaceKind::Jet1, base); }
    static ModelSpace contactization() { return ModelSpace(SpaceKind::Contactization, BaseKind::Circle); }

    SpaceKind kind() const { return kind_; }
    BaseKind base() const { return base_; }
    std::string name() const;

    // The form as a covector at p (for the rectangle: the Liouville primitive e^s dt).
    Eigen::RowVector3d form(const Point3& p) const;
    double form(const Point3& p, const Eigen::Vector3d& v) const { return form(p).dot(v); }
    // Exterior derivative as an antisymmetric matrix: d(form)(u, v) = u^T M v.
    Eigen::Matrix3d dform(const Point3& p) const;
    // Reeb field; for the rectangle the Liouville field d/ds.
    Eigen::Vector3d reeb(const Point3& p) const;

    bool is_contact() const { return kind_ != SpaceKind::SymplectizationRectangle; }

    // Residuals of the defining identities of reeb(p): for contact kinds
    // |form(R) - 1| + |R ⌟ dform|, for the rectangle |R ⌟ dform - form|.
    double reeb_defect(const Point3& p) const;

private:
    SpaceKind kind_;
    BaseKind base_;
};

struct JetPoint {
    double q = 0.0;
    double p = 0.0;
    double z = 0.0;

    Point3 coords() const { return {q, p, z}; }
};

// Reduce a circle coordinate to [0, 1).
double reduce_mod1(double q);
JetPoint make_jet_point(double q, double p, double z, BaseKind base);

enum class VelocitySource { Supplied, FiniteDifference };

struct IsotopyData {
    ModelSpace space{SpaceKind::Jet1};
    TimeGrid grid;
    Eigen::VectorXd params;            // parameter samples x
    bool closed = false;               // periodic parameter of period 1
    Point3 period_shift = Point3::Zero();  // i(x + 1) = i(x) + period_shift
    std::vector<Points3> points;       // points[t](x, :)
    std::optional<std::vector<Points3>> velocities;
    std::optional<std::vector<Points3>> tangents;  // d/dx, supplied when known
    double legendrian_tol = 1e-8;
};

class SampledIsotopy {
public:
    // Validates the data; throws ArgumentError with the worst sample on failure.
    explicit SampledIsotopy(IsotopyData data);

    const ModelSpace& space() const { return d_.space; }
    const TimeGrid& grid() const { return d_.grid; }
    const Eigen::VectorXd& params() const { return d_.params; }
    bool closed() const { return d_.closed; }
    const Point3& period_shift() const { return d_.period_shift; }
    Eigen::Index num_times() const { return d_.grid.size(); }
    Eigen::Index num_params() const { return d_.params.size(); }
    const Points3& points(Eigen::Index t) const { return d_.points[t]; }
    const Points3& velocities(Eigen::Index t) const { return velocities_[t]; }
    const Points3& tangents(Eigen::Index t) const { return tangents_[t]; }
    VelocitySource velocity_source() const { return source_; }
    double legendrian_tol() const { return d_.legendrian_tol; }
    double legendrian_defect() const { return defect_; }
    const IsotopyData& data() const { return d_; }

private:
    IsotopyData d_;
    std::vector<Points3> velocities_;
    std::vector<Points3> tangents_;
    VelocitySource source_ = VelocitySource::Supplied;
    double defect_ = 0.0;
};

// d/dx of sampled points along the parameter, periodic when closed.
Points3 parameter_derivative(const Points3& pts, const Eigen::VectorXd& x, bool closed,
                             const Point3& period_shift);

}  // namespace leglab
