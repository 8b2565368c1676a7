#pragma once

#include "leglab/core.hpp"
#include "leglab/energy.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace leglab {

struct FiberAxis {
    double lo = -1.0;
    double hi = 1.0;
    Eigen::Index n = 2;

    double step() const { return (hi - lo) / double(n - 1); }
    double at(Eigen::Index i) const { return lo + step() * double(i); }
};

enum class TailKind { Linear, Quadratic };

// Linear: l(eta) = c . eta. Quadratic: Q(eta) = sum_i c_i eta_i^2.
struct Tail {
    TailKind kind = TailKind::Linear;
    Eigen::Vector2d coeff = Eigen::Vector2d(1.0, 0.0);

    double operator()(const Eigen::Vector2d& eta, int dim) const;
};

// K(t, x, eta); eta(1) is ignored for one-dimensional fibers.
using FieldFn = std::function<double(double t, double x, const Eigen::Vector2d& eta)>;

struct FamilyGrid {
    TimeGrid time;
    BaseKind base = BaseKind::Circle;
    Eigen::VectorXd xs;  // circle: samples of [0, 1)
    std::vector<FiberAxis> fiber;
    Tail tail;
    double R = 10.0;
};

class GeneratingFunctionFamily {
public:
    static GeneratingFunctionFamily from_function(FamilyGrid grid, FieldFn K,
                                                  std::optional<FieldFn> dKdt = std::nullopt,
                                                  double tail_tol = 1e-9);
    // values[t] flattened as ((ix * n1) + i1) * n2 + i2.
    static GeneratingFunctionFamily from_samples(FamilyGrid grid, std::vector<Eigen::VectorXd> values,
                                                 double tail_tol = 1e-9);

    const FamilyGrid& grid() const { return g_; }
    const TimeGrid& time() const { return g_.time; }
    const Eigen::VectorXd& xs() const { return g_.xs; }
    int fiber_dim() const { return int(g_.fiber.size()); }
    Eigen::Index n1() const { return g_.fiber[0].n; }
    Eigen::Index n2() const { return fiber_dim() > 1 ? g_.fiber[1].n : 1; }
    bool circle() const { return g_.base == BaseKind::Circle; }
    bool analytic() const { return bool(K_); }

    Eigen::Index flat(Eigen::Index ix, Eigen::Index i1, Eigen::Index i2 = 0) const
    {
        return (ix * n1() + i1) * n2() + i2;
    }
    const Eigen::VectorXd& values(Eigen::Index t) const { return values_[t]; }
    double sample(Eigen::Index t, Eigen::Index ix, Eigen::Index i1, Eigen::Index i2 = 0) const
    {
        return values_[t][flat(ix, i1, i2)];
    }
    Eigen::Vector2d fiber_point(Eigen::Index i1, Eigen::Index i2 = 0) const;

    // Closed form when available, otherwise a C1 cubic interpolant of the samples.
    double eval(Eigen::Index t, double x, const Eigen::Vector2d& eta) const;
    // dK/dt: supplied, differenced from the closed form, or differenced in time on the grid.
    double eval_dt(Eigen::Index t, double x, const Eigen::Vector2d& eta) const;
    // Largest |K - tail - c(t, x)| over the outer fiber shell.
    double tail_defect() const { return tail_defect_; }

private:
    FamilyGrid g_;
    std::vector<Eigen::VectorXd> values_;
    FieldFn K_;
    std::optional<FieldFn> dKdt_;
    double tail_defect_ = 0.0;

    void check(double tail_tol);
    double interpolate(Eigen::Index t, double x, const Eigen::Vector2d& eta) const;
};

struct CriticalPoint {
    Eigen::Index t_index = 0;
    double t = 0.0;
    double x = 0.0;
    Eigen::Index x_index = -1;  // base sample for fiberwise points, -1 when refined in x
    Eigen::Vector2d eta = Eigen::Vector2d::Zero();
    double value = 0.0;
    double dt_value = 0.0;
    double grad_norm = 0.0;
    int index = -1;  // Morse index when computable
    bool degenerate = false;
};

// Fiber critical points at every base sample of time slice t.
std::vector<CriticalPoint> fiberwise_critical_set(const GeneratingFunctionFamily& K, Eigen::Index t);
std::vector<JetPoint> generated_legendrian(const GeneratingFunctionFamily& K, Eigen::Index t);
std::vector<JetPoint> generated_legendrian(const GeneratingFunctionFamily& K, Eigen::Index t,
                                           const std::vector<CriticalPoint>& crit);

struct ChordRecord {
    double x = 0.0;
    Eigen::Vector2d eta1 = Eigen::Vector2d::Zero();
    Eigen::Vector2d eta2 = Eigen::Vector2d::Zero();
    int source = -1;  // component of the first Legendrian
    int target = -1;  // component of the second Legendrian
    double action = 0.0;
    int sign = 0;
};

struct MorseBottComponent {
    double value = 0.0;
    int pieces = 0;           // connected components of the critical manifold
    Eigen::Index samples = 0;  // base samples covered
};

struct DifferenceResult {
    std::vector<ChordRecord> chords;
    std::vector<MorseBottComponent> morse_bott;
};

// Critical points of F1(x, eta1) - F2(x, eta2) at time slice t.
DifferenceResult difference_chords(const GeneratingFunctionFamily& F1,
                                   const GeneratingFunctionFamily& F2, Eigen::Index t = 0);
double difference_value(const GeneratingFunctionFamily& F1, const GeneratingFunctionFamily& F2,
                        Eigen::Index t, const ChordRecord& c);

struct BoundReport {
    Eigen::VectorXd margin;  // per time: min over critical points of distance inside the band
    double worst = 0.0;      // smallest margin; negative means a violation
    Eigen::Index worst_t = -1;
    bool pass = true;
};

// Contact Hamiltonian of the generated Legendrian, h_t = dK/dt at the fiber critical points,
// kept as its per-time extremes (columns: min, max). Degenerate points are skipped; a slice
// without critical points gets zeros.
HamiltonianTrace critical_value_trace(const GeneratingFunctionFamily& K);

BoundReport derivative_bound_report(const GeneratingFunctionFamily& K, const HamiltonianTrace& trace,
                                    double tol = 1e-6);

// Full critical points of K_t on base x fiber.
std::vector<CriticalPoint> critical_points(const GeneratingFunctionFamily& K, Eigen::Index t);

struct CerfEvent {
    double t = 0.0;
    std::string kind;  // "birth" or "death"
    int branch = -1;
};

struct CerfBranch {
    int id = -1;
    std::vector<CriticalPoint> points;
};

struct SingularDiagram {
    std::vector<CerfBranch> branches;
    std::vector<CerfEvent> events;
    double band_violation = 0.0;  // worst excursion of p outside [min h, max h]
    double max_step_residual = 0.0;  // max |dz - p dq| per step along branches
};

SingularDiagram cerf_diagram(const GeneratingFunctionFamily& K,
                             const HamiltonianTrace* trace = nullptr, double tol = 1e-6);

// Synthetic families used by tests, scenarios and the acceptance run.
namespace families {

using CoreFn = std::function<double(double t, double x, double eta)>;

// g(t, x) + |eta|^2 with the quadratic tail.
GeneratingFunctionFamily stabilized(const TimeGrid& time, Eigen::Index nx,
                                    std::function<double(double, double)> g, int fiber_dim = 1,
                                    FiberAxis axis = {-2.0, 2.0, 81});

// Core f on |eta| <= w1 spliced to slope * eta (+ a constant per (t, x)) outside
// a compact window. The splice is done on the derivative, with a compensating
// bump on [w2, w2 + 2] so both ends share one linear function.
struct Splice {
    CoreFn f;
    CoreFn df;
    double w1 = 1.5;
    double w2 = 2.5;
    double slope = 2.0;
};
double spliced_value(const Splice& sp, double t, double x, double eta);
double spliced_derivative(const Splice& sp, double t, double x, double eta);
GeneratingFunctionFamily spliced(const TimeGrid& time, Eigen::Index nx, Splice sp,
                                 FiberAxis axis = {-6.0, 6.0, 601});

// scale * (eta^3/3 - s(t, x) eta) + g(x) in the core.
GeneratingFunctionFamily cubic_fiber(const TimeGrid& time, Eigen::Index nx,
                                     std::function<double(double, double)> s,
                                     std::function<double(double)> g, double scale = 1.0);
// eta^4 - eta^2 + g(x) eta in the core.
GeneratingFunctionFamily double_well(const TimeGrid& time, Eigen::Index nx,
                                     std::function<double(double)> g);
// Fold with a single birth at x = 0, t = t0.
GeneratingFunctionFamily fold(const TimeGrid& time, double t0 = 0.25, Eigen::Index nx = 64);

// phi(eta) + c(t) w(eta): linear tail eta, a value-0 minimum circle and a value-A
// maximum circle on the circle base; c(t) moves both critical values by c/2.
struct DriftProfile {
    double A = 1.0;  // value of the maximum
    double m = 1.5;  // location of the minimum
    double a = 2.0;  // distance from maximum to minimum
    double L() const;
    double phi(double eta) const;
    double dphi(double eta) const;
    double w(double eta) const;
    double dw(double eta) const;
};
GeneratingFunctionFamily drift(const TimeGrid& time, std::function<double(double)> c,
                               std::function<double(double)> dc, DriftProfile prof = {},
                               Eigen::Index nx = 8, FiberAxis axis = {-6.0, 6.0, 601},
                               double R = 3.0);

}  // namespace families

}  // namespace leglab
