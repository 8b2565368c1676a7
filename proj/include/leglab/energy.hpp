#pragma once

#include "leglab/core.hpp"
#include "leglab/loops.hpp"

#include <functional>

namespace leglab {

struct ExactnessError : std::runtime_error {
    ExactnessError(const std::string& what, double defect_)
        : std::runtime_error(what), defect(defect_) {}
    double defect;
};

// h[t](x) sampled on the isotopy grids, with per-time extrema.
class HamiltonianTrace {
public:
    HamiltonianTrace() = default;
    HamiltonianTrace(TimeGrid grid, Eigen::MatrixXd h);

    const TimeGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return h_; }
    const Eigen::VectorXd& max() const { return max_; }
    const Eigen::VectorXd& min() const { return min_; }
    double operator()(Eigen::Index t, Eigen::Index x) const { return h_(t, x); }

private:
    TimeGrid grid_;
    Eigen::MatrixXd h_;  // rows: time, cols: parameter
    Eigen::VectorXd max_;
    Eigen::VectorXd min_;
};

struct EnergyReport {
    double length = 0.0;
    double oscillation = 0.0;
    Eigen::VectorXd max_abs;  // max_x |h_t|
    Eigen::VectorXd spread;   // max_x h_t - min_x h_t
};

HamiltonianTrace contact_hamiltonian(const SampledIsotopy& iso);
EnergyReport energy_of(const HamiltonianTrace& trace, Quadrature rule = Quadrature::Trapezoid);

// sigma(t, x): orientation preserving reparametrization of the parameter
// domain at each time (for closed parameters, sigma(t, x + 1) = sigma(t, x) + 1).
using Reparametrization = std::function<double(double t, double x)>;
SampledIsotopy reparametrize(const SampledIsotopy& iso, const Reparametrization& sigma,
                             double tol = 1e-5);

struct LagrangianPrimitive {
    Eigen::MatrixXd F;         // rows: time, cols: parameter, F_t(x_0) = 0
    Eigen::VectorXd defect;    // closedness defect per time
    Eigen::VectorXd area;      // signed area per time
};

// Integrates omega(d_t j, d_x j) along the loop parameter.
LagrangianPrimitive lagrangian_primitive(const LoopFamily& family, double tol = 1e-7);
double lagrangian_osc_energy(const LoopFamily& family, double tol = 1e-7);
double lagrangian_osc_energy(const LagrangianPrimitive& primitive, const TimeGrid& grid);

// z -> sqrt(c) z applied to every sample.
LoopFamily conjugate_by_contraction(const LoopFamily& family, double c);

// Line-valued Legendrian lift (f_t, j_t) in the contactization, f_t(x_0) = 0,
// with time derivatives by finite differences. Independent of the Lagrangian route.
SampledIsotopy legendrian_isotopy(const LoopFamily& family, double tol = 1e-6);
double legendrian_osc_energy(const LoopFamily& family);

}  // namespace leglab
