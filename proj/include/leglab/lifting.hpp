#pragma once

#include "leglab/energy.hpp"
#include "leglab/planar.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace leglab {

// ---- Lagrangian tetragon ---------------------------------------------------

struct TetragonSpec {
    double k = 2.0;
    double delta = 0.1;
    double T = 1.0;
    Points2 gamma;  // closed polyline in (s, t), last point joins the first
};

// Integral of e^s dt along the polyline, exact per segment. Throws ArgumentError when the
// loop leaves [0, log k] x [0, T] or is not embedded.
double tetragon_area(const TetragonSpec& spec);

Points2 rectangle_loop(double k, double T);

struct CanonicalTetragon {
    TetragonSpec spec;
    double offset = 0.0;
    double target = 0.0;        // e^-delta (k - 1) T
    double area = 0.0;
    std::vector<double> lower;  // areas at the accepted offsets, increasing to the target
};

// Rounded rectangle inset by the offset (corner radius = offset), offset bisected until
// its area matches e^-delta (k - 1) T.
CanonicalTetragon canonical_tetragon(double k, double delta, double T, int arc_samples = 64);

struct ContradictionCheck {
    double lhs = 0.0;  // e^delta k E
    double rhs = 0.0;  // e^-delta (k - 1) T
    bool contradiction = false;  // lhs < rhs
};

ContradictionCheck energy_contradiction(double E, double T, double k, double delta);
double displacement_constant(double sigma, double k, double delta);

// ---- SY_1 models -----------------------------------------------------------

enum class SY1Model {
    PuncturedPlane,  // (x, y), lambda = (x dy - y dx) / 2
    Cylinder,        // (s, theta), lambda = e^s dtheta
};

std::string to_string(SY1Model m);

Eigen::RowVector2d liouville_form(SY1Model m, const Eigen::Vector2d& p);
double symplectic_density(SY1Model m, const Eigen::Vector2d& p);  // omega = rho dx ^ dy

struct CutoffError : DomainError {
    using DomainError::DomainError;
};

using Hamiltonian = std::function<double(double t, const Eigen::Vector2d& p)>;

struct HamiltonianSpec {
    SY1Model model = SY1Model::PuncturedPlane;
    Hamiltonian H;
    std::function<Eigen::Vector2d(double t, const Eigen::Vector2d& p)> gradient;  // optional
    double cutoff_radius = 0.0;  // > 0: multiply by a plateau bump equal to 1 up to this radius
    double domain_radius = 10.0;  // H must vanish beyond this (|z| or |s|) unless cut off

    double value(double t, const Eigen::Vector2d& p) const;  // with the cutoff applied
    Eigen::Vector2d grad(double t, const Eigen::Vector2d& p) const;
    // X with X ⌟ d lambda = -dH.
    Eigen::Vector2d field(double t, const Eigen::Vector2d& p) const;
    // Lifted field on Q = Y0 x SY_1 with A = d theta0 - lambda: (X ⌟ lambda - H) R + X.
    Eigen::Vector3d lifted_field(double t, const Eigen::Vector3d& q) const;
    // Throws CutoffError when H is not negligible on the domain boundary and no cutoff is set.
    void check_decay() const;
};

struct LiftOptions {
    double step = 1e-3;
    double t1 = 1.0;
    Eigen::Index record_every = 10;  // output samples every this many steps
    double fd_step = 1e-3;           // five-point Jacobian of N for the pullback check
    int jobs = 1;
};

struct LiftedIsotopy {
    HamiltonianSpec hamiltonian;
    LiftOptions options;
    TimeGrid grid;                 // recorded times
    std::vector<Points3> flow;     // flow[t](seed, :) in (theta0, p1, p2)
    double a_drift = 0.0;          // max |Phi^*A - A| on unit tangent vectors over the run
    double error_estimate = 0.0;   // |Phi_h - Phi_{h/2}| at t1, max over seeds
    double hamiltonian_defect = 0.0;  // max |X ⌟ omega + dH| at the seeds
    double oscillation = 0.0;      // of H over the un-cut region
};

// Integrates the lifted field from each seed (theta0, p) with fixed-step RK4.
LiftedIsotopy lift_hamiltonian(const HamiltonianSpec& H, const Points3& seeds, const LiftOptions& opt = {});

// Flow of the lifted field from t0 to t1 with the given step.
Eigen::Vector3d flow_lifted(const HamiltonianSpec& H, const Eigen::Vector3d& q, double t0, double t1, double step);

// ---- Product lifts ---------------------------------------------------------

struct ProductLiftData {
    SY1Model model = SY1Model::PuncturedPlane;
    std::vector<double> aux;  // auxiliary Legendrian in Y0: points of R (or R/Z)
    bool circle_y0 = false;
    Eigen::VectorXd ys;       // parameter of the exact Lagrangian
    Points2 j;                // j(y) in SY_1
    Eigen::VectorXd f;        // primitive, j*lambda = df
    double tol = 1e-8;

    // max |f'(y) - lambda(j'(y))| by finite differences along y.
    double primitive_defect() const;
};

struct ProductLift {
    Points3 points;  // row a * ys.size() + b is (aux[a] + f(ys[b]), j(ys[b]))
    double pullback_y = 0.0;  // max |J^*A(d/dy)|
    double pullback_aux = 0.0;  // zero: the auxiliary Legendrian is a set of points
};

// Throws LiftError when the primitive condition fails.
ProductLift lift_legendrian_product(const ProductLiftData& data);

struct PrimitiveTransport {
    TimeGrid grid;
    Eigen::MatrixXd f;               // f_t(y), rows: time
    std::vector<Points2> j;          // phi_t(j(y))
    std::vector<Points3> flowed;     // Phi_t(J(aux[0], y)) by the lifted flow
    std::vector<Points3> rebuilt;    // (aux[0] + f_t(y), phi_t(j(y)))
    double agreement = 0.0;          // max |flowed - rebuilt|
};

// f_t(y) = f(y) + int_0^t (X ⌟ lambda - H)(phi_tau(j(y))) dtau by Simpson quadrature along
// flow lines of X, compared with the lifted flow of the product lift.
PrimitiveTransport transport_primitive(const ProductLiftData& data, const HamiltonianSpec& H,
                                       const LiftOptions& opt = {});

// ---- Sikorav conjugation ---------------------------------------------------

struct SikoravResult {
    double k = 0.0;
    HamiltonianSpec rescaled;     // e^-k H o kappa_k, kappa_k(z) = e^{k/2} z
    double oscillation = 0.0;     // of H on the sample set
    double rescaled_oscillation = 0.0;  // of H^k on kappa_k^{-1} of the sample set
    double ratio = 0.0;
};

// Plane model only. Samples: time grid x sample points.
SikoravResult sikorav_rescale(const HamiltonianSpec& H, double k, const TimeGrid& grid, const Points2& samples);

// a_k(y) = int_0^1 lambda(gamma') - H^k(gamma) dt along flow lines gamma of H^k from each y.
Eigen::VectorXd sikorav_actions(const HamiltonianSpec& H, double k, const Points2& ys, double step = 1e-3);

// Oscillation of H over a time grid and sample points: int (max - min) dt.
double hamiltonian_oscillation(const HamiltonianSpec& H, const TimeGrid& grid, const Points2& samples);

// Sample points covering the un-cut region (disk of the cutoff or domain radius, or the
// cylinder band), used for oscillation energies.
Points2 region_samples(const HamiltonianSpec& H, Eigen::Index n = 41);

namespace corpus {

HamiltonianSpec zero_hamiltonian(SY1Model m = SY1Model::PuncturedPlane);
// a * exp(-r^2 / w^2): rotates circles about the origin.
HamiltonianSpec radial_bump(double a = 1.0, double w = 0.7);
// Constant c, cut off beyond the given radius.
HamiltonianSpec constant_hamiltonian(double c = 0.5, double cutoff = 4.0);
// Off-centre Gaussian with a time-dependent amplitude.
HamiltonianSpec drifting_bump(double a = 0.8, Eigen::Vector2d centre = {0.3, -0.2}, double w = 0.5);
// Cylinder model: bump in s times cos(2 pi theta).
HamiltonianSpec cylinder_wave(double a = 0.3, double w = 0.6);

std::vector<std::pair<std::string, HamiltonianSpec>> lifting_hamiltonians();

}  // namespace corpus

}  // namespace leglab
