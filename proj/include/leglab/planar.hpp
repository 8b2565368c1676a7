#pragma once

#include "leglab/energy.hpp"
#include "leglab/loops.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace leglab {

// Integral of (x dy - y dx) / 2. Uses the tangents when present (spectrally accurate on
// smooth loops), otherwise the shoelace formula (exact on polygons).
double signed_area(const ImmersedLoop& loop);

// Area of {winding = k} for every k that occurs; smooth corrections from the tangents.
std::map<int, double> winding_areas(const ImmersedLoop& loop);

enum class LiftTarget { Circle, Line };

struct LiftError : std::runtime_error {
    LiftError(const std::string& what, double defect_) : std::runtime_error(what), defect(defect_) {}
    double defect;
};

struct LegendrianLift {
    ImmersedLoop base;
    Eigen::VectorXd f;  // unwrapped, f(x_0) = 0; circle-valued lifts read it mod 1
    int degree = 0;
    double area = 0.0;
    LiftTarget target = LiftTarget::Circle;
    double defect = 0.0;  // max |f' - j*lambda / dx| over the samples

    double f_at(double x) const;  // periodic Hermite interpolation, with the degree jump
};

LegendrianLift legendrian_lift(const ImmersedLoop& loop, LiftTarget target = LiftTarget::Circle,
                               double tol = 1e-6);

struct Crossing {
    double xa = 0.0;  // parameter on the first strand
    double xb = 0.0;  // parameter on the second strand
    Eigen::Vector2d point = Eigen::Vector2d::Zero();
    int sign = 0;  // sign of j'(xa) x j'(xb)
    bool transverse = true;
};

// Transverse self-intersections, xa < xb.
std::vector<Crossing> crossings(const ImmersedLoop& loop);
// Intersections of two loops, xa on the first and xb on the second.
std::vector<Crossing> intersections(const ImmersedLoop& a, const ImmersedLoop& b);
// Self-intersections of an open polyline, parameters are sample indices plus fractions.
std::vector<Crossing> polyline_crossings(const Points2& pts);

struct PlanarChord {
    double x0 = 0.0;
    double x1 = 0.0;
    Eigen::Vector2d point = Eigen::Vector2d::Zero();
    std::vector<double> actions;  // representative in (0, 1] plus integers up to the horizon
    bool transverse = true;
};

// Reeb chords from lift0 to lift1 in R/Z x C with alpha = dt - lambda. Identical base
// loops give one non-transverse chord per sample.
std::vector<PlanarChord> chord_detect(const LegendrianLift& lift0, const LegendrianLift& lift1,
                                      double horizon = 3.0);

struct TbIntersection {
    double s = 0.0;
    double t = 0.0;
    int sign = 0;
    int side = 0;  // 1 or 2
};

struct TbResult {
    double epsilon = 0.0;
    int difference = 0;
    int count1 = 0;  // signed count against the push-off of the circle lift
    int count2 = 0;  // signed count against the push-off of the double-cover lift
    std::vector<TbIntersection> points;
    int tb_unknot = -1;        // tb of the standard unknot
    int tb_lambda = 0;         // tb_unknot + difference
    bool contradicts_bennequin = false;  // tb_lambda > -1 for an unknot
};

// Signed intersections of the annulus between the circle lift and the double-cover
// lift with the radial push-offs. Valid for 0 < epsilon < ln(2) / 2.
TbResult tb_difference(double epsilon, bool reverse_annulus = false);

namespace fig {

// Tangent-angle template of the finger move, in template units before scaling.
class Template {
public:
    explicit Template(Eigen::Index refine = 16);

    double length() const { return S_; }
    Eigen::Index intervals() const { return n_; }
    // Arc-parameter ranges of the clockwise and counter-clockwise curls.
    std::pair<double, double> cw_range() const { return cw_; }
    std::pair<double, double> ccw_range() const { return ccw_; }

    struct Curve {
        Eigen::VectorXd U, V, Us, Vs;  // at the n + 1 nodes
        double G = 0.0;                // area / tau, the tau -> 0 limit at tau = 0
    };
    Curve evaluate(double tau, double mu, bool points = true) const;
    // Speed multiplier on the counter-clockwise curl giving area tau * target.
    double solve_mu(double tau, double target) const;

private:
    double S_ = 0.0;
    Eigen::Index n_ = 0;
    std::pair<double, double> cw_, ccw_;
    // Tangent angle, curl speed weight and drift weight at the nodes and at three Gauss
    // points per interval.
    Eigen::VectorXd theta_, b_, w_;
    Eigen::MatrixXd gtheta_, gb_, gw_;
};

}  // namespace fig

// Stage 1 (finger move) then stage 2 (grow the counter-clockwise curl and move the rest
// of the loop inward), scaled by c and placed on the boundary of the area-1 disk.
struct DeformationSchedule {
    TimeGrid grid;
    double c = 0.01;
    std::function<double(double)> tau;    // finger-move progress in [0, 1]
    std::function<double(double)> gain;   // template area added to the curl, template units
    std::function<double(double)> shift;  // inward baseline shift, in the same units
    double stage_split = 0.5;             // stage 1 lives on [0, stage_split]

    static DeformationSchedule standard(double c, Eigen::Index nt = 201, double gain = 0.5);
    static DeformationSchedule frozen(double c, Eigen::Index nt = 11);
};

struct Fig2Areas {
    double A1 = 0.0;  // winding 1
    double A2 = 0.0;  // winding -1
    double A3 = 0.0;  // winding 2
    double total = 0.0;  // signed area of the loop

    double combination() const { return A1 + 2 * A3 - A2; }
};

struct FigFamily {
    DeformationSchedule schedule;
    LoopFamily family;
    Eigen::VectorXd mu;
    Eigen::VectorXd area;
    std::vector<Fig2Areas> bookkeeping;
    std::vector<int> rightmost_sign;  // sign of the rightmost template crossing, 0 if none
    double energy = 0.0;              // Lagrangian oscillation of the whole family
    double stage1_energy = 0.0;
    double stage2_energy = 0.0;
};

struct FigOptions {
    Eigen::Index template_refine = 16;  // template samples = 114 * refine
    Eigen::Index line_samples = 600;
    double area_tol = 1e-6;
    bool bookkeeping = true;
    int jobs = 0;  // 0: one per hardware thread
};

FigFamily fig_deformation_family(const DeformationSchedule& schedule, const FigOptions& opt = {});

// Loop families with analytic tangents and velocities.
namespace corpus {

LoopFamily rotating_circle(const TimeGrid& grid, Eigen::Index nx, double r = 0.3, double offset = 0.2,
                           double turns = 0.25);
LoopFamily translating_circle(const TimeGrid& grid, Eigen::Index nx, double r = 0.3,
                              Eigen::Vector2d velocity = {0.4, 0.1});
LoopFamily squeezed_circle(const TimeGrid& grid, Eigen::Index nx, double r = 0.3, double rate = 0.5);
LoopFamily wobbling_circle(const TimeGrid& grid, Eigen::Index nx, double r0 = 0.4, double eps = 0.03,
                           int k = 3);
// Circle of area 1 traversed at unit rate.
ImmersedLoop circle(Eigen::Index nx, double area = 1.0, Eigen::Vector2d center = Eigen::Vector2d::Zero(),
                    int turns = 1);

}  // namespace corpus

}  // namespace leglab
