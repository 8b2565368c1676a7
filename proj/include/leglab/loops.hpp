#pragma once

#include "leglab/core.hpp"

#include <optional>
#include <vector>

namespace leglab {

using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Closed planar loop sampled at x in [0, 1); the sample at x = 1 is implied.
struct ImmersedLoop {
    Eigen::VectorXd params;
    Points2 points;
    std::optional<Points2> tangents;  // d/dx when known analytically

    Eigen::Index size() const { return params.size(); }
    // Supplied tangents, or periodic three-point differences.
    Points2 derivative() const;
    // Smallest |j'| over the samples.
    double min_speed() const;
    void validate() const;
};

// One loop per time node, shared parameter grid.
struct LoopFamily {
    TimeGrid grid;
    Eigen::VectorXd params;
    std::vector<Points2> points;
    std::vector<Points2> tangents;
    std::vector<Points2> velocities;

    Eigen::Index num_times() const { return grid.size(); }
    ImmersedLoop loop(Eigen::Index t) const { return {params, points[t], tangents[t]}; }
    void validate() const;
};

// Periodic d/dx of samples on [0, 1).
Points2 periodic_derivative(const Points2& pts, const Eigen::VectorXd& x);

}  // namespace leglab
