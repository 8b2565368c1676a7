#pragma once

#include "leglab/energy.hpp"
#include "leglab/genfun.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace leglab {

struct StrongMorseError : ArgumentError {
    using ArgumentError::ArgumentError;
};

// Cell complex with a filtration value per cell. Boundaries are over Z/2.
struct FiltrationComplex {
    std::vector<int> dim;
    std::vector<double> value;
    std::vector<std::vector<int>> boundary;  // face indices, each listed once

    Eigen::Index size() const { return Eigen::Index(dim.size()); }
    int add_cell(int d, double v, std::vector<int> faces);
    // Throws when a face has a larger value or the wrong dimension.
    void validate() const;

    // Cycle graph on the given vertex values, edges take the max.
    static FiltrationComplex cycle(const Eigen::VectorXd& vertex_values);
    static FiltrationComplex path(const Eigen::VectorXd& vertex_values);
    // Cubical complex on a row-major vertex grid of up to three axes.
    static FiltrationComplex cubical(const Eigen::VectorXd& vertex_values,
                                     const std::vector<Eigen::Index>& shape,
                                     const std::vector<bool>& periodic);
    // Base x fiber grid of time slice t.
    static FiltrationComplex from_family(const GeneratingFunctionFamily& K, Eigen::Index t);
};

// Deterministic value jitter of size rel * (value range), used to reach strong Morse data.
Eigen::VectorXd jitter_values(const Eigen::VectorXd& values, double rel, std::uint64_t seed);

struct Bar {
    double birth = 0.0;
    double death = 0.0;
    int degree = 0;
    bool capped = false;  // never died below the cap, reported with death = R

    double length() const { return death - birth; }
    friend bool operator==(const Bar&, const Bar&) = default;
};

struct Barcode {
    std::vector<Bar> bars;  // sorted by (degree, birth, death)
    double longest = 0.0;

    std::vector<Bar> finite() const;
};

// Relative persistence of (K < s, K <= -R): cells with value <= -R are coned to an
// apex at -infinity. Without such cells this is ordinary sublevel persistence.
Barcode sublevel_barcode(const FiltrationComplex& c, double R);
// Checks that {K <= -R} only meets the tail region before computing.
Barcode sublevel_barcode(const GeneratingFunctionFamily& K, Eigen::Index t);

struct BarannikovPairing {
    Eigen::VectorXd values;    // critical values, ascending
    std::vector<int> degree;
    std::vector<int> partner;  // involution on paired entries, -1 when unpaired

    std::vector<Bar> pairs() const;  // (lower, upper, degree of lower)
};

// Cancels equal-value incidences down to a Morse complex, then reduces it in value order.
BarannikovPairing barannikov_pairing(const FiltrationComplex& c, double R);

struct TrackEvent {
    Eigen::Index t_index = 0;  // step from t_index to t_index + 1
    std::string kind;          // "jump" or "reorder"
    double value = 0.0;
};

struct BarTrack {
    TimeGrid grid;
    Eigen::VectorXd L;
    std::vector<Barcode> barcodes;
    std::vector<TrackEvent> events;
    double worst_slope_excess = -std::numeric_limits<double>::infinity();
};

// L(t) per time node. With a trace, steps where |dL| exceeds (max h - min h + tol) dt
// are logged as jumps; steps where endpoint ordering changes are logged as reorders.
BarTrack longest_bar_track(const GeneratingFunctionFamily& K, const HamiltonianTrace* trace = nullptr,
                           double tol = 1e-9, int jobs = 1);

enum class Verdict { Pass, Fail, HypothesesViolated };
std::string to_string(Verdict v);

struct DisjoinmentCheck {
    double L1 = 0.0;           // longest bar at t = 1
    double oscillation = 0.0;  // integral of max h - min h
    double rhs = 0.0;          // A - 5 eps - oscillation
    double margin = 0.0;       // L1 - rhs
    bool derivative_bound = true;
    bool slope_bound = true;
    bool chord_persists = false;  // L1 > 0
    bool corollary_applies = false;  // oscillation < A - 5 eps
    Verdict verdict = Verdict::Pass;
    BarTrack track;
};

DisjoinmentCheck disjoinment_bound_check(const GeneratingFunctionFamily& K, const HamiltonianTrace& trace,
                                         double A, double eps, double tol = 1e-6, int jobs = 1);

}  // namespace leglab
