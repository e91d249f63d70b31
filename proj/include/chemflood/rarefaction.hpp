#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chemflood/eigen.hpp"
#include "chemflood/model.hpp"

namespace chemflood {

/// One sample of an integral curve: arclength parameter, state, family speed,
/// and the unit field direction (used for cubic Hermite interpolation).
struct CurvePoint {
    double eta = 0.0;
    State U;
    double lambda = 0.0;
    Eigen::VectorXd rdot;
};

struct RarefactionCurve {
    int family = 0;
    std::vector<CurvePoint> pts;
    std::string stop_reason;  ///< "eta_max", "coincidence:<fam>", "inflection",
                              ///< "boundary", "singular", "target:<label>", ...
    double length() const { return pts.empty() ? 0.0 : pts.back().eta; }
};

struct UserEvent {
    std::string label;
    std::function<double(const State&)> g;
    double arm_threshold = 0.0;
};

struct TraceOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_max = 0.01;   ///< cap on the arclength step (keeps interpolation accurate)
    double eta_max = 5.0;  ///< maximum arclength
    bool stop_on_inflection = true;
    bool stop_on_coincidence = true;
    double arm = 1e-7;        ///< arming threshold for inflection/coincidence events
    int forced_direction = 0; ///< 0 = orient by increasing speed; else sign vs canonical field
    double domain_margin = 0.0;
    std::vector<UserEvent> user_events;
};

/// Integral curve of one characteristic family, oriented so the family speed
/// increases, stopping at inflection loci, family coincidences, the domain
/// boundary, or user events.  The first point is the start state.
RarefactionCurve trace_rarefaction(const Model& m, const State& start, int family,
                                   const TraceOptions& opts);

/// Integral curve of a linearly degenerate family (no inflection stop, a
/// forced direction, and a recorded — ideally constant — speed).
RarefactionCurve trace_contact(const Model& m, const State& start, int family, int direction,
                               const TraceOptions& opts);

/// State at an arbitrary arclength via cubic Hermite interpolation between
/// the stored samples.
State state_on_curve(const RarefactionCurve& c, double eta);

/// Speed at an arbitrary arclength (monotone along a rarefaction), by linear
/// interpolation refined against state_on_curve.
double lambda_on_curve(const Model& m, const RarefactionCurve& c, double eta, int family);

/// Contact fan: launch contact traces from points along a base curve down to
/// the hyperplane y_plane_index = plane_value, and return the polyline traced
/// on that plane.
struct ContactFan {
    std::vector<RarefactionCurve> launches;
    std::vector<State> plane_trace;      ///< arrival states, ordered by launch point
    std::vector<double> lambda_drift;    ///< |max-min| of the speed along each launch
};

ContactFan build_contact_fan(const Model& m, const RarefactionCurve& base, int contact_family,
                             int plane_index, double plane_value, int launches,
                             const TraceOptions& opts);

}  // namespace chemflood
