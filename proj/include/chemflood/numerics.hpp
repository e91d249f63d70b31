#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace chemflood {

// ---------------------------------------------------------------------------
// Adaptive Runge-Kutta integration with event detection
// ---------------------------------------------------------------------------

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Scalar event function watched during integration.  The event fires when
/// the function changes sign between accepted steps (optionally only in one
/// direction); it can be armed so that trajectories launched exactly on the
/// event manifold do not stop immediately.
struct OdeEvent {
    std::string label;
    std::function<double(double, const Eigen::VectorXd&)> g;
    int direction = 0;          ///< 0 = any sign change, +1 rising, -1 falling
    double arm_threshold = 0.0; ///< |g| must exceed this once before the event may fire
};

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h0 = 1e-4;
    double h_max = 0.01;
    double event_tol = 1e-10;  ///< localization tolerance in the parameter
    long max_steps = 500000;
    /// Called after every accepted step (used for direction caches).
    std::function<void(double, const Eigen::VectorXd&)> on_accept;
};

struct OdePoint {
    double eta;
    Eigen::VectorXd x;
};

struct OdeResult {
    std::vector<OdePoint> points;  ///< accepted steps, including start and stop
    int event_index = -1;          ///< index into the event list, or -1
    std::string stop_reason;       ///< "end", "event:<label>", "max_steps"
};

/// Dormand-Prince 5(4) integration from eta = 0 to eta_end (> 0) with event
/// localization by bisection and re-integration.
OdeResult integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& x0, double eta_end,
                        const OdeOptions& opts, const std::vector<OdeEvent>& events);

/// Integrate from (eta0, x0) to eta1 with no events (used for dense lookup).
Eigen::VectorXd integrate_to(const OdeRhs& rhs, double eta0, const Eigen::VectorXd& x0,
                             double eta1, const OdeOptions& opts);

// ---------------------------------------------------------------------------
// Root bracketing and refinement
// ---------------------------------------------------------------------------

/// Bisection on a bracketing interval [a,b] (g(a) and g(b) of opposite sign),
/// refined to |b-a| <= xtol.  Returns the midpoint of the final bracket.
double bisect_root(const std::function<double(double)>& g, double a, double b, double xtol,
                   int max_iter = 200);

/// Scan [a,b] on a uniform grid and return all sign-change brackets.
std::vector<std::pair<double, double>> scan_sign_changes(const std::function<double(double)>& g,
                                                         double a, double b, int samples);

// ---------------------------------------------------------------------------
// Pseudo-arclength continuation
// ---------------------------------------------------------------------------

struct ContinuationOptions {
    double h0 = 1e-3;
    double h_min = 1e-10;
    double h_max = 0.02;
    double tol = 1e-10;  ///< residual tolerance (scaled by residual magnitude at z0 region)
    long max_points = 100000;
};

struct ContinuationResult {
    std::vector<Eigen::VectorXd> points;
    std::string stop_reason;  ///< "left_region", "closed_loop", "max_points", "stuck"
};

/// Trace the curve H(z) = 0 (H: R^m -> R^{m-1}) starting from z0 along the
/// tangent closest to dir_hint.  keep_going decides when to stop (state left
/// the region of interest).
ContinuationResult trace_curve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& H,
                               const Eigen::VectorXd& z0, const Eigen::VectorXd& dir_hint,
                               const std::function<bool(const Eigen::VectorXd&)>& keep_going,
                               const ContinuationOptions& opts);

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64_file(const std::string& path);  ///< throws std::runtime_error if unreadable
std::string hex64(uint64_t v);

/// printf("%.17g") formatting: round-trip-exact decimal for doubles,
/// locale-independent.
std::string fmt17(double v);

}  // namespace chemflood
