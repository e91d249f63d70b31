#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chemflood/model.hpp"
#include "chemflood/rarefaction.hpp"

namespace chemflood {

/// Thrown when no admissible wave sequence matching the supported templates
/// exists between the given states.  The message reports the family-speed
/// orderings at both states to explain why the construction failed.
class NoSequenceFound : public std::runtime_error {
public:
    explicit NoSequenceFound(const std::string& what) : std::runtime_error(what) {}
};

enum class WaveKind {
    Rarefaction,  ///< fan following an integral curve, speed strictly increasing
    Shock,        ///< admissible discontinuity
    Composite,    ///< shock attached to an adjacent same-family rarefaction
    Contact,      ///< linearly degenerate discontinuity (characteristic both sides)
    Constant      ///< plateau between waves of different speeds
};

std::string wave_kind_name(WaveKind k);

/// One wave (or plateau) of a similarity solution U(x/t).
struct WaveSegment {
    WaveKind kind = WaveKind::Constant;
    int family = -1;  ///< characteristic family, -1 for plateaus
    State left, right;
    double speed_l = 0.0, speed_r = 0.0;  ///< occupied speed range (equal for jumps)
    double sigma = 0.0;                   ///< jump speed (shocks/contacts only)
    std::vector<CurvePoint> curve;        ///< rarefaction support for profile lookup
    std::string note;
};

struct RiemannSolution {
    State left;
    State right;  ///< attained right state; its velocity is an output of the solve
    std::vector<WaveSegment> waves;  ///< speed-ordered, plateaus included
    std::string regime;  ///< "single-state", "saturation-only", "shared-plane", "cross-plane"
};

struct SolveOptions {
    double eta_max = 8.0;        ///< arclength budget per traced curve
    double h_max = 0.01;         ///< integrator step cap
    double y_match_tol = 1e-9;   ///< compositions closer than this count as equal
    int outer_scan = 33;         ///< bracket scan resolution of the closure parameter
    double closure_atol = 1e-11; ///< bisection width on the closure parameter
    double speed_gap_tol = 1e-9; ///< minimum junction width for an explicit plateau
};

/// Solve the Riemann problem between left and right.  The right state's
/// velocity is ignored: u is constant across saturation waves and jumps only
/// where the jump conditions demand it, so the downstream velocity is part of
/// the solution.  Throws NoSequenceFound when the supported wave-sequence
/// templates do not apply.
RiemannSolution solve_riemann(const Model& m, const State& left, const State& right,
                              const SolveOptions& opts = {});

struct CompatibilityReport {
    bool ok = true;
    std::vector<std::string> issues;
};

/// Re-derive every segment of a solution from the model: state continuity,
/// non-decreasing speeds, jump-condition residuals, characteristic speeds at
/// rarefaction edges, and endpoint matching.
CompatibilityReport check_compatibility(const Model& m, const RiemannSolution& sol,
                                        double tol = 1e-7);

/// Sample the similarity profile at xi = x/t.
State evaluate_profile(const Model& m, const RiemannSolution& sol, double xi);

}  // namespace chemflood
