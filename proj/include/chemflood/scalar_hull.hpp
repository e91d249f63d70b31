#pragma once

#include <functional>
#include <vector>

namespace chemflood {

/// One piece of the entropy solution of a scalar Riemann problem: either a
/// stretch where the solution follows the flux graph (rarefaction) or a chord
/// (shock).  Pieces are emitted in wave order (non-decreasing speed), from the
/// left state to the right state.
struct ScalarWavePiece {
    bool is_shock = false;
    double s_l = 0.0, s_r = 0.0;       ///< saturations at the slow/fast ends of the piece
    double speed_l = 0.0, speed_r = 0.0;  ///< flux-slope speeds (equal for a shock)
};

/// Entropy solution of  s_t + g(s)_x = 0  with Riemann data (s_l, s_r), for a
/// flux given with its derivative.  Uses the appropriate convex/concave
/// envelope over the interval between the states, with tangency points
/// refined by bisection.  Speeds are in g' units (callers scale by u/phi).
std::vector<ScalarWavePiece> scalar_riemann(const std::function<double(double)>& g,
                                            const std::function<double(double)>& dg,
                                            double s_l, double s_r, int samples = 2049);

}  // namespace chemflood
