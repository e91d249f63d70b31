#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chemflood/model.hpp"
#include "chemflood/riemann.hpp"

namespace chemflood {

/// Finite eigenpairs of the full quasilinear pencil, computed independently
/// of the elimination path by a dense QZ solve.  Sorted by speed.
struct OracleEigen {
    std::vector<double> lambda;
    Eigen::MatrixXd r;  ///< one column per eigenvalue, (s,y)-part unit norm
};

/// Dense generalized eigensolve of (A, B) at a state, discarding the
/// structurally infinite eigenvalue.  Throws NumericalError if a finite
/// eigenvalue has a significant imaginary part or the finite count is not n.
OracleEigen dense_eigen_oracle(const Model& m, const State& U, double imag_tol = 1e-8);

/// Central-difference gradient of one family's speed in (s, y, u).
Eigen::VectorXd fd_gradient(const Model& m, const State& U, int family, double h = 1e-6);

/// Central-difference directional derivative of one family's speed along its
/// own (canonically signed) eigenvector.
double fd_directional(const Model& m, const State& U, int family, double h = 1e-6);

// ---------------------------------------------------------------------------
// Finite-volume reference for fixed-composition Riemann problems
// ---------------------------------------------------------------------------

struct FvOptions {
    int cells = 2000;
    double cfl = 0.9;
    double x_jump = 0.1;  ///< initial discontinuity position
    double x_hi = 1.0;    ///< domain is [0, x_hi]
};

struct FvResult {
    std::vector<double> x;  ///< cell centers
    std::vector<double> s;  ///< final cell averages
    double dx = 0.0;
    long steps = 0;
    double mass_drift_max = 0.0;  ///< worst per-step conservation error (relative)
    double tv_initial = 0.0, tv_final = 0.0;
};

/// First-order Godunov solve of s_t + (u f(s)/phi)_x = 0 with piecewise
/// constant data (s_l left of x_jump, s_r right), inflow/outflow boundaries.
/// The interface flux is the upwind interval extremum, which for these
/// monotone fluxes is the left value.  Requires constant composition and, for
/// the mass accounting to be meaningful, waves that stay inside the domain.
FvResult scalar_fv(const Model& m, const std::vector<double>& y, double u, double s_l,
                   double s_r, double t_end, const FvOptions& opts = {});

/// L1 distance between a finite-volume field at t_end and a similarity
/// solution sampled at the cell centers.
double l1_against_profile(const Model& m, const RiemannSolution& sol, const FvResult& fv,
                          double t_end, double x_jump);

}  // namespace chemflood
