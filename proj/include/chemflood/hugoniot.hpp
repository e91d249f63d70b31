#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "chemflood/model.hpp"

namespace chemflood {

/// Jump conditions across a discontinuity: sigma [G] = [u Fhat].  Given both
/// (s, y) sides and the upstream velocity, the velocity ratio and the speed
/// are overdetermined; rh_solve extracts them from the best-conditioned rows
/// and reports the full per-equation residuals.
struct RHResult {
    double u_plus = 0.0;       ///< downstream velocity
    double sigma = 0.0;        ///< shock speed
    double sigma_spread = 0.0; ///< max spread of sigma across usable equations
    Eigen::VectorXd residual;  ///< per-equation residual of sigma[G] - [uF]
    double scale = 0.0;        ///< magnitude scale used to normalize residuals
    bool same_composition = false;  ///< y+ == y-: velocity is continuous
};

/// Solve the jump conditions for (u_plus, sigma) given the left state (with
/// velocity) and the right (s, y).
RHResult rh_solve(const Model& m, const State& left, double s_plus,
                  const std::vector<double>& y_plus);

/// Compatibility residuals for locus tracing: n-1 determinant conditions
/// expressing that the jump row-vectors have rank two.  z = (s, y).
Eigen::VectorXd rh_residuals(const Model& m, const State& left, const Eigen::VectorXd& z);

/// One branch of a discontinuity locus through a base state.
struct HugoniotBranch {
    std::string label;
    std::vector<State> states;       ///< downstream states (with solved velocity)
    std::vector<double> sigma;       ///< speed per point
    std::vector<double> u_ratio;     ///< u+/u- per point
    std::string stop_reason;
};

struct HugoniotOptions {
    double step = 1e-3;
    long max_points = 100000;
    double tol = 1e-10;
    double seed_offset = 1e-4;  ///< offset along eigenvectors for branch seeding
};

/// Trace the locus branches passing through `left` by pseudo-arclength
/// continuation seeded along each characteristic family's eigenvector (both
/// directions merged).
std::vector<HugoniotBranch> trace_hugoniot(const Model& m, const State& left,
                                           const HugoniotOptions& opts);

/// Trace one branch from an explicit seed point (used for detached branches).
HugoniotBranch trace_hugoniot_from(const Model& m, const State& left,
                                   const Eigen::VectorXd& z_seed, const Eigen::VectorXd& dir,
                                   const std::string& label, const HugoniotOptions& opts);

/// Inequality classification of a discontinuity against the characteristic
/// speeds on both sides.
struct LaxReport {
    std::vector<double> lambda_left, lambda_right;  ///< speed-sorted
    int family = -1;            ///< k of a satisfied k-Lax family (-1 if none)
    bool lax = false;
    std::vector<bool> char_left, char_right;  ///< |sigma - lambda| within tolerance
    std::string classification;               ///< "k-lax", "contact(k)", "over", "under"
};

LaxReport lax_classify(const Model& m, const State& left, const State& right, double sigma,
                       double char_tol = 1e-9);

/// Saturation-only jump at fixed composition: velocity passes through and the
/// speed is the chord slope of the fractional flow scaled by u/phi.
double bl_shock_speed(const Model& m, const State& left, double s_plus);

/// Find the saturation X on the fixed-composition branch through `base` such
/// that sigma(X, base) equals the target characteristic speed of `base`.
/// When the target is the saturation family's own speed, the trivial double
/// root at base.s is deflated away.
std::optional<double> extension_point(const Model& m, const State& base, double lambda_target);

/// Annotated fixed-composition backward wave curve: all candidate left
/// saturations jumping INTO the given right state.
struct BackwardPoint {
    double s_left = 0.0;
    double sigma = 0.0;
    bool scalar_admissible = false;         ///< one-sided chord condition over the jump
    std::vector<bool> char_left, char_right;
};

std::vector<BackwardPoint> backward_bl_shock(const Model& m, const State& right, int samples,
                                             double u_left = 1.0);

}  // namespace chemflood
