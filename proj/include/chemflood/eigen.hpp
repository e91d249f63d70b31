#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chemflood/model.hpp"

namespace chemflood {

/// Two-stage row elimination of the quasilinear pencil at a state.
///
/// Stage 1 uses the species row with the largest water/oleic density
/// difference to clear the saturation column; stage 2 uses the row with the
/// largest remaining flux-column entry to clear the velocity column.  What is
/// left is an (n-1)x(n-1) pencil in the chemical block whose eigenvalues are
/// the "anchor" values: the chemical family speed is the slope of the secant
/// of the fractional-flow curve through the point (anchor, anchor), scaled by
/// u/phi.
struct Reduction {
    int p1 = -1;             ///< stage-1 pivot row (saturation column)
    int pN = -1;             ///< stage-2 pivot row (velocity column)
    std::vector<int> rrows;  ///< remaining rows, ascending (size n-1)

    Eigen::VectorXd drho;     ///< rho_w - rho_o per species
    Eigen::VectorXd rho_w, rho_o;
    Eigen::VectorXd fhat;     ///< phase-flux column Fhat_i
    Eigen::VectorXd fluxcol;  ///< flux-column combination nu_i (f-independent)

    Eigen::MatrixXd dw, dox, drk;  ///< (n+1)x(n-1) partials of rho_w, rho_o, rho_r

    Eigen::MatrixXd gw, go, gr;  ///< stage-1 combos per original row (gr includes 1-phi)
    Eigen::MatrixXd cw, co, cr;  ///< stage-2 combos, rows follow rrows

    FluxEval fe;  ///< flux evaluation at the state

    /// Reduced pencil M(anchor) = P - anchor * Q.
    Eigen::MatrixXd P, Q;
};

Reduction reduce(const Model& m, const State& U);

/// One characteristic family at a state.
struct EigenPair {
    int family = 0;             ///< 0 = saturation, then chemical by ascending anchor
    bool is_saturation = false;
    double lambda = 0.0;        ///< characteristic speed
    double anchor = 0.0;        ///< anchor value (NaN for the saturation family)
    double anchor_alpha = 0.0;  ///< projective representation: anchor = alpha/beta
    double anchor_beta = 0.0;
    Eigen::VectorXd r;  ///< right eigenvector, (s,y)-part unit norm, canonical sign
    Eigen::VectorXd l;  ///< left eigenvector, unit norm, canonical sign
    Eigen::VectorXd v;  ///< chemical kernel vector of the reduced pencil (empty for saturation)
    Eigen::VectorXd w;  ///< left kernel vector of the reduced pencil
    bool degenerate = false;  ///< anchor within 1e-9 of 0 or 1 (linearly degenerate family)
    double residual = 0.0;    ///< || A r - lambda B r ||
};

struct EigenDecomposition {
    std::vector<EigenPair> pairs;  ///< size n, saturation family first
    Reduction red;
};

/// Full eigenstructure at a state via the elimination reduction.
EigenDecomposition eigen_at(const Model& m, const State& U);

/// Characteristic speeds only (cheaper; skips eigenvectors).
std::vector<double> eigenvalues_at(const Model& m, const State& U);

/// Gradient of one family's speed and its directional derivative along the
/// family's own eigenvector.
struct DirectionalDerivative {
    Eigen::VectorXd grad;           ///< d lambda / d(s, y, u)
    double dot = 0.0;               ///< grad . r  (genuine-nonlinearity indicator)
    double genuinity_factor = 0.0;  ///< smooth factor of the chemical product form (NaN if n/a)
    double anchor_s = 0.0;          ///< d anchor / ds (chemical families)
    Eigen::VectorXd anchor_y;       ///< d anchor / dy
};

DirectionalDerivative directional_derivative(const Model& m, const State& U,
                                             const EigenPair& pair, const Reduction& red);

/// Convenience: decomposition plus directional derivative of one family.
DirectionalDerivative directional_derivative(const Model& m, const State& U, int family);

}  // namespace chemflood
