#pragma once

#include <vector>

#include "chemflood/polynomial.hpp"

namespace chemflood {

/// Fractional-flow value and the partial derivatives used by the wave
/// analysis: f, f_s, f_ss, and the mixed partials with respect to the
/// chemical variables.
struct FluxEval {
    double f = 0.0;
    double f_s = 0.0;
    double f_ss = 0.0;
    std::vector<double> f_y;   ///< d f / d y_k
    std::vector<double> f_sy;  ///< d^2 f / ds dy_k
};

/// Two-phase fractional-flow function built from Brooks&ndash;Corey relative
/// permeabilities and (possibly composition-dependent) phase viscosities.
///
///   s_e   = (s - s_wc) / (1 - s_wc), clamped to [0, 1]
///   k_rw  = s_e^(2/pore_index + 3)
///   k_ro  = (1 - s_e)^2 (1 - s_e^(2/pore_index + 1))
///   f     = (k_rw/mu_w) / (k_rw/mu_w + k_ro/mu_o)
class FractionalFlow {
public:
    FractionalFlow(double s_wc, double pore_index, Polynomial mu_w, Polynomial mu_o);

    double s_wc() const { return s_wc_; }
    double pore_index() const { return pore_index_; }
    const Polynomial& mu_w() const { return mu_w_; }
    const Polynomial& mu_o() const { return mu_o_; }

    /// True when neither viscosity depends on the chemical variables, so
    /// f is a function of saturation alone.
    bool saturation_only() const;

    /// Full evaluation with derivatives.
    FluxEval eval(double s, const std::vector<double>& y) const;

    /// Value-only convenience.
    double value(double s, const std::vector<double>& y) const;

private:
    double s_wc_ = 0.0;
    double pore_index_ = 2.0;
    Polynomial mu_w_, mu_o_;
};

}  // namespace chemflood
