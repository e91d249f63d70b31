#include "chemflood/flux.hpp"

#include <cmath>
#include <stdexcept>

namespace chemflood {

FractionalFlow::FractionalFlow(double s_wc, double pore_index, Polynomial mu_w, Polynomial mu_o)
    : s_wc_(s_wc), pore_index_(pore_index), mu_w_(std::move(mu_w)), mu_o_(std::move(mu_o)) {}

bool FractionalFlow::saturation_only() const {
    return mu_w_.is_constant() && mu_o_.is_constant();
}

double FractionalFlow::value(double s, const std::vector<double>& y) const {
    return eval(s, y).f;
}

FluxEval FractionalFlow::eval(double s, const std::vector<double>& y) const {
    const int m = mu_w_.nvars();
    FluxEval out;
    out.f_y.assign(m, 0.0);
    out.f_sy.assign(m, 0.0);

    const double span = 1.0 - s_wc_;
    double se = (s - s_wc_) / span;
    bool clamped = false;
    if (se < 0.0) { se = 0.0; clamped = true; }
    if (se > 1.0) { se = 1.0; clamped = true; }

    const double e = 2.0 / pore_index_ + 3.0;  // water exponent
    const double q = 2.0 / pore_index_ + 1.0;  // oleic inner exponent

    // Relative permeabilities and their derivatives with respect to s_e.
    const double krw = std::pow(se, e);
    const double krw1 = clamped ? 0.0 : e * std::pow(se, e - 1.0);
    const double krw2 = clamped ? 0.0 : e * (e - 1.0) * std::pow(se, e - 2.0);

    const double one = 1.0 - se;
    const double seq = std::pow(se, q);
    const double kro = one * one * (1.0 - seq);
    const double seq1 = (se > 0.0) ? q * std::pow(se, q - 1.0) : (q == 1.0 ? 1.0 : 0.0);
    const double seq2 = (se > 0.0) ? q * (q - 1.0) * std::pow(se, q - 2.0) : 0.0;
    const double kro1 = clamped ? 0.0 : -2.0 * one * (1.0 - seq) - one * one * seq1;
    const double kro2 = clamped ? 0.0 : 2.0 * (1.0 - seq) + 4.0 * one * seq1 - one * one * seq2;

    const double muw = mu_w_.value(y);
    const double muo = mu_o_.value(y);
    if (!(muw > 0.0) || !(muo > 0.0))
        throw std::domain_error("phase viscosity is not positive at the evaluation point");

    // Phase mobilities a (water) and b (oleic) as functions of (s, y).
    const double a = krw / muw;
    const double b = kro / muo;
    const double a_s = krw1 / (span * muw);
    const double b_s = kro1 / (span * muo);
    const double a_ss = krw2 / (span * span * muw);
    const double b_ss = kro2 / (span * span * muo);

    const double d = a + b;
    if (!(d > 0.0))
        throw std::domain_error("total mobility vanished during flux evaluation");
    const double d_s = a_s + b_s;
    const double d_ss = a_ss + b_ss;

    const double f = a / d;
    const double f_s = (a_s - f * d_s) / d;
    const double f_ss = (a_ss - 2.0 * f_s * d_s - f * d_ss) / d;

    out.f = f;
    out.f_s = f_s;
    out.f_ss = f_ss;

    for (int k = 0; k < m; ++k) {
        const double muw_k = mu_w_.deriv(y, k);
        const double muo_k = mu_o_.deriv(y, k);
        if (muw_k == 0.0 && muo_k == 0.0) continue;
        const double a_k = -krw * muw_k / (muw * muw);
        const double b_k = -kro * muo_k / (muo * muo);
        const double a_sk = -krw1 * muw_k / (span * muw * muw);
        const double b_sk = -kro1 * muo_k / (span * muo * muo);
        const double d_k = a_k + b_k;
        const double d_sk = a_sk + b_sk;
        const double f_k = (a_k - f * d_k) / d;
        out.f_y[k] = f_k;
        out.f_sy[k] = (a_sk - f_k * d_s - f_s * d_k - f * d_sk) / d;
    }
    return out;
}

}  // namespace chemflood
