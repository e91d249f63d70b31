#include "chemflood/eigen.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace chemflood {

namespace {

constexpr double kDegenerateTol = 1e-9;

/// Smallest right singular vector (kernel direction) of a square matrix.
Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    return svd.matrixV().col(M.cols() - 1);
}

/// Canonical sign: make the largest-magnitude entry of the reference block
/// positive.
void canonicalize(Eigen::VectorXd& vec, int ref_len) {
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < ref_len; ++i)
        if (std::abs(vec(i)) > best) { best = std::abs(vec(i)); imax = i; }
    if (vec(imax) < 0.0) vec = -vec;
}

}  // namespace

Reduction reduce(const Model& m, const State& U) {
    const int neq = m.neq();
    const int ny = m.ny();
    Reduction rd;
    rd.fe = m.flux_eval(U);

    rd.rho_w.resize(neq);
    rd.rho_o.resize(neq);
    rd.drho.resize(neq);
    rd.fhat.resize(neq);
    rd.dw.resize(neq, ny);
    rd.dox.resize(neq, ny);
    rd.drk.resize(neq, ny);
    for (int i = 0; i < neq; ++i) {
        const Species& sp = m.species[i];
        rd.rho_w(i) = sp.rho_w.value(U.y);
        rd.rho_o(i) = sp.rho_o.value(U.y);
        rd.drho(i) = rd.rho_w(i) - rd.rho_o(i);
        rd.fhat(i) = rd.rho_w(i) * rd.fe.f + rd.rho_o(i) * (1.0 - rd.fe.f);
        for (int k = 0; k < ny; ++k) {
            rd.dw(i, k) = sp.rho_w.deriv(U.y, k);
            rd.dox(i, k) = sp.rho_o.deriv(U.y, k);
            rd.drk(i, k) = sp.rho_r.deriv(U.y, k);
        }
    }

    // Stage-1 pivot: largest water/oleic density difference.
    rd.p1 = 0;
    for (int i = 1; i < neq; ++i)
        if (std::abs(rd.drho(i)) > std::abs(rd.drho(rd.p1))) rd.p1 = i;
    if (std::abs(rd.drho(rd.p1)) < 1e-300)
        throw NumericalError("elimination: all species have equal aqueous and oleic "
                             "densities at this composition (saturation column vanished)");

    // f-independent flux-column combination after stage 1.
    rd.fluxcol.resize(neq);
    for (int i = 0; i < neq; ++i)
        rd.fluxcol(i) = rd.rho_w(rd.p1) * rd.rho_o(i) - rd.rho_o(rd.p1) * rd.rho_w(i);

    rd.pN = -1;
    for (int i = 0; i < neq; ++i) {
        if (i == rd.p1) continue;
        if (rd.pN < 0 || std::abs(rd.fluxcol(i)) > std::abs(rd.fluxcol(rd.pN))) rd.pN = i;
    }
    if (std::abs(rd.fluxcol(rd.pN)) < 1e-300)
        throw NumericalError("elimination: velocity column vanished after stage 1 "
                             "(phase-flux rows are collinear at this composition)");

    for (int i = 0; i < neq; ++i)
        if (i != rd.p1 && i != rd.pN) rd.rrows.push_back(i);

    // Stage-1 combinations (meaningful for rows != p1).
    rd.gw.setZero(neq, ny);
    rd.go.setZero(neq, ny);
    rd.gr.setZero(neq, ny);
    for (int i = 0; i < neq; ++i) {
        if (i == rd.p1) continue;
        for (int k = 0; k < ny; ++k) {
            rd.gw(i, k) = rd.dw(i, k) * rd.drho(rd.p1) - rd.dw(rd.p1, k) * rd.drho(i);
            rd.go(i, k) = rd.dox(i, k) * rd.drho(rd.p1) - rd.dox(rd.p1, k) * rd.drho(i);
            rd.gr(i, k) = (1.0 - m.phi) *
                          (rd.drk(i, k) * rd.drho(rd.p1) - rd.drk(rd.p1, k) * rd.drho(i));
        }
    }

    // Stage-2 combinations for the remaining rows.
    const int nr = static_cast<int>(rd.rrows.size());
    rd.cw.resize(nr, ny);
    rd.co.resize(nr, ny);
    rd.cr.resize(nr, ny);
    for (int r = 0; r < nr; ++r) {
        const int i = rd.rrows[r];
        for (int k = 0; k < ny; ++k) {
            rd.cw(r, k) = rd.gw(i, k) * rd.fluxcol(rd.pN) - rd.gw(rd.pN, k) * rd.fluxcol(i);
            rd.co(r, k) = rd.go(i, k) * rd.fluxcol(rd.pN) - rd.go(rd.pN, k) * rd.fluxcol(i);
            rd.cr(r, k) = rd.gr(i, k) * rd.fluxcol(rd.pN) - rd.gr(rd.pN, k) * rd.fluxcol(i);
        }
    }

    // Reduced pencil M(anchor) = P - anchor Q.  The rock-adsorption combos add
    // corrections proportional to 1/(s - f).
    rd.P = rd.co;
    rd.Q = rd.co - rd.cw;
    if (rd.cr.cwiseAbs().maxCoeff() > 0.0) {
        const double sf = U.s - rd.fe.f;
        if (std::abs(sf) < 1e-12 * std::max(1.0, std::abs(U.s)))
            throw NumericalError("reduced pencil undefined: state lies on the locus f = s "
                                 "and the rock-adsorbed densities vary with composition");
        rd.P -= rd.cr * (rd.fe.f / (m.phi * sf));
        rd.Q -= rd.cr * (1.0 / (m.phi * sf));
    }
    return rd;
}

namespace {

struct AnchorSolution {
    double alpha, beta;  // anchor = alpha/beta
    Eigen::VectorXd v, w;
};

std::vector<AnchorSolution> solve_reduced(const Reduction& rd) {
    const int ny = rd.P.rows();
    std::vector<AnchorSolution> out;
    if (ny == 1) {
        AnchorSolution a;
        a.alpha = rd.P(0, 0);
        a.beta = rd.Q(0, 0);
        a.v = Eigen::VectorXd::Ones(1);
        a.w = Eigen::VectorXd::Ones(1);
        out.push_back(a);
    } else {
        Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
        ges.compute(rd.P, rd.Q, false);
        const auto alphas = ges.alphas();
        const auto betas = ges.betas();
        const double scale = std::max(rd.P.cwiseAbs().maxCoeff(), rd.Q.cwiseAbs().maxCoeff());
        for (int i = 0; i < alphas.size(); ++i) {
            const double re = alphas(i).real(), im = alphas(i).imag();
            const double mag = std::max({std::abs(re), std::abs(betas(i)) , 1e-30 * scale});
            if (std::abs(im) > 1e-8 * mag)
                throw NumericalError("reduced pencil has complex anchors: state is outside "
                                     "the strictly hyperbolic region");
            AnchorSolution a;
            a.alpha = re;
            a.beta = betas(i);
            Eigen::MatrixXd M = a.beta * rd.P - a.alpha * rd.Q;
            const double mscale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
            a.v = kernel_vector(M / mscale);
            a.w = kernel_vector((M / mscale).transpose());
            out.push_back(a);
        }
    }
    for (auto& a : out)
        if (a.beta < 0.0 || (a.beta == 0.0 && a.alpha < 0.0)) { a.alpha = -a.alpha; a.beta = -a.beta; }
    std::sort(out.begin(), out.end(), [](const AnchorSolution& x, const AnchorSolution& y) {
        const bool xf = x.beta != 0.0, yf = y.beta != 0.0;
        if (xf && yf) return x.alpha / x.beta < y.alpha / y.beta;
        if (!xf && !yf) return false;
        return yf ? false : true;  // finite anchors first, infinite last
    });
    return out;
}

}  // namespace

EigenDecomposition eigen_at(const Model& m, const State& U) {
    const int neq = m.neq();
    const int ny = m.ny();
    EigenDecomposition dec;
    dec.red = reduce(m, U);
    const Reduction& rd = dec.red;
    const FluxEval& fe = rd.fe;
    const double u = U.u, s = U.s, phi = m.phi;

    const Eigen::MatrixXd A = m.flux_jacobian(U);
    const Eigen::MatrixXd B = m.accumulation_jacobian(U);

    auto finish_pair = [&](EigenPair& p) {
        canonicalize(p.r, neq - 1);  // reference block: the (s, y) components
        canonicalize(p.l, neq);
        p.residual = (A * p.r - p.lambda * (B * p.r)).norm();
    };

    // Saturation family: speed (u/phi) f_s, right eigenvector e_1 exactly.
    {
        EigenPair p;
        p.family = 0;
        p.is_saturation = true;
        p.lambda = u / phi * fe.f_s;
        p.anchor = std::numeric_limits<double>::quiet_NaN();
        p.anchor_alpha = std::numeric_limits<double>::quiet_NaN();
        p.anchor_beta = std::numeric_limits<double>::quiet_NaN();
        p.r = Eigen::VectorXd::Zero(neq);
        p.r(0) = 1.0;
        Eigen::MatrixXd G = A - p.lambda * B;
        const double gscale = std::max(G.cwiseAbs().maxCoeff(), 1e-300);
        p.l = kernel_vector((G / gscale).transpose());
        p.degenerate = false;
        finish_pair(p);
        dec.pairs.push_back(std::move(p));
    }

    // Chemical families from the reduced pencil.
    const auto anchors = solve_reduced(rd);
    int fam = 1;
    for (const auto& a : anchors) {
        EigenPair p;
        p.family = fam++;
        p.is_saturation = false;
        p.anchor_alpha = a.alpha;
        p.anchor_beta = a.beta;
        p.anchor = (a.beta != 0.0) ? a.alpha / a.beta
                                   : std::numeric_limits<double>::infinity();
        const double den = a.beta * s - a.alpha;
        if (std::abs(den) < 1e-14 * std::max(std::abs(a.beta * s), std::abs(a.alpha)) ||
            den == 0.0)
            throw NumericalError("anchor resonance: anchor coincides with the saturation "
                                 "value, the secant speed is undefined");
        p.lambda = u / phi * (a.beta * fe.f - a.alpha) / den;
        p.v = a.v;
        p.w = a.w;

        // Back-substitution for the full right eigenvector.
        const double xi_sat = u * fe.f_s - phi * p.lambda;
        const double xi_w = u * fe.f - phi * p.lambda * s;
        const double xi_o = u * (1.0 - fe.f) - phi * p.lambda * (1.0 - s);

        double num_u = 0.0;
        for (int k = 0; k < ny; ++k)
            num_u += (rd.gw(rd.pN, k) * xi_w + rd.go(rd.pN, k) * xi_o -
                      rd.gr(rd.pN, k) * p.lambda) * a.v(k);
        const double r_u = -num_u / rd.fluxcol(rd.pN);

        double num_s = rd.fhat(rd.p1) * r_u;
        for (int k = 0; k < ny; ++k)
            num_s += (rd.dw(rd.p1, k) * xi_w + rd.dox(rd.p1, k) * xi_o -
                      (1.0 - m.phi) * rd.drk(rd.p1, k) * p.lambda +
                      u * rd.drho(rd.p1) * fe.f_y[k]) * a.v(k);
        const double den_s = rd.drho(rd.p1) * xi_sat;
        if (std::abs(den_s) < 1e-300)
            throw NumericalError("family coincidence: a chemical speed equals the "
                                 "saturation speed, eigenvector back-substitution degenerates");
        const double r_s = -num_s / den_s;

        p.r.resize(neq);
        p.r(0) = r_s;
        for (int k = 0; k < ny; ++k) p.r(1 + k) = a.v(k);
        p.r(neq - 1) = r_u;
        const double wave_norm = p.r.head(neq - 1).norm();
        if (!(wave_norm > 0.0))
            throw NumericalError("degenerate eigenvector: the (s, y) block vanished");
        p.r /= wave_norm;

        // Left eigenvector assembled from the elimination row operations.
        p.l = Eigen::VectorXd::Zero(neq);
        double acc_pN = 0.0, acc_p1 = 0.0;
        for (size_t rix = 0; rix < rd.rrows.size(); ++rix) {
            const int i = rd.rrows[rix];
            p.l(i) = a.w(rix) * rd.fluxcol(rd.pN) * rd.drho(rd.p1);
            acc_pN += a.w(rix) * rd.fluxcol(i);
            acc_p1 += a.w(rix) * (rd.fluxcol(i) * rd.drho(rd.pN) -
                                  rd.fluxcol(rd.pN) * rd.drho(i));
        }
        p.l(rd.pN) = -rd.drho(rd.p1) * acc_pN;
        p.l(rd.p1) = acc_p1;
        const double lnorm = p.l.norm();
        if (!(lnorm > 0.0))
            throw NumericalError("degenerate left eigenvector from the elimination assembly");
        p.l /= lnorm;

        p.degenerate = (a.beta != 0.0) &&
                       (std::abs(p.anchor) <= kDegenerateTol ||
                        std::abs(p.anchor - 1.0) <= kDegenerateTol);
        finish_pair(p);
        dec.pairs.push_back(std::move(p));
    }
    return dec;
}

std::vector<double> eigenvalues_at(const Model& m, const State& U) {
    Reduction rd = reduce(m, U);
    std::vector<double> out;
    out.push_back(U.u / m.phi * rd.fe.f_s);
    for (const auto& a : solve_reduced(rd)) {
        const double den = a.beta * U.s - a.alpha;
        if (den == 0.0)
            throw NumericalError("anchor resonance: anchor coincides with the saturation "
                                 "value, the secant speed is undefined");
        out.push_back(U.u / m.phi * (a.beta * rd.fe.f - a.alpha) / den);
    }
    return out;
}

namespace {

/// d(reduced pencil)/dy_j evaluated with the species polynomials' second
/// partials.  Valid wherever the pivot choices are locally constant.
void pencil_y_derivative(const Model& m, const State& U, const Reduction& rd, int j,
                         Eigen::MatrixXd& dP, Eigen::MatrixXd& dQ) {
    const int neq = m.neq();
    const int ny = m.ny();

    Eigen::VectorXd ddrho(neq), dnu(neq);
    Eigen::MatrixXd dgw = Eigen::MatrixXd::Zero(neq, ny);
    Eigen::MatrixXd dgo = Eigen::MatrixXd::Zero(neq, ny);
    Eigen::MatrixXd dgr = Eigen::MatrixXd::Zero(neq, ny);

    for (int i = 0; i < neq; ++i) ddrho(i) = rd.dw(i, j) - rd.dox(i, j);
    for (int i = 0; i < neq; ++i)
        dnu(i) = rd.dw(rd.p1, j) * rd.rho_o(i) + rd.rho_w(rd.p1) * rd.dox(i, j) -
                 rd.dox(rd.p1, j) * rd.rho_w(i) - rd.rho_o(rd.p1) * rd.dw(i, j);

    for (int i = 0; i < neq; ++i) {
        if (i == rd.p1) continue;
        const Species& si = m.species[i];
        const Species& sp = m.species[rd.p1];
        for (int k = 0; k < ny; ++k) {
            const double dw2_i = si.rho_w.deriv2(U.y, k, j);
            const double dw2_p = sp.rho_w.deriv2(U.y, k, j);
            const double do2_i = si.rho_o.deriv2(U.y, k, j);
            const double do2_p = sp.rho_o.deriv2(U.y, k, j);
            const double dr2_i = si.rho_r.deriv2(U.y, k, j);
            const double dr2_p = sp.rho_r.deriv2(U.y, k, j);
            dgw(i, k) = dw2_i * rd.drho(rd.p1) + rd.dw(i, k) * ddrho(rd.p1) -
                        dw2_p * rd.drho(i) - rd.dw(rd.p1, k) * ddrho(i);
            dgo(i, k) = do2_i * rd.drho(rd.p1) + rd.dox(i, k) * ddrho(rd.p1) -
                        do2_p * rd.drho(i) - rd.dox(rd.p1, k) * ddrho(i);
            dgr(i, k) = (1.0 - m.phi) * (dr2_i * rd.drho(rd.p1) + rd.drk(i, k) * ddrho(rd.p1) -
                                         dr2_p * rd.drho(i) - rd.drk(rd.p1, k) * ddrho(i));
        }
    }

    const int nr = static_cast<int>(rd.rrows.size());
    Eigen::MatrixXd dcw(nr, ny), dco(nr, ny), dcr(nr, ny);
    for (int r = 0; r < nr; ++r) {
        const int i = rd.rrows[r];
        for (int k = 0; k < ny; ++k) {
            dcw(r, k) = dgw(i, k) * rd.fluxcol(rd.pN) + rd.gw(i, k) * dnu(rd.pN) -
                        dgw(rd.pN, k) * rd.fluxcol(i) - rd.gw(rd.pN, k) * dnu(i);
            dco(r, k) = dgo(i, k) * rd.fluxcol(rd.pN) + rd.go(i, k) * dnu(rd.pN) -
                        dgo(rd.pN, k) * rd.fluxcol(i) - rd.go(rd.pN, k) * dnu(i);
            dcr(r, k) = dgr(i, k) * rd.fluxcol(rd.pN) + rd.gr(i, k) * dnu(rd.pN) -
                        dgr(rd.pN, k) * rd.fluxcol(i) - rd.gr(rd.pN, k) * dnu(i);
        }
    }

    dP = dco;
    dQ = dco - dcw;
    if (rd.cr.cwiseAbs().maxCoeff() > 0.0 || dcr.cwiseAbs().maxCoeff() > 0.0) {
        const double sf = U.s - rd.fe.f;
        const double fy = rd.fe.f_y[j];
        dP -= dcr * (rd.fe.f / (m.phi * sf)) + rd.cr * (fy * U.s / (m.phi * sf * sf));
        dQ -= dcr * (1.0 / (m.phi * sf)) + rd.cr * (fy / (m.phi * sf * sf));
    }
}

}  // namespace

DirectionalDerivative directional_derivative(const Model& m, const State& U,
                                             const EigenPair& pair, const Reduction& rd) {
    const int neq = m.neq();
    const int ny = m.ny();
    const double u = U.u, s = U.s, phi = m.phi;
    const FluxEval& fe = rd.fe;

    DirectionalDerivative dd;
    dd.grad.resize(neq);
    dd.anchor_y = Eigen::VectorXd::Zero(ny);

    if (pair.is_saturation) {
        dd.grad(0) = u / phi * fe.f_ss;
        for (int k = 0; k < ny; ++k) dd.grad(1 + k) = u / phi * fe.f_sy[k];
        dd.grad(neq - 1) = fe.f_s / phi;
        dd.dot = dd.grad.dot(pair.r);
        dd.genuinity_factor = std::numeric_limits<double>::quiet_NaN();
        dd.anchor_s = std::numeric_limits<double>::quiet_NaN();
        dd.anchor_y.setConstant(std::numeric_limits<double>::quiet_NaN());
        return dd;
    }

    if (pair.anchor_beta == 0.0)
        throw NumericalError("anchor at infinity: speed gradient is not implemented "
                             "for infinite anchors");
    const double anchor = pair.anchor_alpha / pair.anchor_beta;

    // Implicit differentiation of w' M(anchor; s, y) v = 0 with M = P - anchor Q.
    const double wQv = pair.w.dot(rd.Q * pair.v);
    if (std::abs(wQv) < 1e-300)
        throw NumericalError("anchor derivative undefined: the reduced pencil is "
                             "defective at this state");

    double dMs_wv = 0.0;
    if (rd.cr.cwiseAbs().maxCoeff() > 0.0) {
        const double sf = s - fe.f;
        // dP/ds and dQ/ds act through the rock-adsorption corrections only.
        Eigen::MatrixXd dPs = -rd.cr * ((fe.f_s * s - fe.f) / (m.phi * sf * sf));
        Eigen::MatrixXd dQs = rd.cr * ((1.0 - fe.f_s) / (m.phi * sf * sf));
        dMs_wv = pair.w.dot((dPs - anchor * dQs) * pair.v);
    }
    dd.anchor_s = dMs_wv / wQv;

    for (int j = 0; j < ny; ++j) {
        Eigen::MatrixXd dP, dQ;
        pencil_y_derivative(m, U, rd, j, dP, dQ);
        dd.anchor_y(j) = pair.w.dot((dP - anchor * dQ) * pair.v) / wQv;
    }

    const double sml = s - anchor;
    const double lam_sat = u / phi * fe.f_s;
    dd.grad(0) = (lam_sat - pair.lambda) / sml + u / phi * dd.anchor_s * (fe.f - s) / (sml * sml);
    for (int j = 0; j < ny; ++j)
        dd.grad(1 + j) = u / phi * (fe.f_y[j] / sml + dd.anchor_y(j) * (fe.f - s) / (sml * sml));
    dd.grad(neq - 1) = pair.lambda / u;
    dd.dot = dd.grad.dot(pair.r);

    const double sf = s - fe.f;
    const double gap = lam_sat - pair.lambda;
    if (std::abs(sf) > 1e-12 && std::abs(gap) > 1e-12 * std::max(1.0, std::abs(pair.lambda)))
        dd.genuinity_factor = dd.dot * phi * sml * sml / (sf * gap);
    else
        dd.genuinity_factor = std::numeric_limits<double>::quiet_NaN();
    return dd;
}

DirectionalDerivative directional_derivative(const Model& m, const State& U, int family) {
    EigenDecomposition dec = eigen_at(m, U);
    for (const auto& p : dec.pairs)
        if (p.family == family) return directional_derivative(m, U, p, dec.red);
    throw NumericalError("directional derivative: no such family index at this state");
}

}  // namespace chemflood
