#include "chemflood/hugoniot.hpp"

#include <algorithm>
#include <cmath>

#include "chemflood/eigen.hpp"
#include "chemflood/numerics.hpp"

namespace chemflood {

namespace {

/// Jump rows Phi_i = ([G_i], -Fhat_i(right), Fhat_i(left)); a discontinuity
/// exists iff (sigma, u+, u-) is orthogonal to every row, i.e. the rows have
/// rank at most two.
Eigen::MatrixXd jump_rows(const Model& m, const State& left, const State& plus) {
    Eigen::VectorXd Gm = m.accumulation(left);
    Eigen::VectorXd Gp = m.accumulation(plus);
    Eigen::VectorXd Fm = m.fhat(left);
    Eigen::VectorXd Fp = m.fhat(plus);
    Eigen::MatrixXd Phi(m.neq(), 3);
    Phi.col(0) = Gp - Gm;
    Phi.col(1) = -Fp;
    Phi.col(2) = Fm;
    return Phi;
}

double smallest_sv_2x3(const Eigen::Matrix<double, 2, 3>& M) {
    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(M);
    return svd.singularValues()(1);
}

}  // namespace

RHResult rh_solve(const Model& m, const State& left, double s_plus,
                  const std::vector<double>& y_plus) {
    State plus{s_plus, y_plus, left.u};
    RHResult out;
    out.residual.resize(m.neq());

    double ydiff = 0.0, yscale = 1.0;
    for (int k = 0; k < m.ny(); ++k) {
        ydiff = std::max(ydiff, std::abs(y_plus[k] - left.y[k]));
        yscale = std::max(yscale, std::abs(left.y[k]));
    }
    out.same_composition = ydiff <= 1e-14 * yscale;

    Eigen::VectorXd Fm = m.fhat(left);
    if (out.same_composition) {
        // Velocity passes through; the speed is the chord slope of f.
        const double ds = s_plus - left.s;
        if (std::abs(ds) < 1e-300)
            throw NumericalError("jump solve: zero jump has no defined speed");
        FluxEval fl = m.flux().eval(left.s, left.y);
        FluxEval fp = m.flux().eval(s_plus, y_plus);
        out.u_plus = left.u;
        out.sigma = left.u * (fp.f - fl.f) / (m.phi * ds);
        out.sigma_spread = 0.0;
    } else {
        Eigen::MatrixXd Phi = jump_rows(m, left, plus);
        Eigen::VectorXd dG = Phi.col(0);
        Eigen::VectorXd Fp = -Phi.col(1);

        // Velocity ratio from the best-conditioned equation pair.
        double best_den = 0.0, best_num = 0.0;
        for (int i = 0; i < m.neq(); ++i) {
            for (int j = i + 1; j < m.neq(); ++j) {
                const double den = dG(j) * Fp(i) - dG(i) * Fp(j);
                if (std::abs(den) > std::abs(best_den)) {
                    best_den = den;
                    best_num = dG(j) * Fm(i) - dG(i) * Fm(j);
                }
            }
        }
        if (std::abs(best_den) < 1e-300)
            throw NumericalError("jump solve: velocity ratio is undetermined "
                                 "(all equation pairs are degenerate)");
        const double ratio = best_num / best_den;
        out.u_plus = ratio * left.u;

        // Speed from the largest accumulation jump; spread across the others.
        int imax = 0;
        for (int i = 1; i < m.neq(); ++i)
            if (std::abs(dG(i)) > std::abs(dG(imax))) imax = i;
        if (std::abs(dG(imax)) < 1e-300)
            throw NumericalError("jump solve: all accumulation jumps vanish");
        out.sigma = (out.u_plus * Fp(imax) - left.u * Fm(imax)) / dG(imax);

        double smin = out.sigma, smax = out.sigma;
        for (int i = 0; i < m.neq(); ++i) {
            if (std::abs(dG(i)) < 1e-8 * std::abs(dG(imax))) continue;
            const double si = (out.u_plus * Fp(i) - left.u * Fm(i)) / dG(i);
            smin = std::min(smin, si);
            smax = std::max(smax, si);
        }
        out.sigma_spread = smax - smin;
    }

    // Full residuals of sigma [G] = [u Fhat].
    State plus_u = plus;
    plus_u.u = out.u_plus;
    Eigen::VectorXd Gm = m.accumulation(left);
    Eigen::VectorXd Gp = m.accumulation(plus_u);
    Eigen::VectorXd Fp = m.fhat(plus_u);
    out.scale = 1e-300;
    for (int i = 0; i < m.neq(); ++i) {
        const double lhs = out.sigma * (Gp(i) - Gm(i));
        const double rhs = out.u_plus * Fp(i) - left.u * Fm(i);
        out.residual(i) = lhs - rhs;
        out.scale = std::max(out.scale, std::abs(lhs) + std::abs(rhs));
    }
    return out;
}

namespace {

Eigen::MatrixXd normalized_jump_rows(const Model& m, const State& left,
                                     const Eigen::VectorXd& z) {
    State plus;
    plus.s = z(0);
    plus.y.assign(m.ny(), 0.0);
    for (int k = 0; k < m.ny(); ++k) plus.y[k] = z(1 + k);
    plus.u = left.u;
    Eigen::MatrixXd Phi = jump_rows(m, left, plus);
    // Normalize rows for conditioning.  The flux columns never vanish, so the
    // norms stay bounded away from zero and the scaling is smooth in z.
    for (int i = 0; i < Phi.rows(); ++i) {
        double nrm = Phi.row(i).norm();
        if (nrm > 1e-300) Phi.row(i) /= nrm;
    }
    return Phi;
}

/// Best-conditioned basis pair: maximize the smallest singular value of the
/// stacked 2x3 row pair.
std::pair<int, int> pick_row_pair(const Eigen::MatrixXd& Phi) {
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < Phi.rows(); ++i) {
        for (int j = i + 1; j < Phi.rows(); ++j) {
            Eigen::Matrix<double, 2, 3> S;
            S.row(0) = Phi.row(i);
            S.row(1) = Phi.row(j);
            double sv = smallest_sv_2x3(S);
            if (sv > best) {
                best = sv;
                bi = i;
                bj = j;
            }
        }
    }
    return {bi, bj};
}

/// Rank-two residuals with a FIXED basis pair.  Continuation needs the same
/// smooth function along a whole branch; re-picking the pair per evaluation
/// would make the residual (and its finite-difference Jacobian) discontinuous.
Eigen::VectorXd residuals_with_pair(const Model& m, const State& left, const Eigen::VectorXd& z,
                                    int bi, int bj) {
    Eigen::MatrixXd Phi = normalized_jump_rows(m, left, z);
    Eigen::VectorXd res(Phi.rows() - 2);
    int idx = 0;
    for (int k = 0; k < Phi.rows(); ++k) {
        if (k == bi || k == bj) continue;
        Eigen::Matrix3d D;
        D.row(0) = Phi.row(bi);
        D.row(1) = Phi.row(bj);
        D.row(2) = Phi.row(k);
        res(idx++) = D.determinant();
    }
    return res;
}

}  // namespace

Eigen::VectorXd rh_residuals(const Model& m, const State& left, const Eigen::VectorXd& z) {
    Eigen::MatrixXd Phi = normalized_jump_rows(m, left, z);
    auto [bi, bj] = pick_row_pair(Phi);
    return residuals_with_pair(m, left, z, bi, bj);
}

namespace {

/// Gauss-Newton projection of a seed point onto the locus.
bool correct_onto_locus(const Model& m, const State& left, Eigen::VectorXd& z, double tol,
                        int bi, int bj) {
    auto res = [&](const Eigen::VectorXd& zz) {
        return residuals_with_pair(m, left, zz, bi, bj);
    };
    for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd H = res(z);
        if (H.cwiseAbs().maxCoeff() <= tol) return true;
        Eigen::MatrixXd J(H.size(), z.size());
        for (int j = 0; j < z.size(); ++j) {
            double h = 1e-7 * std::max(1.0, std::abs(z(j)));
            Eigen::VectorXd zp = z, zm = z;
            zp(j) += h;
            zm(j) -= h;
            J.col(j) = (res(zp) - res(zm)) / (2 * h);
        }
        Eigen::VectorXd dz =
            J.transpose() * (J * J.transpose())
                                .ldlt()
                                .solve(-H);
        if (!dz.allFinite()) return false;
        z += dz;
        if (dz.norm() < 1e-14) return res(z).cwiseAbs().maxCoeff() <= 10 * tol;
    }
    return res(z).cwiseAbs().maxCoeff() <= tol;
}

HugoniotBranch assemble_branch(const Model& m, const State& left,
                               const std::vector<Eigen::VectorXd>& pts,
                               const std::string& label, const std::string& stop) {
    HugoniotBranch br;
    br.label = label;
    br.stop_reason = stop;
    for (const auto& z : pts) {
        std::vector<double> yp(m.ny());
        for (int k = 0; k < m.ny(); ++k) yp[k] = z(1 + k);
        double norm2 = (z(0) - left.s) * (z(0) - left.s);
        for (int k = 0; k < m.ny(); ++k)
            norm2 += (yp[k] - left.y[k]) * (yp[k] - left.y[k]);
        if (norm2 < 1e-16) continue;  // skip the base point, where sigma is 0/0
        if (!m.in_domain(State{z(0), yp, left.u}, 1e-9)) continue;  // continuation stop point
        try {
            RHResult rh = rh_solve(m, left, z(0), yp);
            State right{z(0), yp, rh.u_plus};
            br.states.push_back(right);
            br.sigma.push_back(rh.sigma);
            br.u_ratio.push_back(rh.u_plus / left.u);
        } catch (const NumericalError&) {
            continue;
        }
    }
    return br;
}

}  // namespace

HugoniotBranch trace_hugoniot_from(const Model& m, const State& left,
                                   const Eigen::VectorXd& z_seed, const Eigen::VectorXd& dir,
                                   const std::string& label, const HugoniotOptions& opts) {
    auto keep = [&](const Eigen::VectorXd& z) {
        State st;
        st.s = z(0);
        st.y.assign(m.ny(), 0.0);
        for (int k = 0; k < m.ny(); ++k) st.y[k] = z(1 + k);
        return m.in_domain(st, 1e-9);
    };

    Eigen::VectorXd z0 = z_seed;
    {
        auto [bi, bj] = pick_row_pair(normalized_jump_rows(m, left, z0));
        if (!correct_onto_locus(m, left, z0, opts.tol, bi, bj))
            return HugoniotBranch{label, {}, {}, {}, "seed_off_locus"};
    }

    ContinuationOptions co;
    co.h0 = opts.step;
    co.h_max = 5 * opts.step;
    co.tol = opts.tol;
    co.max_points = opts.max_points;

    // The basis pair is frozen per tracing run so the residual stays smooth;
    // if it degenerates mid-curve the run stops "stuck" and is restarted from
    // the last point with a freshly picked pair.
    std::vector<Eigen::VectorXd> pts;
    Eigen::VectorXd dir_now = dir;
    std::string stop;
    for (int restart = 0; restart < 5; ++restart) {
        auto [bi, bj] = pick_row_pair(normalized_jump_rows(m, left, z0));
        auto H = [&m, &left, bi = bi, bj = bj](const Eigen::VectorXd& z) {
            return residuals_with_pair(m, left, z, bi, bj);
        };
        ContinuationResult cr = trace_curve(H, z0, dir_now, keep, co);
        const size_t base = pts.empty() ? 0 : 1;  // drop the duplicated restart point
        pts.insert(pts.end(), cr.points.begin() + base, cr.points.end());
        stop = cr.stop_reason;
        co.max_points = opts.max_points - static_cast<long>(pts.size());
        if (stop != "stuck" || cr.points.size() < 2 || co.max_points <= 0) break;
        z0 = cr.points.back();
        dir_now = (cr.points.back() - cr.points[cr.points.size() - 2]).normalized();
    }
    return assemble_branch(m, left, pts, label, stop);
}

std::vector<HugoniotBranch> trace_hugoniot(const Model& m, const State& left,
                                           const HugoniotOptions& opts) {
    EigenDecomposition dec = eigen_at(m, left);
    std::vector<HugoniotBranch> out;
    Eigen::VectorXd zL(m.n);
    zL(0) = left.s;
    for (int k = 0; k < m.ny(); ++k) zL(1 + k) = left.y[k];

    for (int fam = 0; fam < m.n; ++fam) {
        const Eigen::VectorXd rwave = dec.pairs[fam].r.head(m.n).normalized();
        std::vector<Eigen::VectorXd> merged;
        std::string stop_minus, stop_plus;
        for (int dir = -1; dir <= 1; dir += 2) {
            Eigen::VectorXd seed = zL + dir * opts.seed_offset * rwave;
            HugoniotBranch half = trace_hugoniot_from(m, left, seed, dir * rwave,
                                                      "family-" + std::to_string(fam), opts);
            std::vector<Eigen::VectorXd> zs;
            for (const auto& st : half.states) {
                Eigen::VectorXd z(m.n);
                z(0) = st.s;
                for (int k = 0; k < m.ny(); ++k) z(1 + k) = st.y[k];
                zs.push_back(z);
            }
            if (dir < 0) {
                std::reverse(zs.begin(), zs.end());
                merged = std::move(zs);
                stop_minus = half.stop_reason;
            } else {
                merged.insert(merged.end(), zs.begin(), zs.end());
                stop_plus = half.stop_reason;
            }
        }
        HugoniotBranch br = assemble_branch(m, left, merged, "family-" + std::to_string(fam),
                                            stop_minus + "|" + stop_plus);
        out.push_back(std::move(br));
    }
    return out;
}

LaxReport lax_classify(const Model& m, const State& left, const State& right, double sigma,
                       double char_tol) {
    LaxReport rep;
    rep.lambda_left = eigenvalues_at(m, left);
    rep.lambda_right = eigenvalues_at(m, right);
    std::sort(rep.lambda_left.begin(), rep.lambda_left.end());
    std::sort(rep.lambda_right.begin(), rep.lambda_right.end());
    const int n = m.n;
    const double tol = char_tol * std::max(1.0, std::abs(sigma));
    rep.char_left.assign(n, false);
    rep.char_right.assign(n, false);
    for (int k = 0; k < n; ++k) {
        rep.char_left[k] = std::abs(sigma - rep.lambda_left[k]) <= tol;
        rep.char_right[k] = std::abs(sigma - rep.lambda_right[k]) <= tol;
    }
    rep.classification = "none";
    for (int k = 0; k < n; ++k) {
        const bool core = rep.lambda_right[k] <= sigma + tol && sigma <= rep.lambda_left[k] + tol;
        const bool below = (k == 0) || (rep.lambda_left[k - 1] <= sigma + tol);
        const bool above = (k == n - 1) || (sigma <= rep.lambda_right[k + 1] + tol);
        if (core && below && above) {
            rep.family = k;
            rep.lax = true;
            rep.classification = rep.char_left[k] && rep.char_right[k]
                                     ? "contact(" + std::to_string(k) + ")"
                                     : std::to_string(k) + "-lax";
            break;
        }
    }
    return rep;
}

double bl_shock_speed(const Model& m, const State& left, double s_plus) {
    FluxEval fl = m.flux().eval(left.s, left.y);
    FluxEval fp = m.flux().eval(s_plus, left.y);
    return left.u * (fp.f - fl.f) / (m.phi * (s_plus - left.s));
}

std::optional<double> extension_point(const Model& m, const State& base, double lambda_target) {
    FluxEval fb = m.flux().eval(base.s, base.y);
    const double lam_sat = base.u / m.phi * fb.f_s;
    const bool deflate = std::abs(lambda_target - lam_sat) <=
                         1e-12 * std::max(1.0, std::abs(lam_sat));
    std::function<double(double)> g;
    if (deflate) {
        // sigma(X, base) = saturation speed of base has a double root at
        // base.s; the deflated function keeps only the tangent intersection.
        g = [&, fb](double s) {
            FluxEval fx = m.flux().eval(s, base.y);
            return fx.f - fb.f - fb.f_s * (s - base.s);
        };
    } else {
        g = [&, fb](double s) {
            FluxEval fx = m.flux().eval(s, base.y);
            return base.u * (fb.f - fx.f) / (m.phi * (base.s - s)) - lambda_target;
        };
    }
    const double lo = m.domain.s_lo, hi = m.domain.s_hi;
    const double skip = deflate ? 1e-4 : 1e-9;
    for (const auto& seg :
         {std::make_pair(lo, base.s - skip), std::make_pair(base.s + skip, hi)}) {
        if (seg.second - seg.first < 1e-6) continue;
        auto brackets = scan_sign_changes(g, seg.first, seg.second, 512);
        if (!brackets.empty())
            return bisect_root(g, brackets[0].first, brackets[0].second, 1e-14);
    }
    return std::nullopt;
}

std::vector<BackwardPoint> backward_bl_shock(const Model& m, const State& right, int samples,
                                             double u_left) {
    std::vector<BackwardPoint> out;
    FluxEval fr = m.flux().eval(right.s, right.y);
    for (int i = 0; i <= samples; ++i) {
        const double s =
            m.domain.s_lo + (m.domain.s_hi - m.domain.s_lo) * static_cast<double>(i) / samples;
        if (std::abs(s - right.s) < 1e-9) continue;
        BackwardPoint bp;
        bp.s_left = s;
        FluxEval fs = m.flux().eval(s, right.y);
        bp.sigma = u_left * (fr.f - fs.f) / (m.phi * (right.s - s));

        // One-sided chord (entropy) condition across the jump interval.
        bp.scalar_admissible = true;
        const int probes = 33;
        for (int p = 1; p < probes && bp.scalar_admissible; ++p) {
            const double v = s + (right.s - s) * static_cast<double>(p) / probes;
            const double chord =
                u_left * (m.flux().value(v, right.y) - fs.f) / (m.phi * (v - s));
            if (chord < bp.sigma - 1e-10 * std::max(1.0, std::abs(bp.sigma)))
                bp.scalar_admissible = false;
        }

        State lst{s, right.y, u_left};
        State rst{right.s, right.y, u_left};
        auto ll = eigenvalues_at(m, lst);
        auto lr = eigenvalues_at(m, rst);
        const double tol = 1e-9 * std::max(1.0, std::abs(bp.sigma));
        bp.char_left.assign(m.n, false);
        bp.char_right.assign(m.n, false);
        for (int k = 0; k < m.n; ++k) {
            bp.char_left[k] = std::abs(bp.sigma - ll[k]) <= tol;
            bp.char_right[k] = std::abs(bp.sigma - lr[k]) <= tol;
        }
        out.push_back(std::move(bp));
    }
    return out;
}

}  // namespace chemflood
