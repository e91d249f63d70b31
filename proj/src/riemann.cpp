#include "chemflood/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chemflood/eigen.hpp"
#include "chemflood/hugoniot.hpp"
#include "chemflood/numerics.hpp"
#include "chemflood/scalar_hull.hpp"

namespace chemflood {

std::string wave_kind_name(WaveKind k) {
    switch (k) {
        case WaveKind::Rarefaction: return "rarefaction";
        case WaveKind::Shock: return "shock";
        case WaveKind::Composite: return "composite";
        case WaveKind::Contact: return "contact";
        case WaveKind::Constant: return "constant";
    }
    return "?";
}

namespace {

double state_scale(const State& a) {
    double s = 1.0 + std::abs(a.s) + std::abs(a.u);
    for (double y : a.y) s += std::abs(y);
    return s;
}

double state_diff(const State& a, const State& b, bool with_u = true) {
    double d = std::abs(a.s - b.s);
    for (size_t k = 0; k < a.y.size(); ++k) d += std::abs(a.y[k] - b.y[k]);
    if (with_u) d += std::abs(a.u - b.u);
    return d;
}

std::string ordering_diag(const Model& m, const State& L, const State& R) {
    std::ostringstream os;
    os.precision(10);
    auto print = [&](const State& U) {
        os << "[";
        try {
            auto lam = eigenvalues_at(m, U);
            for (size_t i = 0; i < lam.size(); ++i) os << (i ? ", " : "") << lam[i];
        } catch (const NumericalError& e) {
            os << "unavailable: " << e.what();
        }
        os << "]";
    };
    os << "family speeds (saturation first, then chemical): left ";
    print(L);
    State Ru = R;
    Ru.u = L.u;
    os << ", right at the left state's velocity ";
    print(Ru);
    return os.str();
}

/// Scalar (fixed-composition) fan between two saturations: hull pieces mapped
/// to wave segments, with shocks attached to adjacent fans marked composite.
std::vector<WaveSegment> scalar_waves(const Model& m, const std::vector<double>& y, double u,
                                      double s_l, double s_r) {
    std::vector<WaveSegment> out;
    if (std::abs(s_r - s_l) < 1e-14) return out;
    auto g = [&](double s) { return m.flux().value(s, y); };
    auto dg = [&](double s) { return m.flux().eval(s, y).f_s; };
    std::vector<ScalarWavePiece> pieces = scalar_riemann(g, dg, s_l, s_r);
    const double scale = u / m.phi;

    for (size_t i = 0; i < pieces.size(); ++i) {
        const auto& p = pieces[i];
        WaveSegment seg;
        seg.family = 0;
        seg.left = State{p.s_l, y, u};
        seg.right = State{p.s_r, y, u};
        seg.speed_l = p.speed_l * scale;
        seg.speed_r = p.speed_r * scale;
        if (p.is_shock) {
            seg.kind = WaveKind::Shock;
            seg.sigma = seg.speed_l;
            const double tol = 1e-9 * std::max(1.0, std::abs(seg.sigma));
            if (i > 0 && !pieces[i - 1].is_shock &&
                std::abs(p.speed_l - pieces[i - 1].speed_r) * scale <= tol) {
                seg.kind = WaveKind::Composite;
                seg.note = "left-characteristic";
            }
            if (i + 1 < pieces.size() && !pieces[i + 1].is_shock &&
                std::abs(p.speed_r - pieces[i + 1].speed_l) * scale <= tol) {
                seg.kind = WaveKind::Composite;
                seg.note += seg.note.empty() ? "right-characteristic" : "+right-characteristic";
            }
        } else {
            seg.kind = WaveKind::Rarefaction;
            const int N = 64;
            const double dir = p.s_r >= p.s_l ? 1.0 : -1.0;
            Eigen::VectorXd rdot = Eigen::VectorXd::Zero(static_cast<int>(y.size()) + 2);
            rdot(0) = dir;
            for (int k = 0; k <= N; ++k) {
                const double s = p.s_l + (p.s_r - p.s_l) * static_cast<double>(k) / N;
                CurvePoint cp;
                cp.eta = std::abs(s - p.s_l);
                cp.U = State{s, y, u};
                cp.lambda = dg(s) * scale;
                cp.rdot = rdot;
                seg.curve.push_back(std::move(cp));
            }
        }
        out.push_back(std::move(seg));
    }
    return out;
}

/// Insert explicit plateaus between waves separated by a positive speed gap.
std::vector<WaveSegment> splice_constants(const std::vector<WaveSegment>& waves,
                                          double gap_tol) {
    std::vector<WaveSegment> out;
    for (size_t i = 0; i < waves.size(); ++i) {
        out.push_back(waves[i]);
        if (i + 1 == waves.size()) continue;
        const double gap = waves[i + 1].speed_l - waves[i].speed_r;
        if (gap > gap_tol * std::max(1.0, std::abs(waves[i].speed_r))) {
            WaveSegment c;
            c.kind = WaveKind::Constant;
            c.left = c.right = waves[i].right;
            c.speed_l = waves[i].speed_r;
            c.speed_r = waves[i + 1].speed_l;
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Prefix of a traced curve up to arclength a_end, with an interpolated
/// endpoint re-evaluated through the eigenstructure.
std::vector<CurvePoint> trim_curve(const Model& m, const RarefactionCurve& c, double a_end,
                                   int family) {
    std::vector<CurvePoint> out;
    for (const auto& p : c.pts) {
        if (p.eta >= a_end - 1e-13) break;
        out.push_back(p);
    }
    CurvePoint pe;
    pe.eta = a_end;
    pe.U = state_on_curve(c, a_end);
    EigenDecomposition dec = eigen_at(m, pe.U);
    pe.lambda = dec.pairs[family].lambda;
    Eigen::VectorXd r = dec.pairs[family].r;
    const Eigen::VectorXd& ref = out.empty() ? c.pts.front().rdot : out.back().rdot;
    if (ref.size() == r.size() && ref.dot(r) < 0.0) r = -r;
    pe.rdot = r;
    out.push_back(std::move(pe));
    return out;
}

WaveSegment rarefaction_segment(int family, std::vector<CurvePoint> pts) {
    WaveSegment seg;
    seg.kind = WaveKind::Rarefaction;
    seg.family = family;
    seg.left = pts.front().U;
    seg.right = pts.back().U;
    seg.speed_l = pts.front().lambda;
    seg.speed_r = pts.back().lambda;
    seg.curve = std::move(pts);
    return seg;
}

RiemannSolution solve_scalar(const Model& m, const State& L, const State& R,
                             const SolveOptions& opts) {
    RiemannSolution sol;
    sol.left = L;
    sol.regime = "saturation-only";
    sol.right = State{R.s, L.y, L.u};
    sol.waves = splice_constants(scalar_waves(m, L.y, L.u, L.s, R.s), opts.speed_gap_tol);
    return sol;
}

struct InnerLeg {
    bool ok = false;
    State A, B, C;
    RarefactionCurve mid, con;
    double sigma_contact = 0.0;
    std::string fail;
};

/// Scan a closure mismatch over the leading fan's arclength, bracket the
/// first sign change, and bisect it.  Throws when no bracket exists.
double close_junction(const std::function<double(double)>& g, double eta_end,
                      const SolveOptions& opts, const std::string& diag) {
    const double alo = 1e-6 * eta_end, ahi = (1.0 - 1e-6) * eta_end;
    double a1 = 0, a2 = 0, g1 = 0;
    bool have_prev = false, found = false;
    std::ostringstream seen;
    seen.precision(6);
    for (int i = 0; i <= opts.outer_scan; ++i) {
        const double a = alo + (ahi - alo) * static_cast<double>(i) / opts.outer_scan;
        const double ga = g(a);
        seen << (i ? " " : "") << ga;
        if (std::isfinite(ga)) {
            if (ga == 0.0) return a;
            if (have_prev && g1 * ga < 0.0) {
                a2 = a;
                found = true;
                break;
            }
            a1 = a;
            g1 = ga;
            have_prev = true;
        } else {
            have_prev = false;
        }
    }
    if (!found)
        throw NoSequenceFound(
            "the closing jump cannot be made characteristic anywhere along the leading "
            "fan (closure mismatch samples: " + seen.str() + "); " + diag);
    return bisect_root(g, a1, a2, opts.closure_atol);
}

/// Wave sequence with a leading saturation fan, an optional middle chemical
/// fan, and a closing contact + same-speed jump onto the right state.  The
/// free parameter is the arclength along the leading fan at which the
/// sequence leaves it; it is closed by making the final jump characteristic.
RiemannSolution solve_cross(const Model& m, const State& L, const State& R,
                            const SolveOptions& opts) {
    if (m.n > 3)
        throw NoSequenceFound("wave-sequence templates support at most two chemical "
                              "families; " + ordering_diag(m, L, R));
    const int cfam = m.n - 1;
    const int last = m.ny() - 1;
    const bool has_middle =
        m.n >= 3 && std::abs(L.y[last] - R.y[last]) > opts.y_match_tol;

    TraceOptions base;
    base.h_max = opts.h_max;
    base.eta_max = opts.eta_max;

    TraceOptions ts = base;
    ts.stop_on_coincidence = true;
    ts.stop_on_inflection = true;
    RarefactionCurve cs = trace_rarefaction(m, L, 0, ts);
    if (cs.stop_reason.rfind("coincidence:", 0) != 0 || cs.length() <= 0.0)
        throw NoSequenceFound(
            "the saturation fan from the left state stopped at '" + cs.stop_reason +
            "' before reaching the equal-speed locus, so no junction point exists; " +
            ordering_diag(m, L, R));
    const double eta_end = cs.length();

    auto inner = [&](double a) -> InnerLeg {
        InnerLeg in;
        in.A = state_on_curve(cs, a);
        if (has_middle) {
            TraceOptions tm = base;
            tm.stop_on_coincidence = false;
            tm.stop_on_inflection = true;
            tm.user_events = {{"mid",
                               [&m, &R, last](const State& U) { return U.y[last] - R.y[last]; },
                               0.0}};
            in.mid = trace_rarefaction(m, in.A, 1, tm);
            if (in.mid.stop_reason != "target:mid") {
                in.fail = "middle fan stopped at '" + in.mid.stop_reason + "'";
                return in;
            }
            in.B = in.mid.pts.back().U;
        } else {
            in.B = in.A;
        }
        int jstar = 0;
        double best = -1.0;
        for (int k = 0; k < m.ny(); ++k) {
            const double d = std::abs(in.B.y[k] - R.y[k]);
            if (d > best) {
                best = d;
                jstar = k;
            }
        }
        if (best <= opts.y_match_tol) {
            in.C = in.B;
            in.sigma_contact = eigenvalues_at(m, in.B)[cfam];
            in.ok = true;
            return in;
        }
        EigenDecomposition db = eigen_at(m, in.B);
        const double rcomp = db.pairs[cfam].r(1 + jstar);
        if (std::abs(rcomp) < 1e-12) {
            in.fail = "the contact field cannot move the remaining composition mismatch";
            return in;
        }
        const int dir = (R.y[jstar] - in.B.y[jstar]) * rcomp > 0.0 ? 1 : -1;
        TraceOptions tc = base;
        tc.stop_on_coincidence = false;
        tc.stop_on_inflection = false;
        tc.user_events = {{"plane",
                           [&R, jstar](const State& U) { return U.y[jstar] - R.y[jstar]; },
                           0.0}};
        in.con = trace_contact(m, in.B, cfam, dir, tc);
        if (in.con.stop_reason != "target:plane") {
            in.fail = "contact stopped at '" + in.con.stop_reason + "'";
            return in;
        }
        in.C = in.con.pts.back().U;
        in.sigma_contact = eigenvalues_at(m, in.C)[cfam];
        in.ok = true;
        return in;
    };

    auto closure = [&](double a) -> double {
        InnerLeg in = inner(a);
        if (!in.ok) return std::numeric_limits<double>::quiet_NaN();
        try {
            RHResult rh = rh_solve(m, in.C, R.s, R.y);
            return rh.sigma - in.sigma_contact;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    const double astar = close_junction(closure, eta_end, opts, ordering_diag(m, L, R));
    InnerLeg in = inner(astar);
    if (!in.ok)
        throw NoSequenceFound("closure refinement landed on an infeasible junction: " + in.fail);
    RHResult rh = rh_solve(m, in.C, R.s, R.y);
    State Rfull{R.s, R.y, rh.u_plus};

    std::vector<WaveSegment> w;
    if (astar > 1e-10)
        w.push_back(rarefaction_segment(0, trim_curve(m, cs, astar, 0)));
    if (has_middle && in.mid.pts.size() > 1) w.push_back(rarefaction_segment(1, in.mid.pts));
    if (in.con.pts.size() > 1) {
        WaveSegment wc;
        wc.kind = WaveKind::Contact;
        wc.family = cfam;
        wc.left = in.con.pts.front().U;
        wc.right = in.con.pts.back().U;
        RHResult rhc = rh_solve(m, wc.left, wc.right.s, wc.right.y);
        wc.sigma = rhc.sigma;
        wc.speed_l = wc.speed_r = wc.sigma;
        wc.curve = in.con.pts;
        wc.note = "linearly degenerate";
        // the contact's own jump keeps the traced downstream velocity
        wc.right.u = rhc.u_plus;
        w.push_back(std::move(wc));
    }
    WaveSegment wj;
    wj.kind = WaveKind::Shock;
    wj.family = cfam;
    wj.left = w.empty() ? L : w.back().right;
    wj.right = Rfull;
    wj.sigma = rh.sigma;
    wj.speed_l = wj.speed_r = rh.sigma;
    wj.note = "doubly characteristic closing jump";
    w.push_back(std::move(wj));

    RiemannSolution sol;
    sol.left = L;
    sol.right = Rfull;
    sol.regime = "cross-plane";
    sol.waves = splice_constants(w, opts.speed_gap_tol);
    return sol;
}

/// Wave sequence when only the last chemical variable jumps: a leading
/// saturation fan left at a junction chosen so that the fixed-composition
/// closing jump is characteristic with the middle fan on its left.  The
/// equal-speed locus is a speed ridge of the middle family, so the middle
/// fan cannot be launched on the locus itself; the junction is the free
/// closure parameter instead.
RiemannSolution solve_shared(const Model& m, const State& L, const State& R,
                             const SolveOptions& opts) {
    const int last = m.ny() - 1;
    TraceOptions base;
    base.h_max = opts.h_max;
    base.eta_max = opts.eta_max;

    TraceOptions ts = base;
    ts.stop_on_coincidence = true;
    ts.stop_on_inflection = true;
    RarefactionCurve cs = trace_rarefaction(m, L, 0, ts);
    if (cs.pts.size() < 2 || cs.length() <= 0.0)
        throw NoSequenceFound("the saturation fan from the left state is empty; " +
                              ordering_diag(m, L, R));
    const double eta_end = cs.length();

    struct Leg {
        bool ok = false;
        State A, B;
        RarefactionCurve mid;
        double lamB = 0.0;
        std::string fail;
    };
    auto inner = [&](double a) -> Leg {
        Leg leg;
        leg.A = state_on_curve(cs, a);
        TraceOptions tm = base;
        tm.stop_on_coincidence = false;
        tm.stop_on_inflection = true;
        tm.user_events = {{"mid",
                           [&R, last](const State& U) { return U.y[last] - R.y[last]; },
                           0.0}};
        try {
            leg.mid = trace_rarefaction(m, leg.A, 1, tm);
        } catch (const NumericalError& e) {
            leg.fail = e.what();
            return leg;
        }
        if (leg.mid.stop_reason != "target:mid") {
            leg.fail = "middle fan stopped at '" + leg.mid.stop_reason + "'";
            return leg;
        }
        leg.B = leg.mid.pts.back().U;
        leg.lamB = leg.mid.pts.back().lambda;
        leg.ok = true;
        return leg;
    };

    auto closure = [&](double a) -> double {
        Leg leg = inner(a);
        if (!leg.ok) return std::numeric_limits<double>::quiet_NaN();
        try {
            RHResult rh = rh_solve(m, leg.B, R.s, R.y);
            return rh.sigma - leg.lamB;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    const double astar = close_junction(closure, eta_end, opts, ordering_diag(m, L, R));
    Leg leg = inner(astar);
    if (!leg.ok)
        throw NoSequenceFound("closure refinement landed on an infeasible junction: " +
                              leg.fail);
    RHResult rh = rh_solve(m, leg.B, R.s, R.y);
    State Rfull{R.s, R.y, rh.u_plus};

    std::vector<WaveSegment> w;
    if (astar > 1e-10)
        w.push_back(rarefaction_segment(0, trim_curve(m, cs, astar, 0)));
    w.push_back(rarefaction_segment(1, leg.mid.pts));
    WaveSegment wj;
    wj.kind = WaveKind::Shock;
    wj.family = 1;
    wj.left = leg.B;
    wj.right = Rfull;
    wj.sigma = rh.sigma;
    wj.speed_l = wj.speed_r = rh.sigma;
    wj.note = "left-characteristic closing jump";
    w.push_back(std::move(wj));

    RiemannSolution sol;
    sol.left = L;
    sol.right = Rfull;
    sol.regime = "shared-plane";
    sol.waves = splice_constants(w, opts.speed_gap_tol);
    return sol;
}

}  // namespace

RiemannSolution solve_riemann(const Model& m, const State& left, const State& right,
                              const SolveOptions& opts) {
    if (!m.in_domain(left) || !m.in_domain(right))
        throw ModelError("model domain: a Riemann state lies outside the calibrated box");
    if (left.u <= 0.0)
        throw ModelError("parameter positivity: the left state needs a positive velocity");

    double ymax = 0.0;
    for (int k = 0; k < m.ny(); ++k)
        ymax = std::max(ymax, std::abs(left.y[k] - right.y[k]));
    const bool y_equal = ymax <= opts.y_match_tol;

    if (y_equal && std::abs(left.s - right.s) <= 1e-14) {
        RiemannSolution sol;
        sol.left = left;
        sol.right = left;
        sol.regime = "single-state";
        WaveSegment c;
        c.kind = WaveKind::Constant;
        c.left = c.right = left;
        c.speed_l = c.speed_r = 0.0;
        sol.waves.push_back(std::move(c));
        return sol;
    }
    if (y_equal) return solve_scalar(m, left, right, opts);

    if (m.n == 3) {
        bool head_equal = true;
        for (int k = 0; k + 1 < m.ny(); ++k)
            if (std::abs(left.y[k] - right.y[k]) > opts.y_match_tol) head_equal = false;
        const bool last_differs =
            std::abs(left.y[m.ny() - 1] - right.y[m.ny() - 1]) > opts.y_match_tol;
        if (head_equal && last_differs) return solve_shared(m, left, right, opts);
    }
    return solve_cross(m, left, right, opts);
}

CompatibilityReport check_compatibility(const Model& m, const RiemannSolution& sol,
                                        double tol) {
    CompatibilityReport rep;
    auto add = [&](const std::string& s) {
        rep.ok = false;
        rep.issues.push_back(s);
    };
    const auto& w = sol.waves;
    const double sscale = state_scale(sol.left);

    if (w.empty()) {
        if (state_diff(sol.left, sol.right) > tol * sscale)
            add("empty sequence between distinct states");
        return rep;
    }
    if (state_diff(w.front().left, sol.left) > tol * sscale)
        add("the first wave does not start at the left state");
    if (state_diff(w.back().right, sol.right) > tol * sscale)
        add("the last wave does not end at the right state");

    for (size_t i = 0; i < w.size(); ++i) {
        const WaveSegment& seg = w[i];
        const std::string tag = "wave " + std::to_string(i) + " (" + wave_kind_name(seg.kind) +
                                ")";
        if (seg.left.u <= 0.0 || seg.right.u <= 0.0) add(tag + ": non-positive velocity");
        const double spd_tol = tol * std::max(1.0, std::abs(seg.speed_r));
        switch (seg.kind) {
            case WaveKind::Constant:
                if (state_diff(seg.left, seg.right) > 1e-12 * sscale)
                    add(tag + ": plateau endpoints differ");
                if (seg.speed_l > seg.speed_r + spd_tol) add(tag + ": negative width");
                break;
            case WaveKind::Rarefaction: {
                if (seg.curve.size() < 2) {
                    add(tag + ": missing curve support");
                    break;
                }
                if (seg.speed_l > seg.speed_r + spd_tol)
                    add(tag + ": speed decreases across the fan");
                if (state_diff(seg.curve.front().U, seg.left) > tol * sscale ||
                    state_diff(seg.curve.back().U, seg.right) > tol * sscale)
                    add(tag + ": curve endpoints disagree with the segment states");
                try {
                    const double ll = eigenvalues_at(m, seg.left)[seg.family];
                    const double lr = eigenvalues_at(m, seg.right)[seg.family];
                    if (std::abs(ll - seg.speed_l) > tol * std::max(1.0, std::abs(ll)))
                        add(tag + ": left edge speed is not the family speed");
                    if (std::abs(lr - seg.speed_r) > tol * std::max(1.0, std::abs(lr)))
                        add(tag + ": right edge speed is not the family speed");
                } catch (const NumericalError& e) {
                    add(tag + ": speed recomputation failed: " + std::string(e.what()));
                }
                double prev = -std::numeric_limits<double>::infinity();
                for (const auto& p : seg.curve) {
                    if (p.lambda < prev - 1e-9 * std::max(1.0, std::abs(prev)))
                        add(tag + ": non-monotone speed along the fan");
                    prev = std::max(prev, p.lambda);
                }
                break;
            }
            case WaveKind::Shock:
            case WaveKind::Composite:
            case WaveKind::Contact: {
                if (std::abs(seg.speed_l - seg.sigma) > spd_tol ||
                    std::abs(seg.speed_r - seg.sigma) > spd_tol)
                    add(tag + ": jump speed range disagrees with sigma");
                try {
                    RHResult rh = rh_solve(m, seg.left, seg.right.s, seg.right.y);
                    if (std::abs(rh.sigma - seg.sigma) > tol * std::max(1.0, std::abs(rh.sigma)))
                        add(tag + ": recomputed jump speed disagrees");
                    if (rh.residual.cwiseAbs().maxCoeff() > 1e-8 * rh.scale)
                        add(tag + ": jump-condition residual too large");
                    if (std::abs(rh.u_plus - seg.right.u) >
                        tol * std::max(1.0, std::abs(rh.u_plus)))
                        add(tag + ": downstream velocity disagrees with the jump conditions");
                } catch (const NumericalError& e) {
                    add(tag + ": jump recomputation failed: " + std::string(e.what()));
                }
                auto char_check = [&](const State& U, const char* side) {
                    try {
                        const double lam = eigenvalues_at(m, U)[seg.family];
                        if (std::abs(lam - seg.sigma) > tol * std::max(1.0, std::abs(lam)))
                            add(tag + ": not characteristic on the " + std::string(side));
                    } catch (const NumericalError&) {
                        add(tag + ": characteristic check failed");
                    }
                };
                if (seg.kind == WaveKind::Contact) {
                    char_check(seg.left, "left");
                    char_check(seg.right, "right");
                }
                if (seg.kind == WaveKind::Composite) {
                    if (seg.note.find("left-characteristic") != std::string::npos)
                        char_check(seg.left, "left");
                    if (seg.note.find("right-characteristic") != std::string::npos)
                        char_check(seg.right, "right");
                }
                break;
            }
        }
        if (i + 1 < w.size()) {
            if (state_diff(seg.right, w[i + 1].left) > tol * sscale)
                add(tag + ": state mismatch at the junction with the next wave");
            if (seg.speed_r > w[i + 1].speed_l + tol * std::max(1.0, std::abs(seg.speed_r)))
                add(tag + ": faster than the next wave starts");
        }
    }
    return rep;
}

State evaluate_profile(const Model& m, const RiemannSolution& sol, double xi) {
    if (sol.waves.empty()) return sol.left;
    if (xi < sol.waves.front().speed_l) return sol.left;
    for (const auto& seg : sol.waves) {
        if (xi < seg.speed_l) return seg.left;
        if (xi > seg.speed_r) continue;
        switch (seg.kind) {
            case WaveKind::Constant: return seg.left;
            case WaveKind::Shock:
            case WaveKind::Composite:
            case WaveKind::Contact: return seg.right;
            case WaveKind::Rarefaction: {
                if (seg.curve.size() < 2) return seg.right;
                if (xi <= seg.curve.front().lambda) return seg.left;
                if (xi >= seg.curve.back().lambda) return seg.right;
                RarefactionCurve c;
                c.family = seg.family;
                c.pts = seg.curve;
                size_t hi = 1;
                while (hi + 1 < c.pts.size() && c.pts[hi].lambda < xi) ++hi;
                double ea = c.pts[hi - 1].eta, eb = c.pts[hi].eta;
                auto h = [&](double eta) {
                    return lambda_on_curve(m, c, eta, seg.family) - xi;
                };
                const double ha = h(ea);
                double eta;
                if (ha == 0.0)
                    eta = ea;
                else if (ha * h(eb) > 0.0)
                    eta = std::abs(ha) < std::abs(h(eb)) ? ea : eb;
                else
                    eta = bisect_root(h, ea, eb, 1e-12 * std::max(1.0, eb));
                return state_on_curve(c, eta);
            }
        }
    }
    return sol.right;
}

}  // namespace chemflood
