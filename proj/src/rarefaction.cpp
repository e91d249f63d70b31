#include "chemflood/rarefaction.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>

#include "chemflood/numerics.hpp"

namespace chemflood {

namespace {

struct FieldContext {
    const Model& m;
    int family;
    Eigen::VectorXd ref_dir;  // last accepted travel direction

    Eigen::VectorXd field(const Eigen::VectorXd& x) const {
        State U = State::from_vector(x);
        EigenDecomposition dec = eigen_at(m, U);
        Eigen::VectorXd r = dec.pairs[family].r;
        if (ref_dir.size() > 0 && r.dot(ref_dir) < 0.0) r = -r;
        return r;
    }
};

/// Distance-to-stop function for the domain box (negative outside).
double boundary_gap(const Model& m, const Eigen::VectorXd& x, double margin) {
    double g = x(0) - (m.domain.s_lo + margin);
    g = std::min(g, (m.domain.s_hi - margin) - x(0));
    for (int k = 0; k < m.ny(); ++k) {
        g = std::min(g, x(1 + k) - (m.domain.y[k][0] + margin));
        g = std::min(g, (m.domain.y[k][1] - margin) - x(1 + k));
    }
    g = std::min(g, x(x.size() - 1) - 1e-12);  // u must stay positive
    return g;
}

RarefactionCurve run_trace(const Model& m, const State& start, int family,
                           const TraceOptions& opts, bool contact_mode, int contact_direction) {
    if (family < 0 || family >= m.n)
        throw NumericalError("rarefaction trace: family index out of range");

    auto ctx = std::make_shared<FieldContext>(FieldContext{m, family, {}});

    // Orientation at the launch point.
    {
        EigenDecomposition dec = eigen_at(m, start);
        const EigenPair& pair = dec.pairs[family];
        int sign = 0;
        if (contact_mode) {
            sign = contact_direction >= 0 ? 1 : -1;
        } else if (opts.forced_direction != 0) {
            sign = opts.forced_direction;
        } else {
            DirectionalDerivative dd = directional_derivative(m, start, pair, dec.red);
            if (std::abs(dd.dot) > opts.arm) {
                sign = dd.dot > 0.0 ? 1 : -1;
            } else {
                // Launching on (or too near) a degenerate locus: probe the
                // second-order behaviour a small step to each side.
                const double eps = 1e-7 * (1.0 + start.to_vector().norm());
                auto probe = [&](double sgn) {
                    Eigen::VectorXd xp = start.to_vector() + sgn * eps * pair.r;
                    State Up = State::from_vector(xp);
                    EigenDecomposition dp = eigen_at(m, Up);
                    DirectionalDerivative ddp =
                        directional_derivative(m, Up, dp.pairs[family], dp.red);
                    double align = dp.pairs[family].r.dot(pair.r) < 0.0 ? -1.0 : 1.0;
                    return ddp.dot * align;  // in the travel frame of +pair.r
                };
                double dplus = probe(+1.0), dminus = probe(-1.0);
                if (dplus > 0.0)
                    sign = 1;
                else if (dminus < 0.0)
                    sign = -1;
                else
                    throw NumericalError("rarefaction launch: the family speed is locally "
                                         "maximal along its own field, no increasing direction");
            }
        }
        ctx->ref_dir = sign * pair.r;
    }

    OdeRhs rhs = [ctx](double, const Eigen::VectorXd& x) { return ctx->field(x); };

    std::vector<OdeEvent> events;
    std::vector<std::string> reasons;
    if (!contact_mode && opts.stop_on_coincidence) {
        for (int j = 0; j < m.n; ++j) {
            if (j == family) continue;
            events.push_back(OdeEvent{
                "coincidence:" + std::to_string(j),
                [&m, family, j](double, const Eigen::VectorXd& x) {
                    auto ev = eigenvalues_at(m, State::from_vector(x));
                    return ev[family] - ev[j];
                },
                0, opts.arm});
        }
    }
    if (!contact_mode && opts.stop_on_inflection) {
        events.push_back(OdeEvent{
            "inflection",
            [&m, family, ctx](double, const Eigen::VectorXd& x) {
                State U = State::from_vector(x);
                EigenDecomposition dec = eigen_at(m, U);
                DirectionalDerivative dd =
                    directional_derivative(m, U, dec.pairs[family], dec.red);
                double align =
                    (ctx->ref_dir.size() > 0 && dec.pairs[family].r.dot(ctx->ref_dir) < 0.0)
                        ? -1.0
                        : 1.0;
                return dd.dot * align;
            },
            0, opts.arm});
    }
    events.push_back(OdeEvent{
        "boundary",
        [&m, &opts](double, const Eigen::VectorXd& x) {
            return boundary_gap(m, x, opts.domain_margin);
        },
        0, 0.0});
    if (!contact_mode) {
        events.push_back(OdeEvent{
            "singular",
            [&m, family](double, const Eigen::VectorXd& x) {
                State U = State::from_vector(x);
                if (family == 0) return 1.0;  // saturation family has no anchor
                EigenDecomposition dec = eigen_at(m, U);
                const EigenPair& p = dec.pairs[family];
                if (p.anchor_beta == 0.0) return 1.0;
                return std::abs(U.s - p.anchor) -
                       1e-10 * std::max(1.0, std::abs(U.s - dec.red.fe.f));
            },
            0, 0.0});
    }
    for (const auto& ue : opts.user_events) {
        events.push_back(OdeEvent{
            "target:" + ue.label,
            [g = ue.g](double, const Eigen::VectorXd& x) { return g(State::from_vector(x)); },
            0, ue.arm_threshold});
    }

    OdeOptions oo;
    oo.rtol = opts.rtol;
    oo.atol = opts.atol;
    oo.h_max = opts.h_max;
    oo.h0 = std::min(1e-4, opts.h_max);
    oo.on_accept = [ctx](double, const Eigen::VectorXd& x) { ctx->ref_dir = ctx->field(x); };

    const Eigen::VectorXd launch_dir = ctx->ref_dir;
    OdeResult ode = integrate_ode(rhs, start.to_vector(), opts.eta_max, oo, events);

    RarefactionCurve out;
    out.family = family;
    out.stop_reason = ode.stop_reason == "end" ? "eta_max" : ode.stop_reason;
    if (out.stop_reason.rfind("event:", 0) == 0) out.stop_reason = out.stop_reason.substr(6);

    // Emit samples with speed and field direction; enforce a monotone speed
    // along genuine rarefactions (tiny numerical dips are trimmed).
    Eigen::VectorXd prev_dir;
    double prev_lambda = -std::numeric_limits<double>::infinity();
    bool have_prev = false;
    for (const auto& pt : ode.points) {
        State U = State::from_vector(pt.x);
        EigenDecomposition dec = eigen_at(m, U);
        Eigen::VectorXd r = dec.pairs[family].r;
        if (prev_dir.size() > 0) {
            if (r.dot(prev_dir) < 0.0) r = -r;
        } else if (launch_dir.dot(r) < 0.0) {
            r = -r;
        }
        double lam = dec.pairs[family].lambda;
        if (!contact_mode && have_prev &&
            lam <= prev_lambda - 1e-9 * std::max(1.0, std::abs(prev_lambda)))
            continue;  // trim non-monotone dip
        out.pts.push_back(CurvePoint{pt.eta, U, lam, r});
        prev_dir = r;
        prev_lambda = std::max(prev_lambda, lam);
        have_prev = true;
    }
    return out;
}

}  // namespace

RarefactionCurve trace_rarefaction(const Model& m, const State& start, int family,
                                   const TraceOptions& opts) {
    return run_trace(m, start, family, opts, false, 0);
}

RarefactionCurve trace_contact(const Model& m, const State& start, int family, int direction,
                               const TraceOptions& opts) {
    return run_trace(m, start, family, opts, true, direction);
}

State state_on_curve(const RarefactionCurve& c, double eta) {
    if (c.pts.empty()) throw NumericalError("state_on_curve: empty curve");
    if (eta <= c.pts.front().eta) return c.pts.front().U;
    if (eta >= c.pts.back().eta) return c.pts.back().U;
    size_t hi = 1;
    while (hi < c.pts.size() && c.pts[hi].eta < eta) ++hi;
    const CurvePoint& a = c.pts[hi - 1];
    const CurvePoint& b = c.pts[hi];
    const double h = b.eta - a.eta;
    if (h <= 0.0) return a.U;
    const double t = (eta - a.eta) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    Eigen::VectorXd x = h00 * a.U.to_vector() + h10 * h * a.rdot + h01 * b.U.to_vector() +
                        h11 * h * b.rdot;
    return State::from_vector(x);
}

double lambda_on_curve(const Model& m, const RarefactionCurve& c, double eta, int family) {
    return eigenvalues_at(m, state_on_curve(c, eta))[family];
}

ContactFan build_contact_fan(const Model& m, const RarefactionCurve& base, int contact_family,
                             int plane_index, double plane_value, int launches,
                             const TraceOptions& opts) {
    if (launches < 2) throw NumericalError("contact fan needs at least two launches");
    ContactFan fan;
    fan.launches.resize(launches);
    fan.plane_trace.resize(launches);
    fan.lambda_drift.resize(launches);

    const double L = base.length();
    std::vector<std::future<void>> jobs;
    for (int i = 0; i < launches; ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i]() {
            const double eta = L * static_cast<double>(i) / (launches - 1);
            State s0 = state_on_curve(base, eta);
            TraceOptions to = opts;
            to.user_events.clear();
            to.user_events.push_back(UserEvent{
                "plane",
                [plane_index, plane_value](const State& U) {
                    return U.y[plane_index] - plane_value;
                },
                0.0});
            // Direction toward the target plane.
            EigenDecomposition dec = eigen_at(m, s0);
            const double comp = dec.pairs[contact_family].r(1 + plane_index);
            int dir = ((plane_value - s0.y[plane_index]) * comp >= 0.0) ? 1 : -1;
            RarefactionCurve tr = trace_contact(m, s0, contact_family, dir, to);
            double lmin = tr.pts.front().lambda, lmax = lmin;
            for (const auto& p : tr.pts) {
                lmin = std::min(lmin, p.lambda);
                lmax = std::max(lmax, p.lambda);
            }
            fan.lambda_drift[i] = lmax - lmin;
            fan.plane_trace[i] = tr.pts.back().U;
            fan.launches[i] = std::move(tr);
        }));
    }
    for (auto& j : jobs) j.get();
    return fan;
}

}  // namespace chemflood
