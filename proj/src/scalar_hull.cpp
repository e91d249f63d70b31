#include "chemflood/scalar_hull.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chemflood/numerics.hpp"

namespace chemflood {

namespace {

double cross(double ox, double oy, double ax, double ay, double bx, double by) {
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

/// Tangency residual: zero when the chord from (t, g(t)) to (e, g(e)) is
/// tangent to the graph at t.
double tangency_residual(const std::function<double(double)>& g,
                         const std::function<double(double)>& dg, double t, double e) {
    return dg(t) * (e - t) - (g(e) - g(t));
}

/// Refine an interior tangency endpoint by bisection inside [t-delta, t+delta].
double refine_tangency(const std::function<double(double)>& g,
                       const std::function<double(double)>& dg, double t, double e,
                       double delta, double lo_lim, double hi_lim) {
    double lo = std::max(lo_lim, t - delta), hi = std::min(hi_lim, t + delta);
    auto h = [&](double x) { return tangency_residual(g, dg, x, e); };
    double hl = h(lo), hh = h(hi);
    if ((hl < 0.0) == (hh < 0.0)) {
        lo = std::max(lo_lim, t - 2 * delta);
        hi = std::min(hi_lim, t + 2 * delta);
        hl = h(lo);
        hh = h(hi);
        if ((hl < 0.0) == (hh < 0.0)) return t;  // keep the grid value
    }
    return bisect_root(h, lo, hi, 1e-13);
}

}  // namespace

std::vector<ScalarWavePiece> scalar_riemann(const std::function<double(double)>& g,
                                            const std::function<double(double)>& dg,
                                            double s_l, double s_r, int samples) {
    std::vector<ScalarWavePiece> out;
    if (s_l == s_r) return out;
    const bool descending = s_l > s_r;  // left state higher: upper concave envelope
    const double a = std::min(s_l, s_r), b = std::max(s_l, s_r);
    const int N = std::max(samples, 65);
    const double step = (b - a) / (N - 1);

    std::vector<double> xs(N), ys(N);
    for (int i = 0; i < N; ++i) {
        xs[i] = (i == N - 1) ? b : a + step * i;
        ys[i] = g(xs[i]);
    }

    // Monotone-chain envelope over the samples.  Lower convex hull when the
    // solution ascends, upper concave hull when it descends.
    std::vector<int> hull;
    for (int i = 0; i < N; ++i) {
        while (hull.size() >= 2) {
            int o = hull[hull.size() - 2], p = hull[hull.size() - 1];
            double c = cross(xs[o], ys[o], xs[p], ys[p], xs[i], ys[i]);
            bool pop = descending ? (c >= 0.0) : (c <= 0.0);
            if (!pop) break;
            hull.pop_back();
        }
        hull.push_back(i);
    }

    // Classify hull edges: adjacent samples follow the graph, longer jumps are
    // chords.  Collect maximal graph runs and chords as [x_lo, x_hi] spans.
    struct Span {
        bool chord;
        double lo, hi;
        bool lo_interior, hi_interior;  // tangency endpoints to refine
    };
    std::vector<Span> spans;
    size_t j = 0;
    while (j + 1 < hull.size()) {
        if (hull[j + 1] - hull[j] == 1) {
            size_t k = j;
            while (k + 1 < hull.size() && hull[k + 1] - hull[k] == 1) ++k;
            spans.push_back({false, xs[hull[j]], xs[hull[k]], false, false});
            j = k;
        } else {
            spans.push_back({true, xs[hull[j]], xs[hull[j + 1]], hull[j] != 0,
                             hull[j + 1] != N - 1});
            ++j;
        }
    }

    // Refine interior tangencies (alternating for double tangencies).
    for (auto& sp : spans) {
        if (!sp.chord) continue;
        for (int pass = 0; pass < (sp.lo_interior && sp.hi_interior ? 6 : 1); ++pass) {
            double prev_lo = sp.lo, prev_hi = sp.hi;
            if (sp.lo_interior) sp.lo = refine_tangency(g, dg, sp.lo, sp.hi, step, a, b);
            if (sp.hi_interior) sp.hi = refine_tangency(g, dg, sp.hi, sp.lo, step, a, b);
            if (std::abs(sp.lo - prev_lo) < 1e-14 && std::abs(sp.hi - prev_hi) < 1e-14) break;
        }
    }
    // Propagate refined tangencies into neighbouring graph runs.
    for (size_t i = 0; i < spans.size(); ++i) {
        if (!spans[i].chord) continue;
        if (i > 0 && !spans[i - 1].chord) spans[i - 1].hi = spans[i].lo;
        if (i + 1 < spans.size() && !spans[i + 1].chord) spans[i + 1].lo = spans[i].hi;
    }

    // Emit pieces in wave order.
    auto emit = [&](const Span& sp) {
        ScalarWavePiece p;
        if (sp.chord) {
            const double slope = (g(sp.hi) - g(sp.lo)) / (sp.hi - sp.lo);
            p.is_shock = true;
            p.s_l = descending ? sp.hi : sp.lo;
            p.s_r = descending ? sp.lo : sp.hi;
            p.speed_l = p.speed_r = slope;
        } else {
            p.is_shock = false;
            p.s_l = descending ? sp.hi : sp.lo;
            p.s_r = descending ? sp.lo : sp.hi;
            p.speed_l = dg(p.s_l);
            p.speed_r = dg(p.s_r);
        }
        if (std::abs(p.s_l - p.s_r) > 1e-12) out.push_back(p);
    };
    if (descending) {
        for (auto it = spans.rbegin(); it != spans.rend(); ++it) emit(*it);
    } else {
        for (const auto& sp : spans) emit(sp);
    }
    return out;
}

}  // namespace chemflood
