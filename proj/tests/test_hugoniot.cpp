#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "chemflood/eigen.hpp"
#include "chemflood/hugoniot.hpp"
#include "chemflood/model.hpp"
#include "chemflood/rarefaction.hpp"
#include "test_util.hpp"

using namespace chemflood;

namespace {

/// Max-norm of the raw jump-condition residual sigma [G] - [u Fhat].
double jump_residual(const Model& m, const State& left, const State& right, double sigma) {
    Eigen::VectorXd r = sigma * (m.accumulation(right) - m.accumulation(left)) -
                        (m.flux_vector(right) - m.flux_vector(left));
    return r.lpNorm<Eigen::Infinity>();
}

double jump_scale(const Model& m, const State& left, const State& right, double sigma) {
    double g = std::max(m.accumulation(left).norm(), m.accumulation(right).norm());
    double f = std::max(m.flux_vector(left).norm(), m.flux_vector(right).norm());
    return std::abs(sigma) * g + f;
}

}  // namespace

TEST_CASE("same-composition jump passes velocity through and matches the chord") {
    Model m = testutil::load_model("desk3");
    std::vector<double> y = {0.2, 3.0};
    State left{0.2, y, 1.0};

    double sig = bl_shock_speed(m, left, 0.8);
    CHECK(sig == doctest::Approx(5.4308010037824159).epsilon(1e-13));

    RHResult rh = rh_solve(m, left, 0.8, y);
    CHECK(rh.same_composition);
    CHECK(rh.u_plus == 1.0);  // velocity is continuous across saturation-only jumps
    CHECK(std::abs(rh.sigma - sig) <= 1e-12 * std::abs(sig));

    // Chord slope of the fractional flow, scaled by u/phi.
    double chord = left.u / m.phi * (m.flux().value(0.8, y) - m.flux().value(0.2, y)) / 0.6;
    CHECK(rh.sigma == doctest::Approx(chord).epsilon(1e-12));
    CHECK(rh.residual.lpNorm<Eigen::Infinity>() <= 1e-8 * rh.scale);
}

TEST_CASE("jump conditions hold to tolerance at random saturation pairs") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> us(0.05, 0.95), uu(0.5, 2.0);
    for (int i = 0; i < 100; ++i) {
        State left = testutil::random_state(m, rng, 0.02);
        double sp = us(rng);
        if (std::abs(sp - left.s) < 0.05) continue;  // skip near-zero jumps
        RHResult rh = rh_solve(m, left, sp, left.y);
        State right{sp, left.y, rh.u_plus};
        CHECK(jump_residual(m, left, right, rh.sigma) <=
              1e-8 * jump_scale(m, left, right, rh.sigma));
        CHECK(rh.sigma_spread <= 1e-8 * std::max(1.0, std::abs(rh.sigma)));
    }
}

TEST_CASE("contact endpoints satisfy the jump conditions across compositions") {
    Model m = testutil::load_model("desk3");
    TraceOptions t;
    t.eta_max = 8.0;
    State B0{0.8, {0.1, 3.0}, 1.0};
    RarefactionCurve c = trace_contact(m, B0, 2, +1, t);
    REQUIRE(c.pts.size() >= 3);
    const State& C = c.pts.back().U;
    REQUIRE(std::abs(C.y[0] - B0.y[0]) > 0.1);  // genuinely cross-composition

    RHResult rh = rh_solve(m, B0, C.s, C.y);
    CHECK_FALSE(rh.same_composition);
    State right{C.s, C.y, rh.u_plus};
    CHECK(jump_residual(m, B0, right, rh.sigma) <= 1e-8 * jump_scale(m, B0, right, rh.sigma));
    // The jump across a linearly degenerate field travels at the field speed.
    double lam2 = eigenvalues_at(m, B0)[2];
    CHECK(std::abs(rh.sigma - lam2) <= 1e-9 * std::abs(lam2));
    CHECK(rh.u_plus == doctest::Approx(C.u).epsilon(1e-9));
}

TEST_CASE("locus speed approaches the characteristic speed for small jumps") {
    Model m = testutil::load_model("desk3");
    State base{0.6, {0.2, 3.0}, 1.0};
    EigenDecomposition dec = eigen_at(m, base);

    // A first-order step along an eigenvector stays on the locus to second
    // order, so the best-fit jump speed approaches that family's speed
    // linearly in the jump size.
    for (const auto& p : dec.pairs) {
        double prev_gap = 1e300;
        for (double eps : {1e-3, 1e-4, 1e-5}) {
            double sp = base.s + eps * p.r(0);
            std::vector<double> yp = base.y;
            for (int k = 0; k < m.ny(); ++k) yp[static_cast<size_t>(k)] += eps * p.r(1 + k);
            RHResult rh = rh_solve(m, base, sp, yp);
            double gap = std::abs(rh.sigma - p.lambda);
            CHECK(gap <= 100.0 * eps * std::max(1.0, std::abs(p.lambda)));
            CHECK(gap <= std::max(prev_gap, 1e-10));  // decreasing until the numerical floor
            prev_gap = gap;
        }
    }
}

TEST_CASE("traced locus points satisfy the jump conditions") {
    Model m = testutil::load_model("desk3");
    State base{0.6, {0.2, 3.0}, 1.0};
    HugoniotOptions opts;
    opts.step = 1e-3;
    opts.max_points = 400;
    std::vector<HugoniotBranch> branches = trace_hugoniot(m, base, opts);
    REQUIRE_FALSE(branches.empty());
    size_t checked = 0;
    for (const auto& br : branches) {
        for (size_t i = 0; i < br.states.size(); i += 10) {
            const State& R = br.states[i];
            CHECK(m.in_domain(R, -1e-6));
            CHECK(jump_residual(m, base, R, br.sigma[i]) <=
                  1e-8 * jump_scale(m, base, R, br.sigma[i]));
            CHECK(br.u_ratio[i] == doctest::Approx(R.u / base.u).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("extension at the degenerate-family speed recovers the conjugate point") {
    Model m = testutil::load_model("desk3");
    State base{0.75, {0.2, 3.0}, 1.0};
    double lam2 = eigenvalues_at(m, base)[2];
    std::optional<double> s = extension_point(m, base, lam2);
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(0.64461721081320578).epsilon(1e-9));
    // The chord through the conjugate pair runs at exactly that speed.
    CHECK(bl_shock_speed(m, base, *s) == doctest::Approx(lam2).epsilon(1e-9));
}

TEST_CASE("extension at the own-family speed deflates the trivial root") {
    Model m = testutil::load_model("desk3");
    State base{0.6, {0.2, 3.0}, 1.0};
    double lam0 = eigenvalues_at(m, base)[0];
    std::optional<double> s = extension_point(m, base, lam0);
    REQUIRE(s.has_value());
    CHECK(std::abs(*s - base.s) > 1e-3);  // not the double root at the base itself
    CHECK(*s == doctest::Approx(0.38035875943275499).epsilon(1e-9));
    CHECK(bl_shock_speed(m, base, *s) == doctest::Approx(lam0).epsilon(1e-9));
}

TEST_CASE("classification flags a left-characteristic saturation jump") {
    Model m = testutil::load_model("desk3");
    std::vector<double> y = {0.2, 3.0};
    State base{0.6, y, 1.0};
    double lam0 = eigenvalues_at(m, base)[0];
    std::optional<double> s = extension_point(m, base, lam0);
    REQUIRE(s.has_value());
    State right{*s, y, 1.0};
    LaxReport rep = lax_classify(m, base, right, lam0);
    REQUIRE(rep.char_left.size() == 3);
    // Listings are speed-sorted: locate the saturation speed on each side.
    auto slot = [](const std::vector<double>& lams, double target) {
        size_t best = 0;
        for (size_t i = 1; i < lams.size(); ++i)
            if (std::abs(lams[i] - target) < std::abs(lams[best] - target)) best = i;
        return best;
    };
    CHECK(rep.char_left[slot(rep.lambda_left, lam0)]);  // equals the left fast-family speed
    double lam0_right = eigenvalues_at(m, right)[0];
    CHECK_FALSE(rep.char_right[slot(rep.lambda_right, lam0_right)]);  // but not the right one
}

TEST_CASE("classification marks contacts as characteristic on both sides") {
    Model m = testutil::load_model("desk3");
    TraceOptions t;
    t.eta_max = 8.0;
    State B0{0.8, {0.1, 3.0}, 1.0};
    RarefactionCurve c = trace_contact(m, B0, 2, +1, t);
    const State& C = c.pts.back().U;
    RHResult rh = rh_solve(m, B0, C.s, C.y);
    State right{C.s, C.y, rh.u_plus};
    LaxReport rep = lax_classify(m, B0, right, rh.sigma, 1e-7);
    // The jump speed is characteristic on both sides (speed-sorted listings).
    bool char_both = false;
    for (size_t i = 0; i < rep.char_left.size(); ++i)
        if (rep.char_left[i] && rep.char_right[i]) char_both = true;
    CHECK(char_both);
    CHECK(rep.classification.rfind("contact", 0) == 0);
}

TEST_CASE("backward fixed-composition candidates jump into the right state") {
    Model m = testutil::load_model("desk3");
    State right{0.3, {0.2, 3.0}, 1.0};
    std::vector<BackwardPoint> pts = backward_bl_shock(m, right, 200);
    REQUIRE_FALSE(pts.empty());
    size_t admissible = 0;
    for (const auto& p : pts) {
        State left{p.s_left, right.y, 1.0};
        CHECK(p.sigma == doctest::Approx(bl_shock_speed(m, left, right.s)).epsilon(1e-10));
        if (p.scalar_admissible) ++admissible;
    }
    CHECK(admissible >= 1);
}
