#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "chemflood/model.hpp"
#include "test_util.hpp"

using namespace chemflood;

namespace {

/// Central finite difference of a scalar function of one coordinate.
template <typename F>
double fd1(F f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("desk3 model loads with expected structure") {
    Model m = testutil::load_model("desk3");
    CHECK(m.n == 3);
    CHECK(m.neq() == 4);
    CHECK(m.ny() == 2);
    CHECK(m.phi == doctest::Approx(0.3));
    CHECK(m.constant_rock_density());
    CHECK(m.flux().saturation_only());
}

TEST_CASE("fractional flow matches hand-computed values") {
    Model m = testutil::load_model("desk3");
    std::vector<double> y = {0.2, 3.0};

    // At s = 0.5: k_rw = 0.5^4, k_ro = 0.25 * 0.75, mobilities 62.5 and 93.75.
    FluxEval fe = m.flux().eval(0.5, y);
    CHECK(fe.f == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(fe.f_s == doctest::Approx(3.2).epsilon(1e-14));

    FluxEval fe6 = m.flux().eval(0.6, y);
    CHECK(fe6.f == doctest::Approx(0.7168141592920354).epsilon(1e-13));

    // Composition independence with constant viscosities.
    for (int k = 0; k < 2; ++k) {
        CHECK(fe.f_y[k] == 0.0);
        CHECK(fe.f_sy[k] == 0.0);
    }
}

TEST_CASE("flux derivatives agree with finite differences") {
    Model m = testutil::load_model("desk3");
    std::vector<double> y = {0.2, 3.0};
    for (double s : {0.15, 0.35, 0.5, 0.62, 0.81, 0.93}) {
        FluxEval fe = m.flux().eval(s, y);
        double fs_fd = fd1([&](double x) { return m.flux().value(x, y); }, s);
        double fss_fd = fd1([&](double x) { return m.flux().eval(x, y).f_s; }, s);
        CHECK(fe.f_s == doctest::Approx(fs_fd).epsilon(1e-8));
        CHECK(fe.f_ss == doctest::Approx(fss_fd).epsilon(1e-6));
    }
}

TEST_CASE("composition-dependent viscosity feeds the flux derivatives") {
    // Same structure as desk3 but mu_o grows with y2; exercises f_y and f_sy.
    Model m = testutil::load_model("desk3");
    std::string text = R"({
      "name": "varmu", "n": 3, "phi": 0.3, "s_wc": 0.0, "pore_index": 2.0,
      "mu_w": 0.001,
      "mu_o": [{"c": 0.0014, "p": [0, 0]}, {"c": 0.0002, "p": [0, 1]}],
      "domain": {"s": [0.005, 0.995], "y": [[0.01, 0.4], [2.7, 4.0]]},
      "species": [
        {"rho_w": [{"c": 1.0, "p": [1, 1]}], "rho_o": [], "rho_r": []},
        {"rho_w": [{"c": 1.0, "p": [0, 1]}], "rho_o": [], "rho_r": []},
        {"rho_w": [{"c": 1.0, "p": [0, 0]}, {"c": 0.1, "p": [0, 1]}],
         "rho_o": [{"c": 3.5, "p": [0, 0]}, {"c": -0.1, "p": [0, 1]}],
         "rho_r": 0.01},
        {"rho_w": [], "rho_o": [{"c": 1.0, "p": [0, 0]}], "rho_r": 0.02}
      ]
    })";
    Model mv = Model::parse(text);
    CHECK(!mv.flux().saturation_only());
    std::vector<double> y = {0.2, 3.1};
    for (double s : {0.3, 0.55, 0.74}) {
        FluxEval fe = mv.flux().eval(s, y);
        for (int k = 0; k < 2; ++k) {
            auto yk = [&](double v) {
                std::vector<double> yy = y;
                yy[k] = v;
                return yy;
            };
            double fy_fd = fd1([&](double v) { return mv.flux().value(s, yk(v)); }, y[k]);
            double fsy_fd = fd1([&](double v) { return mv.flux().eval(s, yk(v)).f_s; }, y[k]);
            CHECK(fe.f_y[k] == doctest::Approx(fy_fd).epsilon(1e-7));
            CHECK(fe.f_sy[k] == doctest::Approx(fsy_fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("accumulation vector matches a hand value") {
    Model m = testutil::load_model("desk3");
    State U{0.6, {0.2, 3.0}, 1.0};
    Eigen::VectorXd G = m.accumulation(U);
    // Species 4: phi*0*0.6 + phi*1*0.4 + (1-phi)*0.02 = 0.12 + 0.014.
    CHECK(G(3) == doctest::Approx(0.134).epsilon(1e-14));
}

TEST_CASE("jacobians match finite differences of the vectors") {
    std::mt19937_64 rng(42);
    for (const char* name : {"desk3", "desk3_varrho"}) {
        Model m = testutil::load_model(name);
        for (int trial = 0; trial < 20; ++trial) {
            State U = testutil::random_state(m, rng, 1e-2);
            Eigen::MatrixXd A = m.flux_jacobian(U);
            Eigen::MatrixXd B = m.accumulation_jacobian(U);
            Eigen::VectorXd x0 = U.to_vector();
            for (int j = 0; j < m.neq(); ++j) {
                double h = 1e-6 * std::max(1.0, std::abs(x0(j)));
                Eigen::VectorXd xp = x0, xm = x0;
                xp(j) += h;
                xm(j) -= h;
                Eigen::VectorXd dF = (m.flux_vector(State::from_vector(xp)) -
                                      m.flux_vector(State::from_vector(xm))) /
                                     (2 * h);
                Eigen::VectorXd dG = (m.accumulation(State::from_vector(xp)) -
                                      m.accumulation(State::from_vector(xm))) /
                                     (2 * h);
                for (int i = 0; i < m.neq(); ++i) {
                    CHECK(A(i, j) == doctest::Approx(dF(i)).epsilon(1e-6).scale(1.0));
                    CHECK(B(i, j) == doctest::Approx(dG(i)).epsilon(1e-6).scale(1.0));
                }
            }
            // Structural invariant: u has no accumulation.
            CHECK(B.col(m.neq() - 1).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("validation rejects non-positive viscosity") {
    std::string text = R"({
      "name": "bad", "n": 2, "phi": 0.3, "s_wc": 0.0, "pore_index": 2.0,
      "mu_w": 0.0, "mu_o": 0.002,
      "domain": {"s": [0.01, 0.99], "y": [[1.0, 2.0]]},
      "species": [
        {"rho_w": [{"c": 1.0, "p": [1]}], "rho_o": [], "rho_r": []},
        {"rho_w": [{"c": 1.0, "p": [0]}], "rho_o": [{"c": 2.0, "p": [0]}], "rho_r": 0.01},
        {"rho_w": [], "rho_o": [{"c": 1.0, "p": [0]}], "rho_r": 0.02}
      ]
    })";
    CHECK_THROWS_WITH_AS(Model::parse(text),
                         doctest::Contains("parameter positivity"), ModelError);
}

TEST_CASE("validation rejects a species count mismatch") {
    std::string text = R"({
      "name": "bad", "n": 3, "phi": 0.3, "s_wc": 0.0, "pore_index": 2.0,
      "mu_w": 0.001, "mu_o": 0.002,
      "domain": {"s": [0.01, 0.99], "y": [[1.0, 2.0], [1.0, 2.0]]},
      "species": [
        {"rho_w": [{"c": 1.0, "p": [1, 0]}], "rho_o": [], "rho_r": []},
        {"rho_w": [], "rho_o": [{"c": 1.0, "p": [0, 0]}], "rho_r": 0.02}
      ]
    })";
    CHECK_THROWS_WITH_AS(Model::parse(text),
                         doctest::Contains("model structure"), ModelError);
}

TEST_CASE("validation rejects a flux without usable shape") {
    // An extreme pore-size index flattens the fractional flow to machine zero
    // over most of the interval; the strict-monotonicity scan must reject it.
    std::string text = R"({
      "name": "bad", "n": 2, "phi": 0.3, "s_wc": 0.0, "pore_index": 0.001,
      "mu_w": 0.001, "mu_o": 0.002,
      "domain": {"s": [0.01, 0.99], "y": [[1.0, 2.0]]},
      "species": [
        {"rho_w": [{"c": 1.0, "p": [1]}], "rho_o": [], "rho_r": []},
        {"rho_w": [{"c": 1.0, "p": [0]}], "rho_o": [{"c": 2.0, "p": [0]}], "rho_r": 0.01},
        {"rho_w": [], "rho_o": [{"c": 1.0, "p": [0]}], "rho_r": 0.02}
      ]
    })";
    CHECK_THROWS_WITH_AS(Model::parse(text), doctest::Contains("flux shape"), ModelError);
}

TEST_CASE("validation rejects a domain below the connate saturation") {
    std::string text = R"({
      "name": "bad", "n": 2, "phi": 0.3, "s_wc": 0.2, "pore_index": 2.0,
      "mu_w": 0.001, "mu_o": 0.002,
      "domain": {"s": [0.1, 0.99], "y": [[1.0, 2.0]]},
      "species": [
        {"rho_w": [{"c": 1.0, "p": [1]}], "rho_o": [], "rho_r": []},
        {"rho_w": [{"c": 1.0, "p": [0]}], "rho_o": [{"c": 2.0, "p": [0]}], "rho_r": 0.01},
        {"rho_w": [], "rho_o": [{"c": 1.0, "p": [0]}], "rho_r": 0.02}
      ]
    })";
    CHECK_THROWS_WITH_AS(Model::parse(text), doctest::Contains("model domain"), ModelError);
}

TEST_CASE("state round-trips through vector form") {
    State U{0.37, {0.11, 3.3}, 1.7};
    State V = State::from_vector(U.to_vector());
    CHECK(V.s == U.s);
    CHECK(V.u == U.u);
    CHECK(V.y == U.y);
}
