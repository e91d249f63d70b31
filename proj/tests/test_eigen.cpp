#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "chemflood/eigen.hpp"
#include "chemflood/model.hpp"
#include "chemflood/verify.hpp"
#include "test_util.hpp"

using namespace chemflood;

namespace {

/// Sorted characteristic speeds from the reduction-based decomposition.
std::vector<double> sorted_lambdas(const EigenDecomposition& dec) {
    std::vector<double> v;
    for (const auto& p : dec.pairs) v.push_back(p.lambda);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("reference state reproduces frozen speeds and anchors") {
    Model m = testutil::load_model("desk3");
    State U{0.6, {0.2, 3.0}, 1.0};
    EigenDecomposition dec = eigen_at(m, U);
    REQUIRE(dec.pairs.size() == 3);

    const EigenPair& sat = dec.pairs[0];
    CHECK(sat.family == 0);
    CHECK(sat.is_saturation);
    CHECK(sat.lambda == doctest::Approx(9.1628161954734111).epsilon(1e-13));
    CHECK(std::isnan(sat.anchor));
    // Saturation speed is u f_s / phi.
    FluxEval fe = m.flux_eval(U);
    CHECK(sat.lambda == doctest::Approx(U.u * fe.f_s / m.phi).epsilon(1e-13));

    const EigenPair& c1 = dec.pairs[1];
    CHECK(c1.lambda == doctest::Approx(3.7118977384464111).epsilon(1e-13));
    CHECK(c1.anchor == doctest::Approx(-3.0 / 7.0).epsilon(1e-12));
    CHECK_FALSE(c1.degenerate);

    const EigenPair& c2 = dec.pairs[2];
    CHECK(c2.lambda == doctest::Approx(3.9823008849557517).epsilon(1e-13));
    CHECK(std::abs(c2.anchor) < 1e-12);
    CHECK(c2.degenerate);  // anchor 0 marks a linearly degenerate family

    // Chemical speed is the secant slope of f through (anchor, anchor).
    for (const EigenPair* p : {&c1, &c2}) {
        double secant = U.u / m.phi * (fe.f - p->anchor) / (U.s - p->anchor);
        CHECK(p->lambda == doctest::Approx(secant).epsilon(1e-12));
    }
}

TEST_CASE("pencil residuals vanish for left and right eigenvectors") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(101);
    for (int i = 0; i < 50; ++i) {
        State U = testutil::random_regular_state(m, rng);
        EigenDecomposition dec = eigen_at(m, U);
        Eigen::MatrixXd A = m.flux_jacobian(U);
        Eigen::MatrixXd B = m.accumulation_jacobian(U);
        double nA = A.norm();
        for (const auto& p : dec.pairs) {
            double scale = (nA + std::abs(p.lambda) * B.norm());
            CHECK((A * p.r - p.lambda * (B * p.r)).norm() <= 1e-10 * scale * p.r.norm());
            CHECK((p.l.transpose() * A - p.lambda * (p.l.transpose() * B)).norm() <=
                  1e-10 * scale * p.l.norm());
            CHECK(p.residual <= 1e-10 * scale);
        }
    }
}

TEST_CASE("speeds agree with the dense generalized eigenvalue oracle") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(202);
    for (int i = 0; i < 100; ++i) {
        State U = testutil::random_regular_state(m, rng);
        EigenDecomposition dec = eigen_at(m, U);
        OracleEigen orc = dense_eigen_oracle(m, U);
        std::vector<double> a = sorted_lambdas(dec);
        std::vector<double> b = orc.lambda;
        std::sort(b.begin(), b.end());
        REQUIRE(a.size() == b.size());
        for (size_t k = 0; k < a.size(); ++k)
            CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-10));
    }
}

TEST_CASE("eigenvalues_at matches the full decomposition") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(303);
    for (int i = 0; i < 20; ++i) {
        State U = testutil::random_regular_state(m, rng);
        EigenDecomposition dec = eigen_at(m, U);
        std::vector<double> lam = eigenvalues_at(m, U);
        REQUIRE(lam.size() == dec.pairs.size());
        for (size_t k = 0; k < lam.size(); ++k)
            CHECK(lam[k] == doctest::Approx(dec.pairs[k].lambda).epsilon(1e-13));
    }
}

TEST_CASE("anchors do not depend on saturation or velocity") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> us(0.05, 0.95), uu(0.25, 4.0);
    for (int i = 0; i < 100; ++i) {
        State U = testutil::random_regular_state(m, rng);
        State V = U;
        V.s = us(rng);
        V.u = uu(rng);
        EigenDecomposition a = eigen_at(m, U);
        EigenDecomposition bb = eigen_at(m, V);
        for (size_t k = 1; k < a.pairs.size(); ++k)
            CHECK(std::abs(a.pairs[k].anchor - bb.pairs[k].anchor) <= 1e-12);
    }
}

TEST_CASE("speeds scale linearly with velocity") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(505);
    for (int i = 0; i < 20; ++i) {
        State U = testutil::random_regular_state(m, rng);
        State V = U;
        V.u = 2.5 * U.u;
        std::vector<double> a = eigenvalues_at(m, U);
        std::vector<double> b = eigenvalues_at(m, V);
        for (size_t k = 0; k < a.size(); ++k)
            CHECK(b[k] == doctest::Approx(2.5 * a[k]).epsilon(1e-12));
    }
}

TEST_CASE("directional derivative matches finite differences") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(606);
    for (int i = 0; i < 40; ++i) {
        State U = testutil::random_regular_state(m, rng);
        for (int fam = 0; fam < m.n; ++fam) {
            DirectionalDerivative dd = directional_derivative(m, U, fam);
            double fd = fd_directional(m, U, fam);
            CHECK(std::abs(dd.dot - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("linearly degenerate family has identically zero indicator") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(707);
    for (int i = 0; i < 40; ++i) {
        State U = testutil::random_regular_state(m, rng);
        EigenDecomposition dec = eigen_at(m, U);
        const EigenPair& ld = dec.pairs.back();
        REQUIRE(ld.degenerate);
        DirectionalDerivative dd = directional_derivative(m, U, ld, dec.red);
        CHECK(std::abs(dd.dot) <= 1e-12);
        CHECK(std::abs(fd_directional(m, U, ld.family)) <= 1e-7);
    }
}

TEST_CASE("saturation eigenvector points along the saturation axis") {
    Model m = testutil::load_model("desk3");
    std::mt19937_64 rng(808);
    for (int i = 0; i < 20; ++i) {
        State U = testutil::random_regular_state(m, rng);
        EigenDecomposition dec = eigen_at(m, U);
        const Eigen::VectorXd& r = dec.pairs[0].r;
        // Composition entries vanish: the fast family moves saturation and
        // velocity only.
        for (int k = 1; k <= m.ny(); ++k) CHECK(std::abs(r[k]) <= 1e-12 * r.norm());
    }
}

TEST_CASE("reduced pencil kernels reconstruct the full eigenvectors") {
    Model m = testutil::load_model("desk3");
    State U{0.34, {0.11, 3.4}, 1.3};
    EigenDecomposition dec = eigen_at(m, U);
    Eigen::MatrixXd A = m.flux_jacobian(U);
    Eigen::MatrixXd B = m.accumulation_jacobian(U);
    for (size_t k = 1; k < dec.pairs.size(); ++k) {
        const EigenPair& p = dec.pairs[k];
        REQUIRE(p.v.size() == m.ny());
        // The reduced pencil annihilates the kernel vector at the anchor.
        Eigen::MatrixXd Mred = dec.red.P - p.anchor * dec.red.Q;
        CHECK((Mred * p.v).norm() <= 1e-10 * (dec.red.P.norm() + dec.red.Q.norm()));
        // And the assembled full vector satisfies the original pencil.
        CHECK((A * p.r - p.lambda * (B * p.r)).norm() <= 1e-9 * (A.norm() + B.norm()));
    }
}
