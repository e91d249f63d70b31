#include "chemflood/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chemflood/eigen.hpp"

namespace chemflood {

OracleEigen dense_eigen_oracle(const Model& m, const State& U, double imag_tol) {
    const Eigen::MatrixXd A = m.flux_jacobian(U);
    const Eigen::MatrixXd B = m.accumulation_jacobian(U);
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
    ges.compute(A, B, true);

    const double pencil_scale = A.norm() + B.norm();
    struct Pair {
        double lambda;
        Eigen::VectorXd r;
    };
    std::vector<Pair> finite;
    for (int i = 0; i < ges.alphas().size(); ++i) {
        const std::complex<double> a = ges.alphas()(i);
        const double b = ges.betas()(i);
        if (std::abs(b) <= 1e-12 * std::max(1.0, std::abs(a)))
            continue;  // structurally infinite direction (accumulation has no u column)
        const std::complex<double> lam = a / b;
        if (std::abs(lam.imag()) > imag_tol * std::max(1.0, std::abs(lam.real())))
            throw NumericalError("dense eigensolve: complex speed found, the state is "
                                 "outside the strictly hyperbolic region");
        Eigen::VectorXcd vc = ges.eigenvectors().col(i);
        // The eigenvector of a real eigenvalue can be rotated in phase.
        int imax = 0;
        for (int k = 1; k < vc.size(); ++k)
            if (std::abs(vc(k)) > std::abs(vc(imax))) imax = k;
        vc /= vc(imax);
        Eigen::VectorXd v = vc.real();
        if (vc.imag().norm() > imag_tol * std::max(1.0, v.norm()))
            throw NumericalError("dense eigensolve: complex eigenvector for a real speed");
        const double head = v.head(v.size() - 1).norm();
        if (head > 1e-13 * pencil_scale) v /= head;
        finite.push_back({lam.real(), v});
    }
    if (static_cast<int>(finite.size()) != m.n)
        throw NumericalError("dense eigensolve: expected " + std::to_string(m.n) +
                             " finite speeds, found " + std::to_string(finite.size()));
    std::sort(finite.begin(), finite.end(),
              [](const Pair& a, const Pair& b) { return a.lambda < b.lambda; });

    OracleEigen out;
    out.r.resize(m.neq(), m.n);
    for (int i = 0; i < m.n; ++i) {
        out.lambda.push_back(finite[i].lambda);
        Eigen::VectorXd v = finite[i].r;
        // canonical sign: largest (s,y)-component positive
        int imax = 0;
        for (int k = 1; k + 1 < v.size(); ++k)
            if (std::abs(v(k)) > std::abs(v(imax))) imax = k;
        if (v(imax) < 0) v = -v;
        out.r.col(i) = v;
    }
    return out;
}

Eigen::VectorXd fd_gradient(const Model& m, const State& U, int family, double h) {
    const int dim = m.n + 1;
    Eigen::VectorXd g(dim);
    const Eigen::VectorXd x0 = U.to_vector();
    for (int j = 0; j < dim; ++j) {
        const double hj = h * std::max(1.0, std::abs(x0(j)));
        Eigen::VectorXd xp = x0, xm = x0;
        xp(j) += hj;
        xm(j) -= hj;
        const double lp = eigenvalues_at(m, State::from_vector(xp))[family];
        const double lm = eigenvalues_at(m, State::from_vector(xm))[family];
        g(j) = (lp - lm) / (2 * hj);
    }
    return g;
}

double fd_directional(const Model& m, const State& U, int family, double h) {
    EigenDecomposition dec = eigen_at(m, U);
    const Eigen::VectorXd r = dec.pairs[family].r;
    const Eigen::VectorXd x0 = U.to_vector();
    const double hs = h * std::max(1.0, x0.norm());
    const double lp = eigenvalues_at(m, State::from_vector(x0 + hs * r))[family];
    const double lm = eigenvalues_at(m, State::from_vector(x0 - hs * r))[family];
    return (lp - lm) / (2 * hs);
}

FvResult scalar_fv(const Model& m, const std::vector<double>& y, double u, double s_l,
                   double s_r, double t_end, const FvOptions& opts) {
    if (opts.cells < 100)
        throw NumericalError("finite-volume reference: at least 100 cells required");
    if (t_end <= 0.0) throw NumericalError("finite-volume reference: t_end must be positive");

    FvResult out;
    const int N = opts.cells;
    out.dx = opts.x_hi / N;
    out.x.resize(N);
    out.s.resize(N);
    for (int i = 0; i < N; ++i) {
        out.x[i] = (i + 0.5) * out.dx;
        out.s[i] = out.x[i] < opts.x_jump ? s_l : s_r;
    }

    auto g = [&](double s) { return u * m.flux().value(s, y) / m.phi; };

    // Wave-speed bound over the saturation range actually present.
    const double smin = std::min(s_l, s_r), smax = std::max(s_l, s_r);
    double a_max = 0.0;
    for (int k = 0; k <= 1024; ++k) {
        const double s = smin + (smax - smin) * static_cast<double>(k) / 1024;
        a_max = std::max(a_max, u * m.flux().eval(s, y).f_s / m.phi);
    }
    if (a_max <= 0.0) throw NumericalError("finite-volume reference: zero wave speed bound");

    auto tv = [&]() {
        double v = 0.0;
        for (int i = 0; i + 1 < N; ++i) v += std::abs(out.s[i + 1] - out.s[i]);
        return v;
    };
    out.tv_initial = tv();

    // Kahan-compensated cell mass.
    auto mass = [&]() {
        double sum = 0.0, c = 0.0;
        for (int i = 0; i < N; ++i) {
            const double t = sum + (out.s[i] * out.dx - c);
            c = (t - sum) - (out.s[i] * out.dx - c);
            sum = t;
        }
        return sum;
    };

    double t = 0.0;
    std::vector<double> flux(N + 1);
    std::vector<double> snew(N);
    double mass_prev = mass();
    while (t < t_end) {
        double dt = opts.cfl * out.dx / a_max;
        if (t + dt > t_end) dt = t_end - t;
        // Upwind interval-extremum flux; the flux is monotone in s (model
        // validation guarantees f_s > 0), so the extremum sits at the left
        // endpoint of every interface interval.
        flux[0] = g(s_l);  // inflow
        for (int i = 1; i < N; ++i) flux[i] = g(out.s[i - 1]);
        flux[N] = g(out.s[N - 1]);  // outflow (upwind from the last cell)
        for (int i = 0; i < N; ++i)
            snew[i] = out.s[i] - dt / out.dx * (flux[i + 1] - flux[i]);
        out.s.swap(snew);
        t += dt;
        ++out.steps;

        const double mass_now = mass();
        const double expected = mass_prev + dt * (flux[0] - flux[N]);
        const double drift =
            std::abs(mass_now - expected) / std::max(1.0, std::abs(mass_now));
        out.mass_drift_max = std::max(out.mass_drift_max, drift);
        mass_prev = mass_now;
    }
    out.tv_final = tv();
    return out;
}

double l1_against_profile(const Model& m, const RiemannSolution& sol, const FvResult& fv,
                          double t_end, double x_jump) {
    double l1 = 0.0;
    for (size_t i = 0; i < fv.x.size(); ++i) {
        const double xi = (fv.x[i] - x_jump) / t_end;
        const State U = evaluate_profile(m, sol, xi);
        l1 += std::abs(fv.s[i] - U.s) * fv.dx;
    }
    return l1;
}

}  // namespace chemflood
