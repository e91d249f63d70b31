#include "chemflood/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace chemflood {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

struct Stepper {
    const OdeRhs& rhs;
    double rtol, atol;

    /// One trial step; returns the scaled error norm and fills xout.
    double step(double eta, const Eigen::VectorXd& x, double h, const Eigen::VectorXd& k1,
                Eigen::VectorXd& xout, Eigen::VectorXd& k7) const {
        Eigen::VectorXd k2 = rhs(eta + h / 5, x + h * (A21 * k1));
        Eigen::VectorXd k3 = rhs(eta + 3 * h / 10, x + h * (A31 * k1 + A32 * k2));
        Eigen::VectorXd k4 = rhs(eta + 4 * h / 5, x + h * (A41 * k1 + A42 * k2 + A43 * k3));
        Eigen::VectorXd k5 =
            rhs(eta + 8 * h / 9, x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        Eigen::VectorXd k6 =
            rhs(eta + h, x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        xout = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        k7 = rhs(eta + h, xout);
        Eigen::VectorXd err =
            h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        double acc = 0.0;
        for (int i = 0; i < x.size(); ++i) {
            double sc = atol + rtol * std::max(std::abs(x(i)), std::abs(xout(i)));
            double e = err(i) / sc;
            acc += e * e;
        }
        return std::sqrt(acc / x.size());
    }
};

}  // namespace

Eigen::VectorXd integrate_to(const OdeRhs& rhs, double eta0, const Eigen::VectorXd& x0,
                             double eta1, const OdeOptions& opts) {
    if (eta1 <= eta0) return x0;
    Stepper st{rhs, opts.rtol, opts.atol};
    double eta = eta0;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd k1 = rhs(eta, x);
    double h = std::min({opts.h0, opts.h_max, eta1 - eta0});
    long steps = 0;
    // Stop once the remaining span is below representable resolution; a final
    // sliver of a few ulp would otherwise trip the underflow guard.
    const double eta_res = 1e-13 * std::max(1.0, std::abs(eta1));
    while (eta1 - eta > eta_res) {
        if (++steps > opts.max_steps)
            throw std::runtime_error("ODE integration exceeded the step budget");
        h = std::min(h, eta1 - eta);
        Eigen::VectorXd xout, k7;
        double err = st.step(eta, x, h, k1, xout, k7);
        if (err <= 1.0) {
            eta += h;
            x = xout;
            k1 = k7;
        }
        double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, opts.h_max);
        if (!(h > 1e-15))
            throw std::runtime_error("ODE step size underflow during dense lookup");
    }
    return x;
}

OdeResult integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& x0, double eta_end,
                        const OdeOptions& opts, const std::vector<OdeEvent>& events) {
    OdeResult res;
    Stepper st{rhs, opts.rtol, opts.atol};

    double eta = 0.0;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd k1 = rhs(eta, x);
    res.points.push_back({eta, x});
    if (opts.on_accept) opts.on_accept(eta, x);

    std::vector<double> gprev(events.size());
    std::vector<bool> armed(events.size());
    for (size_t i = 0; i < events.size(); ++i) {
        gprev[i] = events[i].g(eta, x);
        armed[i] = std::abs(gprev[i]) >= events[i].arm_threshold;
    }

    double h = std::min({opts.h0, opts.h_max, eta_end});
    long steps = 0;
    const double eta_res = 1e-13 * std::max(1.0, eta_end);
    while (eta_end - eta > eta_res) {
        if (++steps > opts.max_steps) {
            res.stop_reason = "max_steps";
            return res;
        }
        h = std::min(h, eta_end - eta);
        Eigen::VectorXd xout, k7;
        double err = st.step(eta, x, h, k1, xout, k7);
        if (err <= 1.0) {
            const double eta_new = eta + h;
            // Event scan on the accepted interval.
            int fired = -1;
            double gnew_fired = 0.0;
            for (size_t i = 0; i < events.size(); ++i) {
                double gnew = events[i].g(eta_new, xout);
                bool crossed = (gprev[i] < 0.0 && gnew >= 0.0) || (gprev[i] > 0.0 && gnew <= 0.0);
                bool dir_ok = events[i].direction == 0 ||
                              (events[i].direction > 0 ? (gnew > gprev[i]) : (gnew < gprev[i]));
                if (armed[i] && crossed && dir_ok && fired < 0) {
                    fired = static_cast<int>(i);
                    gnew_fired = gnew;
                }
            }
            if (fired >= 0) {
                // Localize by bisection, re-integrating from the step start.
                double lo = 0.0, hi = h;
                const OdeEvent& ev = events[fired];
                double glo = gprev[fired];
                (void)gnew_fired;
                OdeOptions sub = opts;
                sub.on_accept = nullptr;
                sub.h0 = h / 8;
                while (hi - lo > opts.event_tol) {
                    double mid = 0.5 * (lo + hi);
                    Eigen::VectorXd xm = integrate_to(rhs, eta, x, eta + mid, sub);
                    double gm = ev.g(eta + mid, xm);
                    if ((glo < 0.0 && gm < 0.0) || (glo > 0.0 && gm > 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                double eta_ev = eta + 0.5 * (lo + hi);
                Eigen::VectorXd xev = integrate_to(rhs, eta, x, eta_ev, sub);
                res.points.push_back({eta_ev, xev});
                if (opts.on_accept) opts.on_accept(eta_ev, xev);
                res.event_index = fired;
                res.stop_reason = "event:" + ev.label;
                return res;
            }
            for (size_t i = 0; i < events.size(); ++i) {
                double gnew = events[i].g(eta_new, xout);
                gprev[i] = gnew;
                if (!armed[i] && std::abs(gnew) >= events[i].arm_threshold) armed[i] = true;
            }
            eta = eta_new;
            x = xout;
            k1 = k7;
            res.points.push_back({eta, x});
            if (opts.on_accept) opts.on_accept(eta, x);
        }
        double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, opts.h_max);
        if (!(h > 1e-15)) {
            res.stop_reason = "step_underflow";
            return res;
        }
    }
    res.stop_reason = "end";
    return res;
}

double bisect_root(const std::function<double(double)>& g, double a, double b, double xtol,
                   int max_iter) {
    double ga = g(a), gb = g(b);
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    if ((ga < 0.0) == (gb < 0.0))
        throw std::invalid_argument("bisect_root: endpoints do not bracket a sign change");
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        double mid = 0.5 * (a + b);
        double gm = g(mid);
        if (gm == 0.0) return mid;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

std::vector<std::pair<double, double>> scan_sign_changes(const std::function<double(double)>& g,
                                                         double a, double b, int samples) {
    std::vector<std::pair<double, double>> out;
    double prev_x = a, prev_g = g(a);
    for (int i = 1; i <= samples; ++i) {
        double x = a + (b - a) * static_cast<double>(i) / samples;
        double gx = g(x);
        if ((prev_g < 0.0 && gx >= 0.0) || (prev_g > 0.0 && gx <= 0.0))
            out.emplace_back(prev_x, x);
        prev_x = x;
        prev_g = gx;
    }
    return out;
}

namespace {

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& H,
                            const Eigen::VectorXd& z, const Eigen::VectorXd& H0) {
    const int m = static_cast<int>(z.size());
    Eigen::MatrixXd J(H0.size(), m);
    for (int j = 0; j < m; ++j) {
        double h = 1e-7 * std::max(1.0, std::abs(z(j)));
        Eigen::VectorXd zp = z, zm = z;
        zp(j) += h;
        zm(j) -= h;
        J.col(j) = (H(zp) - H(zm)) / (2 * h);
    }
    return J;
}

}  // namespace

ContinuationResult trace_curve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& H,
                               const Eigen::VectorXd& z0, const Eigen::VectorXd& dir_hint,
                               const std::function<bool(const Eigen::VectorXd&)>& keep_going,
                               const ContinuationOptions& opts) {
    ContinuationResult res;
    const int m = static_cast<int>(z0.size());
    Eigen::VectorXd z = z0;
    Eigen::VectorXd t_prev = dir_hint.normalized();
    double h = opts.h0;
    res.points.push_back(z);

    auto tangent_at = [&](const Eigen::VectorXd& zz) {
        Eigen::VectorXd H0 = H(zz);
        Eigen::MatrixXd J = fd_jacobian(H, zz, H0);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
        Eigen::VectorXd t = svd.matrixV().col(m - 1);
        if (t.dot(t_prev) < 0.0) t = -t;
        return t;
    };

    for (long step = 0; step < opts.max_points; ++step) {
        Eigen::VectorXd t = tangent_at(z);
        t_prev = t;

        bool accepted = false;
        while (!accepted) {
            Eigen::VectorXd zp = z + h * t;
            // Newton corrector on [H(z); t.(z - zp)].
            Eigen::VectorXd zc = zp;
            bool converged = false;
            for (int it = 0; it < 25; ++it) {
                Eigen::VectorXd Hc = H(zc);
                double resn = Hc.cwiseAbs().maxCoeff();
                Eigen::VectorXd F(m);
                F.head(m - 1) = Hc;
                F(m - 1) = t.dot(zc - zp);
                if (resn <= opts.tol && std::abs(F(m - 1)) <= opts.tol * std::max(1.0, h)) {
                    converged = true;
                    break;
                }
                Eigen::MatrixXd J(m, m);
                J.topRows(m - 1) = fd_jacobian(H, zc, Hc);
                J.row(m - 1) = t.transpose();
                Eigen::VectorXd dz = J.fullPivLu().solve(-F);
                if (!dz.allFinite()) break;
                zc += dz;
                if (dz.norm() < 1e-15 * std::max(1.0, zc.norm())) {
                    converged = H(zc).cwiseAbs().maxCoeff() <= opts.tol * 10;
                    break;
                }
            }
            if (converged) {
                accepted = true;
                z = zc;
                h = std::min(h * 1.5, opts.h_max);
            } else {
                h *= 0.25;
                if (h < opts.h_min) {
                    res.stop_reason = "stuck";
                    return res;
                }
            }
        }

        if (!keep_going(z)) {
            res.points.push_back(z);
            res.stop_reason = "left_region";
            return res;
        }
        res.points.push_back(z);
        if (step > 10 && (z - z0).norm() < 0.5 * h) {
            res.stop_reason = "closed_loop";
            return res;
        }
    }
    res.stop_reason = "max_points";
    return res;
}

uint64_t fnv1a64(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t hash = 1469598103934665603ull;
    for (size_t i = 0; i < len; ++i) {
        hash ^= p[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file for hashing: " + path);
    uint64_t hash = 1469598103934665603ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace chemflood
