// Acceptance gate: eight independently checkable claims about the library,
// each printed as one [PASS]/[FAIL] line.  Exits nonzero if any claim fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chemflood/bifurcation.hpp"
#include "chemflood/eigen.hpp"
#include "chemflood/hugoniot.hpp"
#include "chemflood/model.hpp"
#include "chemflood/rarefaction.hpp"
#include "chemflood/riemann.hpp"
#include "chemflood/verify.hpp"
#include "test_util.hpp"

using namespace chemflood;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, bool ok, const std::string& label, const std::string& metric) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", idx, label.c_str(),
                metric.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Root of a scalar function of saturation by scan + bisection.
std::vector<double> roots_on_column(const std::function<double(double)>& g, double lo, double hi,
                                    int samples) {
    std::vector<double> out;
    double prev = g(lo);
    double sp = lo;
    for (int i = 1; i <= samples; ++i) {
        double s = lo + (hi - lo) * i / samples;
        double cur = g(s);
        if (prev == 0.0) out.push_back(sp);
        if (prev * cur < 0.0) {
            double a = sp, b = s, fa = prev;
            for (int it = 0; it < 80; ++it) {
                double mmid = 0.5 * (a + b);
                double fm = g(mmid);
                if (fa * fm <= 0.0)
                    b = mmid;
                else
                    a = mmid, fa = fm;
            }
            out.push_back(0.5 * (a + b));
        }
        prev = cur;
        sp = s;
    }
    return out;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1(const Model& m) {
    Stopwatch sw;
    std::mt19937_64 rng(1001);
    double worst_rel = 0.0, worst_res = 0.0;
    const int N = 1000;
    for (int i = 0; i < N; ++i) {
        State U = testutil::random_regular_state(m, rng, 1e-3);
        EigenDecomposition dec = eigen_at(m, U);
        OracleEigen orc = dense_eigen_oracle(m, U);
        std::vector<double> a, b = orc.lambda;
        for (const auto& p : dec.pairs) a.push_back(p.lambda);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (size_t k = 0; k < a.size(); ++k) {
            double denom = std::max(std::abs(b[k]), 1e-8);
            worst_rel = std::max(worst_rel, std::abs(a[k] - b[k]) / denom);
        }
        Eigen::MatrixXd A = m.flux_jacobian(U);
        Eigen::MatrixXd B = m.accumulation_jacobian(U);
        double nA = A.norm(), nB = B.norm();
        for (const auto& p : dec.pairs) {
            double bound = 1e-10 * (nA + std::abs(p.lambda) * nB) * p.r.norm();
            worst_res = std::max(worst_res, (A * p.r - p.lambda * (B * p.r)).norm() / bound);
        }
    }
    double el = sw.seconds();
    bool ok = worst_rel <= 1e-10 && worst_res <= 1.0 && el < 30.0;
    report(1, ok, "reduction speeds and eigenvectors match a dense generalized eigensolver on " +
                      std::to_string(N) + " random states",
           "worst speed rel err " + fmt(worst_rel) + ", worst residual/bound " + fmt(worst_res) +
               ", " + fmt(el) + "s");
}

// ---------------------------------------------------------------- criterion 2
void criterion_2(const Model& m) {
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> us(0.03, 0.97), uu(0.25, 4.0);
    double worst_anchor = 0.0, worst_ld = 0.0;
    for (int i = 0; i < 100; ++i) {
        State U = testutil::random_regular_state(m, rng, 1e-3);
        State V = U;
        V.s = us(rng);
        V.u = uu(rng);
        EigenDecomposition a = eigen_at(m, U), b = eigen_at(m, V);
        for (size_t k = 1; k < a.pairs.size(); ++k)
            worst_anchor = std::max(worst_anchor, std::abs(a.pairs[k].anchor - b.pairs[k].anchor));
        for (const auto& p : a.pairs) {
            if (p.is_saturation) continue;
            if (std::min(std::abs(p.anchor), std::abs(p.anchor - 1.0)) <= 1e-9)
                worst_ld = std::max(worst_ld, std::abs(fd_directional(m, U, p.family)));
        }
    }
    bool ok = worst_anchor <= 1e-12 && worst_ld <= 1e-7;
    report(2, ok,
           "chemical anchors are invariant in saturation and velocity; anchor-0/1 families have "
           "vanishing nonlinearity",
           "worst anchor drift " + fmt(worst_anchor) + ", worst degenerate-family indicator " +
               fmt(worst_ld));
}

// ---------------------------------------------------------------- criterion 3
void criterion_3(const Model& m) {
    std::mt19937_64 rng(1003);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        State U = testutil::random_regular_state(m, rng, 1e-3);
        for (int fam = 0; fam < m.n; ++fam) {
            DirectionalDerivative dd = directional_derivative(m, U, fam);
            double fd = fd_directional(m, U, fam);
            worst = std::max(worst, std::abs(dd.dot - fd) / std::max(1.0, std::abs(fd)));
        }
    }

    // Every finite-difference zero crossing of the indicator must lie on a
    // predicted locus: the flux inflection (fast family), or the secant
    // tangency / equal-speed levels (middle family).
    const double smargin = 0.02 * (m.domain.s_hi - m.domain.s_lo);
    const double lo = m.domain.s_lo + smargin, hi = m.domain.s_hi - smargin;
    const int S = 400;
    const double grid_tol = 2.0 * (hi - lo) / S;
    double worst_dist = 0.0;
    int crossings = 0;
    for (int iy1 = 0; iy1 < 3; ++iy1) {
        for (int iy2 = 0; iy2 < 3; ++iy2) {
            std::vector<double> y(2);
            y[0] = m.domain.y[0][0] + (m.domain.y[0][1] - m.domain.y[0][0]) * (0.1 + 0.4 * iy1);
            y[1] = m.domain.y[1][0] + (m.domain.y[1][1] - m.domain.y[1][0]) * (0.1 + 0.4 * iy2);
            std::vector<std::vector<double>> predicted(2);
            predicted[0] = roots_on_column(
                [&](double s) { return m.flux().eval(s, y).f_ss; }, lo, hi, 128);
            predicted[1] = roots_on_column(
                [&](double s) { return s - m.flux().value(s, y); }, lo, hi, 128);
            for (double r : roots_on_column(
                     [&](double s) {
                         std::vector<double> l = eigenvalues_at(m, State{s, y, 1.0});
                         return l[0] - l[1];
                     },
                     lo, hi, 128))
                predicted[1].push_back(r);

            for (int fam = 0; fam < 2; ++fam) {
                auto g = [&](double s) { return fd_directional(m, State{s, y, 1.0}, fam); };
                double colmax = 0.0;
                std::vector<double> vals(S + 1);
                for (int i = 0; i <= S; ++i) {
                    vals[static_cast<size_t>(i)] = g(lo + (hi - lo) * i / S);
                    colmax = std::max(colmax, std::abs(vals[static_cast<size_t>(i)]));
                }
                for (int i = 1; i <= S; ++i) {
                    double prev = vals[static_cast<size_t>(i - 1)], cur = vals[static_cast<size_t>(i)];
                    if (!(prev * cur < 0.0) || std::abs(prev) <= 1e-9 || std::abs(cur) <= 1e-9)
                        continue;
                    // Refine the sign change.  The eigenvector's canonical
                    // sign convention can flip discontinuously, which also
                    // flips the indicator's sign without it passing through
                    // zero; a genuine zero refines to a small value.
                    double a = lo + (hi - lo) * (i - 1) / S, b = lo + (hi - lo) * i / S;
                    double fa = prev;
                    for (int it = 0; it < 50; ++it) {
                        double mid = 0.5 * (a + b), fmv = g(mid);
                        if (fa * fmv <= 0.0)
                            b = mid;
                        else
                            a = mid, fa = fmv;
                    }
                    double sbar = 0.5 * (a + b);
                    if (std::abs(g(sbar)) > 1e-3 * colmax) continue;  // convention flip
                    double best = 1e300;
                    for (double r : predicted[static_cast<size_t>(fam)])
                        best = std::min(best, std::abs(sbar - r));
                    worst_dist = std::max(worst_dist, best);
                    ++crossings;
                }
            }
        }
    }
    bool ok = worst <= 1e-5 && crossings >= 9 && worst_dist <= grid_tol;
    report(3, ok,
           "nonlinearity indicator matches finite differences on 500 states and every indicator "
           "zero sits on a predicted locus",
           "worst FD rel err " + fmt(worst) + ", " + std::to_string(crossings) +
               " crossings, worst locus distance " + fmt(worst_dist) + " vs tol " + fmt(grid_tol));
}

// ---------------------------------------------------------------- criterion 4
void criterion_4(const Model& m) {
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> us(0.05, 0.95);
    // Bound scale: flux-vector norm plus |sigma| times accumulation norm,
    // each taken as the larger of the two sides of the jump.
    auto bound = [&m](const State& minus, const State& plus, double sigma) {
        return 1e-8 * (std::max(m.flux_vector(minus).norm(), m.flux_vector(plus).norm()) +
                       std::abs(sigma) *
                           std::max(m.accumulation(minus).norm(), m.accumulation(plus).norm()));
    };
    double worst_res = 0.0, worst_upass = 0.0, worst_chord = 0.0;
    for (int i = 0; i < 100; ++i) {
        State L = testutil::random_state(m, rng, 0.02);
        double sp = us(rng);
        if (std::abs(sp - L.s) < 0.05) continue;
        RHResult rh = rh_solve(m, L, sp, L.y);
        worst_res = std::max(worst_res, rh.residual.lpNorm<Eigen::Infinity>() /
                                            bound(L, State{sp, L.y, rh.u_plus}, rh.sigma));
        worst_upass = std::max(worst_upass, std::abs(rh.u_plus - L.u));
        double chord = L.u / m.phi * (m.flux().value(sp, L.y) - m.flux().value(L.s, L.y)) /
                       (sp - L.s);
        worst_chord = std::max(worst_chord,
                               std::abs(rh.sigma - chord) / std::max(1.0, std::abs(chord)));
    }

    // Cross-composition points from traced locus branches.
    HugoniotOptions ho;
    ho.step = 1e-3;
    ho.max_points = 300;
    for (const State& base : {State{0.6, {0.2, 3.0}, 1.0}, State{0.45, {0.1, 3.5}, 1.2}}) {
        for (const auto& br : trace_hugoniot(m, base, ho)) {
            for (size_t i = 0; i < br.states.size(); i += 25) {
                RHResult rh = rh_solve(m, base, br.states[i].s, br.states[i].y);
                State plus{br.states[i].s, br.states[i].y, rh.u_plus};
                worst_res = std::max(worst_res, rh.residual.lpNorm<Eigen::Infinity>() /
                                                    bound(base, plus, rh.sigma));
            }
        }
    }

    // Small jumps ride at the characteristic speed: stepping off the base
    // state along an eigenvector, the best-fit jump speed approaches that
    // family's speed linearly in the jump size.
    State sbase{0.6, {0.2, 3.0}, 1.0};
    EigenDecomposition sdec = eigen_at(m, sbase);
    int secant_ok = 0, secant_n = 0;
    for (const auto& p : sdec.pairs) {
        double prev_gap = 1e300;
        bool fam_ok = true;
        for (double eps : {1e-3, 1e-4, 1e-5}) {
            double sp = sbase.s + eps * p.r(0);
            std::vector<double> yp = sbase.y;
            for (int k = 0; k < m.ny(); ++k) yp[static_cast<size_t>(k)] += eps * p.r(1 + k);
            RHResult rh = rh_solve(m, sbase, sp, yp);
            double gap = std::abs(rh.sigma - p.lambda);
            fam_ok = fam_ok && gap <= 100.0 * eps * std::max(1.0, std::abs(p.lambda)) &&
                     gap <= std::max(prev_gap, 1e-10);
            prev_gap = gap;
        }
        ++secant_n;
        if (fam_ok) ++secant_ok;
    }
    bool ok = worst_res <= 1.0 && worst_upass <= 1e-12 && worst_chord <= 1e-12 &&
              secant_ok == secant_n;
    report(4, ok,
           "jump conditions: residuals within bound, velocity passes through fixed-composition "
           "jumps, small jumps ride the characteristic speed",
           "worst residual/bound " + fmt(worst_res) + ", velocity drift " + fmt(worst_upass) +
               ", chord err " + fmt(worst_chord) + ", " + std::to_string(secant_ok) + "/" +
               std::to_string(secant_n) + " families characteristic in the small-jump limit");
}

// ---------------------------------------------------------------- criterion 5
void criterion_5(const Model& m) {
    Stopwatch sw;
    std::vector<double> y = {0.2, 3.0};
    RiemannSolution sol = solve_riemann(m, State{0.8, y, 1.0}, State{0.2, y, 1.0});
    double t_end = 0.1;
    FvOptions fo;
    fo.x_jump = 0.2;
    fo.cells = 2000;
    FvResult fva = scalar_fv(m, y, 1.0, 0.8, 0.2, t_end, fo);
    double e1 = l1_against_profile(m, sol, fva, t_end, fo.x_jump);
    fo.cells = 4000;
    FvResult fvb = scalar_fv(m, y, 1.0, 0.8, 0.2, t_end, fo);
    double e2 = l1_against_profile(m, sol, fvb, t_end, fo.x_jump);
    double ratio = e2 / e1;
    double el = sw.seconds();
    bool ok = e1 <= 2e-2 && ratio >= 0.35 && ratio <= 0.65 && el < 60.0 &&
              fva.mass_drift_max <= 1e-12 && fvb.mass_drift_max <= 1e-12;
    report(5, ok,
           "an independent finite-volume scheme converges to the constructed similarity solution",
           "L1 " + fmt(e1) + " at 2000 cells, refinement ratio " + fmt(ratio) + ", mass drift " +
               fmt(std::max(fva.mass_drift_max, fvb.mass_drift_max)) + ", " + fmt(el) + "s");
}

// ---------------------------------------------------------------- criterion 6
void criterion_6(const Model& m) {
    Stopwatch sw;
    std::string why;
    bool ok = true;
    auto need = [&](bool cond, const std::string& msg) {
        if (!cond && why.empty()) why = msg;
        ok = ok && cond;
    };

    // Template A: compositions change in both chemical variables; the fan
    // pair hands off to a contact, and the closing jump is characteristic
    // with the contact family on its left.
    {
        State L{0.97, {0.05, 3.6}, 1.0};
        State R{0.59670975907930079, {0.3, 2.9}, 1.0};
        RiemannSolution sol = solve_riemann(m, L, R);
        need(sol.regime == "cross-plane", "template A regime");
        std::vector<WaveKind> kinds;
        int plateaus = 0;
        for (const auto& w : sol.waves) {
            if (w.kind == WaveKind::Constant)
                ++plateaus;
            else
                kinds.push_back(w.kind);
        }
        need(kinds == std::vector<WaveKind>{WaveKind::Rarefaction, WaveKind::Rarefaction,
                                            WaveKind::Contact, WaveKind::Shock},
             "template A wave kinds");
        need(plateaus == 2, "template A interior constants");
        need(check_compatibility(m, sol).ok, "template A compatibility");
        const WaveSegment& cl = sol.waves.back();
        double lam2 = eigenvalues_at(m, cl.left)[2];
        need(std::abs(cl.sigma - lam2) <= 1e-9 * std::max(1.0, std::abs(lam2)),
             "template A closing jump characteristic");
    }

    // Template B: only the trailing chemical variable changes; the closing
    // jump is characteristic with the middle family on its left.
    {
        State L{0.97, {0.18, 3.6}, 1.0};
        State R{0.60581951490799968, {0.18, 2.9}, 1.0};
        RiemannSolution sol = solve_riemann(m, L, R);
        need(sol.regime == "shared-plane", "template B regime");
        std::vector<WaveKind> kinds;
        for (const auto& w : sol.waves)
            if (w.kind != WaveKind::Constant) kinds.push_back(w.kind);
        need(kinds == std::vector<WaveKind>{WaveKind::Rarefaction, WaveKind::Rarefaction,
                                            WaveKind::Shock},
             "template B wave kinds");
        need(check_compatibility(m, sol).ok, "template B compatibility");
        const WaveSegment& cl = sol.waves.back();
        need(cl.family == 1, "template B closing family");
        double lam1 = eigenvalues_at(m, cl.left)[1];
        need(std::abs(cl.sigma - lam1) <= 1e-9 * std::max(1.0, std::abs(lam1)),
             "template B closing jump characteristic");
    }
    double el = sw.seconds();
    need(el < 10.0, "time budget");
    report(6, ok, "both multi-family wave-sequence templates solve and verify end to end",
           ok ? fmt(el) + "s" : "failed: " + why + ", " + fmt(el) + "s");
}

// ---------------------------------------------------------------- criterion 7
void criterion_7(const Model& m) {
    Stopwatch sw;
    SurfaceOptions so;  // full resolution: 100x100 columns
    std::vector<SurfaceMesh> cs = coincidence_surfaces(m, so);
    std::vector<SurfaceMesh> is = inflection_surfaces(m, so);
    int ncs = 0, nis = 0;
    double worst = 0.0;
    for (const auto& sm : cs) {
        ncs += static_cast<int>(sm.sheets.size());
        worst = std::max(worst, sm.max_residual);
    }
    for (const auto& sm : is) {
        nis += static_cast<int>(sm.sheets.size());
        worst = std::max(worst, sm.max_residual);
    }
    double el = sw.seconds();
    bool ok = ncs == 4 && nis == 4 && worst <= 1e-9 && el < 60.0;
    report(7, ok,
           "equal-speed and nonlinearity-zero surfaces resolve into the expected sheets at full "
           "resolution",
           std::to_string(ncs) + "+" + std::to_string(nis) + " sheets, worst residual " +
               fmt(worst) + ", " + fmt(el) + "s");
}

// ---------------------------------------------------------------- criterion 8
int run_cli(const std::string& args) {
    std::string cmd = std::string(CHEMFLOOD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_8() {
    std::string model = std::string(CHEMFLOOD_MODELS_DIR) + "/desk3.json";
    fs::path base = fs::temp_directory_path() / "chemflood_acceptance";
    fs::remove_all(base);
    std::vector<std::pair<std::string, std::string>> jobs = {
        {"solve", " solve --left 0.97,0.05,3.6,1.0 --right 0.59670975907930079,0.3,2.9"},
        {"surfaces", " surfaces --grid 6 --samples 128"},
    };
    bool ok = true;
    std::string why;
    int files = 0;
    for (const auto& [tag, args] : jobs) {
        fs::path d1 = base / (tag + "_1"), d2 = base / (tag + "_2");
        fs::create_directories(d1);
        fs::create_directories(d2);
        int r1 = run_cli("--model " + model + " --out " + d1.string() + args);
        int r2 = run_cli("--model " + model + " --out " + d2.string() + args);
        if (r1 != 0 || r2 != 0) {
            ok = false;
            why = tag + " exit codes " + std::to_string(r1) + "/" + std::to_string(r2);
            break;
        }
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(d1)) names.push_back(e.path().filename());
        std::sort(names.begin(), names.end());
        for (const auto& n : names) {
            ++files;
            if (!fs::exists(d2 / n) || slurp(d1 / n) != slurp(d2 / n)) {
                ok = false;
                why = tag + ": " + n + " differs between reruns";
            }
        }
    }
    report(8, ok, "command-line reruns produce byte-identical outputs",
           ok ? std::to_string(files) + " files compared" : why);
}

}  // namespace

int main() {
    Model m = Model::load(std::string(CHEMFLOOD_MODELS_DIR) + "/desk3.json");
    criterion_1(m);
    criterion_2(m);
    criterion_3(m);
    criterion_4(m);
    criterion_5(m);
    criterion_6(m);
    criterion_7(m);
    criterion_8();
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
