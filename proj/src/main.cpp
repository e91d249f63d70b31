#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "chemflood/bifurcation.hpp"
#include "chemflood/eigen.hpp"
#include "chemflood/hugoniot.hpp"
#include "chemflood/io.hpp"
#include "chemflood/model.hpp"
#include "chemflood/numerics.hpp"
#include "chemflood/rarefaction.hpp"
#include "chemflood/riemann.hpp"
#include "chemflood/verify.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

using namespace chemflood;

std::string out_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

State state_from_values(const Model& m, const std::vector<double>& v, bool with_u) {
    const size_t want = static_cast<size_t>(m.ny()) + (with_u ? 2 : 1);
    if (v.size() != want)
        throw ModelError("model structure: state needs " + std::to_string(want) +
                         " comma-separated values (s, chemical variables" +
                         (with_u ? ", u)" : ")"));
    State U;
    U.s = v[0];
    U.y.assign(v.begin() + 1, v.begin() + 1 + m.ny());
    U.u = with_u ? v.back() : 1.0;
    if (!m.in_domain(U))
        throw ModelError("model domain: state (" + fmt17(U.s) + ", ...) lies outside the box");
    return U;
}

std::string sanitize_name(const std::string& label) {
    std::string out = label;
    for (char& c : out) {
        if (c == ' ') c = '_';
        if (c == '/') c = '-';
    }
    return out;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

void json_state(std::ostream& os, const State& U) {
    os << "{\"s\": " << fmt17(U.s) << ", \"y\": [";
    for (size_t k = 0; k < U.y.size(); ++k) os << (k ? ", " : "") << fmt17(U.y[k]);
    os << "], \"u\": " << fmt17(U.u) << "}";
}

/// Wave sequence as stable JSON with round-trip-exact numbers.
void write_solution_json(const std::string& path, const RiemannSolution& sol,
                         const CompatibilityReport& rep) {
    std::ofstream os(path, std::ios::binary);
    os << "{\n  \"schema\": \"wave-sequence v1\",\n";
    os << "  \"regime\": \"" << json_escape(sol.regime) << "\",\n";
    os << "  \"compatible\": " << (rep.ok ? "true" : "false") << ",\n";
    os << "  \"left\": ";
    json_state(os, sol.left);
    os << ",\n  \"right\": ";
    json_state(os, sol.right);
    os << ",\n  \"downstream_velocity\": " << fmt17(sol.right.u) << ",\n";
    os << "  \"waves\": [";
    for (size_t i = 0; i < sol.waves.size(); ++i) {
        const auto& w = sol.waves[i];
        os << (i ? ",\n    " : "\n    ");
        os << "{\"kind\": \"" << wave_kind_name(w.kind) << "\", \"family\": " << w.family
           << ", \"speed_left\": " << fmt17(w.speed_l)
           << ", \"speed_right\": " << fmt17(w.speed_r);
        if (w.kind == WaveKind::Shock || w.kind == WaveKind::Composite ||
            w.kind == WaveKind::Contact)
            os << ", \"sigma\": " << fmt17(w.sigma);
        os << ", \"left\": ";
        json_state(os, w.left);
        os << ", \"right\": ";
        json_state(os, w.right);
        if (!w.note.empty()) os << ", \"note\": \"" << json_escape(w.note) << "\"";
        os << "}";
    }
    os << "\n  ],\n  \"issues\": [";
    for (size_t i = 0; i < rep.issues.size(); ++i)
        os << (i ? ", " : "") << "\"" << json_escape(rep.issues[i]) << "\"";
    os << "]\n}\n";
}

std::vector<std::string> state_columns(const Model& m, const std::string& prefix) {
    std::vector<std::string> c{prefix + "s"};
    for (int k = 0; k < m.ny(); ++k) c.push_back(prefix + "y" + std::to_string(k + 1));
    c.push_back(prefix + "u");
    return c;
}

void append_state(std::vector<double>& row, const State& U) {
    row.push_back(U.s);
    for (double y : U.y) row.push_back(y);
    row.push_back(U.u);
}

/// Random in-domain state away from degeneracies (family coincidences, the
/// anchor resonance s = anchor, and the reduced-pencil singularity s = f).
State random_regular_state(const Model& m, std::mt19937_64& rng, double margin) {
    std::uniform_real_distribution<double> un(0.0, 1.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        State U;
        const double srange = m.domain.s_hi - m.domain.s_lo;
        U.s = m.domain.s_lo + srange * (0.02 + 0.96 * un(rng));
        U.y.resize(m.ny());
        for (int k = 0; k < m.ny(); ++k) {
            const auto& r = m.domain.y[k];
            U.y[k] = r[0] + (r[1] - r[0]) * (0.02 + 0.96 * un(rng));
        }
        U.u = 0.5 + 1.5 * un(rng);
        try {
            EigenDecomposition dec = eigen_at(m, U);
            bool ok = std::abs(U.s - dec.red.fe.f) > margin;
            double lmax = 1.0;
            for (const auto& p : dec.pairs) lmax = std::max(lmax, std::abs(p.lambda));
            for (size_t i = 0; i < dec.pairs.size() && ok; ++i) {
                if (!dec.pairs[i].is_saturation &&
                    std::abs(U.s - dec.pairs[i].anchor) < margin)
                    ok = false;
                for (size_t j = i + 1; j < dec.pairs.size() && ok; ++j)
                    if (std::abs(dec.pairs[i].lambda - dec.pairs[j].lambda) < margin * lmax)
                        ok = false;
            }
            if (ok) return U;
        } catch (const NumericalError&) {
            continue;
        }
    }
    throw NumericalError("could not sample a regular state in the model domain");
}

int run(int argc, char** argv) {
    CLI::App app{"Wave-structure toolkit for multicomponent two-phase displacement models"};
    app.require_subcommand(1);

    std::string model_path;
    std::string out_dir = ".";
    app.add_option("--model", model_path, "model description JSON")->required();
    app.add_option("--out", out_dir, "output directory (created if missing)");

    // eigen-at
    auto* c_eig = app.add_subcommand("eigen-at", "characteristic families at one state");
    std::vector<double> eig_state;
    c_eig->add_option("--state", eig_state, "s,y...,u")->required()->delimiter(',');

    // rarefaction
    auto* c_rar = app.add_subcommand("rarefaction", "trace one family's integral curve");
    std::vector<double> rar_state;
    int rar_family = 0, rar_dir = 0;
    double rar_eta = 5.0, rar_hmax = 0.01;
    c_rar->add_option("--state", rar_state, "s,y...,u")->required()->delimiter(',');
    c_rar->add_option("--family", rar_family, "family index (0 = saturation)")->required();
    c_rar->add_option("--direction", rar_dir, "forced direction (-1, 0 = auto, 1)");
    c_rar->add_option("--eta-max", rar_eta, "arclength budget");
    c_rar->add_option("--h-max", rar_hmax, "integrator step cap");

    // hugoniot
    auto* c_hug = app.add_subcommand("hugoniot", "trace the jump locus through one state");
    std::vector<double> hug_state;
    double hug_step = 1e-3;
    long hug_max = 100000;
    c_hug->add_option("--state", hug_state, "s,y...,u")->required()->delimiter(',');
    c_hug->add_option("--step", hug_step, "continuation step");
    c_hug->add_option("--max-points", hug_max, "point budget per branch");

    // surfaces
    auto* c_sur = app.add_subcommand("surfaces", "equal-speed and nonlinearity-zero loci");
    int sur_grid = 100, sur_samples = 256;
    c_sur->add_option("--grid", sur_grid, "composition grid per axis");
    c_sur->add_option("--samples", sur_samples, "saturation scan samples per column");

    // solve
    auto* c_sol = app.add_subcommand("solve", "wave sequence between two states");
    std::vector<double> sol_left, sol_right;
    c_sol->add_option("--left", sol_left, "s,y...,u")->required()->delimiter(',');
    c_sol->add_option("--right", sol_right, "s,y... (velocity is solved)")
        ->required()
        ->delimiter(',');

    // profile
    auto* c_pro = app.add_subcommand("profile", "sample a solved wave sequence");
    std::vector<double> pro_left, pro_right;
    int pro_samples = 1001;
    double pro_lo = 0.0, pro_hi = 0.0;
    bool pro_auto = true;
    c_pro->add_option("--left", pro_left, "s,y...,u")->required()->delimiter(',');
    c_pro->add_option("--right", pro_right, "s,y...")->required()->delimiter(',');
    c_pro->add_option("--samples", pro_samples, "sample count");
    auto* oplo = c_pro->add_option("--xi-lo", pro_lo, "similarity range start");
    auto* ophi = c_pro->add_option("--xi-hi", pro_hi, "similarity range end");

    // verify
    auto* c_ver = app.add_subcommand("verify", "cross-check the eigensolver against oracles");
    int ver_states = 100;
    unsigned long long ver_seed = 12345;
    double ver_tol = 1e-8, ver_fd_tol = 1e-5, ver_margin = 1e-3;
    c_ver->add_option("--states", ver_states, "number of random states");
    c_ver->add_option("--seed", ver_seed, "random seed");
    c_ver->add_option("--tol", ver_tol, "speed/residual tolerance");
    c_ver->add_option("--fd-tol", ver_fd_tol, "finite-difference tolerance");
    c_ver->add_option("--margin", ver_margin, "degeneracy exclusion margin");

    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(out_dir);
    Model m = Model::load(model_path);

    RunManifest man;
    man.tool_version = kToolVersion;
    man.model_path = model_path;
    man.model_hash = hex64(fnv1a64_file(model_path));

    if (*c_eig) {
        man.subcommand = "eigen-at";
        State U = state_from_values(m, eig_state, true);
        for (size_t i = 0; i < eig_state.size(); ++i)
            man.params["state." + std::to_string(i)] = fmt17(eig_state[i]);
        EigenDecomposition dec = eigen_at(m, U);

        std::vector<std::string> cols{"family", "lambda", "anchor", "degenerate", "residual"};
        for (const auto& c : state_columns(m, "r_")) cols.push_back(c);
        for (int i = 0; i < m.neq(); ++i) cols.push_back("l_" + std::to_string(i + 1));
        CsvFile csv(out_path(out_dir, "eigen.csv"), "eigen-at v1", cols);
        for (const auto& p : dec.pairs) {
            std::vector<double> row{static_cast<double>(p.family), p.lambda,
                                    p.is_saturation ? std::nan("") : p.anchor,
                                    p.degenerate ? 1.0 : 0.0, p.residual};
            for (int k = 0; k < p.r.size(); ++k) row.push_back(p.r(k));
            for (int k = 0; k < p.l.size(); ++k) row.push_back(p.l(k));
            csv.row(row);
        }
        csv.close();
        record_output(man, out_path(out_dir, "eigen.csv"));
        for (const auto& p : dec.pairs)
            std::cout << "family " << p.family << (p.is_saturation ? " (saturation)" : "")
                      << ": speed " << fmt17(p.lambda)
                      << (p.degenerate ? " [degenerate]" : "") << "\n";
    } else if (*c_rar) {
        man.subcommand = "rarefaction";
        State U = state_from_values(m, rar_state, true);
        for (size_t i = 0; i < rar_state.size(); ++i)
            man.params["state." + std::to_string(i)] = fmt17(rar_state[i]);
        man.params["family"] = std::to_string(rar_family);
        man.params["direction"] = std::to_string(rar_dir);
        man.params["eta_max"] = fmt17(rar_eta);
        man.params["h_max"] = fmt17(rar_hmax);
        TraceOptions topt;
        topt.eta_max = rar_eta;
        topt.h_max = rar_hmax;
        topt.forced_direction = rar_dir;
        RarefactionCurve c = trace_rarefaction(m, U, rar_family, topt);

        std::vector<std::string> cols{"eta"};
        for (const auto& cc : state_columns(m, "")) cols.push_back(cc);
        cols.push_back("lambda");
        CsvFile csv(out_path(out_dir, "rarefaction.csv"), "rarefaction-curve v1", cols);
        for (const auto& p : c.pts) {
            std::vector<double> row{p.eta};
            append_state(row, p.U);
            row.push_back(p.lambda);
            csv.row(row);
        }
        csv.close();
        record_output(man, out_path(out_dir, "rarefaction.csv"));
        std::cout << "points " << c.pts.size() << ", stop: " << c.stop_reason << "\n";
    } else if (*c_hug) {
        man.subcommand = "hugoniot";
        State U = state_from_values(m, hug_state, true);
        for (size_t i = 0; i < hug_state.size(); ++i)
            man.params["state." + std::to_string(i)] = fmt17(hug_state[i]);
        man.params["step"] = fmt17(hug_step);
        man.params["max_points"] = std::to_string(hug_max);
        HugoniotOptions ho;
        ho.step = hug_step;
        ho.max_points = hug_max;
        std::vector<HugoniotBranch> branches = trace_hugoniot(m, U, ho);

        std::vector<std::string> cols{"branch", "index"};
        for (const auto& cc : state_columns(m, "")) cols.push_back(cc);
        cols.push_back("sigma");
        cols.push_back("u_ratio");
        CsvFile csv(out_path(out_dir, "hugoniot.csv"), "jump-locus v1", cols);
        for (size_t b = 0; b < branches.size(); ++b) {
            const auto& br = branches[b];
            for (size_t i = 0; i < br.states.size(); ++i) {
                std::vector<double> row{static_cast<double>(b), static_cast<double>(i)};
                append_state(row, br.states[i]);
                row.push_back(br.sigma[i]);
                row.push_back(br.u_ratio[i]);
                csv.row(row);
            }
            std::cout << "branch " << br.label << ": " << br.states.size()
                      << " points, stop: " << br.stop_reason << "\n";
        }
        csv.close();
        record_output(man, out_path(out_dir, "hugoniot.csv"));
    } else if (*c_sur) {
        man.subcommand = "surfaces";
        man.params["grid"] = std::to_string(sur_grid);
        man.params["samples"] = std::to_string(sur_samples);
        SurfaceOptions so;
        so.grid = sur_grid;
        so.scan_samples = sur_samples;
        auto coin = coincidence_surfaces(m, so);
        auto infl = inflection_surfaces(m, so);

        // One CSV per connected sheet, named by the locus and sheet index.
        std::vector<std::string> cols{"col"};
        for (int k = 0; k < m.ny(); ++k) cols.push_back("y" + std::to_string(k + 1));
        cols.push_back("s");
        cols.push_back("residual");
        auto dump = [&](const std::vector<SurfaceMesh>& meshes, const std::string& kind) {
            int total_sheets = 0;
            for (const auto& mesh : meshes) {
                const std::string base = sanitize_name(mesh.label);
                for (size_t sh = 0; sh < mesh.sheets.size(); ++sh) {
                    const std::string fname =
                        base + "_sheet" + std::to_string(sh) + ".csv";
                    CsvFile csv(out_path(out_dir, fname), "state-space-surface-mesh v1",
                                cols);
                    for (int vi : mesh.sheets[sh]) {
                        const auto& v = mesh.vertices[vi];
                        std::vector<double> row{static_cast<double>(v.col)};
                        for (double yv : v.y) row.push_back(yv);
                        row.push_back(v.s);
                        row.push_back(v.residual);
                        csv.row(row);
                    }
                    csv.close();
                    record_output(man, out_path(out_dir, fname));
                }
                total_sheets += static_cast<int>(mesh.sheets.size());
                std::cout << kind << " " << mesh.label << ": " << mesh.sheets.size()
                          << " sheet(s), max residual " << fmt17(mesh.max_residual)
                          << (mesh.linearly_degenerate ? " [degenerate family]" : "") << "\n";
            }
            return total_sheets;
        };
        const int ncoin = dump(coin, "coincidence");
        const int ninfl = dump(infl, "inflection");
        std::cout << "total sheets: " << ncoin << " equal-speed, " << ninfl
                  << " nonlinearity-zero\n";
    } else if (*c_sol || *c_pro) {
        const bool profile_mode = static_cast<bool>(*c_pro);
        man.subcommand = profile_mode ? "profile" : "solve";
        const auto& lv = profile_mode ? pro_left : sol_left;
        const auto& rv = profile_mode ? pro_right : sol_right;
        State L = state_from_values(m, lv, true);
        State R = state_from_values(m, rv, false);
        for (size_t i = 0; i < lv.size(); ++i)
            man.params["left." + std::to_string(i)] = fmt17(lv[i]);
        for (size_t i = 0; i < rv.size(); ++i)
            man.params["right." + std::to_string(i)] = fmt17(rv[i]);

        RiemannSolution sol = solve_riemann(m, L, R);
        CompatibilityReport rep = check_compatibility(m, sol);

        if (!profile_mode) {
            write_solution_json(out_path(out_dir, "solution.json"), sol, rep);
            record_output(man, out_path(out_dir, "solution.json"));
            std::cout << "regime: " << sol.regime << ", waves: " << sol.waves.size()
                      << ", downstream velocity " << fmt17(sol.right.u) << "\n";
            for (const auto& wseg : sol.waves)
                std::cout << "  " << wave_kind_name(wseg.kind)
                          << (wseg.family >= 0 ? " (family " + std::to_string(wseg.family) + ")"
                                               : "")
                          << " speeds [" << fmt17(wseg.speed_l) << ", " << fmt17(wseg.speed_r)
                          << "]" << (wseg.note.empty() ? "" : " " + wseg.note) << "\n";
        } else {
            man.params["samples"] = std::to_string(pro_samples);
            double lo = pro_lo, hi = pro_hi;
            if (pro_auto && (!*oplo || !*ophi)) {
                double smin = 0.0, smax = 1.0;
                if (!sol.waves.empty()) {
                    smin = sol.waves.front().speed_l;
                    smax = sol.waves.back().speed_r;
                }
                const double pad = 0.1 * std::max(1.0, smax - smin);
                if (!*oplo) lo = smin - pad;
                if (!*ophi) hi = smax + pad;
            }
            man.params["xi_lo"] = fmt17(lo);
            man.params["xi_hi"] = fmt17(hi);
            std::vector<std::string> cols{"xi"};
            for (const auto& cc : state_columns(m, "")) cols.push_back(cc);
            CsvFile csv(out_path(out_dir, "profile.csv"), "similarity-profile v1", cols);
            for (int i = 0; i < pro_samples; ++i) {
                const double xi =
                    lo + (hi - lo) * static_cast<double>(i) / std::max(1, pro_samples - 1);
                State U = evaluate_profile(m, sol, xi);
                std::vector<double> row{xi};
                append_state(row, U);
                csv.row(row);
            }
            csv.close();
            record_output(man, out_path(out_dir, "profile.csv"));
            std::cout << "profile over [" << fmt17(lo) << ", " << fmt17(hi) << "], "
                      << pro_samples << " samples\n";
        }
        if (!rep.ok) {
            std::cerr << "incompatible solution:\n";
            for (const auto& s : rep.issues) std::cerr << "  " << s << "\n";
            write_manifest(man, out_path(out_dir, "manifest.json"));
            return 2;
        }
    } else if (*c_ver) {
        man.subcommand = "verify";
        man.params["states"] = std::to_string(ver_states);
        man.params["seed"] = std::to_string(ver_seed);
        man.params["tol"] = fmt17(ver_tol);
        man.params["fd_tol"] = fmt17(ver_fd_tol);
        man.params["margin"] = fmt17(ver_margin);

        std::mt19937_64 rng(ver_seed);
        std::vector<std::string> cols;
        for (const auto& cc : state_columns(m, "")) cols.push_back(cc);
        cols.push_back("lambda_rel_err");
        cols.push_back("pencil_residual_rel");
        cols.push_back("fd_dot_rel_err");
        CsvFile csv(out_path(out_dir, "verify.csv"), "eigen-crosscheck v1", cols);

        double worst_lam = 0.0, worst_res = 0.0, worst_fd = 0.0;
        for (int i = 0; i < ver_states; ++i) {
            State U = random_regular_state(m, rng, ver_margin);
            EigenDecomposition dec = eigen_at(m, U);
            OracleEigen oracle = dense_eigen_oracle(m, U);
            std::vector<double> mine;
            for (const auto& p : dec.pairs) mine.push_back(p.lambda);
            std::sort(mine.begin(), mine.end());
            double lam_err = 0.0;
            for (int k = 0; k < m.n; ++k)
                lam_err = std::max(lam_err, std::abs(mine[k] - oracle.lambda[k]) /
                                                std::max(1.0, std::abs(oracle.lambda[k])));
            const Eigen::MatrixXd A = m.flux_jacobian(U);
            const Eigen::MatrixXd B = m.accumulation_jacobian(U);
            double res = 0.0;
            for (const auto& p : dec.pairs) {
                const double scale =
                    (A.norm() + std::abs(p.lambda) * B.norm()) * p.r.norm() + 1e-300;
                res = std::max(res, (A * p.r - p.lambda * B * p.r).norm() / scale);
            }
            double fd_err = 0.0;
            for (int fam = 0; fam < m.n; ++fam) {
                DirectionalDerivative dd = directional_derivative(m, U, fam);
                const double fd = fd_directional(m, U, fam);
                fd_err = std::max(fd_err,
                                  std::abs(dd.dot - fd) / std::max(1.0, std::abs(fd)));
            }
            worst_lam = std::max(worst_lam, lam_err);
            worst_res = std::max(worst_res, res);
            worst_fd = std::max(worst_fd, fd_err);
            std::vector<double> row;
            append_state(row, U);
            row.push_back(lam_err);
            row.push_back(res);
            row.push_back(fd_err);
            csv.row(row);
        }
        csv.close();
        record_output(man, out_path(out_dir, "verify.csv"));
        std::cout << "states " << ver_states << ": max speed mismatch " << fmt17(worst_lam)
                  << ", max pencil residual " << fmt17(worst_res)
                  << ", max directional-derivative mismatch " << fmt17(worst_fd) << "\n";
        if (worst_lam > ver_tol || worst_res > ver_tol)
            throw NumericalError("eigensolver cross-check exceeded tolerance");
        if (worst_fd > ver_fd_tol)
            throw NumericalError("directional-derivative cross-check exceeded tolerance");
    }

    write_manifest(man, out_path(out_dir, "manifest.json"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const chemflood::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 3;
    } catch (const chemflood::NoSequenceFound& e) {
        std::cerr << "no wave sequence: " << e.what() << "\n";
        return 2;
    } catch (const chemflood::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
