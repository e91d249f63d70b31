#include "chemflood/bifurcation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "chemflood/eigen.hpp"
#include "chemflood/numerics.hpp"

namespace chemflood {

namespace {

struct ColumnRoot {
    double s;
    double residual;
};

/// Everything one column scan produces: per-mesh root lists plus the largest
/// |indicator| seen per family (for degeneracy detection).
struct ColumnScan {
    std::vector<std::vector<ColumnRoot>> per_mesh;
    std::vector<double> max_dot;
};

std::vector<double> column_y(const Model& m, int col, int grid) {
    std::vector<double> y(m.ny());
    int rem = col;
    for (int k = m.ny() - 1; k >= 0; --k) {
        const int idx = rem % grid;
        rem /= grid;
        const auto& rng = m.domain.y[k];
        y[k] = grid == 1 ? 0.5 * (rng[0] + rng[1])
                         : rng[0] + (rng[1] - rng[0]) * static_cast<double>(idx) / (grid - 1);
    }
    return y;
}

void run_columns(int ncols, bool threaded, const std::function<void(int)>& work) {
    unsigned hw = std::thread::hardware_concurrency();
    if (!threaded || hw < 2 || ncols < 4) {
        for (int c = 0; c < ncols; ++c) work(c);
        return;
    }
    std::atomic<int> next{0};
    auto loop = [&]() {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= ncols) return;
            work(c);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t + 1 < hw; ++t) pool.emplace_back(loop);
    loop();
    for (auto& th : pool) th.join();
}

/// Refine a sign-change bracket of h to opts.root_tol and keep the root if
/// its residual is small enough to be a genuine zero (discards canonical-sign
/// flip artifacts, where |h| stays bounded away from zero).
void refine_and_keep(const std::function<double(double)>& h, double a, double b,
                     const SurfaceOptions& opts, std::vector<ColumnRoot>& out) {
    const double root = bisect_root(h, a, b, opts.root_tol);
    double res = std::abs(h(root));
    if (!std::isfinite(res)) {
        for (double off : {1e-11, -1e-11}) {
            const double alt = std::abs(h(root + off));
            if (std::isfinite(alt)) res = std::isfinite(res) ? std::min(res, alt) : alt;
        }
    }
    if (std::isfinite(res) && res <= opts.keep_tol) out.push_back({root, res});
}

/// Link roots of one mesh into sheets: union-find over vertices, joining roots
/// in grid-adjacent columns whose saturations are close.
void link_sheets(SurfaceMesh& mesh, const std::vector<std::vector<int>>& by_col, int grid,
                 double link_tol) {
    const int nv = static_cast<int>(mesh.vertices.size());
    std::vector<int> parent(nv);
    for (int i = 0; i < nv; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto join = [&](int a, int b) { parent[find(a)] = find(b); };

    const int ny = static_cast<int>(mesh.grid_dims.size());
    std::vector<int> stride(ny, 1);
    for (int k = ny - 2; k >= 0; --k) stride[k] = stride[k + 1] * grid;

    const int ncols = static_cast<int>(by_col.size());
    for (int c = 0; c < ncols; ++c) {
        for (int k = 0; k < ny; ++k) {
            const int idx = (c / stride[k]) % grid;
            if (idx + 1 >= grid) continue;
            const int d = c + stride[k];
            // Greedy nearest matching between the two columns' root lists.
            std::vector<std::pair<double, std::pair<int, int>>> cand;
            for (int i : by_col[c])
                for (int j : by_col[d]) {
                    const double gap = std::abs(mesh.vertices[i].s - mesh.vertices[j].s);
                    if (gap <= link_tol) cand.push_back({gap, {i, j}});
                }
            std::sort(cand.begin(), cand.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<bool> used_i(by_col[c].size(), false), used_j(by_col[d].size(), false);
            for (const auto& [gap, pr] : cand) {
                int pi = -1, pj = -1;
                for (size_t t = 0; t < by_col[c].size(); ++t)
                    if (by_col[c][t] == pr.first) pi = static_cast<int>(t);
                for (size_t t = 0; t < by_col[d].size(); ++t)
                    if (by_col[d][t] == pr.second) pj = static_cast<int>(t);
                if (used_i[pi] || used_j[pj]) continue;
                used_i[pi] = used_j[pj] = true;
                join(pr.first, pr.second);
            }
        }
    }

    std::vector<std::vector<int>> groups(nv);
    for (int i = 0; i < nv; ++i) groups[find(i)].push_back(i);
    for (auto& g : groups) {
        if (g.empty()) continue;
        std::sort(g.begin(), g.end(), [&](int a, int b) {
            if (mesh.vertices[a].col != mesh.vertices[b].col)
                return mesh.vertices[a].col < mesh.vertices[b].col;
            return mesh.vertices[a].s < mesh.vertices[b].s;
        });
        mesh.sheets.push_back(std::move(g));
    }
    std::sort(mesh.sheets.begin(), mesh.sheets.end(), [&](const auto& a, const auto& b) {
        const double sa = mesh.vertices[a.front()].s, sb = mesh.vertices[b.front()].s;
        if (mesh.vertices[a.front()].col != mesh.vertices[b.front()].col)
            return mesh.vertices[a.front()].col < mesh.vertices[b.front()].col;
        return sa < sb;
    });
}

std::string family_name(int fam) {
    return fam == 0 ? std::string("saturation") : "chemical-" + std::to_string(fam);
}

/// Shared scan driver.  For every composition column it samples all family
/// speeds and genuine-nonlinearity indicators over the saturation range, then
/// refines the requested zero crossings per mesh.
std::vector<SurfaceMesh> scan_surfaces(const Model& m, const SurfaceOptions& opts,
                                       bool coincidence) {
    const int nfam = m.n;
    std::vector<std::pair<int, int>> meshes;  // (a, b) pairs or (fam, -1)
    if (coincidence) {
        for (int a = 0; a < nfam; ++a)
            for (int b = a + 1; b < nfam; ++b) meshes.push_back({a, b});
    } else {
        for (int fam = 0; fam < nfam; ++fam) meshes.push_back({fam, -1});
    }
    const int nmesh = static_cast<int>(meshes.size());

    int ncols = 1;
    for (int k = 0; k < m.ny(); ++k) ncols *= opts.grid;

    const double srange = m.domain.s_hi - m.domain.s_lo;
    const double slo = m.domain.s_lo + opts.margin * srange;
    const double shi = m.domain.s_hi - opts.margin * srange;
    const int S = std::max(opts.scan_samples, 16);
    const double ld_tol = 1e-10;

    std::vector<ColumnScan> scans(ncols);
    run_columns(ncols, opts.threaded, [&](int c) {
        ColumnScan cs;
        cs.per_mesh.resize(nmesh);
        cs.max_dot.assign(nfam, 0.0);
        const std::vector<double> y = column_y(m, c, opts.grid);

        // Sample tables shared by every mesh over this column.
        std::vector<double> sv(S + 1), sf(S + 1);
        std::vector<std::vector<double>> lam(S + 1), dot(S + 1);
        for (int i = 0; i <= S; ++i) {
            sv[i] = slo + (shi - slo) * static_cast<double>(i) / S;
            State U{sv[i], y, 1.0};
            lam[i].assign(nfam, std::numeric_limits<double>::quiet_NaN());
            dot[i].assign(nfam, std::numeric_limits<double>::quiet_NaN());
            sf[i] = std::numeric_limits<double>::quiet_NaN();
            try {
                if (coincidence) {
                    lam[i] = eigenvalues_at(m, U);
                } else {
                    EigenDecomposition dec = eigen_at(m, U);
                    sf[i] = sv[i] - dec.red.fe.f;
                    for (int fam = 0; fam < nfam; ++fam) {
                        lam[i][fam] = dec.pairs[fam].lambda;
                        dot[i][fam] =
                            directional_derivative(m, U, dec.pairs[fam], dec.red).dot;
                        cs.max_dot[fam] = std::max(cs.max_dot[fam], std::abs(dot[i][fam]));
                    }
                }
            } catch (const NumericalError&) {
                // leave NaN; the bracket logic skips these samples
            }
        }

        auto scan_table = [&](const std::function<double(int)>& tbl,
                              const std::function<double(double)>& h,
                              std::vector<ColumnRoot>& out) {
            for (int i = 0; i < S; ++i) {
                const double ga = tbl(i), gb = tbl(i + 1);
                if (!std::isfinite(ga) || !std::isfinite(gb)) continue;
                if (ga == 0.0) {
                    out.push_back({sv[i], 0.0});
                } else if (ga * gb < 0.0) {
                    refine_and_keep(h, sv[i], sv[i + 1], opts, out);
                }
            }
        };

        for (int mi = 0; mi < nmesh; ++mi) {
            const auto [fa, fb] = meshes[mi];
            auto& roots = cs.per_mesh[mi];
            if (coincidence) {
                auto h = [&m, &y, fa = fa, fb = fb](double s) {
                    try {
                        auto l = eigenvalues_at(m, State{s, y, 1.0});
                        return l[fa] - l[fb];
                    } catch (const NumericalError&) {
                        return std::numeric_limits<double>::quiet_NaN();
                    }
                };
                scan_table([&](int i) { return lam[i][fa] - lam[i][fb]; }, h, roots);
                continue;
            }
            if (cs.max_dot[fa] <= ld_tol) continue;  // linearly degenerate family
            auto hdot = [&m, &y, fa = fa](double s) {
                try {
                    return directional_derivative(m, State{s, y, 1.0}, fa).dot;
                } catch (const NumericalError&) {
                    return std::numeric_limits<double>::quiet_NaN();
                }
            };
            if (fa == 0) {
                // Saturation family: the indicator is a flux-curvature multiple
                // and crosses its zeros transversally.
                scan_table([&](int i) { return dot[i][fa]; }, hdot, roots);
                continue;
            }
            // Chemical family: the indicator factors into (s - f), the speed gap
            // to the saturation family, and a smooth remainder.  The first two
            // factors can pinch (zero value with nonzero one-sided limits), so
            // their sheets are located from the factors themselves; remainder
            // zeros are the indicator's own sign changes away from those sheets.
            scan_table([&](int i) { return sf[i]; },
                       [&m, &y](double s) {
                           try {
                               return s - m.flux().value(s, y);
                           } catch (const NumericalError&) {
                               return std::numeric_limits<double>::quiet_NaN();
                           }
                       },
                       roots);
            scan_table([&](int i) { return lam[i][0] - lam[i][fa]; },
                       [&m, &y, fa = fa](double s) {
                           try {
                               auto l = eigenvalues_at(m, State{s, y, 1.0});
                               return l[0] - l[fa];
                           } catch (const NumericalError&) {
                               return std::numeric_limits<double>::quiet_NaN();
                           }
                       },
                       roots);
            std::vector<ColumnRoot> extra;
            scan_table([&](int i) { return dot[i][fa]; }, hdot, extra);
            const double prox = (shi - slo) / S;
            for (const auto& r : extra) {
                bool near_factor = false;
                for (const auto& known : roots)
                    if (std::abs(known.s - r.s) <= prox) near_factor = true;
                if (!near_factor) roots.push_back(r);
            }
        }
        scans[c] = std::move(cs);
    });

    std::vector<double> global_max_dot(nfam, 0.0);
    if (!coincidence)
        for (const auto& cs : scans)
            for (int fam = 0; fam < nfam; ++fam)
                global_max_dot[fam] = std::max(global_max_dot[fam], cs.max_dot[fam]);

    std::vector<SurfaceMesh> out;
    for (int mi = 0; mi < nmesh; ++mi) {
        const auto [fa, fb] = meshes[mi];
        SurfaceMesh mesh;
        mesh.family_a = fa;
        mesh.family_b = fb;
        mesh.grid_dims.assign(m.ny(), opts.grid);
        mesh.label = coincidence
                         ? "coincidence " + family_name(fa) + "/" + family_name(fb)
                         : "inflection " + family_name(fa);
        if (!coincidence && global_max_dot[fa] <= ld_tol) {
            mesh.linearly_degenerate = true;
            out.push_back(std::move(mesh));
            continue;
        }
        std::vector<std::vector<int>> by_col(ncols);
        for (int c = 0; c < ncols; ++c) {
            auto roots = scans[c].per_mesh[mi];
            std::sort(roots.begin(), roots.end(),
                      [](const ColumnRoot& a, const ColumnRoot& b) { return a.s < b.s; });
            for (const auto& r : roots) {
                SurfaceVertex v;
                v.col = c;
                v.y = column_y(m, c, opts.grid);
                v.s = r.s;
                v.residual = r.residual;
                by_col[c].push_back(static_cast<int>(mesh.vertices.size()));
                mesh.vertices.push_back(std::move(v));
                mesh.max_residual = std::max(mesh.max_residual, r.residual);
            }
        }
        link_sheets(mesh, by_col, opts.grid, opts.link_frac * srange);
        out.push_back(std::move(mesh));
    }
    return out;
}

}  // namespace

std::vector<SurfaceMesh> coincidence_surfaces(const Model& m, const SurfaceOptions& opts) {
    return scan_surfaces(m, opts, true);
}

std::vector<SurfaceMesh> inflection_surfaces(const Model& m, const SurfaceOptions& opts) {
    return scan_surfaces(m, opts, false);
}

}  // namespace chemflood
