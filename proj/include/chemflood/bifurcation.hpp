#pragma once

#include <string>
#include <vector>

#include "chemflood/model.hpp"

namespace chemflood {

/// One refined root: the saturation at which the scanned quantity vanishes
/// above a composition-grid column.
struct SurfaceVertex {
    int col = 0;  ///< flattened composition-grid index (row-major)
    std::vector<double> y;
    double s = 0.0;
    double residual = 0.0;  ///< |scanned quantity| at the refined root
};

/// A scanned surface over the composition box: all roots, linked into
/// connected sheets across neighbouring grid columns.
struct SurfaceMesh {
    std::string label;
    int family_a = -1;
    int family_b = -1;  ///< second family for equal-speed meshes, else -1
    bool linearly_degenerate = false;  ///< family has no genuine-nonlinearity zeros by construction
    std::vector<int> grid_dims;        ///< composition-grid dimensions (size n-1)
    std::vector<SurfaceVertex> vertices;
    std::vector<std::vector<int>> sheets;  ///< vertex indices per sheet, column-sorted
    double max_residual = 0.0;
};

struct SurfaceOptions {
    int grid = 100;           ///< points per composition axis
    int scan_samples = 256;   ///< saturation samples per column
    double root_tol = 1e-13;  ///< bisection width in saturation
    double margin = 1e-3;     ///< relative inset of the saturation scan range
    double link_frac = 0.08;  ///< sheet-link threshold, fraction of the s-range
    double keep_tol = 1e-6;   ///< discard roots whose residual exceeds this
    bool threaded = true;
};

/// Equal-speed loci lambda_a(s, y) = lambda_b(s, y) for every family pair,
/// computed at u = 1 (the loci do not depend on u).
std::vector<SurfaceMesh> coincidence_surfaces(const Model& m, const SurfaceOptions& opts = {});

/// Zero loci of the genuine-nonlinearity indicator (grad lambda . r) per
/// family, computed at u = 1.  Families whose indicator vanishes identically
/// are returned as empty meshes flagged linearly_degenerate.
std::vector<SurfaceMesh> inflection_surfaces(const Model& m, const SurfaceOptions& opts = {});

}  // namespace chemflood
