#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cmg {

/// Conforming triangle mesh of a polygonal 2D domain. Triangles are stored
/// counterclockwise; a vertex is flagged boundary iff it lies on an edge
/// shared by exactly one triangle.
struct Triangulation {
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::uint8_t> boundary_vertex;
    int level_id = 0;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/// Where a fine vertex comes from: a == b means it is the coarse vertex a
/// carried over unchanged, a != b means it is the midpoint of coarse edge
/// (a, b).
struct VertexOrigin {
    int a = -1;
    int b = -1;
    bool inherited() const { return a == b; }
};

/// Child-to-parent bookkeeping for one regular (midpoint) refinement step.
struct RefinementMap {
    std::vector<int> parent_triangle;        // per child triangle
    std::vector<VertexOrigin> vertex_origin; // per fine vertex
};

/// Nested mesh sequence, coarse first. maps[k] connects levels[k] to
/// levels[k+1].
struct MeshHierarchy {
    std::vector<Triangulation> levels;
    std::vector<RefinementMap> maps;
    bool coarse_is_level1 = true;

    int level_count() const { return static_cast<int>(levels.size()); }
};

inline double signed_area(const std::array<double, 2>& a,
                          const std::array<double, 2>& b,
                          const std::array<double, 2>& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

double triangle_area(const Triangulation& t, int k);
double total_area(const Triangulation& t);

/// Throws ConfigError naming the violated invariant (index range, dangling
/// vertex, inverted triangle, edge shared by >2 triangles, wrong boundary
/// flag).
void validate(const Triangulation& t);

/// Uniform right-triangle mesh of the unit square: (cells+1)^2 vertices,
/// 2*cells^2 triangles, diagonals running lower-left to upper-right.
Triangulation structured_unit_square(int cells_per_side);

/// ASCII format: `nv nt`, then nv lines `x y b`, then nt lines `i j k`
/// (0-based). `#` starts a comment. Orientation is normalized to
/// counterclockwise on load; the result is validated.
Triangulation load_mesh(const std::filesystem::path& path);
void save_mesh(const Triangulation& t, const std::filesystem::path& path);

/// Midpoint quadrisection: every triangle splits into 4, midpoints are
/// deduplicated across shared edges via an edge-keyed map, boundary flags
/// propagate (a midpoint is boundary iff its parent edge is).
std::pair<Triangulation, RefinementMap> refine_regular(const Triangulation& t);

/// levels[0] = coarse, levels[k+1] = refine_regular(levels[k]), n levels in
/// total. Throws ConfigError if the finest level would exceed vertex_budget.
MeshHierarchy build_hierarchy(Triangulation coarse, int n,
                              std::size_t vertex_budget = 8'000'000);

/// Maximum diameter over all cells (longest edge, since cells are triangles).
double mesh_size(const Triangulation& t);

} // namespace cmg
