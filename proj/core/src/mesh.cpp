#include "cmg/mesh.hpp"

#include "cmg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace cmg {

double triangle_area(const Triangulation& t, int k) {
    const auto& tri = t.triangles[static_cast<std::size_t>(k)];
    return signed_area(t.vertices[static_cast<std::size_t>(tri[0])],
                       t.vertices[static_cast<std::size_t>(tri[1])],
                       t.vertices[static_cast<std::size_t>(tri[2])]);
}

double total_area(const Triangulation& t) {
    double s = 0.0;
    for (int k = 0; k < t.triangle_count(); ++k) s += triangle_area(t, k);
    return s;
}

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Undirected edge -> number of incident triangles.
std::map<EdgeKey, int> edge_use_counts(const Triangulation& t) {
    std::map<EdgeKey, int> counts;
    for (const auto& tri : t.triangles)
        for (int e = 0; e < 3; ++e) ++counts[edge_key(tri[e], tri[(e + 1) % 3])];
    return counts;
}

} // namespace

void validate(const Triangulation& t) {
    const int nv = t.vertex_count();
    if (static_cast<int>(t.boundary_vertex.size()) != nv)
        throw ConfigError("mesh validation: boundary flag count != vertex count");

    std::vector<std::uint8_t> used(static_cast<std::size_t>(nv), 0);
    for (int k = 0; k < t.triangle_count(); ++k) {
        const auto& tri = t.triangles[static_cast<std::size_t>(k)];
        for (int v : tri) {
            if (v < 0 || v >= nv)
                throw ConfigError("mesh validation: triangle " + std::to_string(k) +
                                  " references vertex " + std::to_string(v) +
                                  " out of range");
            used[static_cast<std::size_t>(v)] = 1;
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw ConfigError("mesh validation: triangle " + std::to_string(k) +
                              " has a repeated vertex");
        if (triangle_area(t, k) <= 0.0)
            throw ConfigError("mesh validation: triangle " + std::to_string(k) +
                              " has non-positive signed area (inverted or degenerate)");
    }
    for (int v = 0; v < nv; ++v)
        if (!used[static_cast<std::size_t>(v)])
            throw ConfigError("mesh validation: dangling vertex " + std::to_string(v));

    std::vector<std::uint8_t> on_boundary_edge(static_cast<std::size_t>(nv), 0);
    for (const auto& [key, count] : edge_use_counts(t)) {
        if (count > 2)
            throw ConfigError("mesh validation: edge (" + std::to_string(key.first) +
                              "," + std::to_string(key.second) + ") shared by " +
                              std::to_string(count) + " triangles");
        if (count == 1) {
            on_boundary_edge[static_cast<std::size_t>(key.first)] = 1;
            on_boundary_edge[static_cast<std::size_t>(key.second)] = 1;
        }
    }
    for (int v = 0; v < nv; ++v)
        if (t.boundary_vertex[static_cast<std::size_t>(v)] != on_boundary_edge[static_cast<std::size_t>(v)])
            throw ConfigError("mesh validation: vertex " + std::to_string(v) +
                              " boundary flag does not match boundary-edge incidence");
}

Triangulation structured_unit_square(int cells_per_side) {
    if (cells_per_side < 1)
        throw ConfigError("structured_unit_square: cells_per_side must be >= 1");
    const int n = cells_per_side;
    Triangulation t;
    t.vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    t.boundary_vertex.reserve(t.vertices.capacity());
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            t.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            t.boundary_vertex.push_back(i == 0 || i == n || j == 0 || j == n ? 1 : 0);
        }
    }
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    t.triangles.reserve(static_cast<std::size_t>(2 * n * n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            // Split each cell along the lower-left to upper-right diagonal.
            t.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            t.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    return t;
}

namespace {

// Strips comments, returns the next line carrying data.
bool next_data_line(std::istream& in, std::string& line, int& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line_no,
                             const std::string& what) {
    throw ConfigError("parse error in " + path.string() + " line " +
                      std::to_string(line_no) + ": " + what);
}

} // namespace

Triangulation load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file " + path.string());

    std::string line;
    int line_no = 0;
    if (!next_data_line(in, line, line_no)) parse_fail(path, line_no, "missing header");
    int nv = 0, nt = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> nt) || nv < 0 || nt < 0)
            parse_fail(path, line_no, "expected `nv nt`");
    }

    Triangulation t;
    t.vertices.reserve(static_cast<std::size_t>(nv));
    t.boundary_vertex.reserve(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v) {
        if (!next_data_line(in, line, line_no))
            parse_fail(path, line_no, "unexpected end of file in vertex block");
        std::istringstream ss(line);
        double x = 0, y = 0;
        int b = 0;
        if (!(ss >> x >> y >> b) || (b != 0 && b != 1))
            parse_fail(path, line_no, "expected `x y b` with b in {0,1}");
        t.vertices.push_back({x, y});
        t.boundary_vertex.push_back(static_cast<std::uint8_t>(b));
    }
    for (int k = 0; k < nt; ++k) {
        if (!next_data_line(in, line, line_no))
            parse_fail(path, line_no, "unexpected end of file in triangle block");
        std::istringstream ss(line);
        std::array<int, 3> tri{};
        if (!(ss >> tri[0] >> tri[1] >> tri[2]))
            parse_fail(path, line_no, "expected `i j k`");
        t.triangles.push_back(tri);
    }

    // Normalize orientation before validation so a clockwise triangle is
    // repaired, not rejected.
    for (int k = 0; k < t.triangle_count(); ++k) {
        auto& tri = t.triangles[static_cast<std::size_t>(k)];
        for (int v : tri)
            if (v < 0 || v >= nv)
                throw ConfigError("mesh validation: triangle " + std::to_string(k) +
                                  " references vertex " + std::to_string(v) +
                                  " out of range");
        if (triangle_area(t, k) < 0.0) std::swap(tri[1], tri[2]);
    }
    validate(t);
    return t;
}

void save_mesh(const Triangulation& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << t.vertex_count() << ' ' << t.triangle_count() << '\n';
    char buf[80];
    for (int v = 0; v < t.vertex_count(); ++v) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d",
                      t.vertices[static_cast<std::size_t>(v)][0],
                      t.vertices[static_cast<std::size_t>(v)][1],
                      static_cast<int>(t.boundary_vertex[static_cast<std::size_t>(v)]));
        out << buf << '\n';
    }
    for (const auto& tri : t.triangles)
        out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

std::pair<Triangulation, RefinementMap> refine_regular(const Triangulation& t) {
    const int nv = t.vertex_count();
    Triangulation fine;
    fine.level_id = t.level_id + 1;
    fine.vertices = t.vertices;
    fine.boundary_vertex = t.boundary_vertex;

    RefinementMap map;
    map.vertex_origin.resize(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v) map.vertex_origin[static_cast<std::size_t>(v)] = {v, v};

    const auto counts = edge_use_counts(t);
    std::map<EdgeKey, int> midpoint_of_edge;
    for (const auto& [key, count] : counts) {
        const auto& pa = t.vertices[static_cast<std::size_t>(key.first)];
        const auto& pb = t.vertices[static_cast<std::size_t>(key.second)];
        midpoint_of_edge[key] = fine.vertex_count();
        fine.vertices.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
        fine.boundary_vertex.push_back(count == 1 ? 1 : 0);
        map.vertex_origin.push_back({key.first, key.second});
    }

    fine.triangles.reserve(static_cast<std::size_t>(4 * t.triangle_count()));
    map.parent_triangle.reserve(fine.triangles.capacity());
    for (int k = 0; k < t.triangle_count(); ++k) {
        const auto& tri = t.triangles[static_cast<std::size_t>(k)];
        const int m01 = midpoint_of_edge.at(edge_key(tri[0], tri[1]));
        const int m12 = midpoint_of_edge.at(edge_key(tri[1], tri[2]));
        const int m20 = midpoint_of_edge.at(edge_key(tri[2], tri[0]));
        // Corner children keep the parent's orientation; the central child
        // (m01, m12, m20) matches it as well.
        fine.triangles.push_back({tri[0], m01, m20});
        fine.triangles.push_back({m01, tri[1], m12});
        fine.triangles.push_back({m20, m12, tri[2]});
        fine.triangles.push_back({m01, m12, m20});
        for (int c = 0; c < 4; ++c) map.parent_triangle.push_back(k);
    }
    return {std::move(fine), std::move(map)};
}

MeshHierarchy build_hierarchy(Triangulation coarse, int n, std::size_t vertex_budget) {
    if (n < 1) throw ConfigError("build_hierarchy: level count must be >= 1");
    MeshHierarchy h;
    h.levels.reserve(static_cast<std::size_t>(n));
    coarse.level_id = 0;
    h.levels.push_back(std::move(coarse));
    for (int k = 1; k < n; ++k) {
        const auto& prev = h.levels.back();
        // One refinement turns V vertices and E edges into V + E vertices.
        const std::size_t nv = prev.vertices.size();
        const std::size_t ne = edge_use_counts(prev).size();
        if (nv + ne > vertex_budget)
            throw ConfigError("build_hierarchy: level " + std::to_string(k + 1) +
                              " would need " + std::to_string(nv + ne) +
                              " vertices, over the budget of " +
                              std::to_string(vertex_budget));
        auto [fine, map] = refine_regular(prev);
        h.levels.push_back(std::move(fine));
        h.maps.push_back(std::move(map));
    }
    return h;
}

double mesh_size(const Triangulation& t) {
    double h2 = 0.0;
    for (const auto& tri : t.triangles) {
        for (int e = 0; e < 3; ++e) {
            const auto& pa = t.vertices[static_cast<std::size_t>(tri[e])];
            const auto& pb = t.vertices[static_cast<std::size_t>(tri[(e + 1) % 3])];
            const double dx = pb[0] - pa[0];
            const double dy = pb[1] - pa[1];
            h2 = std::max(h2, dx * dx + dy * dy);
        }
    }
    return std::sqrt(h2);
}

} // namespace cmg
