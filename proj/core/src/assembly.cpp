#include "cmg/assembly.hpp"

#include "cmg/errors.hpp"

#include <cmath>
#include <string>

namespace cmg {

DofMap DofMap::interior(const Triangulation& t) {
    DofMap d;
    d.interior_of_vertex.resize(t.vertices.size(), -1);
    for (int v = 0; v < t.vertex_count(); ++v) {
        if (!t.boundary_vertex[static_cast<std::size_t>(v)]) {
            d.interior_of_vertex[static_cast<std::size_t>(v)] =
                static_cast<int>(d.vertex_of_interior.size());
            d.vertex_of_interior.push_back(v);
        }
    }
    return d;
}

DofMap DofMap::all_vertices(const Triangulation& t) {
    DofMap d;
    d.interior_of_vertex.resize(t.vertices.size());
    d.vertex_of_interior.resize(t.vertices.size());
    for (int v = 0; v < t.vertex_count(); ++v) {
        d.interior_of_vertex[static_cast<std::size_t>(v)] = v;
        d.vertex_of_interior[static_cast<std::size_t>(v)] = v;
    }
    return d;
}

namespace {

// P1 hat-function values at the three edge midpoints, in the quadrature
// order m01, m12, m20.
constexpr double kHatAtMidpoint[3][3] = {
    {0.5, 0.5, 0.0},
    {0.0, 0.5, 0.5},
    {0.5, 0.0, 0.5},
};

struct ElementGeometry {
    double area;
    double grad[3][2];       // constant P1 gradients
    double midpoint[3][2];   // quadrature points
};

ElementGeometry element_geometry(const Triangulation& t, int k) {
    const auto& tri = t.triangles[static_cast<std::size_t>(k)];
    const auto& p0 = t.vertices[static_cast<std::size_t>(tri[0])];
    const auto& p1 = t.vertices[static_cast<std::size_t>(tri[1])];
    const auto& p2 = t.vertices[static_cast<std::size_t>(tri[2])];
    ElementGeometry g;
    g.area = signed_area(p0, p1, p2);
    const double inv2a = 1.0 / (2.0 * g.area);
    g.grad[0][0] = (p1[1] - p2[1]) * inv2a;
    g.grad[0][1] = (p2[0] - p1[0]) * inv2a;
    g.grad[1][0] = (p2[1] - p0[1]) * inv2a;
    g.grad[1][1] = (p0[0] - p2[0]) * inv2a;
    g.grad[2][0] = (p0[1] - p1[1]) * inv2a;
    g.grad[2][1] = (p1[0] - p0[0]) * inv2a;
    g.midpoint[0][0] = 0.5 * (p0[0] + p1[0]);
    g.midpoint[0][1] = 0.5 * (p0[1] + p1[1]);
    g.midpoint[1][0] = 0.5 * (p1[0] + p2[0]);
    g.midpoint[1][1] = 0.5 * (p1[1] + p2[1]);
    g.midpoint[2][0] = 0.5 * (p2[0] + p0[0]);
    g.midpoint[2][1] = 0.5 * (p2[1] + p0[1]);
    return g;
}

// Local matrices are computed for i <= j and mirrored so the global matrix
// is symmetric bitwise.
void scatter_symmetric(const double local[3][3], const std::array<int, 3>& tri,
                       const DofMap& dofs, std::vector<Triplet>& out) {
    for (int i = 0; i < 3; ++i) {
        const int gi = dofs.interior_of_vertex[static_cast<std::size_t>(tri[i])];
        if (gi < 0) continue;
        for (int j = i; j < 3; ++j) {
            const int gj = dofs.interior_of_vertex[static_cast<std::size_t>(tri[j])];
            if (gj < 0) continue;
            out.push_back({gi, gj, local[i][j]});
            if (gi != gj) out.push_back({gj, gi, local[i][j]});
        }
    }
}

} // namespace

SparseMatrix assemble_stiffness(const Triangulation& t, const DofMap& dofs,
                                const CoefficientSet& c) {
    std::vector<Triplet> entries;
    entries.reserve(9 * t.triangles.size());
    for (int k = 0; k < t.triangle_count(); ++k) {
        const auto g = element_geometry(t, k);
        const double w = g.area / 3.0;

        // Averaged diffusion tensor over the quadrature points; gradients are
        // constant so the diffusion part reduces to one quadratic form.
        double a11 = 0.0, a12 = 0.0, a22 = 0.0;
        double phi_q[3];
        for (int q = 0; q < 3; ++q) {
            const auto A = c.diffusion(g.midpoint[q][0], g.midpoint[q][1]);
            const double scale = std::abs(A[0]) + std::abs(A[1]) + std::abs(A[2]) + std::abs(A[3]);
            if (std::abs(A[1] - A[2]) > 1e-12 * scale)
                throw NumericError("assemble_stiffness: diffusion not symmetric at quadrature point of triangle " +
                                   std::to_string(k));
            if (!(A[0] > 0.0) || !(A[0] * A[3] - A[1] * A[2] > 0.0))
                throw NumericError("assemble_stiffness: diffusion not positive definite at quadrature point of triangle " +
                                   std::to_string(k));
            a11 += w * A[0];
            a12 += w * 0.5 * (A[1] + A[2]);
            a22 += w * A[3];
            phi_q[q] = c.potential(g.midpoint[q][0], g.midpoint[q][1]);
        }

        double local[3][3];
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                double v = g.grad[i][0] * (a11 * g.grad[j][0] + a12 * g.grad[j][1]) +
                           g.grad[i][1] * (a12 * g.grad[j][0] + a22 * g.grad[j][1]);
                for (int q = 0; q < 3; ++q)
                    v += w * phi_q[q] * kHatAtMidpoint[q][i] * kHatAtMidpoint[q][j];
                local[i][j] = v;
            }
        }
        scatter_symmetric(local, t.triangles[static_cast<std::size_t>(k)], dofs, entries);
    }
    const int n = dofs.interior_count();
    return from_triplets(n, n, std::move(entries));
}

SparseMatrix assemble_mass(const Triangulation& t, const DofMap& dofs,
                           const CoefficientSet& c) {
    std::vector<Triplet> entries;
    entries.reserve(9 * t.triangles.size());
    for (int k = 0; k < t.triangle_count(); ++k) {
        const auto g = element_geometry(t, k);
        const double w = g.area / 3.0;
        double rho_q[3];
        for (int q = 0; q < 3; ++q) {
            rho_q[q] = c.density(g.midpoint[q][0], g.midpoint[q][1]);
            if (!(rho_q[q] > 0.0))
                throw NumericError("assemble_mass: density not positive at quadrature point of triangle " +
                                   std::to_string(k));
        }
        double local[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                double v = 0.0;
                for (int q = 0; q < 3; ++q)
                    v += w * rho_q[q] * kHatAtMidpoint[q][i] * kHatAtMidpoint[q][j];
                local[i][j] = v;
            }
        scatter_symmetric(local, t.triangles[static_cast<std::size_t>(k)], dofs, entries);
    }
    const int n = dofs.interior_count();
    return from_triplets(n, n, std::move(entries));
}

SparseMatrix build_prolongation(const RefinementMap& map, const DofMap& coarse_dofs,
                                const DofMap& fine_dofs) {
    const int n_coarse_vertices = static_cast<int>(coarse_dofs.interior_of_vertex.size());
    std::vector<Triplet> entries;
    for (int fv = 0; fv < static_cast<int>(map.vertex_origin.size()); ++fv) {
        const int row = fine_dofs.interior_of_vertex[static_cast<std::size_t>(fv)];
        if (row < 0) continue;
        const auto& origin = map.vertex_origin[static_cast<std::size_t>(fv)];
        if (origin.a < 0 || origin.a >= n_coarse_vertices || origin.b < 0 ||
            origin.b >= n_coarse_vertices)
            throw ConfigError("build_prolongation: refinement map references coarse vertex out of range");
        if (origin.inherited()) {
            const int col = coarse_dofs.interior_of_vertex[static_cast<std::size_t>(origin.a)];
            if (col < 0)
                throw ConfigError("build_prolongation: interior fine vertex " +
                                  std::to_string(fv) + " inherited from Dirichlet coarse vertex " +
                                  std::to_string(origin.a));
            entries.push_back({row, col, 1.0});
        } else {
            // Dirichlet endpoints contribute value 0 and drop out of the row.
            for (int endpoint : {origin.a, origin.b}) {
                const int col = coarse_dofs.interior_of_vertex[static_cast<std::size_t>(endpoint)];
                if (col >= 0) entries.push_back({row, col, 0.5});
            }
        }
    }
    return from_triplets(fine_dofs.interior_count(), coarse_dofs.interior_count(),
                         std::move(entries));
}

double galerkin_check(const SparseMatrix& a_fine, const SparseMatrix& b_fine,
                      const SparseMatrix& p, const SparseMatrix& a_coarse,
                      const SparseMatrix& b_coarse) {
    const SparseMatrix pt = transpose(p);
    const double dev_a = frobenius_distance(multiply(pt, multiply(a_fine, p)), a_coarse) /
                         frobenius_norm(a_coarse);
    const double dev_b = frobenius_distance(multiply(pt, multiply(b_fine, p)), b_coarse) /
                         frobenius_norm(b_coarse);
    return std::max(dev_a, dev_b);
}

namespace {

double quadratic_norm(const SparseMatrix& m, std::span<const double> v, const char* name) {
    std::vector<double> mv(static_cast<std::size_t>(m.rows));
    m.apply(v, mv);
    const double q = dot(v, mv);
    if (q < 0.0) {
        const double scale = norm2(v) * norm2(mv);
        if (q < -1e-14 * std::max(scale, 1e-300))
            throw NumericError(std::string(name) +
                               ": negative quadratic form (matrix not positive semidefinite)");
        return 0.0;
    }
    return std::sqrt(q);
}

} // namespace

double a_norm(const SparseMatrix& a, std::span<const double> v) {
    return quadratic_norm(a, v, "a_norm");
}

double b_norm(const SparseMatrix& b, std::span<const double> v) {
    return quadratic_norm(b, v, "b_norm");
}

} // namespace cmg
