#pragma once

// Test-side reference computations, kept independent of the library paths
// they check: Gaussian elimination instead of CG/Cholesky, the cotangent
// formula instead of gradient-based stiffness assembly, exact P1 mass
// formulas instead of quadrature, set-based edge enumeration instead of the
// refiner's midpoint map.

#include "cmg/dense_eig.hpp"
#include "cmg/mesh.hpp"
#include "cmg/sparse.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracles {

// Dense solve by Gaussian elimination with partial pivoting.
inline std::vector<double> lu_solve(cmg::DenseMatrix a, std::vector<double> rhs) {
    const int n = a.n;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
            std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double s = rhs[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) s -= a(r, c) * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = s / a(r, r);
    }
    return x;
}

// Positive-definiteness probe: returns false instead of throwing.
inline bool is_positive_definite(cmg::DenseMatrix a) {
    const int n = a.n;
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a(j, j) = l;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / l;
        }
    }
    return true;
}

// Laplace stiffness on the interior unknowns via the cotangent formula.
inline cmg::DenseMatrix laplace_stiffness_cotangent(const cmg::Triangulation& t,
                                                    const std::vector<int>& interior_of_vertex,
                                                    int n_interior) {
    cmg::DenseMatrix k(n_interior);
    auto add = [&](int va, int vb, double w) {
        const int ia = interior_of_vertex[static_cast<std::size_t>(va)];
        const int ib = interior_of_vertex[static_cast<std::size_t>(vb)];
        if (ia >= 0) k(ia, ia) += w;
        if (ib >= 0) k(ib, ib) += w;
        if (ia >= 0 && ib >= 0) {
            k(ia, ib) -= w;
            k(ib, ia) -= w;
        }
    };
    for (const auto& tri : t.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int va = tri[e];
            const int vb = tri[(e + 1) % 3];
            const int vc = tri[(e + 2) % 3];
            const auto& pa = t.vertices[static_cast<std::size_t>(va)];
            const auto& pb = t.vertices[static_cast<std::size_t>(vb)];
            const auto& pc = t.vertices[static_cast<std::size_t>(vc)];
            const double ux = pa[0] - pc[0], uy = pa[1] - pc[1];
            const double vx = pb[0] - pc[0], vy = pb[1] - pc[1];
            const double cross = ux * vy - uy * vx;
            const double cot = (ux * vx + uy * vy) / cross;
            add(va, vb, 0.5 * cot);
        }
    }
    return k;
}

// Unit-density P1 mass on the interior unknowns from the exact
// area/12 * [[2,1,1],[1,2,1],[1,1,2]] element matrix.
inline cmg::DenseMatrix unit_mass_exact(const cmg::Triangulation& t,
                                        const std::vector<int>& interior_of_vertex,
                                        int n_interior) {
    cmg::DenseMatrix m(n_interior);
    for (int kt = 0; kt < t.triangle_count(); ++kt) {
        const auto& tri = t.triangles[static_cast<std::size_t>(kt)];
        const double w = cmg::triangle_area(t, kt) / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int ii = interior_of_vertex[static_cast<std::size_t>(tri[i])];
                const int jj = interior_of_vertex[static_cast<std::size_t>(tri[j])];
                if (ii >= 0 && jj >= 0) m(ii, jj) += w * (i == j ? 2.0 : 1.0);
            }
    }
    return m;
}

inline std::size_t edge_count(const cmg::Triangulation& t) {
    std::set<std::pair<int, int>> edges;
    for (const auto& tri : t.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e];
            const int b = tri[(e + 1) % 3];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    return edges.size();
}

inline std::set<std::pair<int, int>> boundary_edges(const cmg::Triangulation& t) {
    std::set<std::pair<int, int>> once, twice;
    for (const auto& tri : t.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = std::min(tri[e], tri[(e + 1) % 3]);
            const int b = std::max(tri[e], tri[(e + 1) % 3]);
            if (!once.insert({a, b}).second) twice.insert({a, b});
        }
    std::set<std::pair<int, int>> result;
    for (const auto& e : once)
        if (!twice.count(e)) result.insert(e);
    return result;
}

// Deterministic generator; the stream is fixed so expected values can be
// frozen without depending on library RNG internals.
struct Rng {
    std::uint64_t state = 0x853c49e6748fea9bull;
    double unit() { // in [-1, 1)
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return 2.0 * (static_cast<double>(state >> 11) * 0x1.0p-53) - 1.0;
    }
    std::vector<double> vec(int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = unit();
        return v;
    }
};

// Well-conditioned random SPD matrix in both dense and sparse form.
inline std::pair<cmg::DenseMatrix, cmg::SparseMatrix> random_spd(int n, Rng& rng) {
    cmg::DenseMatrix r(n);
    for (auto& x : r.a) x = rng.unit();
    cmg::DenseMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += r(k, i) * r(k, j);
            a(i, j) = s + (i == j ? n : 0.0);
        }
    std::vector<cmg::Triplet> trips;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) trips.push_back({i, j, a(i, j)});
    return {a, cmg::from_triplets(n, n, std::move(trips))};
}

} // namespace oracles
