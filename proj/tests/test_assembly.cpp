#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cmg/assembly.hpp"
#include "cmg/dense_eig.hpp"
#include "cmg/errors.hpp"
#include "cmg/mesh.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace cmg;

namespace {

Triangulation unit_right_triangle() {
    Triangulation t;
    t.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    t.triangles = {{0, 1, 2}};
    t.boundary_vertex = {1, 1, 1};
    return t;
}

} // namespace

TEST_CASE("local stiffness of the unit right triangle") {
    const auto t = unit_right_triangle();
    const auto dofs = DofMap::all_vertices(t);
    const auto a = densify(assemble_stiffness(t, dofs, CoefficientSet::laplace()));
    const double expected[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-15));
}

TEST_CASE("local mass of the unit right triangle") {
    const auto t = unit_right_triangle();
    const auto dofs = DofMap::all_vertices(t);
    const auto b = densify(assemble_mass(t, dofs, CoefficientSet::laplace()));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(b(i, j) == doctest::Approx((i == j ? 2.0 : 1.0) / 24.0).epsilon(1e-15));
}

TEST_CASE("assembly matches the dense oracles on structured meshes") {
    for (int cells : {2, 3, 4}) {
        const auto t = structured_unit_square(cells);
        const auto dofs = DofMap::interior(t);
        const auto a = densify(assemble_stiffness(t, dofs, CoefficientSet::laplace()));
        const auto b = densify(assemble_mass(t, dofs, CoefficientSet::laplace()));
        const auto a_ref = oracles::laplace_stiffness_cotangent(t, dofs.interior_of_vertex,
                                                                dofs.interior_count());
        const auto b_ref =
            oracles::unit_mass_exact(t, dofs.interior_of_vertex, dofs.interior_count());
        for (int i = 0; i < a.n; ++i)
            for (int j = 0; j < a.n; ++j) {
                CHECK(a(i, j) == doctest::Approx(a_ref(i, j)).epsilon(1e-13));
                CHECK(b(i, j) == doctest::Approx(b_ref(i, j)).epsilon(1e-13));
            }
    }
    // The 2x2 square has a single interior unknown with stiffness 4.
    const auto t2 = structured_unit_square(2);
    const auto d2 = DofMap::interior(t2);
    const auto a2 = assemble_stiffness(t2, d2, CoefficientSet::laplace());
    REQUIRE(a2.rows == 1);
    CHECK(a2.values[0] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("assembly is linear in the coefficients") {
    const auto t = structured_unit_square(3);
    const auto dofs = DofMap::interior(t);

    CoefficientSet scaled = CoefficientSet::laplace();
    scaled.diffusion = [](double, double) { return std::array<double, 4>{2.0, 0.0, 0.0, 2.0}; };
    const auto a1 = assemble_stiffness(t, dofs, CoefficientSet::laplace());
    const auto a2 = assemble_stiffness(t, dofs, scaled);
    REQUIRE(a1.nnz() == a2.nnz());
    for (std::size_t k = 0; k < a1.nnz(); ++k)
        CHECK(a2.values[k] == doctest::Approx(2.0 * a1.values[k]).epsilon(1e-15));

    CoefficientSet heavy = CoefficientSet::laplace();
    heavy.density = [](double, double) { return 3.0; };
    const auto b1 = assemble_mass(t, dofs, CoefficientSet::laplace());
    const auto b3 = assemble_mass(t, dofs, heavy);
    for (std::size_t k = 0; k < b1.nnz(); ++k)
        CHECK(b3.values[k] == doctest::Approx(3.0 * b1.values[k]).epsilon(1e-15));
}

TEST_CASE("partition of unity: mass entries sum to the domain area") {
    for (int cells : {2, 5}) {
        const auto t = structured_unit_square(cells);
        const auto dofs = DofMap::all_vertices(t);
        const auto b = assemble_mass(t, dofs, CoefficientSet::laplace());
        double sum = 0.0;
        for (double v : b.values) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("assembled matrices are symmetric and positive definite") {
    const auto t = structured_unit_square(4);
    const auto dofs = DofMap::interior(t);
    for (const auto& coeffs : {CoefficientSet::laplace(), CoefficientSet::example2()}) {
        const auto a = assemble_stiffness(t, dofs, coeffs);
        const auto b = assemble_mass(t, dofs, coeffs);
        CHECK(symmetry_deviation(a) <= 1e-14);
        CHECK(symmetry_deviation(b) <= 1e-14);
        CHECK(oracles::is_positive_definite(densify(a)));
        CHECK(oracles::is_positive_definite(densify(b)));
    }
}

TEST_CASE("coefficient validation") {
    const auto t = structured_unit_square(2);
    const auto dofs = DofMap::interior(t);

    CoefficientSet bad = CoefficientSet::laplace();
    bad.diffusion = [](double, double) { return std::array<double, 4>{1.0, 0.5, -0.5, 1.0}; };
    CHECK_THROWS_WITH_AS(assemble_stiffness(t, dofs, bad), doctest::Contains("symmetric"),
                         NumericError);

    bad.diffusion = [](double, double) { return std::array<double, 4>{1.0, 2.0, 2.0, 1.0}; };
    CHECK_THROWS_WITH_AS(assemble_stiffness(t, dofs, bad),
                         doctest::Contains("positive definite"), NumericError);

    CoefficientSet vac = CoefficientSet::laplace();
    vac.density = [](double, double) { return 0.0; };
    CHECK_THROWS_AS(assemble_mass(t, dofs, vac), NumericError);

    CHECK_THROWS_AS(CoefficientSet::by_name("helmholtz"), ConfigError);
}

TEST_CASE("dof maps") {
    const auto t = structured_unit_square(3);
    const auto interior = DofMap::interior(t);
    CHECK(interior.interior_count() == 4);
    int boundary = 0;
    for (int v = 0; v < t.vertex_count(); ++v) {
        const int idx = interior.interior_of_vertex[v];
        if (idx < 0) {
            ++boundary;
        } else {
            CHECK(interior.vertex_of_interior[idx] == v);
            CHECK(!t.boundary_vertex[v]);
        }
    }
    CHECK(boundary + interior.interior_count() == t.vertex_count());
    CHECK(DofMap::all_vertices(t).interior_count() == t.vertex_count());
}

TEST_CASE("prolongation rows follow the refinement map") {
    const auto coarse = structured_unit_square(3);
    const auto [fine, map] = refine_regular(coarse);
    const auto cd = DofMap::interior(coarse);
    const auto fd = DofMap::interior(fine);
    const auto p = build_prolongation(map, cd, fd);
    CHECK(p.rows == fd.interior_count());
    CHECK(p.cols == cd.interior_count());

    bool saw_inherited = false, saw_full_midpoint = false, saw_cut_midpoint = false;
    for (int fv = 0; fv < fine.vertex_count(); ++fv) {
        const int row = fd.interior_of_vertex[fv];
        if (row < 0) continue;
        const int begin = p.row_offsets[row], end = p.row_offsets[row + 1];
        const auto& origin = map.vertex_origin[fv];
        CHECK(end - begin <= 2);
        if (origin.inherited()) {
            REQUIRE(end - begin == 1);
            CHECK(p.values[begin] == 1.0);
            CHECK(p.col_index[begin] == cd.interior_of_vertex[origin.a]);
            saw_inherited = true;
        } else {
            const int interior_ends = (cd.interior_of_vertex[origin.a] >= 0 ? 1 : 0) +
                                      (cd.interior_of_vertex[origin.b] >= 0 ? 1 : 0);
            CHECK(end - begin == interior_ends);
            for (int k = begin; k < end; ++k) CHECK(p.values[k] == 0.5);
            if (interior_ends == 2) saw_full_midpoint = true;
            if (interior_ends == 1) saw_cut_midpoint = true;
        }
    }
    CHECK(saw_inherited);
    CHECK(saw_full_midpoint);
    CHECK(saw_cut_midpoint);

    // Full column rank: the fine mass Gram of the prolongated basis is PD.
    const auto bf = assemble_mass(fine, fd, CoefficientSet::laplace());
    CHECK(oracles::is_positive_definite(densify(multiply(transpose(p), multiply(bf, p)))));

    // Inconsistent maps are rejected.
    auto broken = map;
    broken.vertex_origin[fine.vertex_count() - 1] = {0, 0}; // interior inherits a corner
    bool careful = fd.interior_of_vertex[fine.vertex_count() - 1] >= 0;
    if (careful) CHECK_THROWS_AS(build_prolongation(broken, cd, fd), ConfigError);
}

TEST_CASE("galerkin nesting") {
    const auto coarse = structured_unit_square(4);
    const auto [fine, map] = refine_regular(coarse);
    const auto cd = DofMap::interior(coarse);
    const auto fd = DofMap::interior(fine);
    const auto p = build_prolongation(map, cd, fd);

    const auto lap = CoefficientSet::laplace();
    const double dev = galerkin_check(assemble_stiffness(fine, fd, lap),
                                      assemble_mass(fine, fd, lap), p,
                                      assemble_stiffness(coarse, cd, lap),
                                      assemble_mass(coarse, cd, lap));
    CHECK(dev <= 1e-12);

    const auto ac = assemble_stiffness(coarse, cd, lap);
    const auto bc = assemble_mass(coarse, cd, lap);
    CHECK(galerkin_check(ac, bc, sparse_identity(ac.rows), ac, bc) == 0.0);
}

TEST_CASE("galerkin deviation shrinks ~4x per level for variable coefficients") {
    const auto ex2 = CoefficientSet::example2();
    auto h = build_hierarchy(structured_unit_square(4), 4);
    std::vector<double> dev;
    for (int k = 0; k + 1 < h.level_count(); ++k) {
        const auto cd = DofMap::interior(h.levels[k]);
        const auto fd = DofMap::interior(h.levels[k + 1]);
        const auto p = build_prolongation(h.maps[k], cd, fd);
        dev.push_back(galerkin_check(assemble_stiffness(h.levels[k + 1], fd, ex2),
                                     assemble_mass(h.levels[k + 1], fd, ex2), p,
                                     assemble_stiffness(h.levels[k], cd, ex2),
                                     assemble_mass(h.levels[k], cd, ex2)));
    }
    REQUIRE(dev.size() == 3);
    CHECK(dev[0] / dev[1] >= 3.5);
    CHECK(dev[1] / dev[2] >= 3.5);
}

TEST_CASE("a_norm and b_norm") {
    const auto id = sparse_identity(2);
    CHECK(a_norm(id, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(a_norm(id, std::vector<double>{3.0, 4.0}) == 5.0);
    CHECK_THROWS_AS(a_norm(id, std::vector<double>{1.0}), ConfigError);

    const auto neg = from_triplets(2, 2, {{0, 0, -1.0}, {1, 1, -1.0}});
    CHECK_THROWS_AS(a_norm(neg, std::vector<double>{1.0, 1.0}), NumericError);

    // Rayleigh quotient: a b-normalized discrete eigenvector has
    // a_norm^2 = lambda.
    const auto t = structured_unit_square(4);
    const auto dofs = DofMap::interior(t);
    const auto a = assemble_stiffness(t, dofs, CoefficientSet::laplace());
    const auto b = assemble_mass(t, dofs, CoefficientSet::laplace());
    const auto ev = solve_gevp_sparse_small(a, b);
    for (int j = 0; j < 3; ++j) {
        const double an = a_norm(a, ev.vectors[j]);
        CHECK(an * an == doctest::Approx(ev.eigenvalues[j]).epsilon(1e-10));
    }
}

TEST_CASE("discrete Rayleigh-quotient expansion identity") {
    for (const auto& coeffs : {CoefficientSet::laplace(), CoefficientSet::example2()}) {
        const auto t = structured_unit_square(4);
        const auto dofs = DofMap::interior(t);
        const auto a = assemble_stiffness(t, dofs, coeffs);
        const auto b = assemble_mass(t, dofs, coeffs);
        const auto ev = solve_gevp_sparse_small(a, b);
        oracles::Rng rng;
        for (int trial = 0; trial < 3; ++trial) {
            const auto w = rng.vec(a.rows);
            for (int j = 0; j < ev.count(); j += std::max(1, ev.count() / 4)) {
                const double lambda = ev.eigenvalues[j];
                std::vector<double> d = w;
                axpy(-1.0, ev.vectors[j], d);
                const double bww = b_norm(b, w);
                const double lhs = std::pow(a_norm(a, w) / bww, 2) - lambda;
                const double rhs = std::pow(a_norm(a, d) / bww, 2) -
                                   lambda * std::pow(b_norm(b, d) / bww, 2);
                const double scale = std::abs(lhs) + lambda;
                CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
            }
        }
    }
}

TEST_CASE("smallest eigenvalue decreases under refinement") {
    auto h = build_hierarchy(structured_unit_square(2), 3);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& level : h.levels) {
        const auto dofs = DofMap::interior(level);
        const auto ev = solve_gevp_sparse_small(
            assemble_stiffness(level, dofs, CoefficientSet::laplace()),
            assemble_mass(level, dofs, CoefficientSet::laplace()));
        CHECK(ev.eigenvalues.front() < prev);
        prev = ev.eigenvalues.front();
    }
}

TEST_CASE("coordinate export format") {
    const auto a = from_triplets(2, 2, {{0, 0, 1.5}, {1, 0, -2.0}});
    const auto path = std::filesystem::temp_directory_path() / "cmg_coord.txt";
    write_coordinate(a, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "2 2");
    std::getline(in, line);
    CHECK(line == "0 0 1.5");
    std::getline(in, line);
    CHECK(line == "1 0 -2");
    std::filesystem::remove(path);
}
