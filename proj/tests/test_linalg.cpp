#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cmg/assembly.hpp"
#include "cmg/errors.hpp"
#include "cmg/mesh.hpp"
#include "cmg/smoothers.hpp"
#include "cmg/sparse.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace cmg;

namespace {

SparseMatrix laplace_system(int cells) {
    const auto t = structured_unit_square(cells);
    const auto dofs = DofMap::interior(t);
    return assemble_stiffness(t, dofs, CoefficientSet::laplace());
}

double error_a_norm(const SparseMatrix& a, const std::vector<double>& x,
                    const std::vector<double>& exact) {
    std::vector<double> e = x;
    axpy(-1.0, exact, e);
    return a_norm(a, e);
}

} // namespace

TEST_CASE("triplet assembly and kernels") {
    auto m = from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 0.5}, {1, 1, -1.0}});
    CHECK(m.nnz() == 3); // duplicate (0,2) summed
    CHECK(m.col_index[0] == 0);
    CHECK(m.values[1] == 1.5);

    const auto id = sparse_identity(4);
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK(id.apply(x) == x);

    std::vector<double> e0 = {1, 0, 0, 0}, e2 = {0, 0, 1, 0};
    CHECK(dot(e0, e2) == 0.0);
    CHECK(dot(e0, e0) == 1.0);

    std::vector<double> y = {1, 1, 1, 1};
    axpy(2.0, x, y);
    CHECK(y == std::vector<double>{3, 5, 7, 9});

    CHECK(norm2(std::vector<double>{3, 4}) == 5.0);
    CHECK_THROWS_AS(id.apply(std::vector<double>{1, 2}), ConfigError);

    // Assembled 1x1 Laplace pencil on the 2x2 square: stiffness entry 4.
    const auto a = laplace_system(2);
    REQUIRE(a.rows == 1);
    CHECK(a.values[0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(a.apply(std::vector<double>{2.0})[0] == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("transpose and multiply") {
    const auto m = from_triplets(2, 3, {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 3.0}});
    const auto mt = transpose(m);
    CHECK(mt.rows == 3);
    CHECK(mt.cols == 2);
    const std::vector<double> x = {1.0, 1.0};
    CHECK(mt.apply(x) == m.apply_transpose(x));

    const auto prod = multiply(m, transpose(m)); // 2x2: [[5, 0], [0, 9]]
    CHECK(prod.rows == 2);
    const auto d = densify(prod);
    CHECK(d(0, 0) == 5.0);
    CHECK(d(0, 1) == 0.0);
    CHECK(d(1, 1) == 9.0);
}

TEST_CASE("smooth: m = 0 returns the start vector unchanged") {
    oracles::Rng rng;
    const auto [ad, as] = oracles::random_spd(8, rng);
    const auto f = rng.vec(8);
    const auto x0 = rng.vec(8);
    for (auto kind : {SmootherKind::conjugate_gradient, SmootherKind::gauss_seidel_symmetric,
                      SmootherKind::jacobi_damped, SmootherKind::richardson}) {
        SmootherOptions opts;
        opts.kind = kind;
        const auto res = smooth(as, f, x0, 0, opts);
        CHECK(res.x == x0);
        CHECK(res.report.iterations == 0);
    }
}

TEST_CASE("smooth: CG solves an identity system in one step") {
    const auto id = sparse_identity(5);
    oracles::Rng rng;
    const auto f = rng.vec(5);
    const auto res = smooth(id, f, std::vector<double>(5, 0.0), 1, {});
    for (int i = 0; i < 5; ++i)
        CHECK(res.x[i] == doctest::Approx(f[i]).epsilon(1e-15));
}

TEST_CASE("smooth: CG finite termination against the dense oracle") {
    oracles::Rng rng;
    for (int d : {5, 20, 50}) {
        const auto [ad, as] = oracles::random_spd(d, rng);
        const auto f = rng.vec(d);
        const auto res = smooth(as, f, std::vector<double>(d, 0.0), d, {});
        CHECK(res.report.final_residual <= 1e-10 * norm2(f));
        const auto exact = oracles::lu_solve(ad, f);
        for (int i = 0; i < d; ++i)
            CHECK(res.x[i] == doctest::Approx(exact[i]).epsilon(1e-8));
    }
}

TEST_CASE("solve_cg basics") {
    const auto id = sparse_identity(3);
    const auto res0 = solve_cg(id, std::vector<double>(3, 0.0), std::vector<double>(3, 0.0),
                               1e-12, 100);
    CHECK(res0.report.iterations == 0);
    CHECK(res0.x == std::vector<double>(3, 0.0));
    CHECK(res0.report.converged);

    const auto a = from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}});
    const auto res = solve_cg(a, std::vector<double>{1.0, 0.0}, std::vector<double>(2, 0.0),
                              1e-14, 100);
    CHECK(res.x[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(res.x[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto lap = laplace_system(12);
    oracles::Rng rng;
    const auto f = rng.vec(lap.rows);
    const auto sol = solve_cg(lap, f, std::vector<double>(lap.rows, 0.0), 1e-12, 10000);
    CHECK(sol.report.converged);
    std::vector<double> r = lap.apply(sol.x);
    axpy(-1.0, f, r);
    CHECK(norm2(r) <= 1e-12 * norm2(f));
}

TEST_CASE("energy monotonicity of CG and symmetric Gauss-Seidel") {
    oracles::Rng rng;
    const auto [ad, as] = oracles::random_spd(30, rng);
    const auto f = rng.vec(30);
    const auto x0 = rng.vec(30);
    const auto exact = oracles::lu_solve(ad, f);
    for (auto kind : {SmootherKind::conjugate_gradient, SmootherKind::gauss_seidel_symmetric}) {
        SmootherOptions opts;
        opts.kind = kind;
        double prev = error_a_norm(as, x0, exact);
        for (int m = 1; m <= 12; ++m) {
            const auto res = smooth(as, f, x0, m, opts);
            const double e = error_a_norm(as, res.x, exact);
            CHECK(e <= prev * (1.0 + 1e-12));
            prev = e;
        }
    }
}

TEST_CASE("smoothing decay of CG on a Laplace system") {
    const auto t = structured_unit_square(16);
    const auto dofs = DofMap::interior(t);
    const auto a = assemble_stiffness(t, dofs, CoefficientSet::laplace());
    const auto b = assemble_mass(t, dofs, CoefficientSet::laplace());
    oracles::Rng rng;
    const auto x0 = rng.vec(a.rows);
    const double denom = b_norm(b, x0);
    // f = 0, so the iterate IS the smoothed error. The smoothing property
    // bounds m * ||x_m||_a / ||x_0||_b by a constant.
    std::vector<double> ratio;
    double r4 = 0.0;
    for (int m = 1; m <= 64; m *= 2) {
        const auto res = smooth(a, std::vector<double>(a.rows, 0.0), x0, m, {});
        ratio.push_back(m * a_norm(a, res.x) / denom);
        if (m == 4) r4 = ratio.back();
    }
    REQUIRE(r4 > 0.0);
    for (double r : ratio) CHECK(r <= 2.0 * r4);
}

TEST_CASE("stationary smoothers reduce the residual") {
    const auto a = laplace_system(8);
    oracles::Rng rng;
    const auto f = rng.vec(a.rows);
    for (auto kind : {SmootherKind::gauss_seidel_symmetric, SmootherKind::jacobi_damped,
                      SmootherKind::richardson}) {
        SmootherOptions opts;
        opts.kind = kind;
        const auto res = smooth(a, f, std::vector<double>(a.rows, 0.0), 8, opts);
        CHECK(res.report.final_residual < res.report.initial_residual);
        CHECK(res.report.iterations == 8);
    }
}

TEST_CASE("smoothing is deterministic") {
    const auto a = laplace_system(8);
    oracles::Rng rng;
    const auto f = rng.vec(a.rows);
    const auto x0 = rng.vec(a.rows);
    for (auto kind : {SmootherKind::conjugate_gradient, SmootherKind::richardson}) {
        SmootherOptions opts;
        opts.kind = kind;
        const auto r1 = smooth(a, f, x0, 7, opts);
        const auto r2 = smooth(a, f, x0, 7, opts);
        CHECK(r1.x == r2.x); // bitwise
    }
}

TEST_CASE("CG breakdown carries the iterate") {
    const auto a = from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
    const std::vector<double> f = {1.0, 1.0};
    try {
        smooth(a, f, std::vector<double>(2, 0.0), 3, {});
        FAIL("expected CgBreakdownError");
    } catch (const CgBreakdownError& e) {
        CHECK(e.iterate.size() == 2);
    }
}

TEST_CASE("smoother metadata") {
    CHECK(smoother_alpha(SmootherKind::conjugate_gradient) == 1.0);
    CHECK(smoother_alpha(SmootherKind::gauss_seidel_symmetric) == 0.5);
    CHECK(smoother_alpha(SmootherKind::jacobi_damped) == 0.5);
    CHECK(smoother_alpha(SmootherKind::richardson) == 0.5);
    CHECK(smoother_from_name("cg") == SmootherKind::conjugate_gradient);
    CHECK_THROWS_AS(smoother_from_name("sor"), ConfigError);
    CHECK(smoother_name(smoother_from_name("jacobi")) == "jacobi");
}
