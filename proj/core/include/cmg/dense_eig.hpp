#pragma once

#include "cmg/sparse.hpp"

#include <cstdint>
#include <vector>

namespace cmg {

/// Row-major dense matrix; the eigensolvers require symmetry to 1e-13
/// relative and check it on entry.
struct DenseMatrix {
    int n = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    explicit DenseMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

DenseMatrix densify(const SparseMatrix& m);
DenseMatrix dense_identity(int n);

/// Lower Cholesky factor; throws NumericError naming the pivot index when
/// the matrix is not (numerically) positive definite.
DenseMatrix cholesky_factor(const DenseMatrix& m);
/// Solves L L^T x = rhs in place given the factor.
void cholesky_solve(const DenseMatrix& l, std::vector<double>& x);

/// Eigenvalues ascending with one column vector per pair, B-orthonormal when
/// b_orthonormal is set. Signs are canonical: the largest-magnitude
/// component of each vector is positive.
struct EigenBasis {
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> vectors;
    bool b_orthonormal = false;

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Full spectrum of A v = lambda B v: Cholesky B = L L^T, cyclic Jacobi on
/// L^-1 A L^-T until the off-diagonal Frobenius mass falls below 1e-12
/// relative, back-transform. Throws NumericError naming the failing pivot
/// when B is not positive definite, or after 30 sweeps without convergence.
EigenBasis solve_gevp(const DenseMatrix& a, const DenseMatrix& b);

/// Densifies and delegates; the coarse-space solve and the brute-force
/// oracle in the tests. Throws ConfigError above max_dim.
EigenBasis solve_gevp_sparse_small(const SparseMatrix& a, const SparseMatrix& b,
                                   int max_dim = 5000);

struct DirectSolveOptions {
    double rel_tol = 1e-10;    // outer stop on relative eigenvalue change
    std::uint64_t seed = 42;   // start block
    int max_outer = 200;
    double inner_tol = 1e-12;  // CG tolerance of each inverse application
    int inner_max_iter = 100000;
};

/// The q algebraically smallest eigenpairs of the sparse pencil by
/// shift-and-invert (shift 0) subspace iteration on a block of q+3 vectors:
/// every application solves A x = B v with CG, the block is
/// B-orthonormalized by modified Gram-Schmidt, then Rayleigh-Ritz via
/// solve_gevp. The standard-Galerkin baseline the cascadic results are
/// compared against.
EigenBasis direct_eigensolve(const SparseMatrix& a, const SparseMatrix& b, int q,
                             const DirectSolveOptions& opts = {});

} // namespace cmg
