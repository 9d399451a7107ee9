#include "cmg/dense_eig.hpp"

#include "cmg/errors.hpp"
#include "cmg/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cmg {

DenseMatrix densify(const SparseMatrix& m) {
    if (m.rows != m.cols) throw ConfigError("densify: matrix not square");
    DenseMatrix d(m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int k = m.row_offsets[static_cast<std::size_t>(r)];
             k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
            d(r, m.col_index[static_cast<std::size_t>(k)]) = m.values[static_cast<std::size_t>(k)];
    return d;
}

DenseMatrix dense_identity(int n) {
    DenseMatrix d(n);
    for (int i = 0; i < n; ++i) d(i, i) = 1.0;
    return d;
}

namespace {

void require_symmetric(const DenseMatrix& m, const char* name) {
    for (int i = 0; i < m.n; ++i)
        for (int j = i + 1; j < m.n; ++j) {
            const double scale = std::max({std::abs(m(i, j)), std::abs(m(j, i)), 1.0});
            if (std::abs(m(i, j) - m(j, i)) > 1e-13 * scale)
                throw ConfigError(std::string(name) + ": matrix not symmetric at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
        }
}

} // namespace

// Pivots at or below the near-singular threshold fail so a rank-deficient
// mass block is reported rather than propagated as garbage.
DenseMatrix cholesky_factor(const DenseMatrix& m) {
    const int n = m.n;
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
    DenseMatrix l(n);
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 1e-13 * max_diag))
            throw NumericError("cholesky: pivot " + std::to_string(j) +
                               " not positive (matrix not positive definite)");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

void cholesky_solve(const DenseMatrix& l, std::vector<double>& x) {
    const int n = l.n;
    if (static_cast<int>(x.size()) != n) throw ConfigError("cholesky_solve: dimension mismatch");
    for (int i = 0; i < n; ++i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l(i, k) * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l(i, i);
    }
}

namespace {

// Solves L x = rhs column-wise in place.
void forward_solve_columns(const DenseMatrix& l, DenseMatrix& x) {
    const int n = l.n;
    for (int c = 0; c < x.n; ++c)
        for (int i = 0; i < n; ++i) {
            double s = x(i, c);
            for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
}

// Solves L^T x = rhs column-wise in place.
void backward_solve_columns(const DenseMatrix& l, DenseMatrix& x) {
    const int n = l.n;
    for (int c = 0; c < x.n; ++c)
        for (int i = n - 1; i >= 0; --i) {
            double s = x(i, c);
            for (int k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
            x(i, c) = s / l(i, i);
        }
}

double off_diagonal_frobenius(const DenseMatrix& m) {
    double s = 0.0;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j)
            if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

double frobenius(const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

// Cyclic Jacobi; rotations accumulate into v.
void jacobi_eigen(DenseMatrix& c, DenseMatrix& v) {
    const int n = c.n;
    const double target = 1e-12 * std::max(frobenius(c), 1e-300);
    for (int sweep = 0; sweep < 30; ++sweep) {
        if (off_diagonal_frobenius(c) <= target) return;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double cpq = c(p, q);
                if (cpq == 0.0) continue;
                const double app = c(p, p);
                const double aqq = c(q, q);
                if (std::abs(cpq) <= 1e-18 * (std::abs(app) + std::abs(aqq))) continue;
                const double theta = (aqq - app) / (2.0 * cpq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (int k = 0; k < n; ++k) {
                    const double ckp = c(k, p);
                    const double ckq = c(k, q);
                    c(k, p) = cs * ckp - sn * ckq;
                    c(k, q) = sn * ckp + cs * ckq;
                }
                for (int k = 0; k < n; ++k) {
                    const double cpk = c(p, k);
                    const double cqk = c(q, k);
                    c(p, k) = cs * cpk - sn * cqk;
                    c(q, k) = sn * cpk + cs * cqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }
    if (off_diagonal_frobenius(c) > target)
        throw NumericError("jacobi_eigen: no convergence after 30 sweeps");
}

void canonicalize_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        if (m > best) {
            best = m;
            arg = i;
        }
    }
    if (v[arg] < 0.0)
        for (auto& x : v) x = -x;
}

} // namespace

EigenBasis solve_gevp(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.n != b.n) throw ConfigError("solve_gevp: dimension mismatch");
    require_symmetric(a, "solve_gevp(A)");
    require_symmetric(b, "solve_gevp(B)");
    const int n = a.n;

    const DenseMatrix l = cholesky_factor(b);

    // C = L^-1 A L^-T, computed as two triangular solves.
    DenseMatrix c = a;
    forward_solve_columns(l, c);                  // L X = A
    // Transpose, solve again, transpose back: (L^-1 (L^-1 A)^T)^T = L^-1 A L^-T.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) std::swap(c(i, j), c(j, i));
    forward_solve_columns(l, c);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) std::swap(c(i, j), c(j, i));
    // Symmetrize roundoff so Jacobi sees an exactly symmetric matrix.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double m = 0.5 * (c(i, j) + c(j, i));
            c(i, j) = c(j, i) = m;
        }

    DenseMatrix v = dense_identity(n);
    jacobi_eigen(c, v);

    backward_solve_columns(l, v); // eigenvectors of the pencil: L^-T v

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&c](int x, int y) { return c(x, x) < c(y, y); });

    EigenBasis out;
    out.eigenvalues.resize(static_cast<std::size_t>(n));
    out.vectors.resize(static_cast<std::size_t>(n));
    out.b_orthonormal = true;
    for (int j = 0; j < n; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        out.eigenvalues[static_cast<std::size_t>(j)] = c(src, src);
        auto& col = out.vectors[static_cast<std::size_t>(j)];
        col.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = v(i, src);
        canonicalize_sign(col);
    }
    return out;
}

EigenBasis solve_gevp_sparse_small(const SparseMatrix& a, const SparseMatrix& b,
                                   int max_dim) {
    if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows)
        throw ConfigError("solve_gevp_sparse_small: dimension mismatch");
    if (a.rows > max_dim)
        throw ConfigError("solve_gevp_sparse_small: dimension " + std::to_string(a.rows) +
                          " exceeds the dense bound " + std::to_string(max_dim));
    return solve_gevp(densify(a), densify(b));
}

namespace {

// Deterministic uniform in [-1, 1); mt19937 streams vary across library
// implementations, a hand-rolled generator does not.
struct SplitMix {
    std::uint64_t state;
    double next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    }
};

// Modified Gram-Schmidt in the B inner product; near-dependent columns are
// redrawn from the deterministic stream.
void b_orthonormalize(std::vector<std::vector<double>>& block, const SparseMatrix& b,
                      SplitMix& rng) {
    for (std::size_t i = 0; i < block.size(); ++i) {
        for (int attempt = 0; attempt < 5; ++attempt) {
            for (std::size_t j = 0; j < i; ++j) {
                const double proj = dot(block[j], b.apply(block[i]));
                axpy(-proj, block[j], block[i]);
            }
            const double nrm = std::sqrt(std::max(0.0, dot(block[i], b.apply(block[i]))));
            if (nrm > 1e-12) {
                for (auto& x : block[i]) x /= nrm;
                break;
            }
            for (auto& x : block[i]) x = rng.next();
        }
    }
}

} // namespace

EigenBasis direct_eigensolve(const SparseMatrix& a, const SparseMatrix& b, int q,
                             const DirectSolveOptions& opts) {
    if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows)
        throw ConfigError("direct_eigensolve: dimension mismatch");
    const int n = a.rows;
    if (q < 1) throw ConfigError("direct_eigensolve: q must be >= 1");
    if (q > n)
        throw ConfigError("direct_eigensolve: q = " + std::to_string(q) +
                          " exceeds the pencil dimension " + std::to_string(n));
    const int s = std::min(n, q + 3);

    SplitMix rng{opts.seed * 0x5851f42d4c957f2dull + 0x14057b7ef767814full};
    std::vector<std::vector<double>> block(static_cast<std::size_t>(s),
                                           std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& col : block)
        for (auto& x : col) x = rng.next();
    b_orthonormalize(block, b, rng);

    std::vector<double> ritz(static_cast<std::size_t>(s), 0.0);
    std::vector<double> ritz_prev;

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        // Y = A^-1 B X, warm-started from X / theta once Ritz values exist.
        for (int i = 0; i < s; ++i) {
            const std::vector<double> rhs = b.apply(block[static_cast<std::size_t>(i)]);
            std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
            if (outer > 0 && ritz[static_cast<std::size_t>(i)] > 0.0) {
                x0 = block[static_cast<std::size_t>(i)];
                const double inv = 1.0 / ritz[static_cast<std::size_t>(i)];
                for (auto& v : x0) v *= inv;
            }
            auto sol = solve_cg(a, rhs, std::move(x0), opts.inner_tol, opts.inner_max_iter);
            if (!sol.report.converged)
                throw NumericError("direct_eigensolve: inner CG stalled at outer iteration " +
                                   std::to_string(outer));
            block[static_cast<std::size_t>(i)] = std::move(sol.x);
        }
        b_orthonormalize(block, b, rng);

        // Rayleigh-Ritz on the block.
        DenseMatrix ah(s), bh(s);
        std::vector<std::vector<double>> a_cols(static_cast<std::size_t>(s));
        std::vector<std::vector<double>> b_cols(static_cast<std::size_t>(s));
        for (int i = 0; i < s; ++i) {
            a_cols[static_cast<std::size_t>(i)] = a.apply(block[static_cast<std::size_t>(i)]);
            b_cols[static_cast<std::size_t>(i)] = b.apply(block[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < s; ++i)
            for (int j = i; j < s; ++j) {
                ah(i, j) = ah(j, i) =
                    dot(block[static_cast<std::size_t>(i)], a_cols[static_cast<std::size_t>(j)]);
                bh(i, j) = bh(j, i) =
                    dot(block[static_cast<std::size_t>(i)], b_cols[static_cast<std::size_t>(j)]);
            }
        const EigenBasis small = solve_gevp(ah, bh);

        std::vector<std::vector<double>> next(static_cast<std::size_t>(s),
                                              std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int j = 0; j < s; ++j)
            for (int i = 0; i < s; ++i)
                axpy(small.vectors[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)],
                     block[static_cast<std::size_t>(i)], next[static_cast<std::size_t>(j)]);
        block = std::move(next);
        ritz_prev = std::move(ritz);
        ritz = small.eigenvalues;

        double change = 0.0;
        for (int i = 0; i < q; ++i)
            change = std::max(change, std::abs(ritz[static_cast<std::size_t>(i)] -
                                               ritz_prev[static_cast<std::size_t>(i)]) /
                                          std::max(std::abs(ritz[static_cast<std::size_t>(i)]), 1e-300));
        if (outer > 0 && change < opts.rel_tol) break;
        if (outer + 1 == opts.max_outer)
            throw NumericError("direct_eigensolve: no convergence after " +
                               std::to_string(opts.max_outer) + " outer iterations");
    }

    EigenBasis out;
    out.eigenvalues.assign(ritz.begin(), ritz.begin() + q);
    out.vectors.assign(block.begin(), block.begin() + q);
    out.b_orthonormal = true;
    for (auto& col : out.vectors) canonicalize_sign(col);
    return out;
}

} // namespace cmg
