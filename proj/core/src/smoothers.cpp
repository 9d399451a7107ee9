#include "cmg/smoothers.hpp"

#include "cmg/errors.hpp"

#include <cmath>
#include <cstdint>

namespace cmg {

double smoother_alpha(SmootherKind kind) {
    return kind == SmootherKind::conjugate_gradient ? 1.0 : 0.5;
}

SmootherKind smoother_from_name(const std::string& name) {
    if (name == "cg") return SmootherKind::conjugate_gradient;
    if (name == "gs") return SmootherKind::gauss_seidel_symmetric;
    if (name == "jacobi") return SmootherKind::jacobi_damped;
    if (name == "richardson") return SmootherKind::richardson;
    throw ConfigError("unknown smoother `" + name + "` (expected cg, gs, jacobi or richardson)");
}

std::string smoother_name(SmootherKind kind) {
    switch (kind) {
        case SmootherKind::conjugate_gradient: return "cg";
        case SmootherKind::gauss_seidel_symmetric: return "gs";
        case SmootherKind::jacobi_damped: return "jacobi";
        case SmootherKind::richardson: return "richardson";
    }
    return "?";
}

namespace {

std::vector<double> residual(const SparseMatrix& a, std::span<const double> f,
                             const std::vector<double>& x) {
    std::vector<double> r(x.size());
    a.apply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - r[i];
    return r;
}

std::vector<int> diagonal_positions(const SparseMatrix& a) {
    std::vector<int> pos(static_cast<std::size_t>(a.rows), -1);
    for (int r = 0; r < a.rows; ++r)
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
            if (a.col_index[static_cast<std::size_t>(k)] == r) {
                pos[static_cast<std::size_t>(r)] = k;
                break;
            }
    for (int r = 0; r < a.rows; ++r)
        if (pos[static_cast<std::size_t>(r)] < 0 ||
            a.values[static_cast<std::size_t>(pos[static_cast<std::size_t>(r)])] == 0.0)
            throw NumericError("smoother: zero or missing diagonal entry in row " +
                               std::to_string(r));
    return pos;
}

// Deterministic pseudo-random start so the estimate overlaps the
// high-frequency end of the spectrum.
double estimate_lambda_max(const SparseMatrix& a, SmoothReport& rep) {
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next_unit = [&state]() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return 2.0 * (static_cast<double>(state >> 11) * 0x1.0p-53) - 1.0;
    };
    std::vector<double> v(static_cast<std::size_t>(a.rows));
    for (auto& vi : v) vi = next_unit();
    double lambda = 0.0;
    std::vector<double> av(v.size());
    for (int it = 0; it < 10; ++it) {
        a.apply(v, av);
        ++rep.matvecs;
        lambda = dot(v, av) / dot(v, v);
        const double nrm = norm2(av);
        if (nrm == 0.0) break;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] / nrm;
    }
    return lambda;
}

// One step = one forward then one backward sweep.
void sgs_step(const SparseMatrix& a, std::span<const double> f, std::vector<double>& x,
              const std::vector<int>& diag) {
    for (int r = 0; r < a.rows; ++r) {
        double s = f[static_cast<std::size_t>(r)];
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
            const int c = a.col_index[static_cast<std::size_t>(k)];
            if (c != r) s -= a.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(c)];
        }
        x[static_cast<std::size_t>(r)] =
            s / a.values[static_cast<std::size_t>(diag[static_cast<std::size_t>(r)])];
    }
    for (int r = a.rows - 1; r >= 0; --r) {
        double s = f[static_cast<std::size_t>(r)];
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
            const int c = a.col_index[static_cast<std::size_t>(k)];
            if (c != r) s -= a.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(c)];
        }
        x[static_cast<std::size_t>(r)] =
            s / a.values[static_cast<std::size_t>(diag[static_cast<std::size_t>(r)])];
    }
}

// Shared CG driver. In smoothing mode (fixed_steps >= 0) it runs exactly
// fixed_steps iterations; otherwise it stops on rel_tol * ||f||.
SmoothResult cg_driver(const SparseMatrix& a, std::span<const double> f,
                       std::vector<double> x, int fixed_steps, double rel_tol,
                       int max_iter) {
    SmoothResult out;
    SmoothReport& rep = out.report;

    std::vector<double> r = residual(a, f, x);
    ++rep.matvecs;
    rep.initial_residual = norm2(r);
    const double target = rel_tol * norm2(f);

    std::vector<double> p = r;
    std::vector<double> ap(r.size());
    double rs = dot(r, r);

    const int steps = fixed_steps >= 0 ? fixed_steps : max_iter;
    int it = 0;
    for (; it < steps; ++it) {
        if (fixed_steps < 0 && std::sqrt(rs) <= target) break;
        if (rs == 0.0) {
            // Residual vanished; the remaining smoothing steps are no-ops.
            if (fixed_steps < 0) break;
            continue;
        }
        a.apply(p, ap);
        ++rep.matvecs;
        const double pap = dot(p, ap);
        if (pap <= 0.0) {
            rep.iterations = it;
            rep.final_residual = std::sqrt(rs);
            throw CgBreakdownError("cg: non-positive curvature direction at iteration " +
                                       std::to_string(it),
                                   std::move(x));
        }
        const double alpha = rs / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        const double rs_next = dot(r, r);
        const double beta = rs_next / rs;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rs = rs_next;
    }
    rep.iterations = fixed_steps >= 0 ? fixed_steps : it;
    rep.final_residual = std::sqrt(rs);
    rep.converged = rep.final_residual <= target;
    out.x = std::move(x);
    return out;
}

} // namespace

SmoothResult smooth(const SparseMatrix& a, std::span<const double> f,
                    std::vector<double> x0, int m, const SmootherOptions& opts) {
    if (a.rows != a.cols || static_cast<int>(f.size()) != a.rows ||
        static_cast<int>(x0.size()) != a.rows)
        throw ConfigError("smooth: dimension mismatch");
    if (m < 0) throw ConfigError("smooth: negative step count");

    if (opts.kind == SmootherKind::conjugate_gradient)
        return cg_driver(a, f, std::move(x0), m, 0.0, 0);

    SmoothResult out;
    SmoothReport& rep = out.report;
    rep.initial_residual = norm2(residual(a, f, x0));
    ++rep.matvecs;

    switch (opts.kind) {
        case SmootherKind::gauss_seidel_symmetric: {
            const auto diag = diagonal_positions(a);
            for (int it = 0; it < m; ++it) sgs_step(a, f, x0, diag);
            break;
        }
        case SmootherKind::jacobi_damped: {
            if (!(opts.jacobi_omega > 0.0) || opts.jacobi_omega > 1.0)
                throw ConfigError("smooth: jacobi damping must lie in (0, 1]");
            const auto diag = diagonal_positions(a);
            std::vector<double> r(x0.size());
            for (int it = 0; it < m; ++it) {
                r = residual(a, f, x0);
                ++rep.matvecs;
                for (int i = 0; i < a.rows; ++i)
                    x0[static_cast<std::size_t>(i)] +=
                        opts.jacobi_omega * r[static_cast<std::size_t>(i)] /
                        a.values[static_cast<std::size_t>(diag[static_cast<std::size_t>(i)])];
            }
            break;
        }
        case SmootherKind::richardson: {
            double tau = opts.richardson_tau;
            if (tau == 0.0) {
                const double lambda_max = estimate_lambda_max(a, rep);
                if (!(lambda_max > 0.0))
                    throw NumericError("smooth: power iteration failed to estimate lambda_max");
                tau = 1.0 / lambda_max;
            } else if (tau < 0.0) {
                throw ConfigError("smooth: richardson step must be positive");
            }
            std::vector<double> r(x0.size());
            for (int it = 0; it < m; ++it) {
                r = residual(a, f, x0);
                ++rep.matvecs;
                axpy(tau, r, x0);
            }
            break;
        }
        case SmootherKind::conjugate_gradient:
            break; // handled above
    }
    rep.iterations = m;
    rep.final_residual = norm2(residual(a, f, x0));
    ++rep.matvecs;
    out.x = std::move(x0);
    return out;
}

SmoothResult solve_cg(const SparseMatrix& a, std::span<const double> f,
                      std::vector<double> x0, double rel_tol, int max_iter) {
    if (a.rows != a.cols || static_cast<int>(f.size()) != a.rows ||
        static_cast<int>(x0.size()) != a.rows)
        throw ConfigError("solve_cg: dimension mismatch");
    if (!(rel_tol > 0.0)) throw ConfigError("solve_cg: rel_tol must be positive");
    return cg_driver(a, f, std::move(x0), -1, rel_tol, max_iter);
}

} // namespace cmg
