#pragma once

#include "cmg/sparse.hpp"

#include <span>
#include <string>
#include <vector>

namespace cmg {

/// Each smoother carries the exponent alpha of its smoothing property:
/// 1 for conjugate gradients, 1/2 for the stationary methods.
enum class SmootherKind {
    conjugate_gradient,
    gauss_seidel_symmetric,
    jacobi_damped,
    richardson,
};

double smoother_alpha(SmootherKind kind);

SmootherKind smoother_from_name(const std::string& name); // cg|gs|jacobi|richardson
std::string smoother_name(SmootherKind kind);

struct SmootherOptions {
    SmootherKind kind = SmootherKind::conjugate_gradient;
    double jacobi_omega = 0.5;
    /// Richardson step; 0 requests 1/lambda_max estimated by 10 power
    /// iteration steps.
    double richardson_tau = 0.0;
};

struct SmoothReport {
    int iterations = 0;
    double initial_residual = 0.0; // l2 of f - A x0
    double final_residual = 0.0;
    long long matvecs = 0;
    bool converged = false; // only meaningful for solve_cg
};

struct SmoothResult {
    std::vector<double> x;
    SmoothReport report;
};

/// Exactly m steps of the chosen method on A x = f starting from x0; no
/// convergence test, the schedule dictates m. CG restarts fresh from x0.
/// Throws CgBreakdownError (carrying the iterate) on a zero-curvature
/// direction with a nonzero residual.
SmoothResult smooth(const SparseMatrix& a, std::span<const double> f,
                    std::vector<double> x0, int m, const SmootherOptions& opts);

/// CG until the l2 residual drops below rel_tol * ||f|| or max_iter is
/// reached; non-convergence is flagged in the report, not thrown.
SmoothResult solve_cg(const SparseMatrix& a, std::span<const double> f,
                      std::vector<double> x0, double rel_tol, int max_iter);

} // namespace cmg
