#pragma once

#include "cmg/assembly.hpp"
#include "cmg/coefficients.hpp"
#include "cmg/dense_eig.hpp"
#include "cmg/mesh.hpp"
#include "cmg/smoothers.hpp"
#include "cmg/sparse.hpp"

#include <cstdint>
#include <vector>

namespace cmg {

struct SolverConfig {
    int levels = 4;
    int nev = 1;
    SmootherOptions smoother{};
    double sigma = 2.0;
    double zeta = 1.01;
    int m_bar = 2;
    /// 1-based hierarchy level providing the correction space V_H and the
    /// initial eigensolve; 1 identifies V_H with the first level.
    int coarse_space_level = 1;
    int dense_bound = 5000;
    /// Record the smoothed vectors so auxiliary_solve can run in lockstep.
    bool verification = false;
    /// Replace every smoothing call by a CG solve at 1e-12; the cascadic and
    /// auxiliary iterations then coincide level by level.
    bool exact_smoothing = false;
    std::uint64_t seed = 42;
};

void validate(const SolverConfig& cfg);

/// Smoothing steps on 1-based level k of an n-level run:
/// ceil(max(sigma, m_bar) * 2^(zeta (n-k))). With the defaults sigma = m_bar
/// = 2 this is the usual ceil(sigma * 2^(zeta (n-k))); m_bar scales the whole
/// schedule so that m_n = m_bar whenever m_bar >= sigma.
int schedule(int k, const SolverConfig& cfg);

/// Assembled operators of one level, Dirichlet-eliminated.
struct LevelOperators {
    SparseMatrix a;
    SparseMatrix b;
    DofMap dofs;
    double h = 0.0;
};

/// Everything the level loop consumes: per-level matrices, one-step
/// prolongations, and the composed prolongation from the correction space to
/// every level (built once; border assembly then costs sparse matvecs plus
/// one pullback).
struct LevelStack {
    std::vector<LevelOperators> level;
    std::vector<SparseMatrix> prolongation; // [k]: level k -> k+1
    std::vector<SparseMatrix> from_coarse;  // [k]: correction space -> level k
    int coarse_index = 0;                   // 0-based

    int count() const { return static_cast<int>(level.size()); }
};

LevelStack build_level_stack(const MeshHierarchy& hierarchy, const CoefficientSet& coeffs,
                             int coarse_space_level = 1);

/// Eigenpair approximations on one level; vectors are b-orthonormal
/// coefficient vectors on that level, eigenvalues ascending. work counts
/// accumulated smoothing steps weighted by the level's nnz.
struct EigenState {
    int level = 0; // 0-based index into the stack
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> vectors;
    std::uint64_t work = 0;
};

/// smoothed[k] holds the raw smoothed vectors that entered the level-k
/// correction; empty for the coarse level.
struct SmoothingTrace {
    std::vector<std::vector<std::vector<double>>> smoothed;
};

struct CascadicResult {
    std::vector<EigenState> states; // one per level, coarse first
    SmoothingTrace trace;           // filled when cfg.verification is set
};

/// Initial eigensolve on the correction-space level.
EigenState coarse_solve(const LevelStack& stack, const SolverConfig& cfg);

/// One correction step with m smoothing steps: prolongate each tracked
/// eigenvector, smooth the source problem  a(u, v) = lambda_k b(u_k, v)  on
/// the next level, then Rayleigh-Ritz on V_H + span of the smoothed vectors
/// via a bordered dense pencil. Smoothed vectors that collapse into V_H
/// (detected by a failed Cholesky of the bordered mass block) are
/// B-orthogonalized against the prolongated coarse basis and dropped when
/// their remainder is below 1e-10 relative.
EigenState smooth_correction(const EigenState& state, const LevelStack& stack,
                             const SolverConfig& cfg, int m,
                             std::vector<std::vector<double>>* smoothed_out = nullptr);

/// Coarse solve followed by one correction step per level.
CascadicResult cascadic_solve(const LevelStack& stack, const SolverConfig& cfg);

/// Like EigenState, plus the exactly solved source vectors of this level.
struct AuxiliaryState {
    int level = 0;
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> vectors;
    std::vector<std::vector<double>> source_solutions;
};

/// The exact-solve variant run in lockstep with a recorded cascadic run: the
/// level-k source problem is solved by CG at 1e-12, the correction space is
/// V_H + span{u_hat} + span{u_smoothed}.
std::vector<AuxiliaryState> auxiliary_solve(const LevelStack& stack, const SolverConfig& cfg,
                                            const SmoothingTrace& trace);

/// Final-level output of the k-level method for every depth k up to
/// cfg.levels, cascadic and auxiliary in lockstep. The convergence theory
/// bounds exactly these quantities (the k-level run ends with its own
/// schedule), so the verification table is built from them.
struct FamilySolves {
    std::vector<EigenState> cascadic;
    std::vector<AuxiliaryState> auxiliary;
};
FamilySolves solve_family(const LevelStack& stack, const SolverConfig& cfg);

/// Flips the sign of v if its b-inner product with ref is negative.
void align_sign(const SparseMatrix& b, const std::vector<double>& ref,
                std::vector<double>& v);

/// Least-squares slope of log(err) against -log(h); err ~ h^s gives s.
double loglog_slope(const std::vector<double>& h, const std::vector<double>& err);

namespace checks {
inline constexpr double ratio_max_over_min = 3.0;
inline constexpr double slope_cascadic_direct_min = 0.9;
inline constexpr double slope_auxiliary_direct_min = 1.7;
inline constexpr double eigenvalue_gap_factor = 1.1;
inline constexpr double upper_bound_slack = 1e-9;
} // namespace checks

/// One row per level k: the output of the k-level method compared against
/// the auxiliary output of the same depth and the direct solve on that level.
struct VerificationRow {
    int level = 0; // 1-based for reporting
    double h = 0.0;
    int m = 0; // smoothing steps this level receives in the full-depth run
    int n_dofs = 0;
    std::vector<double> lambda_cascadic;
    std::vector<double> lambda_auxiliary;
    std::vector<double> lambda_direct;
    /// Sign-aligned a-norm differences, one per tracked pair.
    std::vector<double> err_casc_aux;
    std::vector<double> err_casc_dir;
    std::vector<double> err_aux_dir;
};

struct VerificationReport {
    std::vector<VerificationRow> rows;
    /// max/min of ||u - u_tilde||_a / h over the last three levels.
    double ratio_max_over_min = 0.0;
    double slope_casc_dir = 0.0; // log-log slope over the last three levels
    double slope_aux_dir = 0.0;  // log-log slope over levels 2..n
    bool ratio_bounded = false;
    bool slope_casc_dir_ok = false;
    bool slope_aux_dir_ok = false;
    /// |lambda - lambda_tilde| <= 1.1 ||u - u_tilde||_a^2 at the finest level.
    bool lambda_gap_casc_aux_ok = false;
    /// |lambda_bar - lambda_tilde| <= 1.1 ||u_bar - u_tilde||_a^2 per level.
    bool lambda_gap_aux_dir_ok = false;
    /// lambda^h >= lambda_bar (1 - 1e-9) per level.
    bool upper_bound_ok = false;

    bool all_ok() const {
        return ratio_bounded && slope_casc_dir_ok && slope_aux_dir_ok &&
               lambda_gap_casc_aux_ok && lambda_gap_aux_dir_ok && upper_bound_ok;
    }
};

/// Tabulates the error quantities the convergence theory bounds from already
/// computed family and per-level direct results, with pass/fail flags at the
/// acceptance thresholds.
VerificationReport tabulate_verification(const LevelStack& stack, const SolverConfig& cfg,
                                         const FamilySolves& family,
                                         const std::vector<EigenBasis>& direct);

/// Runs the cascadic, auxiliary and direct solvers on the stack and
/// tabulates.
VerificationReport verify_theorems(const LevelStack& stack, const SolverConfig& cfg);
VerificationReport verify_theorems(const MeshHierarchy& hierarchy,
                                   const CoefficientSet& coeffs, const SolverConfig& cfg);

} // namespace cmg
