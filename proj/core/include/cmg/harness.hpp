#pragma once

#include "cmg/cascadic.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cmg {

enum class ProblemKind { laplace, example2 };
ProblemKind problem_from_name(const std::string& name);
std::string problem_name(ProblemKind kind);

/// One experiment: coefficients, coarse mesh (structured unless a mesh file
/// is given), solver configuration and comparison switches. Analytic
/// references exist only for the Laplacian on the structured unit square;
/// everything else extrapolates from the direct baseline.
struct ExperimentSpec {
    ProblemKind problem = ProblemKind::laplace;
    std::string mesh_path; // empty: structured unit square
    int coarse_cells = 8;
    SolverConfig config{};
    bool baseline = false;
    bool verify = false;
    std::string out_csv; // empty: no file written
};

struct LevelRecord {
    int level = 0; // 1-based
    double h = 0.0;
    int n_dofs = 0;
    int m = 0; // 0 on the coarse level
    std::uint64_t work = 0;
    std::vector<double> lambda;
    std::vector<double> lambda_direct; // present with baseline
    std::vector<double> err_ref;       // |lambda - lambda_ref|, NaN without a reference
    /// Sign-aligned a-norm difference against the direct eigenvector; members
    /// of a reference-value cluster all carry the cluster's subspace gap.
    std::vector<double> anorm_diff;
    double wall_ms = 0.0; // reported on stdout, never serialized
};

struct StageTimings {
    double assemble_ms = 0.0;
    double cascadic_ms = 0.0;
    double baseline_ms = 0.0;
    double auxiliary_ms = 0.0;
};

struct StudyResult {
    ExperimentSpec spec;
    std::vector<LevelRecord> records;
    std::vector<double> reference; // one per tracked pair (may be NaN)
    std::optional<VerificationReport> verification;
    StageTimings timings;
};

/// Builds the hierarchy, assembles every level, runs the cascadic solver
/// (plus the direct baseline per level and the auxiliary lockstep when
/// enabled), computes the error metrics and writes the CSV when requested.
StudyResult run_study(const ExperimentSpec& spec);

/// pi^2 (i^2 + j^2) sorted ascending: 2, 5, 5, 8, 10, 10 times pi^2.
std::vector<double> laplace_reference_eigenvalues(int q);

/// Richardson extrapolation (4 l_fine - l_coarse) / 3 per pair, exact for a
/// clean O(h^2) leading term under mesh-size halving.
std::vector<double> extrapolated_reference_eigenvalues(
    const std::vector<double>& second_finest, const std::vector<double>& finest);

/// Dispatches on the spec: analytic values for the structured Laplace case,
/// extrapolation from the two finest baseline levels otherwise.
std::vector<double> reference_eigenvalues(
    const ExperimentSpec& spec,
    const std::vector<std::vector<double>>& lambda_direct_per_level);

struct RateTable {
    /// rates[j][i] = log2(err at level i / err at level i+1) for pair j;
    /// NaN where an error was non-positive (noted).
    std::vector<std::vector<double>> rates;
    std::vector<std::string> notes;
    double last3_min = 0.0; // over the rates formed by the last three levels
    double last3_max = 0.0;
};

RateTable convergence_rates(const std::vector<LevelRecord>& records);

/// Whitespace table, one row per level: N, h, lambda per pair, err per pair,
/// a-norm diff per pair when the baseline ran. Column list in the header
/// comment; log-log axes recommended there.
void emit_plotdata(const std::vector<LevelRecord>& records,
                   const std::filesystem::path& path);

std::string csv_string(const StudyResult& result);
void write_csv(const StudyResult& result, const std::filesystem::path& path);

struct CsvContents {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<LevelRecord> records;
};
CsvContents read_csv(const std::filesystem::path& path);

/// Subspace distance between two b-orthonormal vector groups: the sine of
/// the largest principal angle in the B inner product, scaled by
/// sqrt(lambda_scale) so it is comparable to a-norm differences of
/// b-normalized eigenvectors.
double subspace_gap_a(const std::vector<std::vector<double>>& u,
                      const std::vector<std::vector<double>>& v,
                      const SparseMatrix& b, double lambda_scale);

void print_level_table(std::ostream& os, const StudyResult& result);
void print_rate_table(std::ostream& os, const RateTable& table);
void print_verification(std::ostream& os, const VerificationReport& report);

} // namespace cmg
