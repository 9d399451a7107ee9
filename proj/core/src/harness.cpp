#include "cmg/harness.hpp"

#include "cmg/errors.hpp"
#include "cmg/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace cmg {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Members of one reference-value cluster: consecutive pairs whose reference
// eigenvalues agree to 5e-3 relative.
std::vector<std::pair<int, int>> reference_clusters(const std::vector<double>& ref) {
    std::vector<std::pair<int, int>> groups;
    int start = 0;
    for (int j = 1; j <= static_cast<int>(ref.size()); ++j) {
        const bool split =
            j == static_cast<int>(ref.size()) || std::isnan(ref[static_cast<std::size_t>(j)]) ||
            std::isnan(ref[static_cast<std::size_t>(start)]) ||
            std::abs(ref[static_cast<std::size_t>(j)] - ref[static_cast<std::size_t>(start)]) >
                5e-3 * std::abs(ref[static_cast<std::size_t>(start)]);
        if (split) {
            groups.push_back({start, j - 1});
            start = j;
        }
    }
    return groups;
}

} // namespace

ProblemKind problem_from_name(const std::string& name) {
    if (name == "laplace") return ProblemKind::laplace;
    if (name == "example2") return ProblemKind::example2;
    throw ConfigError("unknown problem `" + name + "` (expected laplace or example2)");
}

std::string problem_name(ProblemKind kind) {
    return kind == ProblemKind::laplace ? "laplace" : "example2";
}

std::vector<double> laplace_reference_eigenvalues(int q) {
    if (q < 1 || q > 6)
        throw ConfigError("laplace references cover the first six eigenvalues only");
    const double p2 = std::numbers::pi * std::numbers::pi;
    const std::vector<double> all = {2 * p2, 5 * p2, 5 * p2, 8 * p2, 10 * p2, 10 * p2};
    return {all.begin(), all.begin() + q};
}

std::vector<double> extrapolated_reference_eigenvalues(
    const std::vector<double>& second_finest, const std::vector<double>& finest) {
    if (second_finest.size() != finest.size())
        throw ConfigError("extrapolation: level value counts differ");
    std::vector<double> ref(finest.size());
    for (std::size_t j = 0; j < finest.size(); ++j)
        ref[j] = (4.0 * finest[j] - second_finest[j]) / 3.0;
    return ref;
}

std::vector<double> reference_eigenvalues(
    const ExperimentSpec& spec,
    const std::vector<std::vector<double>>& lambda_direct_per_level) {
    if (spec.problem == ProblemKind::laplace && spec.mesh_path.empty())
        return laplace_reference_eigenvalues(spec.config.nev);
    if (lambda_direct_per_level.size() < 2)
        throw ConfigError("reference_eigenvalues: extrapolation needs the direct baseline on "
                          "the two finest levels (enable --baseline)");
    return extrapolated_reference_eigenvalues(
        lambda_direct_per_level[lambda_direct_per_level.size() - 2],
        lambda_direct_per_level.back());
}

double subspace_gap_a(const std::vector<std::vector<double>>& u,
                      const std::vector<std::vector<double>>& v, const SparseMatrix& b,
                      double lambda_scale) {
    if (u.size() != v.size() || u.empty())
        throw ConfigError("subspace_gap_a: group sizes differ or are empty");
    const int d = static_cast<int>(u.size());
    // M_ij = u_i^T B v_j; singular values are the principal-angle cosines.
    DenseMatrix mtm(d);
    std::vector<std::vector<double>> bu(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) bu[static_cast<std::size_t>(i)] = b.apply(u[static_cast<std::size_t>(i)]);
    DenseMatrix m(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            m(i, j) = dot(bu[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += m(k, i) * m(k, j);
            mtm(i, j) = s;
        }
    const EigenBasis ev = solve_gevp(mtm, dense_identity(d));
    const double cos2 = std::clamp(ev.eigenvalues.front(), 0.0, 1.0);
    return std::sqrt(1.0 - cos2) * std::sqrt(std::max(lambda_scale, 0.0));
}

StudyResult run_study(const ExperimentSpec& spec) {
    validate(spec.config);
    const bool need_direct = spec.baseline || spec.verify;
    const CoefficientSet coeffs = spec.problem == ProblemKind::laplace
                                      ? CoefficientSet::laplace()
                                      : CoefficientSet::example2();

    StudyResult result;
    result.spec = spec;

    auto t0 = std::chrono::steady_clock::now();
    Triangulation coarse;
    try {
        coarse = spec.mesh_path.empty() ? structured_unit_square(spec.coarse_cells)
                                        : load_mesh(spec.mesh_path);
    } catch (const Error& e) {
        throw ConfigError(std::string("run_study: coarse mesh stage failed: ") + e.what());
    }
    const MeshHierarchy hierarchy = build_hierarchy(std::move(coarse), spec.config.levels);
    LevelStack stack;
    try {
        stack = build_level_stack(hierarchy, coeffs, spec.config.coarse_space_level);
    } catch (const Error& e) {
        throw NumericError(std::string("run_study: assembly stage failed: ") + e.what());
    }
    result.timings.assemble_ms = ms_since(t0);

    const int q = spec.config.nev;
    if (q > stack.level[static_cast<std::size_t>(stack.coarse_index)].a.rows)
        throw ConfigError("run_study: nev exceeds the coarse interior DOF count");

    t0 = std::chrono::steady_clock::now();
    SolverConfig cfg = spec.config;
    cfg.verification = cfg.verification || spec.verify;
    CascadicResult casc;
    try {
        casc = cascadic_solve(stack, cfg);
    } catch (const Error& e) {
        throw NumericError(std::string("run_study: cascadic stage failed: ") + e.what());
    }
    result.timings.cascadic_ms = ms_since(t0);

    std::vector<EigenBasis> direct;
    if (need_direct) {
        t0 = std::chrono::steady_clock::now();
        DirectSolveOptions dopts;
        dopts.seed = spec.config.seed;
        try {
            for (int k = stack.coarse_index; k < stack.count(); ++k)
                direct.push_back(direct_eigensolve(stack.level[static_cast<std::size_t>(k)].a,
                                                   stack.level[static_cast<std::size_t>(k)].b, q,
                                                   dopts));
        } catch (const Error& e) {
            throw NumericError(std::string("run_study: baseline stage failed: ") + e.what());
        }
        result.timings.baseline_ms = ms_since(t0);
    }

    if (spec.verify) {
        t0 = std::chrono::steady_clock::now();
        try {
            const FamilySolves family = solve_family(stack, cfg);
            result.verification = tabulate_verification(stack, cfg, family, direct);
        } catch (const Error& e) {
            throw NumericError(std::string("run_study: verification stage failed: ") + e.what());
        }
        result.timings.auxiliary_ms = ms_since(t0);
    }

    // References: analytic where available, extrapolated from the baseline
    // otherwise, NaN when neither applies.
    if (spec.problem == ProblemKind::laplace && spec.mesh_path.empty() && q <= 6) {
        result.reference = laplace_reference_eigenvalues(q);
    } else if (need_direct && direct.size() >= 2) {
        std::vector<std::vector<double>> per_level;
        per_level.reserve(direct.size());
        for (const auto& d : direct) per_level.push_back(d.eigenvalues);
        result.reference = reference_eigenvalues(spec, per_level);
    } else {
        result.reference.assign(static_cast<std::size_t>(q),
                                std::numeric_limits<double>::quiet_NaN());
    }

    const auto clusters = reference_clusters(result.reference);
    for (std::size_t i = 0; i < casc.states.size(); ++i) {
        const auto& st = casc.states[i];
        const auto& ops = stack.level[static_cast<std::size_t>(st.level)];
        LevelRecord rec;
        rec.level = st.level + 1;
        rec.h = ops.h;
        rec.n_dofs = ops.a.rows;
        rec.m = st.level > stack.coarse_index ? schedule(st.level + 1, spec.config) : 0;
        rec.work = st.work;
        rec.lambda = st.eigenvalues;
        for (int j = 0; j < q; ++j)
            rec.err_ref.push_back(std::abs(st.eigenvalues[static_cast<std::size_t>(j)] -
                                           result.reference[static_cast<std::size_t>(j)]));
        if (need_direct) {
            rec.lambda_direct = direct[i].eigenvalues;
            rec.anorm_diff.resize(static_cast<std::size_t>(q), 0.0);
            for (const auto& [lo, hi] : clusters) {
                if (hi > lo) {
                    // Per-vector differences are meaningless inside a
                    // near-degenerate cluster; report the subspace gap.
                    std::vector<std::vector<double>> cu, cv;
                    double scale = 0.0;
                    for (int j = lo; j <= hi; ++j) {
                        cu.push_back(st.vectors[static_cast<std::size_t>(j)]);
                        cv.push_back(direct[i].vectors[static_cast<std::size_t>(j)]);
                        scale += direct[i].eigenvalues[static_cast<std::size_t>(j)];
                    }
                    scale /= static_cast<double>(hi - lo + 1);
                    const double gap = subspace_gap_a(cu, cv, ops.b, scale);
                    for (int j = lo; j <= hi; ++j)
                        rec.anorm_diff[static_cast<std::size_t>(j)] = gap;
                } else {
                    const int j = lo;
                    std::vector<double> v = direct[i].vectors[static_cast<std::size_t>(j)];
                    align_sign(ops.b, st.vectors[static_cast<std::size_t>(j)], v);
                    std::vector<double> d = st.vectors[static_cast<std::size_t>(j)];
                    axpy(-1.0, v, d);
                    rec.anorm_diff[static_cast<std::size_t>(j)] = a_norm(ops.a, d);
                }
            }
        }
        result.records.push_back(std::move(rec));
    }

    if (!spec.out_csv.empty()) write_csv(result, spec.out_csv);
    return result;
}

RateTable convergence_rates(const std::vector<LevelRecord>& records) {
    if (records.size() < 3)
        throw ConfigError("convergence_rates: need at least three levels");
    const int q = static_cast<int>(records.front().err_ref.size());
    RateTable table;
    table.rates.resize(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) {
        for (std::size_t i = 0; i + 1 < records.size(); ++i) {
            const double e0 = records[i].err_ref[static_cast<std::size_t>(j)];
            const double e1 = records[i + 1].err_ref[static_cast<std::size_t>(j)];
            if (!(e0 > 0.0) || !(e1 > 0.0)) {
                table.rates[static_cast<std::size_t>(j)].push_back(
                    std::numeric_limits<double>::quiet_NaN());
                table.notes.push_back("pair " + std::to_string(j + 1) + " levels " +
                                      std::to_string(records[i].level) + "-" +
                                      std::to_string(records[i + 1].level) +
                                      ": non-positive error excluded");
            } else {
                table.rates[static_cast<std::size_t>(j)].push_back(std::log2(e0 / e1));
            }
        }
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < q; ++j) {
        const auto& r = table.rates[static_cast<std::size_t>(j)];
        for (std::size_t i = r.size() >= 2 ? r.size() - 2 : 0; i < r.size(); ++i) {
            if (std::isnan(r[i])) continue;
            lo = std::min(lo, r[i]);
            hi = std::max(hi, r[i]);
        }
    }
    table.last3_min = lo;
    table.last3_max = hi;
    return table;
}

void emit_plotdata(const std::vector<LevelRecord>& records,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const int q = records.empty() ? 0 : static_cast<int>(records.front().lambda.size());
    const bool with_baseline = !records.empty() && !records.front().lambda_direct.empty();
    out << "# columns: N h";
    for (int j = 1; j <= q; ++j) out << " lambda_" << j;
    for (int j = 1; j <= q; ++j) out << " err_lambda_" << j;
    if (with_baseline)
        for (int j = 1; j <= q; ++j) out << " anorm_diff_" << j;
    out << "\n# log-log axes recommended (N on the abscissa)\n";
    for (const auto& rec : records) {
        out << rec.n_dofs << ' ' << fmt(rec.h);
        for (double v : rec.lambda) out << ' ' << fmt(v);
        for (double v : rec.err_ref) out << ' ' << fmt(v);
        if (with_baseline)
            for (double v : rec.anorm_diff) out << ' ' << fmt(v);
        out << '\n';
    }
    if (!out) throw IoError("write failure on " + path.string());
}

std::string csv_string(const StudyResult& result) {
    const auto& spec = result.spec;
    const int q = spec.config.nev;
    const bool with_baseline = !result.records.empty() &&
                               !result.records.front().lambda_direct.empty();
    std::ostringstream out;
    out << "# cmgeig " << version_string << "\n";
    out << "# problem: " << problem_name(spec.problem) << "\n";
    out << "# mesh: " << (spec.mesh_path.empty() ? "structured" : spec.mesh_path) << "\n";
    out << "# coarse_cells: " << spec.coarse_cells << "\n";
    out << "# levels: " << spec.config.levels << "\n";
    out << "# nev: " << q << "\n";
    out << "# smoother: " << smoother_name(spec.config.smoother.kind) << "\n";
    out << "# sigma: " << fmt(spec.config.sigma) << "\n";
    out << "# zeta: " << fmt(spec.config.zeta) << "\n";
    out << "# mbar: " << spec.config.m_bar << "\n";
    out << "# coarse_space_level: " << spec.config.coarse_space_level << "\n";
    out << "# seed: " << spec.config.seed << "\n";
    out << "# baseline: " << (with_baseline ? 1 : 0) << "\n";
    out << "# verify: " << (spec.verify ? 1 : 0) << "\n";

    out << "level,h,N,m,work";
    for (int j = 1; j <= q; ++j) {
        out << ",lambda_" << j;
        if (with_baseline) out << ",lambda_dir_" << j;
        out << ",err_ref_" << j;
        if (with_baseline) out << ",anorm_diff_" << j;
    }
    out << "\n";
    for (const auto& rec : result.records) {
        out << rec.level << ',' << fmt(rec.h) << ',' << rec.n_dofs << ',' << rec.m << ','
            << rec.work;
        for (int j = 0; j < q; ++j) {
            out << ',' << fmt(rec.lambda[static_cast<std::size_t>(j)]);
            if (with_baseline) out << ',' << fmt(rec.lambda_direct[static_cast<std::size_t>(j)]);
            out << ',' << fmt(rec.err_ref[static_cast<std::size_t>(j)]);
            if (with_baseline) out << ',' << fmt(rec.anorm_diff[static_cast<std::size_t>(j)]);
        }
        out << "\n";
    }
    return out.str();
}

void write_csv(const StudyResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << csv_string(result);
    if (!out) throw IoError("write failure on " + path.string());
}

CsvContents read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    CsvContents contents;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(": ");
            if (colon != std::string::npos)
                contents.metadata.push_back(
                    {line.substr(2, colon - 2), line.substr(colon + 2)});
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (header.empty()) {
            header = std::move(fields);
            continue;
        }
        if (fields.size() != header.size())
            throw ConfigError("read_csv: row width does not match the header in " +
                              path.string());
        LevelRecord rec;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& name = header[c];
            const std::string& value = fields[c];
            if (name == "level") rec.level = std::stoi(value);
            else if (name == "h") rec.h = std::stod(value);
            else if (name == "N") rec.n_dofs = std::stoi(value);
            else if (name == "m") rec.m = std::stoi(value);
            else if (name == "work") rec.work = std::stoull(value);
            else if (name.rfind("lambda_dir_", 0) == 0) rec.lambda_direct.push_back(std::stod(value));
            else if (name.rfind("lambda_", 0) == 0) rec.lambda.push_back(std::stod(value));
            else if (name.rfind("err_ref_", 0) == 0) rec.err_ref.push_back(std::stod(value));
            else if (name.rfind("anorm_diff_", 0) == 0) rec.anorm_diff.push_back(std::stod(value));
            else throw ConfigError("read_csv: unknown column `" + name + "`");
        }
        contents.records.push_back(std::move(rec));
    }
    return contents;
}

namespace {

void print_row(std::ostream& os, const char* label, double value) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-28s %.6g", label, value);
    os << buf << '\n';
}

} // namespace

void print_level_table(std::ostream& os, const StudyResult& result) {
    const int q = result.spec.config.nev;
    const bool with_baseline = !result.records.empty() &&
                               !result.records.front().lambda_direct.empty();
    os << "level        h        N      m          work";
    for (int j = 1; j <= q; ++j) {
        os << "    lambda_" << j << "    err_ref_" << j;
        if (with_baseline) os << "    adiff_" << j;
    }
    os << '\n';
    char buf[64];
    for (const auto& rec : result.records) {
        std::snprintf(buf, sizeof buf, "%5d %10.4g %8d %6d %13llu", rec.level, rec.h,
                      rec.n_dofs, rec.m, static_cast<unsigned long long>(rec.work));
        os << buf;
        for (int j = 0; j < q; ++j) {
            std::snprintf(buf, sizeof buf, " %11.6g %11.4g",
                          rec.lambda[static_cast<std::size_t>(j)],
                          rec.err_ref[static_cast<std::size_t>(j)]);
            os << buf;
            if (with_baseline) {
                std::snprintf(buf, sizeof buf, " %9.3g",
                              rec.anorm_diff[static_cast<std::size_t>(j)]);
                os << buf;
            }
        }
        os << '\n';
    }
    os << "timings [ms]:";
    std::snprintf(buf, sizeof buf, " assemble %.1f", result.timings.assemble_ms);
    os << buf;
    std::snprintf(buf, sizeof buf, ", cascadic %.1f", result.timings.cascadic_ms);
    os << buf;
    if (result.timings.baseline_ms > 0) {
        std::snprintf(buf, sizeof buf, ", baseline %.1f", result.timings.baseline_ms);
        os << buf;
    }
    if (result.timings.auxiliary_ms > 0) {
        std::snprintf(buf, sizeof buf, ", verification %.1f", result.timings.auxiliary_ms);
        os << buf;
    }
    os << '\n';
}

void print_rate_table(std::ostream& os, const RateTable& table) {
    os << "log2 error ratios per pair and level step:\n";
    for (std::size_t j = 0; j < table.rates.size(); ++j) {
        os << "  pair " << j + 1 << ':';
        char buf[32];
        for (double r : table.rates[j]) {
            std::snprintf(buf, sizeof buf, " %7.3f", r);
            os << buf;
        }
        os << '\n';
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "  last-three-level rates in [%.3f, %.3f]\n",
                  table.last3_min, table.last3_max);
    os << buf;
    for (const auto& note : table.notes) os << "  note: " << note << '\n';
}

void print_verification(std::ostream& os, const VerificationReport& report) {
    os << "level        h      N      m   ||u-u~||_a   ||u-u_bar||_a   ||u~-u_bar||_a   "
          "|lam-lam_bar|\n";
    char buf[160];
    for (const auto& row : report.rows) {
        const double gap =
            std::abs(row.lambda_cascadic.front() - row.lambda_direct.front());
        std::snprintf(buf, sizeof buf, "%5d %10.4g %6d %6d %12.4e %15.4e %16.4e %15.4e\n",
                      row.level, row.h, row.n_dofs, row.m, row.err_casc_aux.front(),
                      row.err_casc_dir.front(), row.err_aux_dir.front(), gap);
        os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "ratio (||u-u~||_a / h) max/min over last three levels: %.3f (<= %.1f)\n",
                  report.ratio_max_over_min, checks::ratio_max_over_min);
    os << buf;
    print_row(os, "slope ||u-u_bar||_a vs h:", report.slope_casc_dir);
    print_row(os, "slope ||u~-u_bar||_a vs h:", report.slope_aux_dir);
    os << "checks:\n";
    auto flag = [&os](const char* name, bool ok) {
        os << "  [" << (ok ? "PASS" : "FAIL") << "] " << name << '\n';
    };
    flag("bounded ratio ||u - u~||_a / h (final-error theorem)", report.ratio_bounded);
    flag("cascadic-vs-direct slope >= 0.9", report.slope_casc_dir_ok);
    flag("auxiliary-vs-direct slope >= 1.7 (superapproximation)", report.slope_aux_dir_ok);
    flag("|lambda - lambda~| <= 1.1 ||u - u~||_a^2 at the finest level",
         report.lambda_gap_casc_aux_ok);
    flag("|lambda_bar - lambda~| <= 1.1 ||u_bar - u~||_a^2 per level",
         report.lambda_gap_aux_dir_ok);
    flag("cascadic eigenvalues bound the direct ones from above", report.upper_bound_ok);
}

} // namespace cmg
