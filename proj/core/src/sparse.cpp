#include "cmg/sparse.hpp"

#include "cmg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace cmg {

SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    for (const auto& e : entries)
        if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
            throw ConfigError("from_triplets: entry index out of range");

    // Stable sort keeps insertion order within one (row, col) slot, so the
    // accumulated value is independent of the sort and bitwise reproducible.
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i + 1;
        double v = entries[i].value;
        while (j < entries.size() && entries[j].row == entries[i].row &&
               entries[j].col == entries[i].col) {
            v += entries[j].value;
            ++j;
        }
        m.col_index.push_back(entries[i].col);
        m.values.push_back(v);
        ++m.row_offsets[static_cast<std::size_t>(entries[i].row) + 1];
        i = j;
    }
    for (int r = 0; r < rows; ++r)
        m.row_offsets[static_cast<std::size_t>(r) + 1] += m.row_offsets[static_cast<std::size_t>(r)];
    return m;
}

SparseMatrix sparse_identity(int n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.row_offsets.resize(static_cast<std::size_t>(n) + 1);
    std::iota(m.row_offsets.begin(), m.row_offsets.end(), 0);
    m.col_index.resize(static_cast<std::size_t>(n));
    std::iota(m.col_index.begin(), m.col_index.end(), 0);
    m.values.assign(static_cast<std::size_t>(n), 1.0);
    return m;
}

void SparseMatrix::apply(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != cols || static_cast<int>(y.size()) != rows)
        throw ConfigError("apply: dimension mismatch");
    for (int r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int k = row_offsets[static_cast<std::size_t>(r)];
             k < row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
            s += values[static_cast<std::size_t>(k)] *
                 x[static_cast<std::size_t>(col_index[static_cast<std::size_t>(k)])];
        y[static_cast<std::size_t>(r)] = s;
    }
}

std::vector<double> SparseMatrix::apply(const std::vector<double>& x) const {
    std::vector<double> y(static_cast<std::size_t>(rows));
    apply(x, y);
    return y;
}

std::vector<double> SparseMatrix::apply_transpose(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != rows)
        throw ConfigError("apply_transpose: dimension mismatch");
    std::vector<double> y(static_cast<std::size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r)
        for (int k = row_offsets[static_cast<std::size_t>(r)];
             k < row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
            y[static_cast<std::size_t>(col_index[static_cast<std::size_t>(k)])] +=
                values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(r)];
    return y;
}

SparseMatrix transpose(const SparseMatrix& a) {
    std::vector<Triplet> entries;
    entries.reserve(a.nnz());
    for (int r = 0; r < a.rows; ++r)
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
            entries.push_back({a.col_index[static_cast<std::size_t>(k)], r,
                               a.values[static_cast<std::size_t>(k)]});
    return from_triplets(a.cols, a.rows, std::move(entries));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols != b.rows) throw ConfigError("multiply: dimension mismatch");
    std::vector<Triplet> entries;
    for (int r = 0; r < a.rows; ++r) {
        for (int ka = a.row_offsets[static_cast<std::size_t>(r)];
             ka < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++ka) {
            const int mid = a.col_index[static_cast<std::size_t>(ka)];
            const double va = a.values[static_cast<std::size_t>(ka)];
            for (int kb = b.row_offsets[static_cast<std::size_t>(mid)];
                 kb < b.row_offsets[static_cast<std::size_t>(mid) + 1]; ++kb)
                entries.push_back({r, b.col_index[static_cast<std::size_t>(kb)],
                                   va * b.values[static_cast<std::size_t>(kb)]});
        }
    }
    return from_triplets(a.rows, b.cols, std::move(entries));
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw ConfigError("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double frobenius_norm(const SparseMatrix& a) {
    double s = 0.0;
    for (double v : a.values) s += v * v;
    return std::sqrt(s);
}

namespace {

double entry_at(const SparseMatrix& a, int r, int c) {
    for (int k = a.row_offsets[static_cast<std::size_t>(r)];
         k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k)
        if (a.col_index[static_cast<std::size_t>(k)] == c)
            return a.values[static_cast<std::size_t>(k)];
    return 0.0;
}

} // namespace

double frobenius_distance(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ConfigError("frobenius_distance: dimension mismatch");
    double s = 0.0;
    for (int r = 0; r < a.rows; ++r) {
        int ka = a.row_offsets[static_cast<std::size_t>(r)];
        int kb = b.row_offsets[static_cast<std::size_t>(r)];
        const int ea = a.row_offsets[static_cast<std::size_t>(r) + 1];
        const int eb = b.row_offsets[static_cast<std::size_t>(r) + 1];
        while (ka < ea || kb < eb) {
            const int ca = ka < ea ? a.col_index[static_cast<std::size_t>(ka)] : a.cols;
            const int cb = kb < eb ? b.col_index[static_cast<std::size_t>(kb)] : b.cols;
            double d = 0.0;
            if (ca < cb) {
                d = a.values[static_cast<std::size_t>(ka++)];
            } else if (cb < ca) {
                d = -b.values[static_cast<std::size_t>(kb++)];
            } else {
                d = a.values[static_cast<std::size_t>(ka++)] -
                    b.values[static_cast<std::size_t>(kb++)];
            }
            s += d * d;
        }
    }
    return std::sqrt(s);
}

double symmetry_deviation(const SparseMatrix& a) {
    if (a.rows != a.cols) throw ConfigError("symmetry_deviation: matrix not square");
    double worst = 0.0;
    for (int r = 0; r < a.rows; ++r) {
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
            const int c = a.col_index[static_cast<std::size_t>(k)];
            const double v = a.values[static_cast<std::size_t>(k)];
            const double w = entry_at(a, c, r);
            const double scale = std::max({std::abs(v), std::abs(w), 1e-300});
            worst = std::max(worst, std::abs(v - w) / scale);
        }
    }
    return worst;
}

void write_coordinate(const SparseMatrix& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << a.rows << ' ' << a.nnz() << '\n';
    char buf[64];
    for (int r = 0; r < a.rows; ++r)
        for (int k = a.row_offsets[static_cast<std::size_t>(r)];
             k < a.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", a.values[static_cast<std::size_t>(k)]);
            out << r << ' ' << a.col_index[static_cast<std::size_t>(k)] << ' ' << buf << '\n';
        }
    if (!out) throw IoError("write failure on " + path.string());
}

} // namespace cmg
