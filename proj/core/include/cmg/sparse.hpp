#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace cmg {

/// Compressed-row sparse matrix. Symmetric operators (stiffness, mass) store
/// both triangles; prolongations are general rectangular.
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_offsets; // rows + 1
    std::vector<int> col_index;
    std::vector<double> values;

    std::size_t nnz() const { return col_index.size(); }

    /// y = A x; the only operation touching the sparse storage.
    void apply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> apply(const std::vector<double>& x) const;

    /// y = A^T x
    std::vector<double> apply_transpose(const std::vector<double>& x) const;
};

struct Triplet {
    int row;
    int col;
    double value;
};

/// Duplicates are summed in insertion order per (row, col); column indices
/// come out sorted within each row.
SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);

SparseMatrix sparse_identity(int n);

SparseMatrix transpose(const SparseMatrix& a);
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

double dot(std::span<const double> x, std::span<const double> y);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double norm2(std::span<const double> x);

double frobenius_norm(const SparseMatrix& a);
/// ||a - b||_F without forming the difference; patterns may differ.
double frobenius_distance(const SparseMatrix& a, const SparseMatrix& b);

/// Largest relative mismatch between entries (i,j) and (j,i); also counts a
/// structurally missing partner as a mismatch of its full magnitude.
double symmetry_deviation(const SparseMatrix& a);

/// Coordinate text export: first line `dim nnz`, then one `i j value` per
/// entry.
void write_coordinate(const SparseMatrix& a, const std::filesystem::path& path);

} // namespace cmg
