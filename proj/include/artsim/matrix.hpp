#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace artsim {

// Dense matrix of doubles, row-major. All model math runs in 64-bit floats.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0.0) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> data);

    double& operator()(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
    bool all_finite() const;
    size_t size() const { return values.size(); }
};

// Sparse matrix as a coordinate list, canonicalized to column-major sorted
// order so products have a deterministic accumulation order.
struct SparseMatrix {
    struct Entry {
        int row = 0;
        int col = 0;
        double weight = 0.0;
    };

    int rows = 0;
    int cols = 0;
    std::vector<Entry> entries;

    SparseMatrix() = default;
    SparseMatrix(int r, int c) : rows(r), cols(c) {}

    // Sorts entries by (col, row); duplicate (row, col) pairs are an error.
    void canonicalize();
};

inline constexpr double kL2NormalizeEpsilon = 1e-12;

Matrix matmul(const Matrix& a, const Matrix& b);

// y = x for x >= 0, exp(x) - 1 otherwise.
Matrix elu(const Matrix& x);

// Scales every column to unit l2 norm; columns with norm <= epsilon are
// divided by epsilon instead, so zero columns stay zero.
Matrix l2_normalize_columns(const Matrix& x, double epsilon = kL2NormalizeEpsilon);

// dense (H x M) times sparse (M x N) -> (H x N). Per output column, entries
// accumulate in ascending source-row order.
Matrix spmm(const Matrix& dense, const SparseMatrix& sparse);

Matrix to_dense(const SparseMatrix& sparse);

Matrix gather_columns(const Matrix& x, std::span<const int> columns);

double column_norm(const Matrix& x, int col);

}  // namespace artsim
