#include "artsim/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace artsim {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> data) {
    Matrix m(static_cast<int>(data.size()), data.size() ? static_cast<int>(data.begin()->size()) : 0);
    int r = 0;
    for (const auto& row : data) {
        if (static_cast<int>(row.size()) != m.cols)
            throw std::invalid_argument("Matrix::from_rows: ragged rows");
        int c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void SparseMatrix::canonicalize() {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    for (size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col)
            throw std::invalid_argument("SparseMatrix: duplicate entry at (" +
                                        std::to_string(entries[i].row) + ", " +
                                        std::to_string(entries[i].col) + ")");
    }
    for (const Entry& e : entries) {
        if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
            throw std::invalid_argument("SparseMatrix: entry out of bounds");
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols) + " vs " +
                                    std::to_string(b.rows));
    Matrix out(a.rows, b.cols);
    Map(out.values.data(), out.rows, out.cols).noalias() =
        MapConst(a.values.data(), a.rows, a.cols) * MapConst(b.values.data(), b.rows, b.cols);
    return out;
}

Matrix elu(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (size_t i = 0; i < x.values.size(); ++i) {
        double v = x.values[i];
        out.values[i] = v >= 0.0 ? v : std::expm1(v);
    }
    return out;
}

Matrix l2_normalize_columns(const Matrix& x, double epsilon) {
    Matrix out(x.rows, x.cols);
    for (int c = 0; c < x.cols; ++c) {
        double norm = column_norm(x, c);
        double denom = std::max(norm, epsilon);
        for (int r = 0; r < x.rows; ++r) out(r, c) = x(r, c) / denom;
    }
    return out;
}

Matrix spmm(const Matrix& dense, const SparseMatrix& sparse) {
    if (dense.cols != sparse.rows)
        throw std::invalid_argument("spmm: inner dimensions " + std::to_string(dense.cols) +
                                    " vs " + std::to_string(sparse.rows));
    Matrix out(dense.rows, sparse.cols);
    // Canonical entry order makes each output column a fixed-order accumulation.
    for (const SparseMatrix::Entry& e : sparse.entries) {
        const double w = e.weight;
        const double* src = dense.values.data() + e.row;
        double* dst = out.values.data() + e.col;
        for (int h = 0; h < dense.rows; ++h)
            dst[static_cast<size_t>(h) * out.cols] += w * src[static_cast<size_t>(h) * dense.cols];
    }
    return out;
}

Matrix to_dense(const SparseMatrix& sparse) {
    Matrix out(sparse.rows, sparse.cols);
    for (const auto& e : sparse.entries) out(e.row, e.col) = e.weight;
    return out;
}

Matrix gather_columns(const Matrix& x, std::span<const int> columns) {
    Matrix out(x.rows, static_cast<int>(columns.size()));
    for (size_t j = 0; j < columns.size(); ++j) {
        int c = columns[j];
        if (c < 0 || c >= x.cols) throw std::invalid_argument("gather_columns: index out of range");
        for (int r = 0; r < x.rows; ++r) out(r, static_cast<int>(j)) = x(r, c);
    }
    return out;
}

double column_norm(const Matrix& x, int col) {
    double sq = 0.0;
    for (int r = 0; r < x.rows; ++r) sq += x(r, col) * x(r, col);
    return std::sqrt(sq);
}

}  // namespace artsim
