#include <cmath>
#include <random>
#include <stdexcept>

#include "artsim/common.hpp"
#include "artsim/matrix.hpp"
#include "doctest.h"

using namespace artsim;

TEST_CASE("matmul small known product") {
    Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    Matrix b = Matrix::from_rows({{5.0, 6.0}, {7.0, 8.0}});
    Matrix c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 2);
    CHECK(c(0, 0) == 19.0);
    CHECK(c(0, 1) == 22.0);
    CHECK(c(1, 0) == 43.0);
    CHECK(c(1, 1) == 50.0);
}

TEST_CASE("matmul rejects shape mismatch") {
    Matrix a(2, 3);
    Matrix b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("elu values") {
    Matrix x = Matrix::from_rows({{-1.0, 0.0, 2.0}});
    Matrix y = elu(x);
    CHECK(y(0, 0) == doctest::Approx(-0.6321205588285577).epsilon(1e-15));
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == 2.0);
}

TEST_CASE("l2 normalization produces unit columns and keeps zero columns zero") {
    Matrix x = Matrix::from_rows({{3.0, 0.0}, {4.0, 0.0}});
    Matrix y = l2_normalize_columns(x);
    CHECK(y(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(y(0, 1) == 0.0);
    CHECK(y(1, 1) == 0.0);

    Matrix z = l2_normalize_columns(y);
    for (size_t i = 0; i < y.size(); ++i) CHECK(z.values[i] == doctest::Approx(y.values[i]).epsilon(1e-12));
}

TEST_CASE("l2 normalization is idempotent on random matrices") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Matrix x(17, 9);
    for (double& v : x.values) v = dist(rng);
    Matrix once = l2_normalize_columns(x);
    Matrix twice = l2_normalize_columns(once);
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(std::abs(twice.values[i] - once.values[i]) <= 1e-12);
    for (int c = 0; c < once.cols; ++c)
        CHECK(column_norm(once, c) == doctest::Approx(1.0).epsilon(1e-12));
}

namespace {

// Ascending-k triple loop; the reference accumulation order for spmm.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

}  // namespace

TEST_CASE("spmm matches a naive dense multiply bit for bit") {
    std::mt19937_64 rng(derive_seed(42, "spmm"));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 3);

    for (int trial = 0; trial < 5; ++trial) {
        const int h = 11, m = 23, n = 17;
        Matrix dense(h, m);
        for (double& v : dense.values) v = dist(rng);

        SparseMatrix sparse(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c)
                if (coin(rng) == 0) sparse.entries.push_back({r, c, dist(rng)});
        sparse.canonicalize();

        Matrix got = spmm(dense, sparse);
        Matrix expect = naive_matmul(dense, to_dense(sparse));
        REQUIRE(got.same_shape(expect));
        // Skipping an absent entry and adding its 0 contribution agree
        // exactly, so equality here is bitwise.
        for (size_t i = 0; i < got.size(); ++i) CHECK(got.values[i] == expect.values[i]);

        Matrix fast = matmul(dense, to_dense(sparse));
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(fast.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("sparse canonicalize rejects duplicate coordinates") {
    SparseMatrix s(3, 3);
    s.entries.push_back({1, 2, 0.5});
    s.entries.push_back({1, 2, 0.25});
    CHECK_THROWS_AS(s.canonicalize(), std::invalid_argument);
}

TEST_CASE("gather_columns picks and repeats columns") {
    Matrix x = Matrix::from_rows({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
    std::vector<int> idx = {2, 0, 2};
    Matrix y = gather_columns(x, idx);
    CHECK(y.cols == 3);
    CHECK(y(0, 0) == 3.0);
    CHECK(y(0, 1) == 1.0);
    CHECK(y(1, 2) == 6.0);

    std::vector<int> bad = {3};
    CHECK_THROWS_AS(gather_columns(x, bad), std::invalid_argument);
}

TEST_CASE("fnv1a64 matches reference vectors") {
    // Published FNV-1a test vectors.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(to_hex(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("derive_seed separates streams by tag") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}
