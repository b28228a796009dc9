#include <cmath>
#include <random>
#include <stdexcept>

#include "artsim/common.hpp"
#include "artsim/tape.hpp"
#include "doctest.h"

using namespace artsim;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix m(rows, cols);
    for (double& v : m.values) v = dist(rng);
    return m;
}

// Runs the central-difference check for a scalar graph built by `build`,
// which receives the tape and the parameter leaf id and returns the root.
FdReport check_unary(Matrix param_init, const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& build) {
    Tape tape;
    Tape::NodeId p = tape.leaf(param_init, "p", true);
    Tape::NodeId root = build(tape, p);
    tape.backward(root);
    Matrix analytic = tape.grad(p);

    auto loss = [&tape, root]() {
        tape.replay();
        return tape.scalar_value(root);
    };
    return finite_difference_check({{"p", &tape.mutable_leaf(p)}}, {analytic}, loss, {});
}

}  // namespace

TEST_CASE("matmul backward gives the opposite operand") {
    Tape tape;
    Tape::NodeId a = tape.leaf(Matrix::from_rows({{1.0, 2.0}}), "w", true);
    Tape::NodeId wt = tape.leaf(Matrix::from_rows({{1.0}, {2.0}}), "wt", true);
    Tape::NodeId root = tape.sum(tape.matmul(a, wt));
    CHECK(tape.scalar_value(root) == 5.0);
    tape.backward(root);
    CHECK(tape.grad(a)(0, 0) == 1.0);
    CHECK(tape.grad(a)(0, 1) == 2.0);
    CHECK(tape.grad(wt)(0, 0) == 1.0);
    CHECK(tape.grad(wt)(1, 0) == 2.0);
}

TEST_CASE("elu backward at -1 equals exp(-1)") {
    Tape tape;
    Tape::NodeId x = tape.leaf(Matrix::from_rows({{-1.0}}), "x", true);
    Tape::NodeId root = tape.sum(tape.elu(x));
    tape.backward(root);
    CHECK(tape.grad(x)(0, 0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
}

TEST_CASE("elu backward at exactly zero uses slope one") {
    Tape tape;
    Tape::NodeId x = tape.leaf(Matrix::from_rows({{0.0}}), "x", true);
    Tape::NodeId root = tape.sum(tape.elu(x));
    tape.backward(root);
    CHECK(tape.grad(x)(0, 0) == 1.0);
}

TEST_CASE("finite differences: matmul chain") {
    std::mt19937_64 rng(derive_seed(3, "fd-matmul"));
    Matrix a = random_matrix(4, 5, rng);
    Matrix b = random_matrix(5, 3, rng);

    Tape tape;
    Tape::NodeId pa = tape.leaf(a, "a", true);
    Tape::NodeId pb = tape.leaf(b, "b", true);
    Tape::NodeId root = tape.sum(tape.elu(tape.matmul(pa, pb)));
    tape.backward(root);
    std::vector<Matrix> analytic = {tape.grad(pa), tape.grad(pb)};

    auto loss = [&tape, root]() {
        tape.replay();
        return tape.scalar_value(root);
    };
    FdReport report = finite_difference_check(
        {{"a", &tape.mutable_leaf(pa)}, {"b", &tape.mutable_leaf(pb)}}, analytic, loss, {});
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("finite differences: spmm treats sparse side as constant") {
    std::mt19937_64 rng(derive_seed(4, "fd-spmm"));
    Matrix dense = random_matrix(6, 8, rng);
    SparseMatrix sparse(8, 5);
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    std::uniform_int_distribution<int> coin(0, 2);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 5; ++c)
            if (coin(rng) == 0) sparse.entries.push_back({r, c, dist(rng)});

    FdReport report = check_unary(dense, [&sparse](Tape& t, Tape::NodeId p) {
        return t.sum(t.elu(t.spmm(p, sparse)));
    });
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("finite differences: l2 normalize") {
    std::mt19937_64 rng(derive_seed(5, "fd-l2"));
    Matrix x = random_matrix(7, 6, rng);
    FdReport report = check_unary(x, [](Tape& t, Tape::NodeId p) {
        Tape::NodeId y = t.l2_normalize_columns(p);
        // Weight rows asymmetrically so column gradients are nontrivial.
        Matrix w(1, 7);
        for (int i = 0; i < 7; ++i) w(0, i) = 0.3 * (i + 1);
        return t.sum(t.elu(t.matmul(t.leaf(w, "w"), y)));
    });
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("finite differences: bias, concat, select") {
    std::mt19937_64 rng(derive_seed(6, "fd-misc"));
    Matrix x = random_matrix(4, 6, rng);
    Matrix y = random_matrix(3, 6, rng);
    Matrix bias = random_matrix(7, 1, rng);

    Tape tape;
    Tape::NodeId px = tape.leaf(x, "x", true);
    Tape::NodeId py = tape.leaf(y, "y", true);
    Tape::NodeId pb = tape.leaf(bias, "bias", true);
    Tape::NodeId cat = tape.concat_rows(px, py);
    Tape::NodeId biased = tape.add_column_bias(cat, pb);
    // Repeated column exercises scatter-add in the backward pass.
    Tape::NodeId sel = tape.select_columns(biased, {0, 2, 2, 5});
    Tape::NodeId root = tape.sum(tape.elu(sel));
    tape.backward(root);
    std::vector<Matrix> analytic = {tape.grad(px), tape.grad(py), tape.grad(pb)};

    auto loss = [&tape, root]() {
        tape.replay();
        return tape.scalar_value(root);
    };
    FdReport report = finite_difference_check(
        {{"x", &tape.mutable_leaf(px)}, {"y", &tape.mutable_leaf(py)}, {"bias", &tape.mutable_leaf(pb)}},
        analytic, loss, {});
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("finite differences: triplet hinge with all hinges active") {
    std::mt19937_64 rng(derive_seed(7, "fd-hinge"));
    Matrix x = random_matrix(5, 6, rng);
    std::vector<Triplet> triplets = {{0, 1, 2}, {3, 4, 5}, {1, 0, 4}};
    // A large margin keeps every hinge strictly active, away from the kink.
    FdReport report = check_unary(x, [&triplets](Tape& t, Tape::NodeId p) {
        Tape::NodeId y = t.l2_normalize_columns(p);
        return t.triplet_hinge_mean(y, triplets, 10.0);
    });
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("triplet hinge value and inactive hinge gradient") {
    // Unit columns along axes: d(a,p) = sqrt(2) = d(a,n).
    Matrix y(3, 3);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    y(2, 2) = 1.0;
    Tape tape;
    Tape::NodeId p = tape.leaf(y, "y", true);
    Tape::NodeId loss = tape.triplet_hinge_mean(p, {{0, 1, 2}}, 0.2);
    CHECK(tape.scalar_value(loss) == doctest::Approx(0.2).epsilon(1e-15));

    // With margin 0 the hinge value is exactly 0 and the subgradient is 0.
    Tape::NodeId flat = tape.triplet_hinge_mean(p, {{0, 1, 2}}, 0.0);
    tape.backward(flat);
    for (double v : tape.grad(p).values) CHECK(v == 0.0);
}

TEST_CASE("triplet hinge at zero distance has zero subgradient") {
    Matrix y(2, 3);  // all columns identical (zero)
    Tape tape;
    Tape::NodeId p = tape.leaf(y, "y", true);
    Tape::NodeId loss = tape.triplet_hinge_mean(p, {{0, 1, 2}}, 0.2);
    CHECK(tape.scalar_value(loss) == doctest::Approx(0.2).epsilon(1e-15));
    tape.backward(loss);
    for (double v : tape.grad(p).values) CHECK(v == 0.0);
}

TEST_CASE("replay is bit-identical and tracks leaf edits") {
    std::mt19937_64 rng(derive_seed(8, "replay"));
    Matrix a = random_matrix(6, 6, rng);

    Tape tape;
    Tape::NodeId p = tape.leaf(a, "a", true);
    Tape::NodeId root = tape.sum(tape.l2_normalize_columns(tape.elu(tape.matmul(p, p))));
    const double v0 = tape.scalar_value(root);

    tape.replay();
    CHECK(tape.scalar_value(root) == v0);

    Matrix& leaf = tape.mutable_leaf(p);
    const double orig = leaf(0, 0);
    leaf(0, 0) = orig + 0.5;
    tape.replay();
    const double v1 = tape.scalar_value(root);
    CHECK(v1 != v0);

    leaf(0, 0) = orig;
    tape.replay();
    CHECK(tape.scalar_value(root) == v0);
}

TEST_CASE("backward twice gives identical gradients") {
    std::mt19937_64 rng(derive_seed(9, "backward-twice"));
    Matrix a = random_matrix(5, 4, rng);
    Matrix b = random_matrix(4, 3, rng);
    Tape tape;
    Tape::NodeId pa = tape.leaf(a, "a", true);
    Tape::NodeId pb = tape.leaf(b, "b", false);
    Tape::NodeId root = tape.sum(tape.elu(tape.matmul(pa, pb)));
    tape.backward(root);
    Matrix g1 = tape.grad(pa);
    tape.backward(root);
    Matrix g2 = tape.grad(pa);
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1.values[i] == g2.values[i]);
    CHECK_THROWS_AS(tape.grad(pb), std::logic_error);
}

TEST_CASE("backward rejects non-scalar roots; grad before backward throws") {
    Tape tape;
    Tape::NodeId p = tape.leaf(Matrix(2, 2), "p", true);
    CHECK_THROWS_AS(tape.backward(p), std::invalid_argument);
    Tape tape2;
    Tape::NodeId q = tape2.leaf(Matrix(1, 1), "q", true);
    CHECK_THROWS_AS(tape2.grad(q), std::logic_error);
}

TEST_CASE("shared subexpression accumulates gradient from both consumers") {
    // loss = sum(x) + sum(x) via concat; d/dx = 2.
    Tape tape;
    Tape::NodeId p = tape.leaf(Matrix::from_rows({{1.5}}), "p", true);
    Tape::NodeId cat = tape.concat_rows(p, p);
    Tape::NodeId root = tape.sum(cat);
    CHECK(tape.scalar_value(root) == 3.0);
    tape.backward(root);
    CHECK(tape.grad(p)(0, 0) == 2.0);
}

TEST_CASE("matmul with the same node on both sides") {
    Tape tape;
    Matrix sq = Matrix::from_rows({{0.5, 0.25}, {0.75, 1.25}});
    Tape::NodeId p = tape.leaf(sq, "p", true);
    Tape::NodeId root = tape.sum(tape.matmul(p, p));
    tape.backward(root);

    auto loss = [&tape, root]() {
        tape.replay();
        return tape.scalar_value(root);
    };
    FdReport report =
        finite_difference_check({{"p", &tape.mutable_leaf(p)}}, {tape.grad(p)}, loss, {});
    INFO(report.worst_entry, " rel=", report.max_rel_error);
    CHECK(report.pass);
}
