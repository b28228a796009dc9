#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "artsim/matrix.hpp"

namespace artsim {

// Anchor/positive/negative indices. In the sampler these are graph node
// indices; in the hinge op they address embedding columns.
struct Triplet {
    int anchor = 0;
    int positive = 0;
    int negative = 0;
};

// Records a forward computation as an ordered list of primitive applications
// so it can be replayed deterministically and differentiated in reverse.
class Tape {
public:
    using NodeId = int32_t;

    NodeId leaf(Matrix value, std::string name = {}, bool requires_grad = false);

    NodeId matmul(NodeId a, NodeId b);
    // The sparse operand is a constant; gradients flow through the dense side only.
    NodeId spmm(NodeId dense, SparseMatrix sparse);
    // x (n x m) plus bias (n x 1) broadcast across columns.
    NodeId add_column_bias(NodeId x, NodeId bias);
    NodeId elu(NodeId x);
    NodeId l2_normalize_columns(NodeId x, double epsilon = kL2NormalizeEpsilon);
    NodeId concat_rows(NodeId top, NodeId bottom);
    NodeId select_columns(NodeId x, std::vector<int> columns);
    NodeId sum(NodeId x);
    // Mean over triplets of [d(a,p) - d(a,n) + margin]+ with Euclidean column
    // distances. Expects already-normalized embedding columns.
    NodeId triplet_hinge_mean(NodeId embeddings, std::vector<Triplet> triplets, double margin);

    const Matrix& value(NodeId id) const;
    double scalar_value(NodeId id) const;
    Matrix& mutable_leaf(NodeId id);

    // Re-executes every primitive in recording order against current leaf
    // values. Two replays of the same record produce bit-identical outputs.
    void replay();

    // Reverse pass from a 1x1 root. Every grad-requiring leaf reachable from
    // the root has a gradient afterwards (zero if unused by the root).
    void backward(NodeId root);
    const Matrix& grad(NodeId id) const;

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        kLeaf,
        kMatMul,
        kSpmm,
        kAddColumnBias,
        kElu,
        kL2NormalizeColumns,
        kConcatRows,
        kSelectColumns,
        kSum,
        kTripletHingeMean,
    };

    struct Node {
        Op op = Op::kLeaf;
        NodeId in0 = -1;
        NodeId in1 = -1;
        Matrix value;
        std::string name;
        bool requires_grad = false;

        // op payloads
        SparseMatrix sparse;            // kSpmm
        std::vector<int> columns;       // kSelectColumns
        std::vector<Triplet> triplets;  // kTripletHingeMean
        double margin = 0.0;            // kTripletHingeMean
        double epsilon = 0.0;           // kL2NormalizeColumns
    };

    NodeId push(Node node);
    void compute(Node& node) const;
    void backward_node(const Node& node, NodeId id);
    const Node& at(NodeId id) const;
    Matrix& grad_buffer(NodeId id);

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    bool grads_valid_ = false;
};

// Central-difference gradient checking.
struct FdOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    // Cap on checked entries per parameter; -1 checks all of them.
    int max_entries_per_param = -1;
    uint64_t sample_seed = 1234;
};

struct FdReport {
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    std::string worst_entry;
    bool pass = false;
};

// Compares analytic gradients against (f(x+h) - f(x-h)) / 2h entrywise.
// `loss` must re-run the forward pass and is called with parameter entries
// temporarily perturbed in place.
FdReport finite_difference_check(const std::vector<std::pair<std::string, Matrix*>>& parameters,
                                 const std::vector<Matrix>& analytic_gradients,
                                 const std::function<double()>& loss,
                                 const FdOptions& options = {});

}  // namespace artsim
