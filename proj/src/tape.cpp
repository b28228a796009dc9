#include "artsim/tape.hpp"

#include <Eigen/Core>

#include "artsim/common.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace artsim {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

MapConst map_of(const Matrix& m) { return MapConst(m.values.data(), m.rows, m.cols); }
Map map_of(Matrix& m) { return Map(m.values.data(), m.rows, m.cols); }

constexpr double kTinyDistance = 1e-30;

}  // namespace

Tape::NodeId Tape::push(Node node) {
    grads_valid_ = false;
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::at(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw std::invalid_argument("Tape: unknown node id " + std::to_string(id));
    return nodes_[id];
}

Tape::NodeId Tape::leaf(Matrix value, std::string name, bool requires_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(value);
    n.name = std::move(name);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kMatMul;
    n.in0 = a;
    n.in1 = b;
    n.requires_grad = at(a).requires_grad || at(b).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::spmm(NodeId dense, SparseMatrix sparse) {
    sparse.canonicalize();
    Node n;
    n.op = Op::kSpmm;
    n.in0 = dense;
    n.sparse = std::move(sparse);
    n.requires_grad = at(dense).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::add_column_bias(NodeId x, NodeId bias) {
    const Matrix& b = at(bias).value;
    if (b.cols != 1 || b.rows != at(x).value.rows)
        throw std::invalid_argument("add_column_bias: bias must be (rows x 1)");
    Node n;
    n.op = Op::kAddColumnBias;
    n.in0 = x;
    n.in1 = bias;
    n.requires_grad = at(x).requires_grad || at(bias).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::elu(NodeId x) {
    Node n;
    n.op = Op::kElu;
    n.in0 = x;
    n.requires_grad = at(x).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::l2_normalize_columns(NodeId x, double epsilon) {
    Node n;
    n.op = Op::kL2NormalizeColumns;
    n.in0 = x;
    n.epsilon = epsilon;
    n.requires_grad = at(x).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::concat_rows(NodeId top, NodeId bottom) {
    if (at(top).value.cols != at(bottom).value.cols)
        throw std::invalid_argument("concat_rows: column counts differ");
    Node n;
    n.op = Op::kConcatRows;
    n.in0 = top;
    n.in1 = bottom;
    n.requires_grad = at(top).requires_grad || at(bottom).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::select_columns(NodeId x, std::vector<int> columns) {
    for (int c : columns)
        if (c < 0 || c >= at(x).value.cols)
            throw std::invalid_argument("select_columns: index out of range");
    Node n;
    n.op = Op::kSelectColumns;
    n.in0 = x;
    n.columns = std::move(columns);
    n.requires_grad = at(x).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId x) {
    Node n;
    n.op = Op::kSum;
    n.in0 = x;
    n.requires_grad = at(x).requires_grad;
    compute(n);
    return push(std::move(n));
}

Tape::NodeId Tape::triplet_hinge_mean(NodeId embeddings, std::vector<Triplet> triplets,
                                      double margin) {
    if (triplets.empty()) throw std::invalid_argument("triplet_hinge_mean: no triplets");
    const Matrix& y = at(embeddings).value;
    for (const Triplet& t : triplets) {
        if (t.anchor < 0 || t.anchor >= y.cols || t.positive < 0 || t.positive >= y.cols ||
            t.negative < 0 || t.negative >= y.cols)
            throw std::invalid_argument("triplet_hinge_mean: column index out of range");
    }
    Node n;
    n.op = Op::kTripletHingeMean;
    n.in0 = embeddings;
    n.triplets = std::move(triplets);
    n.margin = margin;
    n.requires_grad = at(embeddings).requires_grad;
    compute(n);
    return push(std::move(n));
}

const Matrix& Tape::value(NodeId id) const { return at(id).value; }

double Tape::scalar_value(NodeId id) const {
    const Matrix& v = at(id).value;
    if (v.rows != 1 || v.cols != 1)
        throw std::invalid_argument("scalar_value: node is not 1x1");
    return v.values[0];
}

Matrix& Tape::mutable_leaf(NodeId id) {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size() || nodes_[id].op != Op::kLeaf)
        throw std::invalid_argument("mutable_leaf: node is not a leaf");
    grads_valid_ = false;
    return nodes_[id].value;
}

namespace {

double column_distance(const Matrix& y, int a, int b) {
    double sq = 0.0;
    for (int r = 0; r < y.rows; ++r) {
        double d = y(r, a) - y(r, b);
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace

void Tape::compute(Node& node) const {
    switch (node.op) {
        case Op::kLeaf:
            break;
        case Op::kMatMul:
            node.value = artsim::matmul(at(node.in0).value, at(node.in1).value);
            break;
        case Op::kSpmm:
            node.value = artsim::spmm(at(node.in0).value, node.sparse);
            break;
        case Op::kAddColumnBias: {
            const Matrix& x = at(node.in0).value;
            const Matrix& b = at(node.in1).value;
            Matrix out = x;
            for (int r = 0; r < out.rows; ++r)
                for (int c = 0; c < out.cols; ++c) out(r, c) += b(r, 0);
            node.value = std::move(out);
            break;
        }
        case Op::kElu:
            node.value = artsim::elu(at(node.in0).value);
            break;
        case Op::kL2NormalizeColumns:
            node.value = artsim::l2_normalize_columns(at(node.in0).value, node.epsilon);
            break;
        case Op::kConcatRows: {
            const Matrix& top = at(node.in0).value;
            const Matrix& bottom = at(node.in1).value;
            Matrix out(top.rows + bottom.rows, top.cols);
            std::copy(top.values.begin(), top.values.end(), out.values.begin());
            std::copy(bottom.values.begin(), bottom.values.end(),
                      out.values.begin() + top.values.size());
            node.value = std::move(out);
            break;
        }
        case Op::kSelectColumns:
            node.value = gather_columns(at(node.in0).value, node.columns);
            break;
        case Op::kSum: {
            const Matrix& x = at(node.in0).value;
            Matrix out(1, 1);
            double s = 0.0;
            for (double v : x.values) s += v;
            out.values[0] = s;
            node.value = std::move(out);
            break;
        }
        case Op::kTripletHingeMean: {
            const Matrix& y = at(node.in0).value;
            double total = 0.0;
            for (const Triplet& t : node.triplets) {
                double dap = column_distance(y, t.anchor, t.positive);
                double dan = column_distance(y, t.anchor, t.negative);
                total += std::max(0.0, dap - dan + node.margin);
            }
            Matrix out(1, 1);
            out.values[0] = total / static_cast<double>(node.triplets.size());
            node.value = std::move(out);
            break;
        }
    }
}

void Tape::replay() {
    grads_valid_ = false;
    for (Node& node : nodes_)
        if (node.op != Op::kLeaf) compute(node);
}

Matrix& Tape::grad_buffer(NodeId id) { return grads_[id]; }

void Tape::backward(NodeId root) {
    const Node& r = at(root);
    if (r.value.rows != 1 || r.value.cols != 1)
        throw std::invalid_argument("backward: root node must be scalar (1x1)");

    grads_.assign(nodes_.size(), Matrix());
    for (size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].requires_grad) grads_[i] = Matrix(nodes_[i].value.rows, nodes_[i].value.cols);
    if (grads_[root].values.empty()) grads_[root] = Matrix(1, 1);
    grads_[root].values[0] = 1.0;

    for (NodeId id = root; id >= 0; --id) {
        const Node& node = nodes_[id];
        if (!node.requires_grad || node.op == Op::kLeaf) continue;
        backward_node(node, id);
    }
    grads_valid_ = true;
}

void Tape::backward_node(const Node& node, NodeId id) {
    const Matrix& g = grads_[id];
    auto wants = [&](NodeId in) { return in >= 0 && nodes_[in].requires_grad; };

    switch (node.op) {
        case Op::kLeaf:
            break;
        case Op::kMatMul: {
            const Matrix& a = nodes_[node.in0].value;
            const Matrix& b = nodes_[node.in1].value;
            if (wants(node.in0))
                map_of(grads_[node.in0]).noalias() += map_of(g) * map_of(b).transpose();
            if (wants(node.in1))
                map_of(grads_[node.in1]).noalias() += map_of(a).transpose() * map_of(g);
            break;
        }
        case Op::kSpmm: {
            if (!wants(node.in0)) break;
            Matrix& gd = grads_[node.in0];
            const int gcols = g.cols;
            for (const SparseMatrix::Entry& e : node.sparse.entries) {
                const double w = e.weight;
                for (int h = 0; h < gd.rows; ++h)
                    gd(h, e.row) += w * g.values[static_cast<size_t>(h) * gcols + e.col];
            }
            break;
        }
        case Op::kAddColumnBias: {
            if (wants(node.in0)) {
                Matrix& gx = grads_[node.in0];
                for (size_t i = 0; i < g.values.size(); ++i) gx.values[i] += g.values[i];
            }
            if (wants(node.in1)) {
                Matrix& gb = grads_[node.in1];
                for (int r = 0; r < g.rows; ++r) {
                    double s = 0.0;
                    for (int c = 0; c < g.cols; ++c) s += g(r, c);
                    gb(r, 0) += s;
                }
            }
            break;
        }
        case Op::kElu: {
            if (!wants(node.in0)) break;
            const Matrix& x = nodes_[node.in0].value;
            const Matrix& y = node.value;
            Matrix& gx = grads_[node.in0];
            // Derivative at exactly 0 uses the x >= 0 branch (slope 1).
            for (size_t i = 0; i < g.values.size(); ++i)
                gx.values[i] += g.values[i] * (x.values[i] >= 0.0 ? 1.0 : y.values[i] + 1.0);
            break;
        }
        case Op::kL2NormalizeColumns: {
            if (!wants(node.in0)) break;
            const Matrix& x = nodes_[node.in0].value;
            const Matrix& y = node.value;
            Matrix& gx = grads_[node.in0];
            for (int c = 0; c < x.cols; ++c) {
                double norm = column_norm(x, c);
                if (norm > node.epsilon) {
                    double dot = 0.0;
                    for (int r = 0; r < x.rows; ++r) dot += y(r, c) * g(r, c);
                    for (int r = 0; r < x.rows; ++r)
                        gx(r, c) += (g(r, c) - y(r, c) * dot) / norm;
                } else {
                    for (int r = 0; r < x.rows; ++r) gx(r, c) += g(r, c) / node.epsilon;
                }
            }
            break;
        }
        case Op::kConcatRows: {
            const Matrix& top = nodes_[node.in0].value;
            if (wants(node.in0)) {
                Matrix& gt = grads_[node.in0];
                for (size_t i = 0; i < gt.values.size(); ++i) gt.values[i] += g.values[i];
            }
            if (wants(node.in1)) {
                Matrix& gb = grads_[node.in1];
                const size_t offset = top.values.size();
                for (size_t i = 0; i < gb.values.size(); ++i) gb.values[i] += g.values[offset + i];
            }
            break;
        }
        case Op::kSelectColumns: {
            if (!wants(node.in0)) break;
            Matrix& gx = grads_[node.in0];
            for (size_t j = 0; j < node.columns.size(); ++j)
                for (int r = 0; r < gx.rows; ++r)
                    gx(r, node.columns[j]) += g(r, static_cast<int>(j));
            break;
        }
        case Op::kSum: {
            if (!wants(node.in0)) break;
            Matrix& gx = grads_[node.in0];
            const double s = g.values[0];
            for (double& v : gx.values) v += s;
            break;
        }
        case Op::kTripletHingeMean: {
            if (!wants(node.in0)) break;
            const Matrix& y = nodes_[node.in0].value;
            Matrix& gy = grads_[node.in0];
            const double scale = g.values[0] / static_cast<double>(node.triplets.size());
            for (const Triplet& t : node.triplets) {
                double dap = column_distance(y, t.anchor, t.positive);
                double dan = column_distance(y, t.anchor, t.negative);
                if (dap - dan + node.margin <= 0.0) continue;  // inactive hinge
                for (int r = 0; r < y.rows; ++r) {
                    if (dap > kTinyDistance) {
                        double u = (y(r, t.anchor) - y(r, t.positive)) / dap;
                        gy(r, t.anchor) += scale * u;
                        gy(r, t.positive) -= scale * u;
                    }
                    if (dan > kTinyDistance) {
                        double u = (y(r, t.anchor) - y(r, t.negative)) / dan;
                        gy(r, t.anchor) -= scale * u;
                        gy(r, t.negative) += scale * u;
                    }
                }
            }
            break;
        }
    }
}

const Matrix& Tape::grad(NodeId id) const {
    if (!grads_valid_) throw std::logic_error("grad: backward has not run");
    if (id < 0 || static_cast<size_t>(id) >= grads_.size())
        throw std::invalid_argument("grad: unknown node id");
    if (!nodes_[id].requires_grad)
        throw std::logic_error("grad: node does not require gradients");
    return grads_[id];
}

FdReport finite_difference_check(const std::vector<std::pair<std::string, Matrix*>>& parameters,
                                 const std::vector<Matrix>& analytic_gradients,
                                 const std::function<double()>& loss,
                                 const FdOptions& options) {
    if (parameters.size() != analytic_gradients.size())
        throw std::invalid_argument("finite_difference_check: gradient list size mismatch");

    // Relative error floor keeps near-zero gradients from amplifying the
    // cancellation noise of the central difference.
    constexpr double kScaleFloor = 1e-4;

    FdReport report;
    report.tolerance = options.tolerance;
    const double h = options.step;

    for (size_t p = 0; p < parameters.size(); ++p) {
        Matrix* param = parameters[p].second;
        const Matrix& analytic = analytic_gradients[p];
        if (!param->same_shape(analytic))
            throw std::invalid_argument("finite_difference_check: gradient shape mismatch for " +
                                        parameters[p].first);

        std::vector<size_t> indices;
        const size_t total = param->values.size();
        if (options.max_entries_per_param < 0 ||
            static_cast<size_t>(options.max_entries_per_param) >= total) {
            indices.resize(total);
            for (size_t i = 0; i < total; ++i) indices[i] = i;
        } else {
            std::mt19937_64 rng(splitmix64(options.sample_seed + p));
            std::uniform_int_distribution<size_t> dist(0, total - 1);
            while (indices.size() < static_cast<size_t>(options.max_entries_per_param)) {
                size_t idx = dist(rng);
                if (std::find(indices.begin(), indices.end(), idx) == indices.end())
                    indices.push_back(idx);
            }
        }

        for (size_t idx : indices) {
            const double original = param->values[idx];
            param->values[idx] = original + h;
            const double plus = loss();
            param->values[idx] = original - h;
            const double minus = loss();
            param->values[idx] = original;

            const double fd = (plus - minus) / (2.0 * h);
            const double an = analytic.values[idx];
            const double rel =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), kScaleFloor});
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_entry =
                    parameters[p].first + "[" + std::to_string(idx) + "]";
            }
        }
    }
    // Restore cached values that the perturbed loss calls may have displaced.
    loss();
    report.pass = report.max_rel_error <= options.tolerance;
    return report;
}

}  // namespace artsim
