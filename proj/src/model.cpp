#include "artsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "artsim/common.hpp"
#include "json.hpp"

namespace artsim {

void ModelConfig::validate() const {
    if (gc_layers < 0) throw std::invalid_argument("ModelConfig: negative gc_layers");
    if (gc_width <= 0 || backend_width1 <= 0 || backend_width2 <= 0 || output_dim <= 0 ||
        input_dim <= 0)
        throw std::invalid_argument("ModelConfig: all widths must be positive");
}

void ModelParams::for_each(const std::function<void(const std::string&, Matrix&)>& fn) {
    for (size_t k = 0; k < q.size(); ++k) {
        fn("q" + std::to_string(k + 1), q[k]);
        fn("w" + std::to_string(k + 1), w[k]);
    }
    fn("backend_w1", backend_w1);
    fn("backend_b1", backend_b1);
    fn("backend_w2", backend_w2);
    fn("backend_b2", backend_b2);
    fn("head_w", head_w);
    fn("head_b", head_b);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&fn](const std::string& name, Matrix& m) { fn(name, m); });
}

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelParams p;
    p.config = config;
    for (int k = 1; k <= config.gc_layers; ++k) {
        const int din = config.gc_input_width(k);
        p.q.push_back(Matrix(config.gc_width, din));
        p.w.push_back(Matrix(config.gc_width, config.gc_width + din));
    }
    p.backend_w1 = Matrix(config.backend_width1, config.backend_input_width());
    p.backend_b1 = Matrix(config.backend_width1, 1);
    p.backend_w2 = Matrix(config.backend_width2, config.backend_width1);
    p.backend_b2 = Matrix(config.backend_width2, 1);
    p.head_w = Matrix(config.output_dim, config.backend_width2);
    p.head_b = Matrix(config.output_dim, 1);

    std::mt19937_64 rng(derive_seed(seed, "init"));
    p.for_each([&rng](const std::string& name, Matrix& m) {
        if (name.find("_b") != std::string::npos) return;  // biases stay zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : m.values) v = dist(rng);
    });
    return p;
}

ParamNodes register_params(Tape& tape, const ModelParams& params) {
    ParamNodes nodes;
    params.for_each([&](const std::string& name, const Matrix& m) {
        nodes.names.push_back(name);
        nodes.ids.push_back(tape.leaf(m, name, true));
    });
    return nodes;
}

namespace {

// Positions of parameter names inside ParamNodes, fixed by for_each order.
Tape::NodeId node_named(const ParamNodes& nodes, const std::string& name) {
    for (size_t i = 0; i < nodes.names.size(); ++i)
        if (nodes.names[i] == name) return nodes.ids[i];
    throw std::logic_error("parameter node missing: " + name);
}

}  // namespace

Tape::NodeId gc_block_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                              const TraceResult& trace, Tape::NodeId x0) {
    const int K = config.gc_layers;
    if (static_cast<int>(trace.layers.size()) != K + 1)
        throw std::invalid_argument("gc_block: trace depth differs from gc_layers");
    if (tape.value(x0).cols != static_cast<int>(trace.layers[0].size()))
        throw std::invalid_argument("gc_block: x0 width differs from V_0");

    Tape::NodeId x = x0;
    for (int k = 1; k <= K; ++k) {
        Tape::NodeId qk = node_named(nodes, "q" + std::to_string(k));
        Tape::NodeId wk = node_named(nodes, "w" + std::to_string(k));
        Tape::NodeId neigh = tape.spmm(tape.elu(tape.matmul(qk, x)), trace.slices[k - 1]);
        Tape::NodeId self = tape.select_columns(x, trace.target_positions[k - 1]);
        x = tape.l2_normalize_columns(tape.elu(tape.matmul(wk, tape.concat_rows(neigh, self))));
    }
    return x;
}

Tape::NodeId backend_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                             Tape::NodeId xk) {
    if (tape.value(xk).rows != config.backend_input_width())
        throw std::invalid_argument("backend: input row count mismatch");
    Tape::NodeId h1 = tape.elu(tape.add_column_bias(
        tape.matmul(node_named(nodes, "backend_w1"), xk), node_named(nodes, "backend_b1")));
    Tape::NodeId h2 = tape.elu(tape.add_column_bias(
        tape.matmul(node_named(nodes, "backend_w2"), h1), node_named(nodes, "backend_b2")));
    return tape.add_column_bias(tape.matmul(node_named(nodes, "head_w"), h2),
                                node_named(nodes, "head_b"));
}

Tape::NodeId embed_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                           const ArtistGraph& graph, const std::vector<int>& sorted_batch) {
    if (graph.features.rows != config.input_dim)
        throw std::invalid_argument("embed: graph feature dim differs from config input_dim");
    TraceResult trace = trace_batch(graph, sorted_batch, config.gc_layers);
    Tape::NodeId x0 = tape.leaf(gather_columns(graph.features, trace.layers[0]), "x0");
    Tape::NodeId xk = gc_block_on_tape(tape, nodes, config, trace, x0);
    return backend_on_tape(tape, nodes, config, xk);
}

namespace {

// One tape per call; forward value is detached and returned.
Matrix run_detached(const ModelParams& params,
                    const std::function<Tape::NodeId(Tape&, const ParamNodes&)>& build) {
    Tape tape;
    ParamNodes nodes = register_params(tape, params);
    return tape.value(build(tape, nodes));
}

}  // namespace

Matrix gc_block_forward(const ModelParams& params, const TraceResult& trace, const Matrix& x0) {
    if (params.config.gc_layers == 0) {
        // Baseline degeneration: X_0 restricted to the batch, unchanged.
        return x0;
    }
    return run_detached(params, [&](Tape& tape, const ParamNodes& nodes) {
        return gc_block_on_tape(tape, nodes, params.config, trace, tape.leaf(x0, "x0"));
    });
}

Matrix backend_forward(const ModelParams& params, const Matrix& xk) {
    return run_detached(params, [&](Tape& tape, const ParamNodes& nodes) {
        return backend_on_tape(tape, nodes, params.config, tape.leaf(xk, "xk"));
    });
}

Matrix embed_batch(const ModelParams& params, const ArtistGraph& graph,
                   const std::vector<int>& batch) {
    if (batch.empty()) throw std::invalid_argument("embed_batch: empty batch");
    std::vector<int> sorted = batch;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    Matrix unique_out = run_detached(params, [&](Tape& tape, const ParamNodes& nodes) {
        return embed_on_tape(tape, nodes, params.config, graph, sorted);
    });

    Matrix out(unique_out.rows, static_cast<int>(batch.size()));
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), batch[i]);
        const int src = static_cast<int>(it - sorted.begin());
        for (int r = 0; r < out.rows; ++r) out(r, static_cast<int>(i)) = unique_out(r, src);
    }
    return out;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& values = j.at("values");
    if (values.size() != m.values.size())
        throw std::runtime_error("checkpoint: value count differs from declared shape");
    m.values = values.get<std::vector<double>>();
    return m;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& metadata_json) {
    json doc;
    doc["format"] = "artsim-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["config"] = {{"gc_layers", params.config.gc_layers},
                     {"gc_width", params.config.gc_width},
                     {"backend_width1", params.config.backend_width1},
                     {"backend_width2", params.config.backend_width2},
                     {"output_dim", params.config.output_dim},
                     {"input_dim", params.config.input_dim}};
    doc["metadata"] = json::parse(metadata_json);
    json blocks = json::object();
    params.for_each([&blocks](const std::string& name, const Matrix& m) {
        blocks[name] = matrix_to_json(m);
    });
    doc["params"] = blocks;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << doc.dump(1, '\t') << "\n";
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    json doc = json::parse(in, nullptr, true);
    if (doc.value("format", "") != "artsim-checkpoint")
        throw std::runtime_error("not a checkpoint file: " + path);
    if (doc.value("version", -1) != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);

    const json& c = doc.at("config");
    ModelConfig config;
    config.gc_layers = c.at("gc_layers").get<int>();
    config.gc_width = c.at("gc_width").get<int>();
    config.backend_width1 = c.at("backend_width1").get<int>();
    config.backend_width2 = c.at("backend_width2").get<int>();
    config.output_dim = c.at("output_dim").get<int>();
    config.input_dim = c.at("input_dim").get<int>();

    // Shapes come from the config; stored blocks must agree.
    ModelParams params = init_params(config, 0);
    const json& blocks = doc.at("params");
    params.for_each([&blocks, &path](const std::string& name, Matrix& m) {
        if (!blocks.contains(name))
            throw std::runtime_error("checkpoint " + path + " missing block " + name);
        Matrix loaded = matrix_from_json(blocks.at(name));
        if (!loaded.same_shape(m))
            throw std::runtime_error("checkpoint " + path + " block " + name +
                                     " has unexpected shape");
        m = std::move(loaded);
    });
    return params;
}

std::string checkpoint_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    json doc = json::parse(in, nullptr, true);
    return doc.value("metadata", json::object()).dump();
}

}  // namespace artsim
