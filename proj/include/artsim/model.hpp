#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "artsim/graph.hpp"
#include "artsim/matrix.hpp"
#include "artsim/tape.hpp"

namespace artsim {

// K graph-convolution layers of gc_width units feeding a two-layer dense
// back-end and a linear head. K=0 is the baseline dense network.
struct ModelConfig {
    int gc_layers = 0;
    int gc_width = 256;
    int backend_width1 = 256;
    int backend_width2 = 256;
    int output_dim = 100;
    int input_dim = 0;

    void validate() const;
    // Column count of X_{k-1}: input_dim for k=1, gc_width above.
    int gc_input_width(int k) const { return k <= 1 ? input_dim : gc_width; }
    int backend_input_width() const { return gc_layers == 0 ? input_dim : gc_width; }
};

struct ModelParams {
    ModelConfig config;
    std::vector<Matrix> q;  // q[k]: gc_width x gc_input_width(k+1)
    std::vector<Matrix> w;  // w[k]: gc_width x (gc_width + gc_input_width(k+1))
    Matrix backend_w1, backend_b1;
    Matrix backend_w2, backend_b2;
    Matrix head_w, head_b;

    // Fixed enumeration order; the same order drives initialization, the
    // optimizer state, checkpoints, and gradient checks.
    void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
    void for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

// Leaf ids of every parameter on a tape, in for_each order.
struct ParamNodes {
    std::vector<Tape::NodeId> ids;
    std::vector<std::string> names;
};

ParamNodes register_params(Tape& tape, const ModelParams& params);

// Alg. 1 lines 5-9 over a prepared trace. x0 columns follow trace.layers[0].
Tape::NodeId gc_block_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                              const TraceResult& trace, Tape::NodeId x0);

Tape::NodeId backend_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                             Tape::NodeId xk);

// trace -> gc block -> back-end for a sorted deduplicated batch.
Tape::NodeId embed_on_tape(Tape& tape, const ParamNodes& nodes, const ModelConfig& config,
                           const ArtistGraph& graph, const std::vector<int>& sorted_batch);

// Value-level wrappers over the tape builders.
Matrix gc_block_forward(const ModelParams& params, const TraceResult& trace, const Matrix& x0);
Matrix backend_forward(const ModelParams& params, const Matrix& xk);
// Accepts any nonempty batch; output column i embeds batch[i].
Matrix embed_batch(const ModelParams& params, const ArtistGraph& graph,
                   const std::vector<int>& batch);

// JSON checkpoint: config, named parameter blocks, caller metadata
// (round-trips exactly; doubles serialized shortest-round-trip).
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& metadata_json = "{}");
ModelParams load_checkpoint(const std::string& path);
std::string checkpoint_metadata(const std::string& path);

}  // namespace artsim
