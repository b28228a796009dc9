#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "artsim/graph.hpp"
#include "artsim/model.hpp"

namespace artsim {

struct TrainConfig {
    int epochs = 50;
    int warmup_epochs = 1;
    double base_lr = 1e-3;
    int batch_size = 64;  // anchors per batch, one triplet per anchor
    double margin = 0.2;
    uint64_t seed = 0;

    void validate() const;
};

// Linear warmup over the first warmup_epochs, then cosine decay to zero over
// the remaining epochs. No warm restarts. Continuous at the boundary.
double lr_at(const TrainConfig& config, long step, long steps_per_epoch);

struct AdamState {
    std::vector<Matrix> m;  // first moments, for_each order
    std::vector<Matrix> v;  // second moments
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState init_adam(const ModelParams& params);

// Standard bias-corrected update. Gradients follow for_each order; a
// non-finite gradient aborts naming the offending parameter.
void adam_step(AdamState& state, ModelParams& params, const std::vector<Matrix>& grads,
               double lr);

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss;  // triplet-count-weighted mean per epoch
    std::vector<double> epoch_lr;    // lr at the final step of each epoch
    long total_triplets = 0;
    long skipped_anchors = 0;  // anchors without an eligible negative
};

// Trains on the training subgraph of `graph` (derived internally); anchors
// are training nodes with at least one kept neighbor there. If `log` is
// given, writes one CSV line per epoch: epoch,mean_loss,lr.
TrainResult train(const ArtistGraph& graph, const ModelConfig& model_config,
                  const TrainConfig& train_config, std::ostream* log = nullptr);

}  // namespace artsim
