#include "artsim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "artsim/common.hpp"
#include "artsim/sampling.hpp"

namespace artsim {

void TrainConfig::validate() const {
    if (warmup_epochs < 0 || epochs < warmup_epochs)
        throw std::invalid_argument("TrainConfig: need epochs >= warmup_epochs >= 0");
    if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be positive");
    if (batch_size <= 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
    if (!(margin >= 0.0)) throw std::invalid_argument("TrainConfig: margin must be nonnegative");
}

double lr_at(const TrainConfig& config, long step, long steps_per_epoch) {
    if (step < 0 || steps_per_epoch <= 0) throw std::invalid_argument("lr_at: bad step arguments");
    const long warmup_steps = static_cast<long>(config.warmup_epochs) * steps_per_epoch;
    if (step < warmup_steps)
        return config.base_lr * static_cast<double>(step + 1) /
               static_cast<double>(warmup_steps);
    const long decay_steps =
        static_cast<long>(config.epochs - config.warmup_epochs) * steps_per_epoch;
    if (decay_steps <= 0) return config.base_lr;
    const double t = std::min(1.0, static_cast<double>(step - warmup_steps) /
                                       static_cast<double>(decay_steps));
    return config.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

AdamState init_adam(const ModelParams& params) {
    AdamState state;
    params.for_each([&state](const std::string&, const Matrix& m) {
        state.m.push_back(Matrix(m.rows, m.cols));
        state.v.push_back(Matrix(m.rows, m.cols));
    });
    return state;
}

void adam_step(AdamState& state, ModelParams& params, const std::vector<Matrix>& grads,
               double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    size_t i = 0;
    params.for_each([&](const std::string& name, Matrix& p) {
        if (i >= grads.size()) throw std::invalid_argument("adam_step: missing gradients");
        const Matrix& g = grads[i];
        if (!g.same_shape(p))
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
        if (!g.all_finite())
            throw std::runtime_error("adam_step: non-finite gradient for " + name);
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (size_t j = 0; j < p.values.size(); ++j) {
            const double gj = g.values[j];
            m.values[j] = state.beta1 * m.values[j] + (1.0 - state.beta1) * gj;
            v.values[j] = state.beta2 * v.values[j] + (1.0 - state.beta2) * gj * gj;
            const double mhat = m.values[j] / bc1;
            const double vhat = v.values[j] / bc2;
            p.values[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
        ++i;
    });
    if (i != grads.size()) throw std::invalid_argument("adam_step: extra gradients");
}

TrainResult train(const ArtistGraph& graph, const ModelConfig& model_config,
                  const TrainConfig& train_config, std::ostream* log) {
    model_config.validate();
    train_config.validate();

    const ArtistGraph tg = training_subgraph(graph, train_config.seed);

    std::vector<int> anchors;
    for (int v = 0; v < tg.node_count; ++v)
        if (tg.split[v] == Split::kTrain && !tg.kept[v].empty()) anchors.push_back(v);
    if (anchors.empty()) throw std::invalid_argument("train: no anchor has a training neighbor");

    const long steps_per_epoch =
        (static_cast<long>(anchors.size()) + train_config.batch_size - 1) /
        train_config.batch_size;

    TrainResult result;
    result.params = init_params(model_config, train_config.seed);
    AdamState adam = init_adam(result.params);
    std::mt19937_64 rng(derive_seed(train_config.seed, "train"));

    long global_step = 0;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        std::shuffle(anchors.begin(), anchors.end(), rng);

        double loss_sum = 0.0;
        long triplet_sum = 0;
        double lr = train_config.base_lr;

        for (size_t start = 0; start < anchors.size();
             start += train_config.batch_size, ++global_step) {
            const size_t stop = std::min(anchors.size(),
                                         start + static_cast<size_t>(train_config.batch_size));
            lr = lr_at(train_config, global_step, steps_per_epoch);

            // anchor -> positive pairs; anchors all have neighbors by construction
            std::vector<std::pair<int, int>> pairs;
            std::vector<int> pool;
            for (size_t i = start; i < stop; ++i) {
                int positive = *sample_positive(tg, anchors[i], rng);
                pairs.push_back({anchors[i], positive});
                pool.push_back(anchors[i]);
                pool.push_back(positive);
            }
            std::sort(pool.begin(), pool.end());
            pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

            TraceResult trace = trace_batch(tg, pool, model_config.gc_layers);
            for (int v : trace.layers[0])
                if (tg.split[v] != Split::kTrain)
                    throw std::logic_error("train: non-training node leaked into a trace");

            Tape tape;
            ParamNodes nodes = register_params(tape, result.params);
            Tape::NodeId x0 = tape.leaf(gather_columns(tg.features, trace.layers[0]), "x0");
            Tape::NodeId xk = gc_block_on_tape(tape, nodes, model_config, trace, x0);
            Tape::NodeId y = tape.l2_normalize_columns(backend_on_tape(tape, nodes, model_config, xk));
            const Matrix& emb = tape.value(y);

            auto pool_position = [&pool](int node) {
                return static_cast<int>(
                    std::lower_bound(pool.begin(), pool.end(), node) - pool.begin());
            };

            std::vector<Triplet> triplets;
            for (const auto& [anchor, positive] : pairs) {
                std::vector<int> candidates = eligible_negatives(tg, anchor, pool);
                std::vector<int> candidate_cols;
                for (int c : candidates) candidate_cols.push_back(pool_position(c));
                auto negative =
                    distance_weighted_negative(emb, pool_position(anchor), candidate_cols, rng);
                if (!negative.has_value()) {
                    ++result.skipped_anchors;
                    continue;
                }
                triplets.push_back({pool_position(anchor), pool_position(positive), *negative});
            }
            if (triplets.empty()) continue;

            Tape::NodeId loss = tape.triplet_hinge_mean(y, triplets, train_config.margin);
            const double batch_loss = tape.scalar_value(loss);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss diverged at epoch " +
                                         std::to_string(epoch + 1) + " batch " +
                                         std::to_string(start / train_config.batch_size + 1));

            tape.backward(loss);
            std::vector<Matrix> grads;
            grads.reserve(nodes.ids.size());
            for (Tape::NodeId id : nodes.ids) grads.push_back(tape.grad(id));
            adam_step(adam, result.params, grads, lr);

            loss_sum += batch_loss * static_cast<double>(triplets.size());
            triplet_sum += static_cast<long>(triplets.size());
        }

        const double epoch_mean = triplet_sum > 0 ? loss_sum / triplet_sum : 0.0;
        result.epoch_loss.push_back(epoch_mean);
        result.epoch_lr.push_back(lr);
        result.total_triplets += triplet_sum;
        if (log)
            *log << epoch + 1 << "," << format_double(epoch_mean) << "," << format_double(lr)
                 << "\n";
    }
    return result;
}

}  // namespace artsim
