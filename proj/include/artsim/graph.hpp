#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "artsim/matrix.hpp"

namespace artsim {

enum class Split : uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// Input edge referencing nodes by external id. Weightless edges get weight 1
// when any other edge carries a weight; a fully weightless graph is treated
// as unweighted (random pruning, unit weights).
struct EdgeSpec {
    std::string a;
    std::string b;
    std::optional<double> weight;
};

// Canonical undirected edge, u < v.
struct Edge {
    int u = 0;
    int v = 0;
    double weight = 1.0;
};

inline constexpr int kNeighborCap = 25;

struct ArtistGraph {
    int node_count = 0;
    std::vector<std::string> node_ids;
    Matrix features;         // D x V, one column per node
    SparseMatrix adjacency;  // V x V, symmetric, weights > 0, no self-loops
    std::vector<Split> split;
    bool weighted = false;

    // Pruned neighbor lists: per node at most kNeighborCap (neighbor, weight)
    // pairs, sorted by neighbor index. Pruning is per node, so keeping is not
    // necessarily mutual. kept_total[v] sums kept[v] weights.
    std::vector<std::vector<std::pair<int, double>>> kept;
    std::vector<double> kept_total;
};

// Merges duplicate edges by max weight, drops self-loops, symmetrizes, and
// prunes each node's neighbor list to the kNeighborCap strongest (ties by
// ascending index). Unweighted graphs keep a uniformly random cap instead,
// drawn from derive_seed(seed, "prune").
ArtistGraph build_graph(std::vector<std::string> node_ids, Matrix features,
                        std::vector<Split> splits, const std::vector<EdgeSpec>& edges,
                        uint64_t seed);

// Sorted, self-inclusive pruned neighborhood of v.
std::vector<int> neighborhood(const ArtistGraph& g, int v);

struct TraceResult {
    // layers[k] = V_k, ascending; layers.size() == K+1, layers.back() is the batch.
    std::vector<std::vector<int>> layers;
    // slices[k-1] maps V_{k-1} rows to V_k columns, |V_{k-1}| x |V_k|.
    std::vector<SparseMatrix> slices;
    // target_positions[k-1][j] = index of layers[k][j] inside layers[k-1].
    std::vector<std::vector<int>> target_positions;
};

TraceResult trace_batch(const ArtistGraph& g, const std::vector<int>& batch, int K);

// Column j holds target j's kept edges restricted to `sources`, each divided
// by the target's full kept weight. Targets must be a subset of sources.
SparseMatrix slice_normalized_adjacency(const ArtistGraph& g, const std::vector<int>& sources,
                                        const std::vector<int>& targets);

// Fraction of subset edges (u,v) with a path of length <= 2 from u to v in
// the full adjacency once (u,v) itself is removed. Empty subset yields 0.
double two_hop_coverage(const ArtistGraph& g, const std::vector<Edge>& subset);

std::vector<Edge> all_edges(const ArtistGraph& g);

// Same nodes and features, edges filtered to train-train only, re-pruned.
// Non-train nodes become isolated.
ArtistGraph training_subgraph(const ArtistGraph& g, uint64_t seed);

// Eval-graph extension: train-train and train-eval edges survive; edges
// inside the eval split (the ground truth) and all edges touching the other
// held-out split are dropped.
ArtistGraph build_eval_graph(const ArtistGraph& g, Split eval_split, uint64_t seed);

}  // namespace artsim
