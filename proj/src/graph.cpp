#include "artsim/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "artsim/common.hpp"

namespace artsim {

const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kValidation: return "validation";
        case Split::kTest: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "validation") return Split::kValidation;
    if (name == "test") return Split::kTest;
    throw std::invalid_argument("unknown split name: " + name);
}

namespace {

// Shared by build_graph and the derived-graph constructors once edges are
// resolved to indices. Assumes u != v, weights > 0, duplicates pre-merged.
ArtistGraph assemble(std::vector<std::string> node_ids, Matrix features,
                     std::vector<Split> splits, const std::map<std::pair<int, int>, double>& merged,
                     bool weighted, uint64_t seed) {
    ArtistGraph g;
    g.node_count = static_cast<int>(node_ids.size());
    g.node_ids = std::move(node_ids);
    g.features = std::move(features);
    g.split = std::move(splits);
    g.weighted = weighted;

    g.adjacency = SparseMatrix(g.node_count, g.node_count);
    std::vector<std::vector<std::pair<int, double>>> neighbors(g.node_count);
    for (const auto& [uv, w] : merged) {
        g.adjacency.entries.push_back({uv.first, uv.second, w});
        g.adjacency.entries.push_back({uv.second, uv.first, w});
        neighbors[uv.first].push_back({uv.second, w});
        neighbors[uv.second].push_back({uv.first, w});
    }
    g.adjacency.canonicalize();

    g.kept.resize(g.node_count);
    g.kept_total.assign(g.node_count, 0.0);
    std::mt19937_64 prune_rng(derive_seed(seed, "prune"));
    for (int v = 0; v < g.node_count; ++v) {
        auto& list = neighbors[v];
        std::sort(list.begin(), list.end());
        if (static_cast<int>(list.size()) > kNeighborCap) {
            if (weighted) {
                std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
                    return a.second > b.second;  // ties keep ascending index
                });
                list.resize(kNeighborCap);
                std::sort(list.begin(), list.end());
            } else {
                // Partial Fisher-Yates over the index-sorted list.
                for (int i = 0; i < kNeighborCap; ++i) {
                    std::uniform_int_distribution<size_t> pick(i, list.size() - 1);
                    std::swap(list[i], list[pick(prune_rng)]);
                }
                list.resize(kNeighborCap);
                std::sort(list.begin(), list.end());
            }
        }
        g.kept[v] = list;
        for (const auto& [u, w] : list) g.kept_total[v] += w;
    }
    return g;
}

std::map<std::pair<int, int>, double> edges_of(const ArtistGraph& g) {
    std::map<std::pair<int, int>, double> merged;
    for (const SparseMatrix::Entry& e : g.adjacency.entries)
        if (e.row < e.col) merged[{e.row, e.col}] = e.weight;
    return merged;
}

}  // namespace

ArtistGraph build_graph(std::vector<std::string> node_ids, Matrix features,
                        std::vector<Split> splits, const std::vector<EdgeSpec>& edges,
                        uint64_t seed) {
    const int n = static_cast<int>(node_ids.size());
    if (features.cols != n)
        throw std::invalid_argument("build_graph: features must have one column per node");
    if (static_cast<int>(splits.size()) != n)
        throw std::invalid_argument("build_graph: one split label per node required");

    std::unordered_map<std::string, int> index;
    index.reserve(node_ids.size());
    for (int i = 0; i < n; ++i) {
        if (!index.emplace(node_ids[i], i).second)
            throw std::invalid_argument("build_graph: duplicate node id " + node_ids[i]);
    }

    bool weighted = false;
    for (const EdgeSpec& e : edges)
        if (e.weight.has_value()) weighted = true;

    std::map<std::pair<int, int>, double> merged;
    for (const EdgeSpec& e : edges) {
        auto ia = index.find(e.a);
        if (ia == index.end()) throw std::invalid_argument("build_graph: unknown node id " + e.a);
        auto ib = index.find(e.b);
        if (ib == index.end()) throw std::invalid_argument("build_graph: unknown node id " + e.b);
        int u = ia->second, v = ib->second;
        if (u == v) continue;  // self-loops never stored
        double w = weighted ? e.weight.value_or(1.0) : 1.0;
        if (!(w > 0.0)) throw std::invalid_argument("build_graph: nonpositive weight on edge " +
                                                    e.a + " -- " + e.b);
        if (u > v) std::swap(u, v);
        auto [it, inserted] = merged.emplace(std::pair<int, int>{u, v}, w);
        if (!inserted) it->second = std::max(it->second, w);  // duplicate edges keep max weight
    }

    return assemble(std::move(node_ids), std::move(features), std::move(splits), merged, weighted,
                    seed);
}

std::vector<int> neighborhood(const ArtistGraph& g, int v) {
    if (v < 0 || v >= g.node_count) throw std::invalid_argument("neighborhood: node out of range");
    std::vector<int> out;
    out.reserve(g.kept[v].size() + 1);
    bool placed = false;
    for (const auto& [u, w] : g.kept[v]) {
        (void)w;
        if (!placed && v < u) {
            out.push_back(v);
            placed = true;
        }
        out.push_back(u);
    }
    if (!placed) out.push_back(v);
    return out;
}

SparseMatrix slice_normalized_adjacency(const ArtistGraph& g, const std::vector<int>& sources,
                                        const std::vector<int>& targets) {
    if (!std::includes(sources.begin(), sources.end(), targets.begin(), targets.end()))
        throw std::invalid_argument("slice_normalized_adjacency: targets not a subset of sources");

    std::unordered_map<int, int> row_of;
    row_of.reserve(sources.size());
    for (size_t i = 0; i < sources.size(); ++i) row_of.emplace(sources[i], static_cast<int>(i));

    SparseMatrix slice(static_cast<int>(sources.size()), static_cast<int>(targets.size()));
    for (size_t j = 0; j < targets.size(); ++j) {
        const int t = targets[j];
        const double total = g.kept_total[t];
        if (total <= 0.0) continue;  // isolated target: zero column
        for (const auto& [u, w] : g.kept[t]) {
            auto it = row_of.find(u);
            if (it == row_of.end()) continue;
            slice.entries.push_back({it->second, static_cast<int>(j), w / total});
        }
    }
    slice.canonicalize();
    return slice;
}

TraceResult trace_batch(const ArtistGraph& g, const std::vector<int>& batch, int K) {
    if (batch.empty()) throw std::invalid_argument("trace_batch: empty batch");
    if (K < 0) throw std::invalid_argument("trace_batch: negative layer count");
    for (int v : batch)
        if (v < 0 || v >= g.node_count)
            throw std::invalid_argument("trace_batch: node out of range");

    TraceResult trace;
    trace.layers.resize(K + 1);
    std::vector<int> layer = batch;
    std::sort(layer.begin(), layer.end());
    layer.erase(std::unique(layer.begin(), layer.end()), layer.end());
    trace.layers[K] = layer;

    for (int k = K; k >= 1; --k) {
        std::vector<int> wider;
        for (int v : trace.layers[k]) {
            wider.push_back(v);
            for (const auto& [u, w] : g.kept[v]) {
                (void)w;
                wider.push_back(u);
            }
        }
        std::sort(wider.begin(), wider.end());
        wider.erase(std::unique(wider.begin(), wider.end()), wider.end());
        trace.layers[k - 1] = std::move(wider);
    }

    trace.slices.resize(K);
    trace.target_positions.resize(K);
    for (int k = 1; k <= K; ++k) {
        const std::vector<int>& sources = trace.layers[k - 1];
        const std::vector<int>& targets = trace.layers[k];
        trace.slices[k - 1] = slice_normalized_adjacency(g, sources, targets);
        std::vector<int>& pos = trace.target_positions[k - 1];
        pos.resize(targets.size());
        for (size_t j = 0; j < targets.size(); ++j) {
            auto it = std::lower_bound(sources.begin(), sources.end(), targets[j]);
            pos[j] = static_cast<int>(it - sources.begin());
        }
    }
    return trace;
}

std::vector<Edge> all_edges(const ArtistGraph& g) {
    std::vector<Edge> edges;
    for (const SparseMatrix::Entry& e : g.adjacency.entries)
        if (e.row < e.col) edges.push_back({e.row, e.col, e.weight});
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    return edges;
}

double two_hop_coverage(const ArtistGraph& g, const std::vector<Edge>& subset) {
    if (subset.empty()) return 0.0;

    std::vector<std::vector<int>> adj(g.node_count);
    for (const SparseMatrix::Entry& e : g.adjacency.entries) adj[e.row].push_back(e.col);
    for (auto& list : adj) std::sort(list.begin(), list.end());

    int covered = 0;
    for (const Edge& e : subset) {
        // After removing (u,v) a <=2-hop path is exactly a common neighbor.
        const std::vector<int>& a = adj[e.u];
        const std::vector<int>& b = adj[e.v];
        size_t i = 0, j = 0;
        bool found = false;
        while (i < a.size() && j < b.size()) {
            if (a[i] == b[j]) {
                found = true;
                break;
            }
            if (a[i] < b[j]) ++i; else ++j;
        }
        if (found) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(subset.size());
}

namespace {

ArtistGraph filter_edges(const ArtistGraph& g, uint64_t seed,
                         const std::function<bool(Split, Split)>& keep) {
    std::map<std::pair<int, int>, double> merged;
    for (const auto& [uv, w] : edges_of(g))
        if (keep(g.split[uv.first], g.split[uv.second])) merged[uv] = w;
    return assemble(g.node_ids, g.features, g.split, merged, g.weighted, seed);
}

}  // namespace

ArtistGraph training_subgraph(const ArtistGraph& g, uint64_t seed) {
    return filter_edges(g, seed, [](Split a, Split b) {
        return a == Split::kTrain && b == Split::kTrain;
    });
}

ArtistGraph build_eval_graph(const ArtistGraph& g, Split eval_split, uint64_t seed) {
    if (eval_split == Split::kTrain)
        throw std::invalid_argument("build_eval_graph: eval split cannot be the training split");
    return filter_edges(g, seed, [eval_split](Split a, Split b) {
        auto ok = [eval_split](Split s) { return s == Split::kTrain || s == eval_split; };
        if (!ok(a) || !ok(b)) return false;
        return a == Split::kTrain || b == Split::kTrain;  // eval-eval stays hidden
    });
}

}  // namespace artsim
