#include "artsim/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace artsim {

std::optional<int> sample_positive(const ArtistGraph& g, int anchor, std::mt19937_64& rng) {
    if (anchor < 0 || anchor >= g.node_count)
        throw std::invalid_argument("sample_positive: anchor out of range");
    const auto& list = g.kept[anchor];
    if (list.empty()) return std::nullopt;
    std::uniform_int_distribution<size_t> pick(0, list.size() - 1);
    return list[pick(rng)].first;
}

std::vector<int> eligible_negatives(const ArtistGraph& g, int anchor,
                                    const std::vector<int>& pool) {
    // Full-adjacency neighbors of the anchor; entries are (col, row) sorted,
    // so the anchor's column is one contiguous run.
    const auto& entries = g.adjacency.entries;
    auto lo = std::lower_bound(entries.begin(), entries.end(), anchor,
                               [](const SparseMatrix::Entry& e, int col) { return e.col < col; });
    std::vector<int> adjacent;
    for (auto it = lo; it != entries.end() && it->col == anchor; ++it)
        adjacent.push_back(it->row);  // ascending already

    std::vector<int> out;
    for (int v : pool) {
        if (v < 0 || v >= g.node_count)
            throw std::invalid_argument("eligible_negatives: pool node out of range");
        if (v == anchor) continue;
        if (std::binary_search(adjacent.begin(), adjacent.end(), v)) continue;
        out.push_back(v);
    }
    return out;
}

double log_inverse_distance_density(double d, int dim) {
    const double n = static_cast<double>(dim);
    return -((n - 2.0) * std::log(d) + (n - 3.0) / 2.0 * std::log1p(-d * d / 4.0));
}

namespace {

double column_distance(const Matrix& y, int a, int b) {
    double sq = 0.0;
    for (int r = 0; r < y.rows; ++r) {
        const double diff = y(r, a) - y(r, b);
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

// Clipped selection weights, shifted so the largest log weight maps to 1.
std::vector<double> selection_weights(const Matrix& embeddings, int anchor_col,
                                      const std::vector<int>& candidate_cols) {
    const int dim = embeddings.rows;
    std::vector<double> log_w(candidate_cols.size());
    double max_log = -HUGE_VAL;
    for (size_t i = 0; i < candidate_cols.size(); ++i) {
        double d = column_distance(embeddings, anchor_col, candidate_cols[i]);
        d = std::clamp(d, kDistanceClip, 2.0 - kDistanceClip);
        log_w[i] = log_inverse_distance_density(d, dim);
        max_log = std::max(max_log, log_w[i]);
    }

    std::vector<double> w(log_w.size());
    for (size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - max_log);

    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    const size_t m = sorted.size();
    const double median =
        m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    const double lambda = kWeightClipFactor * median;
    for (double& v : w) v = std::min(v, lambda);
    return w;
}

}  // namespace

std::optional<int> distance_weighted_negative(const Matrix& embeddings, int anchor_col,
                                              const std::vector<int>& candidate_cols,
                                              std::mt19937_64& rng) {
    if (candidate_cols.empty()) return std::nullopt;
    std::vector<double> w = selection_weights(embeddings, anchor_col, candidate_cols);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    return candidate_cols[pick(rng)];
}

std::vector<double> negative_selection_probabilities(const Matrix& embeddings, int anchor_col,
                                                     const std::vector<int>& candidate_cols) {
    std::vector<double> w = selection_weights(embeddings, anchor_col, candidate_cols);
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

double triplet_loss(const Matrix& anchor, const Matrix& positive, const Matrix& negative,
                    double margin) {
    if (anchor.cols != 1 || !anchor.same_shape(positive) || !anchor.same_shape(negative))
        throw std::invalid_argument("triplet_loss: inputs must be equal-shape column vectors");
    double dap = 0.0, dan = 0.0;
    for (int r = 0; r < anchor.rows; ++r) {
        const double dp = anchor(r, 0) - positive(r, 0);
        const double dn = anchor(r, 0) - negative(r, 0);
        dap += dp * dp;
        dan += dn * dn;
    }
    return std::max(0.0, std::sqrt(dap) - std::sqrt(dan) + margin);
}

}  // namespace artsim
