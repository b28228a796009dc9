#include "artsim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "artsim/common.hpp"
#include "artsim/tape.hpp"
#include "json.hpp"

namespace artsim {

std::vector<int> rank_candidates(const Matrix& embeddings, int query_col,
                                 const std::vector<int>& candidate_cols) {
    if (query_col < 0 || query_col >= embeddings.cols)
        throw std::invalid_argument("rank_candidates: query column out of range");

    std::vector<std::pair<double, int>> order;
    order.reserve(candidate_cols.size());
    for (int c : candidate_cols) {
        if (c < 0 || c >= embeddings.cols)
            throw std::invalid_argument("rank_candidates: candidate column out of range");
        if (c == query_col) continue;
        double sq = 0.0;
        for (int r = 0; r < embeddings.rows; ++r) {
            const double d = embeddings(r, query_col) - embeddings(r, c);
            sq += d * d;
        }
        order.push_back({sq, c});
    }
    std::sort(order.begin(), order.end());  // distance, then ascending index

    std::vector<int> ranked;
    ranked.reserve(order.size());
    for (const auto& [d, c] : order) {
        ranked.push_back(c);
        (void)d;
    }
    return ranked;
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    if (relevant.empty()) return 0.0;

    std::vector<int> rel = relevant;
    std::sort(rel.begin(), rel.end());

    double dcg = 0.0;
    const int depth = std::min<int>(k, static_cast<int>(ranked.size()));
    for (int pos = 1; pos <= depth; ++pos)
        if (std::binary_search(rel.begin(), rel.end(), ranked[pos - 1]))
            dcg += 1.0 / std::log2(static_cast<double>(pos + 1));

    double idcg = 0.0;
    const int ideal = std::min<int>(k, static_cast<int>(rel.size()));
    for (int pos = 1; pos <= ideal; ++pos)
        idcg += 1.0 / std::log2(static_cast<double>(pos + 1));
    return dcg / idcg;
}

Matrix embed_eval_nodes(const ModelParams& params, const ArtistGraph& eval_graph,
                        const std::vector<int>& eval_nodes, Split eval_split,
                        long* eval_eval_reads) {
    if (eval_nodes.empty()) throw std::invalid_argument("embed_eval_nodes: no eval nodes");
    if (!std::is_sorted(eval_nodes.begin(), eval_nodes.end()))
        throw std::invalid_argument("embed_eval_nodes: nodes must be sorted");

    constexpr size_t kChunk = 256;
    Matrix out(params.config.output_dim, static_cast<int>(eval_nodes.size()));

    for (size_t start = 0; start < eval_nodes.size(); start += kChunk) {
        const size_t stop = std::min(eval_nodes.size(), start + kChunk);
        std::vector<int> chunk(eval_nodes.begin() + start, eval_nodes.begin() + stop);

        TraceResult trace = trace_batch(eval_graph, chunk, params.config.gc_layers);
        if (eval_eval_reads) {
            for (size_t k = 0; k + 1 < trace.layers.size(); ++k) {
                const std::vector<int>& sources = trace.layers[k];
                const std::vector<int>& targets = trace.layers[k + 1];
                for (const SparseMatrix::Entry& e : trace.slices[k].entries)
                    if (eval_graph.split[sources[e.row]] == eval_split &&
                        eval_graph.split[targets[e.col]] == eval_split)
                        ++*eval_eval_reads;
            }
        }

        Tape tape;
        ParamNodes nodes = register_params(tape, params);
        Tape::NodeId x0 =
            tape.leaf(gather_columns(eval_graph.features, trace.layers[0]), "x0");
        Tape::NodeId xk = gc_block_on_tape(tape, nodes, params.config, trace, x0);
        const Matrix& block = tape.value(backend_on_tape(tape, nodes, params.config, xk));

        for (size_t j = 0; j < chunk.size(); ++j)
            for (int r = 0; r < out.rows; ++r)
                out(r, static_cast<int>(start + j)) = block(r, static_cast<int>(j));
    }
    return out;
}

EvalReport score_embeddings(const Matrix& normalized_embeddings,
                            const std::vector<int>& eval_nodes,
                            const std::vector<std::vector<int>>& relevant_positions,
                            const std::vector<std::string>& node_ids, int k) {
    if (normalized_embeddings.cols != static_cast<int>(eval_nodes.size()) ||
        relevant_positions.size() != eval_nodes.size())
        throw std::invalid_argument("score_embeddings: size mismatch");

    std::vector<int> all_cols(eval_nodes.size());
    for (size_t i = 0; i < all_cols.size(); ++i) all_cols[i] = static_cast<int>(i);

    EvalReport report;
    report.k = k;
    report.candidate_count = static_cast<int>(eval_nodes.size());

    double total = 0.0;
    for (size_t i = 0; i < eval_nodes.size(); ++i) {
        if (relevant_positions[i].empty()) continue;
        std::vector<int> ranked =
            rank_candidates(normalized_embeddings, static_cast<int>(i), all_cols);
        const double score = ndcg_at_k(ranked, relevant_positions[i], k);
        report.rows.push_back({eval_nodes[i], node_ids[eval_nodes[i]], score});
        total += score;
    }
    report.scored_count = static_cast<int>(report.rows.size());
    report.mean_ndcg = report.scored_count > 0 ? total / report.scored_count : 0.0;
    return report;
}

EvalReport evaluate(const ModelParams& params, const ArtistGraph& graph, Split eval_split,
                    int k, uint64_t seed) {
    if (k < 1) throw std::invalid_argument("evaluate: k must be >= 1");

    std::vector<int> eval_nodes;
    for (int v = 0; v < graph.node_count; ++v)
        if (graph.split[v] == eval_split) eval_nodes.push_back(v);
    if (eval_nodes.empty()) throw std::invalid_argument("evaluate: eval split is empty");

    const ArtistGraph eval_graph = build_eval_graph(graph, eval_split, seed);

    long reads = 0;
    Matrix embeddings =
        embed_eval_nodes(params, eval_graph, eval_nodes, eval_split, &reads);
    embeddings = l2_normalize_columns(embeddings);

    // Hidden ground truth: full-graph edges between eval-split nodes.
    auto position = [&eval_nodes](int node) {
        return static_cast<int>(
            std::lower_bound(eval_nodes.begin(), eval_nodes.end(), node) - eval_nodes.begin());
    };
    std::vector<std::vector<int>> relevant(eval_nodes.size());
    for (const SparseMatrix::Entry& e : graph.adjacency.entries) {
        if (graph.split[e.row] != eval_split || graph.split[e.col] != eval_split) continue;
        relevant[position(e.col)].push_back(position(e.row));
    }

    EvalReport report = score_embeddings(embeddings, eval_nodes, relevant, graph.node_ids, k);
    report.eval_eval_reads = reads;
    return report;
}

void write_report_json(const std::string& path, const EvalReport& report) {
    nlohmann::json doc;
    doc["mean_ndcg"] = report.mean_ndcg;
    doc["k"] = report.k;
    doc["candidate_count"] = report.candidate_count;
    doc["scored_count"] = report.scored_count;
    doc["eval_eval_reads"] = report.eval_eval_reads;
    doc["metadata"] = nlohmann::json::parse(report.metadata_json);
    nlohmann::json rows = nlohmann::json::array();
    for (const EvalRow& row : report.rows)
        rows.push_back({{"node_id", row.node_id}, {"ndcg", row.ndcg}});
    doc["per_artist"] = rows;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << doc.dump(1, '\t') << "\n";
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "# " << report.metadata_json << "\n";
    out << "node_id,ndcg\n";
    for (const EvalRow& row : report.rows)
        out << row.node_id << "," << format_double(row.ndcg) << "\n";
}

}  // namespace artsim
