#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artsim/graph.hpp"
#include "artsim/matrix.hpp"
#include "artsim/model.hpp"

namespace artsim {

struct EvalRow {
    int node = 0;
    std::string node_id;
    double ndcg = 0.0;
};

struct EvalReport {
    // Scored artists only (>= 1 hidden relation), ascending node index.
    std::vector<EvalRow> rows;
    double mean_ndcg = 0.0;
    int k = 0;
    int candidate_count = 0;
    int scored_count = 0;
    // Count of eval-eval source/target pairs seen in trace slices; stays 0.
    long eval_eval_reads = 0;
    // Caller-supplied JSON blob (seed, fingerprints) copied into reports.
    std::string metadata_json = "{}";
};

// Candidate columns minus the query, by ascending distance to the query
// column; ties by ascending column index. Embeddings must be l2-normalized.
std::vector<int> rank_candidates(const Matrix& embeddings, int query_col,
                                 const std::vector<int>& candidate_cols);

// DCG/IDCG with gain 1 on relevant items and discount 1/log2(rank+1); the
// ideal list stacks min(|relevant|, k) relevant items on top. Empty relevant
// set scores 0 (callers exclude such artists from means).
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k);

// Embeds `eval_nodes` (sorted ascending) over the eval graph in chunks,
// counting eval-eval slice reads into *eval_eval_reads if given. Output is
// NOT normalized.
Matrix embed_eval_nodes(const ModelParams& params, const ArtistGraph& eval_graph,
                        const std::vector<int>& eval_nodes, Split eval_split,
                        long* eval_eval_reads = nullptr);

// Scores normalized embedding columns; relevant_positions[i] lists column
// positions relevant to column i. Artists with no relevant entries are
// skipped.
EvalReport score_embeddings(const Matrix& normalized_embeddings,
                            const std::vector<int>& eval_nodes,
                            const std::vector<std::vector<int>>& relevant_positions,
                            const std::vector<std::string>& node_ids, int k);

// Full protocol: eval-graph extension, chunked embedding, l2 normalization,
// exhaustive ranking of eval candidates, NDCG@k against hidden eval-eval
// relations of the original graph.
EvalReport evaluate(const ModelParams& params, const ArtistGraph& graph, Split eval_split,
                    int k = 200, uint64_t seed = 0);

void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

}  // namespace artsim
