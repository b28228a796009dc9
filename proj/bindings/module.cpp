#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "artsim/data.hpp"
#include "artsim/eval.hpp"
#include "artsim/graph.hpp"
#include "artsim/model.hpp"
#include "artsim/training.hpp"

namespace py = pybind11;
using namespace artsim;

namespace {

// Row-major nested lists keep the binding dependency-free; matrices here are
// small enough that copying is fine.
std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) rows[r][c] = m(r, c);
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "artist similarity embedding core";

    py::enum_<Split>(m, "Split")
        .value("TRAIN", Split::kTrain)
        .value("VALIDATION", Split::kValidation)
        .value("TEST", Split::kTest);

    py::class_<SyntheticConfig>(m, "SyntheticConfig")
        .def(py::init<>())
        .def_readwrite("community_count", &SyntheticConfig::community_count)
        .def_readwrite("community_size", &SyntheticConfig::community_size)
        .def_readwrite("p_in", &SyntheticConfig::p_in)
        .def_readwrite("p_out", &SyntheticConfig::p_out)
        .def_readwrite("feature_dim", &SyntheticConfig::feature_dim)
        .def_readwrite("feature_noise", &SyntheticConfig::feature_noise)
        .def_readwrite("train_ratio", &SyntheticConfig::train_ratio)
        .def_readwrite("validation_ratio", &SyntheticConfig::validation_ratio)
        .def_readwrite("test_ratio", &SyntheticConfig::test_ratio)
        .def_readwrite("seed", &SyntheticConfig::seed);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("gc_layers", &ModelConfig::gc_layers)
        .def_readwrite("gc_width", &ModelConfig::gc_width)
        .def_readwrite("backend_width1", &ModelConfig::backend_width1)
        .def_readwrite("backend_width2", &ModelConfig::backend_width2)
        .def_readwrite("output_dim", &ModelConfig::output_dim)
        .def_readwrite("input_dim", &ModelConfig::input_dim);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("warmup_epochs", &TrainConfig::warmup_epochs)
        .def_readwrite("base_lr", &TrainConfig::base_lr)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("margin", &TrainConfig::margin)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<ArtistGraph>(m, "ArtistGraph")
        .def_readonly("node_count", &ArtistGraph::node_count)
        .def_readonly("node_ids", &ArtistGraph::node_ids)
        .def_readonly("weighted", &ArtistGraph::weighted)
        .def_property_readonly("splits",
                               [](const ArtistGraph& g) {
                                   std::vector<std::string> names;
                                   names.reserve(g.split.size());
                                   for (Split s : g.split) names.push_back(split_name(s));
                                   return names;
                               })
        .def_property_readonly(
            "features", [](const ArtistGraph& g) { return matrix_to_rows(g.features); })
        .def("edge_count",
             [](const ArtistGraph& g) { return all_edges(g).size(); })
        .def("two_hop_coverage",
             [](const ArtistGraph& g) { return two_hop_coverage(g, all_edges(g)); });

    py::class_<ModelParams>(m, "ModelParams")
        .def_property_readonly("config",
                               [](const ModelParams& p) { return p.config; });

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("epoch_loss", &TrainResult::epoch_loss)
        .def_readonly("epoch_lr", &TrainResult::epoch_lr)
        .def_readonly("total_triplets", &TrainResult::total_triplets)
        .def_readonly("skipped_anchors", &TrainResult::skipped_anchors)
        .def_property_readonly("params",
                               [](const TrainResult& r) { return r.params; });

    py::class_<EvalRow>(m, "EvalRow")
        .def_readonly("node", &EvalRow::node)
        .def_readonly("node_id", &EvalRow::node_id)
        .def_readonly("ndcg", &EvalRow::ndcg);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("rows", &EvalReport::rows)
        .def_readonly("mean_ndcg", &EvalReport::mean_ndcg)
        .def_readonly("k", &EvalReport::k)
        .def_readonly("candidate_count", &EvalReport::candidate_count)
        .def_readonly("scored_count", &EvalReport::scored_count)
        .def_readonly("eval_eval_reads", &EvalReport::eval_eval_reads);

    m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
    m.def("write_bundle", &write_bundle, py::arg("dir"), py::arg("graph"),
          py::arg("metadata_json") = "{}");
    m.def("read_bundle", &read_bundle, py::arg("dir"), py::arg("seed"));
    m.def("bundle_fingerprint", &bundle_fingerprint, py::arg("dir"));

    m.def("init_params", &init_params, py::arg("config"), py::arg("seed"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("params"),
          py::arg("metadata_json") = "{}");
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("checkpoint_metadata", &checkpoint_metadata, py::arg("path"));

    m.def(
        "train",
        [](const ArtistGraph& graph, const ModelConfig& model, const TrainConfig& config) {
            return train(graph, model, config, nullptr);
        },
        py::arg("graph"), py::arg("model"), py::arg("config"));

    m.def(
        "evaluate",
        [](const ModelParams& params, const ArtistGraph& graph, const std::string& split,
           int k, uint64_t seed) {
            return evaluate(params, graph, split_from_name(split), k, seed);
        },
        py::arg("params"), py::arg("graph"), py::arg("split"), py::arg("k") = 200,
        py::arg("seed") = 0);

    m.def(
        "embed",
        [](const ModelParams& params, const ArtistGraph& graph, std::vector<int> nodes) {
            std::sort(nodes.begin(), nodes.end());
            Matrix em = embed_eval_nodes(params, graph, nodes, Split::kTrain, nullptr);
            return matrix_to_rows(l2_normalize_columns(em));
        },
        py::arg("params"), py::arg("graph"), py::arg("nodes"),
        "L2-normalized embedding columns for the given nodes, sorted ascending.");

    m.def("ndcg_at_k", &ndcg_at_k, py::arg("ranked"), py::arg("relevant"), py::arg("k"));
}
