#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "artsim/common.hpp"
#include "artsim/data.hpp"
#include "artsim/eval.hpp"
#include "artsim/graph.hpp"
#include "artsim/model.hpp"
#include "artsim/training.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

// Fully resolved invocation: defaults, then config file, then flags.
struct RunConfig {
    std::string command;
    std::string dataset;
    std::string checkpoint;
    std::string out;
    std::string split = "validation";
    std::string features = "real";
    int random_dim = 0;  // 0 adopts the bundle's feature dimension
    int k = 200;
    uint64_t seed = 1;

    int gc_layers = 3;
    int gc_width = 256;
    int backend_width1 = 256;
    int backend_width2 = 256;
    int output_dim = 100;

    int epochs = 50;
    int warmup_epochs = 1;
    double base_lr = 1e-3;
    int batch_size = 64;
    double margin = 0.2;

    int communities = 2;
    int community_size = 50;
    double p_in = 0.3;
    double p_out = 0.005;
    int feature_dim = 8;
    double feature_noise = 0.0;
    double train_ratio = 0.8;
    double validation_ratio = 0.1;
    double test_ratio = 0.1;
};

json config_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["dataset"] = c.dataset;
    j["checkpoint"] = c.checkpoint;
    j["out"] = c.out;
    j["split"] = c.split;
    j["features"] = c.features;
    j["random_dim"] = c.random_dim;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["gc_layers"] = c.gc_layers;
    j["gc_width"] = c.gc_width;
    j["backend_width1"] = c.backend_width1;
    j["backend_width2"] = c.backend_width2;
    j["output_dim"] = c.output_dim;
    j["epochs"] = c.epochs;
    j["warmup_epochs"] = c.warmup_epochs;
    j["base_lr"] = c.base_lr;
    j["batch_size"] = c.batch_size;
    j["margin"] = c.margin;
    j["communities"] = c.communities;
    j["community_size"] = c.community_size;
    j["p_in"] = c.p_in;
    j["p_out"] = c.p_out;
    j["feature_dim"] = c.feature_dim;
    j["feature_noise"] = c.feature_noise;
    j["train_ratio"] = c.train_ratio;
    j["validation_ratio"] = c.validation_ratio;
    j["test_ratio"] = c.test_ratio;
    return j;
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return artsim::to_hex(artsim::fnv1a64(buffer.str()));
}

// Seed, input hash, and resolved-config hash stamped into every artifact.
// Paths are excluded from the fingerprint: input identity comes from the
// bundle and checkpoint hashes, so relocating a run does not change it.
json run_metadata(const RunConfig& c) {
    json fingerprinted = config_json(c);
    fingerprinted.erase("dataset");
    fingerprinted.erase("checkpoint");
    fingerprinted.erase("out");

    json meta;
    meta["command"] = c.command;
    meta["seed"] = c.seed;
    meta["config_fingerprint"] = artsim::to_hex(artsim::fnv1a64(fingerprinted.dump()));
    if (!c.dataset.empty()) meta["bundle_fingerprint"] = artsim::bundle_fingerprint(c.dataset);
    if (!c.checkpoint.empty()) meta["checkpoint_fingerprint"] = file_fingerprint(c.checkpoint);
    return meta;
}

// Swaps in reproducible random features when a run (or the checkpoint that
// produced it) asked for them.
void apply_random_features(artsim::ArtistGraph& graph, int dim, uint64_t feature_seed) {
    const int d = dim > 0 ? dim : graph.features.rows;
    graph.features = artsim::random_features(graph.node_count, d, feature_seed);
}

int run_train(const RunConfig& c) {
    artsim::ArtistGraph graph = artsim::read_bundle(c.dataset, c.seed);
    if (c.features == "random") apply_random_features(graph, c.random_dim, c.seed);

    artsim::ModelConfig model;
    model.gc_layers = c.gc_layers;
    model.gc_width = c.gc_width;
    model.backend_width1 = c.backend_width1;
    model.backend_width2 = c.backend_width2;
    model.output_dim = c.output_dim;
    model.input_dim = graph.features.rows;
    model.validate();

    artsim::TrainConfig train;
    train.epochs = c.epochs;
    train.warmup_epochs = c.warmup_epochs;
    train.base_lr = c.base_lr;
    train.batch_size = c.batch_size;
    train.margin = c.margin;
    train.seed = c.seed;

    json meta = run_metadata(c);
    meta["features"] = c.features;
    meta["feature_dim"] = model.input_dim;
    meta["feature_seed"] = c.seed;

    std::filesystem::create_directories(c.out);
    std::ofstream log(c.out + "/train_log.csv");
    if (!log) throw std::runtime_error("cannot write " + c.out + "/train_log.csv");
    log << "# " << meta.dump() << "\n";
    log << "epoch,mean_loss,lr\n";

    artsim::TrainResult result = artsim::train(graph, model, train, &log);

    artsim::save_checkpoint(c.out + "/checkpoint.json", result.params, meta.dump());
    {
        json run;
        run["config"] = config_json(c);
        run["metadata"] = meta;
        std::ofstream out(c.out + "/run.json");
        out << run.dump(1, '\t') << "\n";
    }

    std::cout << "trained " << c.gc_layers << " gc layer(s), " << c.epochs << " epoch(s), "
              << result.total_triplets << " triplets" << "\n";
    std::cout << "final epoch loss " << artsim::format_double(result.epoch_loss.back()) << "\n";
    std::cout << "wrote " << c.out << "/checkpoint.json" << "\n";
    return 0;
}

// Rebuilds the feature matrix the checkpoint was trained on, then checks
// the dimensions actually agree.
artsim::ModelParams load_for_inference(const RunConfig& c, artsim::ArtistGraph& graph) {
    artsim::ModelParams params = artsim::load_checkpoint(c.checkpoint);
    json meta = json::parse(artsim::checkpoint_metadata(c.checkpoint));
    if (meta.value("features", "real") == "random")
        apply_random_features(graph, meta.value("feature_dim", 0),
                              meta.value("feature_seed", uint64_t{0}));
    if (params.config.input_dim != graph.features.rows)
        throw std::runtime_error(
            "checkpoint expects input dimension " + std::to_string(params.config.input_dim) +
            ", dataset provides " + std::to_string(graph.features.rows));
    return params;
}

int run_evaluate(const RunConfig& c) {
    artsim::ArtistGraph graph = artsim::read_bundle(c.dataset, c.seed);
    artsim::ModelParams params = load_for_inference(c, graph);

    artsim::EvalReport report =
        artsim::evaluate(params, graph, artsim::split_from_name(c.split), c.k, c.seed);

    json meta = run_metadata(c);
    meta["split"] = c.split;
    meta["k"] = c.k;
    report.metadata_json = meta.dump();

    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        artsim::write_report_json(c.out + "/report.json", report);
        artsim::write_report_csv(c.out + "/report.csv", report);
    }

    std::cout << "candidates " << report.candidate_count << ", scored " << report.scored_count
              << "\n";
    std::cout << "mean ndcg@" << report.k << " = " << artsim::format_double(report.mean_ndcg)
              << "\n";
    return 0;
}

int run_embed(const RunConfig& c) {
    artsim::ArtistGraph graph = artsim::read_bundle(c.dataset, c.seed);
    artsim::ModelParams params = load_for_inference(c, graph);

    std::vector<int> nodes;
    for (int v = 0; v < graph.node_count; ++v)
        if (c.split == "all" || graph.split[v] == artsim::split_from_name(c.split))
            nodes.push_back(v);
    if (nodes.empty()) throw std::runtime_error("no nodes in split " + c.split);

    artsim::Matrix embeddings =
        artsim::embed_eval_nodes(params, graph, nodes, artsim::Split::kTrain, nullptr);
    embeddings = artsim::l2_normalize_columns(embeddings);

    json meta = run_metadata(c);
    meta["split"] = c.split;

    const std::filesystem::path parent = std::filesystem::path(c.out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(c.out);
    if (!out) throw std::runtime_error("cannot write " + c.out);
    out << "# " << meta.dump() << "\n";
    out << "node_id";
    for (int r = 0; r < embeddings.rows; ++r) out << ",e" << r;
    out << "\n";
    for (size_t i = 0; i < nodes.size(); ++i) {
        out << graph.node_ids[nodes[i]];
        for (int r = 0; r < embeddings.rows; ++r)
            out << "," << artsim::format_double(embeddings(r, static_cast<int>(i)));
        out << "\n";
    }

    std::cout << "wrote " << nodes.size() << " embeddings to " << c.out << "\n";
    return 0;
}

int run_synth(const RunConfig& c) {
    artsim::SyntheticConfig synth;
    synth.community_count = c.communities;
    synth.community_size = c.community_size;
    synth.p_in = c.p_in;
    synth.p_out = c.p_out;
    synth.feature_dim = c.feature_dim;
    synth.feature_noise = c.feature_noise;
    synth.train_ratio = c.train_ratio;
    synth.validation_ratio = c.validation_ratio;
    synth.test_ratio = c.test_ratio;
    synth.seed = c.seed;

    artsim::ArtistGraph graph = artsim::generate_synthetic(synth);

    json meta = run_metadata(c);
    meta["generator"] = {{"communities", c.communities},
                         {"community_size", c.community_size},
                         {"p_in", c.p_in},
                         {"p_out", c.p_out},
                         {"feature_dim", c.feature_dim},
                         {"feature_noise", c.feature_noise}};
    artsim::write_bundle(c.out, graph, meta.dump());

    std::cout << "wrote bundle " << c.out << " (" << graph.node_count << " nodes, "
              << artsim::all_edges(graph).size() << " edges)" << "\n";
    std::cout << "fingerprint " << artsim::bundle_fingerprint(c.out) << "\n";
    return 0;
}

int run_stats(const RunConfig& c) {
    artsim::ArtistGraph graph = artsim::read_bundle(c.dataset, c.seed);
    const std::vector<artsim::Edge> edges = artsim::all_edges(graph);

    std::vector<int> degree(graph.node_count, 0);
    for (const artsim::SparseMatrix::Entry& e : graph.adjacency.entries) ++degree[e.col];
    int min_degree = graph.node_count > 0 ? degree[0] : 0;
    int max_degree = 0;
    long degree_sum = 0;
    for (int d : degree) {
        min_degree = std::min(min_degree, d);
        max_degree = std::max(max_degree, d);
        degree_sum += d;
    }
    long kept_sum = 0;
    for (const auto& kept : graph.kept) kept_sum += static_cast<long>(kept.size());

    int train = 0, validation = 0, test = 0;
    for (artsim::Split s : graph.split) {
        if (s == artsim::Split::kTrain) ++train;
        if (s == artsim::Split::kValidation) ++validation;
        if (s == artsim::Split::kTest) ++test;
    }
    const double two_hop = artsim::two_hop_coverage(graph, edges);

    json stats;
    stats["nodes"] = graph.node_count;
    stats["edges"] = edges.size();
    stats["weighted"] = graph.weighted;
    stats["feature_dim"] = graph.features.rows;
    stats["splits"] = {{"train", train}, {"validation", validation}, {"test", test}};
    stats["degree"] = {{"min", min_degree},
                       {"max", max_degree},
                       {"mean", static_cast<double>(degree_sum) / graph.node_count}};
    stats["kept_degree_mean"] = static_cast<double>(kept_sum) / graph.node_count;
    stats["two_hop_coverage"] = two_hop;

    std::cout << "nodes " << graph.node_count << "\n";
    std::cout << "edges " << edges.size() << (graph.weighted ? " (weighted)" : " (unweighted)")
              << "\n";
    std::cout << "features " << graph.features.rows << "\n";
    std::cout << "splits train=" << train << " validation=" << validation << " test=" << test
              << "\n";
    std::cout << "degree min=" << min_degree << " mean="
              << artsim::format_double(static_cast<double>(degree_sum) / graph.node_count)
              << " max=" << max_degree << "\n";
    std::cout << "two-hop coverage " << artsim::format_double(two_hop) << "\n";

    if (!c.out.empty()) {
        json doc;
        doc["metadata"] = run_metadata(c);
        doc["stats"] = stats;
        const std::filesystem::path parent = std::filesystem::path(c.out).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        std::ofstream out(c.out);
        if (!out) throw std::runtime_error("cannot write " + c.out);
        out << doc.dump(1, '\t') << "\n";
        std::cout << "wrote " << c.out << "\n";
    }
    return 0;
}

void add_model_options(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--gc-layers", c.gc_layers, "graph convolution layers (0 = plain DNN)")
        ->check(CLI::Range(0, 8))
        ->capture_default_str();
    cmd->add_option("--gc-width", c.gc_width)->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--backend-width1", c.backend_width1)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--backend-width2", c.backend_width2)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--output-dim", c.output_dim)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("ARTSIM_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || n < 1) {
            std::cerr << "error: ARTSIM_THREADS must be a positive integer" << "\n";
            return 1;
        }
        Eigen::setNbThreads(static_cast<int>(n));
    }

    RunConfig c;
    CLI::App app{"artist similarity embeddings: train, evaluate, and inspect"};
    app.require_subcommand(1);
    app.fallthrough(true);
    app.set_config("--config", "",
                   "key=value file; options live in a [subcommand] section; command-line flags "
                   "override file values");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CLI::App* train = app.add_subcommand("train", "Train an embedding model on a bundle");
    train->add_option("--dataset", c.dataset, "bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    train->add_option("--out", c.out, "output directory")->required();
    train->add_option("--features", c.features, "feature source")
        ->check(CLI::IsMember({"real", "random"}))
        ->capture_default_str();
    train->add_option("--random-dim", c.random_dim, "random feature dimension (0 = bundle dim)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    add_model_options(train, c);
    train->add_option("--epochs", c.epochs)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--warmup-epochs", c.warmup_epochs)
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train->add_option("--base-lr", c.base_lr)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch-size", c.batch_size)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--margin", c.margin)->check(CLI::NonNegativeNumber)->capture_default_str();
    train->add_option("--seed", c.seed)->capture_default_str();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a held-out split");
    evaluate->add_option("--dataset", c.dataset, "bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    evaluate->add_option("--checkpoint", c.checkpoint)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--split", c.split, "held-out split to score")
        ->check(CLI::IsMember({"validation", "test"}))
        ->capture_default_str();
    evaluate->add_option("--k", c.k, "ranking cutoff")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    evaluate->add_option("--out", c.out, "report directory (optional)");
    evaluate->add_option("--seed", c.seed)->capture_default_str();

    CLI::App* embed = app.add_subcommand("embed", "Write embeddings for graph nodes");
    embed->add_option("--dataset", c.dataset, "bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    embed->add_option("--checkpoint", c.checkpoint)->required()->check(CLI::ExistingFile);
    embed->add_option("--split", c.split, "which nodes to embed")
        ->check(CLI::IsMember({"all", "train", "validation", "test"}));
    embed->add_option("--out", c.out, "output csv path")->required();
    embed->add_option("--seed", c.seed)->capture_default_str();

    CLI::App* synth = app.add_subcommand("synth", "Generate a planted-partition bundle");
    synth->add_option("--out", c.out, "bundle directory")->required();
    synth->add_option("--communities", c.communities)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--community-size", c.community_size)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--p-in", c.p_in, "within-community edge probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--p-out", c.p_out, "between-community edge probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--feature-dim", c.feature_dim)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--feature-noise", c.feature_noise)
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    synth->add_option("--train-ratio", c.train_ratio)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--validation-ratio", c.validation_ratio)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--test-ratio", c.test_ratio)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--seed", c.seed)->capture_default_str();

    CLI::App* stats = app.add_subcommand("stats", "Print statistics for a bundle");
    stats->add_option("--dataset", c.dataset, "bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    stats->add_option("--out", c.out, "stats json path (optional)");
    stats->add_option("--seed", c.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            c.command = "train";
            return run_train(c);
        }
        if (*evaluate) {
            c.command = "evaluate";
            return run_evaluate(c);
        }
        if (*embed) {
            c.command = "embed";
            if (embed->count("--split") == 0) c.split = "all";
            return run_embed(c);
        }
        if (*synth) {
            c.command = "synth";
            return run_synth(c);
        }
        if (*stats) {
            c.command = "stats";
            return run_stats(c);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
