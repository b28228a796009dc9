#include "artsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "artsim/common.hpp"
#include "json.hpp"

namespace artsim {

namespace {

using nlohmann::json;

void flatten(const json& node, const std::string& prefix,
             std::vector<std::pair<std::string, double>>& out) {
    if (node.is_number()) {
        out.push_back({prefix, node.get<double>()});
    } else if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (node.is_array()) {
        for (size_t i = 0; i < node.size(); ++i)
            flatten(node[i], prefix.empty() ? std::to_string(i) : prefix + "." + std::to_string(i),
                    out);
    }
    // strings, booleans, nulls are not features
}

}  // namespace

std::vector<std::pair<std::string, double>> parse_feature_record(const std::string& json_text) {
    json doc = json::parse(json_text);  // throws json::parse_error on malformed input
    std::vector<std::pair<std::string, double>> out;
    flatten(doc, "", out);
    return out;
}

std::vector<double> artist_centroid(const std::vector<std::vector<double>>& tracks) {
    if (tracks.empty()) throw std::invalid_argument("artist_centroid: no tracks");
    const size_t dim = tracks.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& t : tracks) {
        if (t.size() != dim)
            throw std::invalid_argument("artist_centroid: track dimensions differ");
        for (size_t i = 0; i < dim; ++i) mean[i] += t[i];
    }
    for (double& v : mean) v /= static_cast<double>(tracks.size());
    return mean;
}

RawFeatureTable build_feature_table(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& artist_tracks,
    std::ostream* log) {
    RawFeatureTable table;
    for (const auto& [artist, tracks] : artist_tracks) {
        std::vector<std::map<std::string, double>> flat;
        for (const std::string& record : tracks) {
            try {
                std::map<std::string, double> fields;
                for (const auto& [name, value] : parse_feature_record(record))
                    fields[name] = value;
                flat.push_back(std::move(fields));
            } catch (const std::exception& e) {
                if (log) *log << "skipping malformed track of " << artist << ": " << e.what()
                              << "\n";
            }
        }
        if (flat.empty()) {
            if (log) *log << "dropping artist " << artist << ": no usable tracks\n";
            continue;
        }
        // Per-field mean over the tracks that all carry the field.
        std::map<std::string, double> centroid;
        for (const auto& [name, value] : flat.front()) {
            bool everywhere = true;
            double sum = 0.0;
            for (const auto& track : flat) {
                auto it = track.find(name);
                if (it == track.end()) {
                    everywhere = false;
                    break;
                }
                sum += it->second;
            }
            (void)value;
            if (everywhere) centroid[name] = sum / static_cast<double>(flat.size());
        }
        table.artist_ids.push_back(artist);
        table.fields.push_back(std::move(centroid));
    }
    return table;
}

StandardizedFeatures standardize_features(const RawFeatureTable& table,
                                          const std::vector<Split>& splits) {
    const size_t n = table.artist_ids.size();
    if (n == 0) throw std::invalid_argument("standardize_features: empty table");
    if (splits.size() != n)
        throw std::invalid_argument("standardize_features: one split per artist required");

    // Fields present for every artist.
    std::set<std::string> common;
    for (const auto& [name, value] : table.fields.front()) {
        (void)value;
        common.insert(name);
    }
    for (const auto& fields : table.fields) {
        for (auto it = common.begin(); it != common.end();)
            it = fields.count(*it) ? std::next(it) : common.erase(it);
    }

    std::vector<int> train_rows;
    for (size_t i = 0; i < n; ++i)
        if (splits[i] == Split::kTrain) train_rows.push_back(static_cast<int>(i));
    if (train_rows.empty())
        throw std::invalid_argument("standardize_features: training split is empty");

    StandardizedFeatures out;
    std::vector<std::pair<double, double>> stats;  // mean, stddev per retained field
    for (const std::string& name : common) {
        double mean = 0.0;
        for (int i : train_rows) mean += table.fields[i].at(name);
        mean /= static_cast<double>(train_rows.size());
        double var = 0.0;
        for (int i : train_rows) {
            const double d = table.fields[i].at(name) - mean;
            var += d * d;
        }
        var /= static_cast<double>(train_rows.size());  // population variance
        const double sd = std::sqrt(var);
        if (sd == 0.0) continue;  // constant within the training split
        out.field_names.push_back(name);
        stats.push_back({mean, sd});
    }
    if (out.field_names.empty())
        throw std::runtime_error("standardize_features: no usable fields after filtering");

    out.features = Matrix(static_cast<int>(out.field_names.size()), static_cast<int>(n));
    for (size_t f = 0; f < out.field_names.size(); ++f)
        for (size_t i = 0; i < n; ++i)
            out.features(static_cast<int>(f), static_cast<int>(i)) =
                (table.fields[i].at(out.field_names[f]) - stats[f].first) / stats[f].second;
    return out;
}

std::vector<Split> split_dataset(int node_count, double train_ratio, double validation_ratio,
                                 double test_ratio, uint64_t seed) {
    if (node_count <= 0) throw std::invalid_argument("split_dataset: empty node set");
    if (std::abs(train_ratio + validation_ratio + test_ratio - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must sum to 1");
    if (train_ratio < 0 || validation_ratio < 0 || test_ratio < 0)
        throw std::invalid_argument("split_dataset: negative ratio");

    const int n_val = static_cast<int>(std::floor(node_count * validation_ratio));
    const int n_test = static_cast<int>(std::floor(node_count * test_ratio));

    std::vector<int> order(node_count);
    for (int i = 0; i < node_count; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Split> splits(node_count, Split::kTrain);
    for (int i = 0; i < n_val; ++i) splits[order[i]] = Split::kValidation;
    for (int i = n_val; i < n_val + n_test; ++i) splits[order[i]] = Split::kTest;
    return splits;
}

Matrix random_features(int node_count, int dim, uint64_t seed) {
    if (node_count <= 0 || dim <= 0)
        throw std::invalid_argument("random_features: dimensions must be positive");
    std::mt19937_64 rng(derive_seed(seed, "random-features"));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix features(dim, node_count);
    for (int v = 0; v < node_count; ++v)
        for (int r = 0; r < dim; ++r) features(r, v) = dist(rng);
    return features;
}

void SyntheticConfig::validate() const {
    if (community_count < 1 || community_size < 2)
        throw std::invalid_argument("SyntheticConfig: need >= 1 community of size >= 2");
    if (!(0.0 <= p_out && p_out < p_in && p_in <= 1.0))
        throw std::invalid_argument("SyntheticConfig: need 0 <= p_out < p_in <= 1");
    if (feature_dim <= 0) throw std::invalid_argument("SyntheticConfig: feature_dim must be > 0");
    if (feature_noise < 0.0)
        throw std::invalid_argument("SyntheticConfig: feature_noise must be >= 0");
}

ArtistGraph generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const int n = config.community_count * config.community_size;

    std::mt19937_64 rng(derive_seed(config.seed, "synthetic"));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    Matrix centroids(config.feature_dim, config.community_count);
    for (double& v : centroids.values) v = unit(rng);

    Matrix features(config.feature_dim, n);
    std::vector<std::string> ids(n);
    for (int v = 0; v < n; ++v) {
        const int community = v / config.community_size;
        ids[v] = "a" + std::to_string(v);
        for (int r = 0; r < config.feature_dim; ++r)
            features(r, v) = centroids(r, community) + config.feature_noise * unit(rng);
    }

    std::vector<EdgeSpec> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            const bool same = u / config.community_size == v / config.community_size;
            if (coin(rng) < (same ? config.p_in : config.p_out))
                edges.push_back({ids[u], ids[v], 1.0});
        }

    std::vector<Split> splits = split_dataset(n, config.train_ratio, config.validation_ratio,
                                              config.test_ratio, config.seed);
    return build_graph(std::move(ids), std::move(features), std::move(splits), edges,
                       config.seed);
}

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace

void write_bundle(const std::string& dir, const ArtistGraph& graph,
                  const std::string& metadata_json) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream nodes(dir + "/nodes.csv");
        if (!nodes) throw std::runtime_error("cannot write " + dir + "/nodes.csv");
        nodes << "id,split";
        for (int r = 0; r < graph.features.rows; ++r) nodes << ",f" << r;
        nodes << "\n";
        for (int v = 0; v < graph.node_count; ++v) {
            nodes << graph.node_ids[v] << "," << split_name(graph.split[v]);
            for (int r = 0; r < graph.features.rows; ++r)
                nodes << "," << format_double(graph.features(r, v));
            nodes << "\n";
        }
    }
    {
        std::ofstream edges(dir + "/edges.csv");
        if (!edges) throw std::runtime_error("cannot write " + dir + "/edges.csv");
        edges << "a,b,weight\n";
        for (const Edge& e : all_edges(graph)) {
            edges << graph.node_ids[e.u] << "," << graph.node_ids[e.v] << ",";
            if (graph.weighted) edges << format_double(e.weight);
            edges << "\n";
        }
    }

    json manifest;
    manifest["format"] = "artsim-bundle";
    manifest["version"] = 1;
    manifest["node_count"] = graph.node_count;
    manifest["feature_dim"] = graph.features.rows;
    manifest["weighted"] = graph.weighted;
    manifest["standardization"] = "population";
    manifest["metadata"] = json::parse(metadata_json);
    manifest["checksums"] = {{"nodes.csv", to_hex(fnv1a64(file_bytes(dir + "/nodes.csv")))},
                             {"edges.csv", to_hex(fnv1a64(file_bytes(dir + "/edges.csv")))}};
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/manifest.json");
    out << manifest.dump(1, '\t') << "\n";
}

ArtistGraph read_bundle(const std::string& dir, uint64_t seed) {
    json manifest = json::parse(file_bytes(dir + "/manifest.json"));
    if (manifest.value("format", "") != "artsim-bundle")
        throw std::runtime_error(dir + "/manifest.json is not a bundle manifest");
    if (manifest.value("version", -1) != 1)
        throw std::runtime_error("unsupported bundle version in " + dir);

    for (const char* name : {"nodes.csv", "edges.csv"}) {
        const std::string want = manifest.at("checksums").at(name).get<std::string>();
        const std::string got = to_hex(fnv1a64(file_bytes(dir + "/" + name)));
        if (want != got)
            throw std::runtime_error(std::string("checksum mismatch for ") + name + " in " + dir);
    }

    const int node_count = manifest.at("node_count").get<int>();
    const int feature_dim = manifest.at("feature_dim").get<int>();

    std::vector<std::string> ids;
    std::vector<Split> splits;
    Matrix features(feature_dim, node_count);
    {
        std::ifstream in(dir + "/nodes.csv");
        std::string line;
        std::getline(in, line);  // header
        int v = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> fields = split_csv_line(line);
            if (static_cast<int>(fields.size()) != feature_dim + 2)
                throw std::runtime_error("nodes.csv row has wrong column count in " + dir);
            if (v >= node_count) throw std::runtime_error("nodes.csv has extra rows in " + dir);
            ids.push_back(fields[0]);
            splits.push_back(split_from_name(fields[1]));
            for (int r = 0; r < feature_dim; ++r) features(r, v) = std::stod(fields[r + 2]);
            ++v;
        }
        if (v != node_count) throw std::runtime_error("nodes.csv is missing rows in " + dir);
    }

    std::vector<EdgeSpec> edges;
    {
        std::ifstream in(dir + "/edges.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> fields = split_csv_line(line);
            if (fields.size() != 3) throw std::runtime_error("edges.csv row malformed in " + dir);
            EdgeSpec e;
            e.a = fields[0];
            e.b = fields[1];
            if (!fields[2].empty()) e.weight = std::stod(fields[2]);
            edges.push_back(std::move(e));
        }
    }

    return build_graph(std::move(ids), std::move(features), std::move(splits), edges, seed);
}

std::string bundle_fingerprint(const std::string& dir) {
    uint64_t h = fnv1a64(file_bytes(dir + "/manifest.json"));
    h = fnv1a64(file_bytes(dir + "/nodes.csv"), h);
    h = fnv1a64(file_bytes(dir + "/edges.csv"), h);
    return to_hex(h);
}

}  // namespace artsim
