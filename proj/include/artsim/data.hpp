#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "artsim/graph.hpp"
#include "artsim/matrix.hpp"

namespace artsim {

// Depth-first flattening of a nested JSON record: numeric leaves only,
// names derived from the key/index path ("b.c.0"). Malformed JSON throws.
std::vector<std::pair<std::string, double>> parse_feature_record(const std::string& json_text);

// Elementwise mean of equally sized track vectors; empty input throws.
std::vector<double> artist_centroid(const std::vector<std::vector<double>>& tracks);

struct RawFeatureTable {
    std::vector<std::string> artist_ids;
    std::vector<std::map<std::string, double>> fields;  // parallel to artist_ids
};

// Flattens every track record per artist and stores per-field track means.
// A field missing from any track of an artist is missing for that artist.
// Malformed tracks and trackless artists are skipped with a log line.
RawFeatureTable build_feature_table(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& artist_tracks,
    std::ostream* log = nullptr);

struct StandardizedFeatures {
    Matrix features;                       // D x V, field-major rows
    std::vector<std::string> field_names;  // retained fields, sorted
};

// Drops fields missing for any artist, standardizes the rest to zero mean
// and unit variance using population statistics of the training split only,
// and drops fields constant within that split. No retained fields -> error.
StandardizedFeatures standardize_features(const RawFeatureTable& table,
                                          const std::vector<Split>& splits);

// Uniform random partition; validation and test sizes are floor(n * ratio),
// the training split absorbs the remainder.
std::vector<Split> split_dataset(int node_count, double train_ratio, double validation_ratio,
                                 double test_ratio, uint64_t seed);

// Per-node uniform [-1, 1] vectors, fixed under seed.
Matrix random_features(int node_count, int dim, uint64_t seed);

// Planted-partition stand-in for the artist graph: block-constant centroids
// plus per-node noise, unit edge weights.
struct SyntheticConfig {
    int community_count = 2;
    int community_size = 2;
    double p_in = 1.0;
    double p_out = 0.0;
    int feature_dim = 2;
    double feature_noise = 0.0;
    double train_ratio = 0.8;
    double validation_ratio = 0.1;
    double test_ratio = 0.1;
    uint64_t seed = 0;

    void validate() const;
};

ArtistGraph generate_synthetic(const SyntheticConfig& config);

// Dataset bundle: nodes.csv (id,split,features...), edges.csv (a,b,weight),
// manifest.json with dimensions and FNV-1a checksums of both files.
void write_bundle(const std::string& dir, const ArtistGraph& graph,
                  const std::string& metadata_json = "{}");
// Verifies checksums, rebuilds the graph; `seed` drives random pruning of
// unweighted graphs (weighted pruning is deterministic).
ArtistGraph read_bundle(const std::string& dir, uint64_t seed);
// Combined content hash of the bundle files, for report provenance.
std::string bundle_fingerprint(const std::string& dir);

}  // namespace artsim
