#pragma once

#include <optional>
#include <random>
#include <vector>

#include "artsim/graph.hpp"
#include "artsim/matrix.hpp"
#include "artsim/tape.hpp"

namespace artsim {

// Pairwise distances are clipped into [kDistanceClip, 2 - kDistanceClip]
// before density weighting.
inline constexpr double kDistanceClip = 0.01;
// Per-anchor weight cap: lambda = kWeightClipFactor * median candidate weight.
inline constexpr double kWeightClipFactor = 100.0;

// Uniform draw from the anchor's pruned neighbor list; empty list -> nullopt.
std::optional<int> sample_positive(const ArtistGraph& g, int anchor, std::mt19937_64& rng);

// Pool members that can serve as negatives for the anchor: not the anchor
// itself and not adjacent to it in the graph's full (unpruned) adjacency.
std::vector<int> eligible_negatives(const ArtistGraph& g, int anchor,
                                    const std::vector<int>& pool);

// log of q(d)^{-1} up to an additive constant, where q is the density of
// pairwise distances between uniform points on the unit (dim-1)-sphere:
// q(d) proportional to d^(dim-2) * (1 - d^2/4)^((dim-3)/2).
double log_inverse_distance_density(double d, int dim);

// Distance-weighted negative selection over embedding columns: candidate j
// drawn with probability proportional to min(lambda, q(d_j)^{-1}), computed
// in log space so dim ~ 100 cannot overflow. Returns the chosen element of
// candidate_cols; empty candidate list -> nullopt.
std::optional<int> distance_weighted_negative(const Matrix& embeddings, int anchor_col,
                                              const std::vector<int>& candidate_cols,
                                              std::mt19937_64& rng);

// Per-candidate selection probabilities of distance_weighted_negative, for
// statistical verification.
std::vector<double> negative_selection_probabilities(const Matrix& embeddings, int anchor_col,
                                                     const std::vector<int>& candidate_cols);

// [d(a,p) - d(a,n) + margin]_+ over column vectors, inputs l2-normalized.
double triplet_loss(const Matrix& anchor, const Matrix& positive, const Matrix& negative,
                    double margin);

}  // namespace artsim
