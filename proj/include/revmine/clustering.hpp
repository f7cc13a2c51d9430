#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "revmine/corpus.hpp"
#include "revmine/embedding.hpp"

namespace revmine {

inline constexpr int kNoise = -1;

struct ClusterAssignment {
    // Same length and order as the input vectors; values in 1..k or kNoise.
    std::vector<int> labels;
    int k = 0;
    std::uint64_t seed = 0;

    bool operator==(const ClusterAssignment&) const = default;
};

enum class ClusterMethod { kmeans, density };

struct ClusterOptions {
    ClusterMethod method = ClusterMethod::kmeans;
    int max_iterations = 100;
    // density mode: neighbourhood radius in cosine distance and core size.
    double density_radius = 0.35;
    int density_min_points = 3;
};

ClusterMethod parse_cluster_method(const std::string& name);
std::string to_string(ClusterMethod method);

/// Spherical k-means with k-means++ seeding, or radius-based density
/// clustering. Deterministic in (vectors, k, seed). Empty clusters are
/// dropped and the surviving ids renumbered 1..k' in their original order.
ClusterAssignment cluster(std::span<const EmbeddingVector> vectors, int k, std::uint64_t seed,
                          const ClusterOptions& options = {});

struct ClusterRank {
    int cluster_id = 0;
    std::size_t size = 0;
    bool operator==(const ClusterRank&) const = default;
};

/// Sorted by size descending, ties by ascending cluster id; noise excluded.
std::vector<ClusterRank> rank_clusters(const ClusterAssignment& assignment);

struct RepresentativeChoice {
    std::size_t index = 0;
    double similarity = 0.0;
};

/// Member whose embedding has the largest cosine similarity to the
/// arithmetic mean of the raw member embeddings. Ties go to the lowest index.
///
/// `members` are indices into `vectors`. Throws ZeroNormCentroid when the
/// mean has zero norm.
template <typename Scalar>
RepresentativeChoice representative(std::span<const std::size_t> members,
                                    std::span<const Embedding<Scalar>> vectors) {
    if (members.empty()) throw ZeroNormCentroid("representative: empty cluster");
    Embedding<Scalar> centroid = Embedding<Scalar>::Zero(vectors[members.front()].size());
    for (auto i : members) {
        if (vectors[i].size() != centroid.size())
            throw DimensionMismatch("representative: mixed dimensions in cluster");
        centroid += vectors[i];
    }
    centroid /= static_cast<Scalar>(members.size());
    if (!(centroid.norm() > Scalar(0))) throw ZeroNormCentroid("representative: centroid has zero norm");

    RepresentativeChoice best{std::numeric_limits<std::size_t>::max(),
                              -std::numeric_limits<double>::infinity()};
    for (auto i : members) {
        const double sim = static_cast<double>(cosine_similarity(vectors[i], centroid));
        if (sim > best.similarity || (sim == best.similarity && i < best.index)) best = {i, sim};
    }
    return best;
}

/// Overload over explicit (index, vector) pairs; the returned index is the
/// caller's index.
template <typename Scalar>
RepresentativeChoice representative(std::span<const std::pair<std::size_t, Embedding<Scalar>>> members) {
    std::vector<std::size_t> positions(members.size());
    for (std::size_t p = 0; p < positions.size(); ++p) positions[p] = p;
    // Visit in caller-index order so the positional tie-break matches it.
    std::sort(positions.begin(), positions.end(),
              [&](std::size_t a, std::size_t b) { return members[a].first < members[b].first; });
    std::vector<Embedding<Scalar>> ordered;
    ordered.reserve(members.size());
    for (auto p : positions) ordered.push_back(members[p].second);
    std::vector<std::size_t> seq(ordered.size());
    for (std::size_t p = 0; p < seq.size(); ++p) seq[p] = p;
    auto choice = representative<Scalar>(std::span<const std::size_t>(seq),
                                         std::span<const Embedding<Scalar>>(ordered));
    return {members[positions[choice.index]].first, choice.similarity};
}

struct RepresentativeEntry {
    int cluster_id = 0;
    std::string review_id;
    std::string review_text;
    std::size_t cluster_size = 0;
    double similarity_to_centroid = 0.0;

    bool operator==(const RepresentativeEntry&) const = default;
};

struct RepresentativeSet {
    std::vector<RepresentativeEntry> entries;
    int m = 0;
    // Clusters passed over because their centroid had zero norm.
    std::vector<int> skipped_clusters;

    bool operator==(const RepresentativeSet&) const = default;
};

/// Top-m clusters by size, one representative each. Degenerate clusters are
/// replaced by the next-ranked cluster.
RepresentativeSet select_top_m(const Corpus& corpus, const ClusterAssignment& assignment,
                               std::span<const EmbeddingVector> vectors, int m);

Json to_json(const ClusterAssignment& assignment, ClusterMethod method);
ClusterAssignment cluster_assignment_from_json(const Json& j);
Json to_json(const RepresentativeSet& set);
RepresentativeSet representative_set_from_json(const Json& j);

}  // namespace revmine
