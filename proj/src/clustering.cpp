#include "revmine/clustering.hpp"

#include <map>
#include <numeric>
#include <random>

namespace revmine {

ClusterMethod parse_cluster_method(const std::string& name) {
    if (name == "kmeans" || name == "spherical-kmeans") return ClusterMethod::kmeans;
    if (name == "density") return ClusterMethod::density;
    throw InvalidConfig("unknown clustering method '" + name + "'");
}

std::string to_string(ClusterMethod method) {
    return method == ClusterMethod::density ? "density" : "kmeans";
}

namespace {

// Uniform double in [0, 1) from the raw engine output; std distributions are
// not specified bit-for-bit across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::MatrixXd unit_rows(std::span<const EmbeddingVector> vectors) {
    const auto dim = vectors.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(vectors.size()), dim);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != dim) throw DimensionMismatch("cluster: vectors differ in dimension");
        const double n = vectors[i].norm();
        if (!(n > 0.0)) throw ZeroNormVector("cluster: zero-norm embedding at " + std::to_string(i));
        x.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose() / n;
    }
    return x;
}

// Drops empty clusters and renumbers the rest 1..k' preserving order.
int compact_labels(std::vector<int>& labels) {
    std::map<int, int> remap;
    for (int l : labels)
        if (l != kNoise) remap.emplace(l, 0);
    int next = 1;
    for (auto& [from, to] : remap) to = next++;
    for (int& l : labels)
        if (l != kNoise) l = remap.at(l);
    return static_cast<int>(remap.size());
}

std::vector<int> spherical_kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iterations) {
    const Eigen::Index n = x.rows();
    std::mt19937_64 rng(seed);

    // k-means++ seeding on cosine distance.
    std::vector<Eigen::Index> chosen;
    chosen.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
    Eigen::VectorXd best_sim = x * x.row(chosen.front()).transpose();
    while (static_cast<int>(chosen.size()) < k) {
        Eigen::VectorXd weight = (1.0 - best_sim.array()).max(0.0).square().matrix();
        for (auto c : chosen) weight[c] = 0.0;
        const double total = weight.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = unit_uniform(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += weight[i];
                if (weight[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0)
                for (Eigen::Index i = n - 1; i >= 0; --i)
                    if (weight[i] > 0.0) {
                        pick = i;
                        break;
                    }
        } else {
            // Every remaining point coincides with a centre: take the lowest unused index.
            for (Eigen::Index i = 0; i < n && pick < 0; ++i)
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
        }
        chosen.push_back(pick);
        best_sim = best_sim.cwiseMax(x * x.row(pick).transpose());
    }

    Eigen::MatrixXd centers(k, x.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = x.row(chosen[static_cast<std::size_t>(c)]);

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        const Eigen::MatrixXd sims = x * centers.transpose();
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            for (Eigen::Index c = 1; c < k; ++c)
                if (sims(i, c) > sims(i, best)) best = c;
            int label = static_cast<int>(best) + 1;
            if (labels[static_cast<std::size_t>(i)] != label) {
                labels[static_cast<std::size_t>(i)] = label;
                changed = true;
            }
        }
        if (!changed) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) sums.row(labels[static_cast<std::size_t>(i)] - 1) += x.row(i);
        for (int c = 0; c < k; ++c) {
            const double norm = sums.row(c).norm();
            // Empty or cancelling clusters keep their previous centre.
            if (norm > 0.0) centers.row(c) = sums.row(c) / norm;
        }
    }
    return labels;
}

std::vector<int> density_clusters(const Eigen::MatrixXd& x, double radius, int min_points) {
    const Eigen::Index n = x.rows();
    const Eigen::MatrixXd sims = x * x.transpose();
    auto neighbours = [&](Eigen::Index i) {
        std::vector<Eigen::Index> out;
        for (Eigen::Index j = 0; j < n; ++j)
            if (1.0 - sims(i, j) <= radius) out.push_back(j);
        return out;
    };
    constexpr int kUnvisited = 0;
    std::vector<int> labels(static_cast<std::size_t>(n), kUnvisited);
    int next = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
        auto seeds = neighbours(i);
        if (static_cast<int>(seeds.size()) < min_points) {
            labels[static_cast<std::size_t>(i)] = kNoise;
            continue;
        }
        const int id = ++next;
        labels[static_cast<std::size_t>(i)] = id;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const auto j = static_cast<std::size_t>(seeds[s]);
            if (labels[j] == kNoise) labels[j] = id;
            if (labels[j] != kUnvisited) continue;
            labels[j] = id;
            auto more = neighbours(seeds[s]);
            if (static_cast<int>(more.size()) >= min_points)
                seeds.insert(seeds.end(), more.begin(), more.end());
        }
    }
    if (next == 0 && n > 0) {
        log_warn("density clustering found no core points; treating the corpus as one cluster");
        std::fill(labels.begin(), labels.end(), 1);
    }
    return labels;
}

}  // namespace

ClusterAssignment cluster(std::span<const EmbeddingVector> vectors, int k, std::uint64_t seed,
                          const ClusterOptions& options) {
    if (k < 1) throw InvalidConfig("cluster: k must be >= 1");
    ClusterAssignment out;
    out.seed = seed;
    if (options.method == ClusterMethod::kmeans && vectors.size() < static_cast<std::size_t>(k))
        throw TooFewPoints("cluster: " + std::to_string(vectors.size()) + " points for k=" + std::to_string(k));
    if (vectors.empty()) return out;

    const Eigen::MatrixXd x = unit_rows(vectors);
    out.labels = options.method == ClusterMethod::kmeans
                     ? spherical_kmeans(x, k, seed, options.max_iterations)
                     : density_clusters(x, options.density_radius, options.density_min_points);
    out.k = compact_labels(out.labels);
    return out;
}

std::vector<ClusterRank> rank_clusters(const ClusterAssignment& assignment) {
    std::map<int, std::size_t> sizes;
    for (int l : assignment.labels)
        if (l != kNoise) ++sizes[l];
    std::vector<ClusterRank> ranks;
    for (const auto& [id, size] : sizes) ranks.push_back({id, size});
    std::stable_sort(ranks.begin(), ranks.end(),
                     [](const ClusterRank& a, const ClusterRank& b) { return a.size > b.size; });
    return ranks;
}

RepresentativeSet select_top_m(const Corpus& corpus, const ClusterAssignment& assignment,
                               std::span<const EmbeddingVector> vectors, int m) {
    if (m < 1) throw InvalidConfig("select_top_m: m must be >= 1");
    if (assignment.labels.size() != corpus.size() || vectors.size() != corpus.size())
        throw DimensionMismatch("select_top_m: corpus, labels and vectors are not aligned");

    RepresentativeSet out;
    out.m = m;
    auto ranks = rank_clusters(assignment);
    for (const auto& rank : ranks) {
        if (static_cast<int>(out.entries.size()) == m) break;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < assignment.labels.size(); ++i)
            if (assignment.labels[i] == rank.cluster_id) members.push_back(i);
        try {
            auto choice = representative<double>(members, vectors);
            const auto& review = corpus.reviews[choice.index];
            out.entries.push_back({rank.cluster_id, review.id, review.text, rank.size, choice.similarity});
        } catch (const ZeroNormCentroid&) {
            log_warn("cluster " + std::to_string(rank.cluster_id) + " has a zero-norm centroid; skipped");
            out.skipped_clusters.push_back(rank.cluster_id);
        }
    }
    if (out.entries.empty() && !out.skipped_clusters.empty())
        throw ZeroNormCentroid("select_top_m: every cluster is degenerate");
    return out;
}

Json to_json(const ClusterAssignment& assignment, ClusterMethod method) {
    Json sizes = Json::array();
    for (const auto& r : rank_clusters(assignment)) sizes.push_back({{"cluster_id", r.cluster_id}, {"size", r.size}});
    return {{"method", to_string(method)},
            {"k", assignment.k},
            {"seed", assignment.seed},
            {"labels", assignment.labels},
            {"sizes", sizes}};
}

ClusterAssignment cluster_assignment_from_json(const Json& j) {
    ClusterAssignment a;
    a.k = j.at("k").get<int>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.labels = j.at("labels").get<std::vector<int>>();
    return a;
}

Json to_json(const RepresentativeSet& set) {
    Json entries = Json::array();
    for (const auto& e : set.entries)
        entries.push_back({{"cluster_id", e.cluster_id},
                           {"review_id", e.review_id},
                           {"review_text", e.review_text},
                           {"cluster_size", e.cluster_size},
                           {"similarity_to_centroid", e.similarity_to_centroid}});
    return {{"m", set.m}, {"entries", entries}, {"skipped_clusters", set.skipped_clusters}};
}

RepresentativeSet representative_set_from_json(const Json& j) {
    RepresentativeSet s;
    s.m = j.at("m").get<int>();
    s.skipped_clusters = j.at("skipped_clusters").get<std::vector<int>>();
    for (const auto& e : j.at("entries"))
        s.entries.push_back({e.at("cluster_id").get<int>(), e.at("review_id").get<std::string>(),
                             e.at("review_text").get<std::string>(), e.at("cluster_size").get<std::size_t>(),
                             e.at("similarity_to_centroid").get<double>()});
    return s;
}

}  // namespace revmine
