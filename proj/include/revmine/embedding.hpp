#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revmine/errors.hpp"
#include "revmine/util.hpp"

namespace revmine {

template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using EmbeddingVector = Embedding<double>;

/// Cosine similarity aᵀb / (‖a‖‖b‖), clamped to [-1, 1].
///
/// Throws DimensionMismatch when the sizes differ and ZeroNormVector when
/// either operand has zero norm; the value is undefined there and is never
/// mapped to 0.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.size() != b.size())
        throw DimensionMismatch("cosine_similarity: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (!(na > Scalar(0)) || !(nb > Scalar(0)))
        throw ZeroNormVector("cosine_similarity: zero-norm operand");
    const Scalar c = a.dot(b.template cast<Scalar>()) / (na * nb);
    return std::clamp(c, Scalar(-1), Scalar(1));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
    return v.allFinite();
}

enum class ProviderKind { remote, hashed_local };

struct ProviderSpec {
    ProviderKind kind = ProviderKind::hashed_local;
    // 0 on a remote provider means "adopt the dimension of the first response".
    int dim = 256;
    std::uint64_t seed = 42;
    std::string model_name;
    std::string endpoint;
    std::string token_env;
    int batch_size = 64;
    int max_in_flight = 4;
    double timeout_seconds = 60.0;
};

Json to_json(const ProviderSpec& spec);
ProviderSpec provider_spec_from_json(const Json& j);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Stable string naming everything that determines the vectors produced.
    virtual std::string identity() const = 0;
    virtual int dim() const = 0;
    virtual int max_batch() const { return 64; }
    virtual int max_in_flight() const { return 1; }
    // One vector per text, same order. No caching at this level.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Character trigram feature hashing into `dim` buckets, L2-normalized.
// Pure in (text, dim, seed) and byte-identical across platforms.
class HashedLocalProvider final : public EmbeddingProvider {
public:
    HashedLocalProvider(int dim, std::uint64_t seed);
    std::string identity() const override;
    int dim() const override { return dim_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    EmbeddingVector embed_one(const std::string& text) const;

private:
    int dim_;
    std::uint64_t seed_;
};

// POST {endpoint}/embeddings with {"model", "input"}; reads data[i].embedding.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(ProviderSpec spec);
    std::string identity() const override;
    int dim() const override;
    int max_batch() const override { return spec_.batch_size; }
    int max_in_flight() const override { return spec_.max_in_flight; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    ProviderSpec spec_;
    mutable std::mutex mutex_;
    int dim_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec);

// Content-addressed vector cache keyed by sha256(provider identity, text).
// Thread-safe; save() writes atomically and deterministically (sorted keys).
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    // Merges entries from a cache file; a missing file is an empty cache.
    void load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    static std::string key(const std::string& provider_identity, const std::string& text);
    std::optional<EmbeddingVector> get(const std::string& key) const;
    void put(const std::string& key, const EmbeddingVector& v);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<double>> entries_;
};

/// Embeds `texts` in order, serving hits from `cache` (if given) and sending
/// misses to the provider in sub-batches of at most `provider.max_batch()`,
/// with up to `provider.max_in_flight()` sub-batches in flight. Verifies that
/// every vector has the provider's dimension and only finite values.
std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         EmbeddingCache* cache = nullptr);

}  // namespace revmine
