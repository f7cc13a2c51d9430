#include "revmine/embedding.hpp"

#include <future>
#include <sstream>

#include "revmine/http.hpp"

namespace revmine {

Json to_json(const ProviderSpec& spec) {
    Json j = {{"kind", spec.kind == ProviderKind::remote ? "remote" : "hashed-local"},
              {"dim", spec.dim}};
    if (spec.kind == ProviderKind::hashed_local) {
        j["seed"] = spec.seed;
    } else {
        j["model"] = spec.model_name;
        j["endpoint"] = spec.endpoint;
        j["token_env"] = spec.token_env;
        j["batch_size"] = spec.batch_size;
        j["max_in_flight"] = spec.max_in_flight;
        j["timeout_seconds"] = spec.timeout_seconds;
    }
    return j;
}

ProviderSpec provider_spec_from_json(const Json& j) {
    ProviderSpec spec;
    std::string kind = j.value("kind", std::string("hashed-local"));
    if (kind == "remote") spec.kind = ProviderKind::remote;
    else if (kind == "hashed-local") spec.kind = ProviderKind::hashed_local;
    else throw InvalidConfig("unknown embedding provider kind '" + kind + "'");
    spec.dim = j.value("dim", spec.kind == ProviderKind::remote ? 0 : 256);
    spec.seed = j.value("seed", std::uint64_t{42});
    spec.model_name = j.value("model", std::string());
    spec.endpoint = j.value("endpoint", std::string());
    spec.token_env = j.value("token_env", std::string());
    spec.batch_size = j.value("batch_size", 64);
    spec.max_in_flight = j.value("max_in_flight", 4);
    spec.timeout_seconds = j.value("timeout_seconds", 60.0);
    if (spec.kind == ProviderKind::hashed_local && spec.dim <= 0)
        throw InvalidConfig("hashed-local embedding needs dim > 0");
    if (spec.kind == ProviderKind::remote && (spec.endpoint.empty() || spec.model_name.empty()))
        throw InvalidConfig("remote embedding provider needs endpoint and model");
    if (spec.batch_size <= 0 || spec.max_in_flight <= 0)
        throw InvalidConfig("embedding batch_size and max_in_flight must be positive");
    return spec;
}

// ---------------------------------------------------------------------------
// hashed-local

HashedLocalProvider::HashedLocalProvider(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim <= 0) throw InvalidConfig("hashed-local embedding needs dim > 0");
}

std::string HashedLocalProvider::identity() const {
    return "hashed-local:n=3:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

EmbeddingVector HashedLocalProvider::embed_one(const std::string& text) const {
    // Lower-case, collapse whitespace runs, pad with one space on each side.
    std::string norm = " ";
    bool in_space = true;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) norm.push_back(' ');
            in_space = true;
        } else {
            norm.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    if (norm.back() != ' ') norm.push_back(' ');

    EmbeddingVector v = EmbeddingVector::Zero(dim_);
    if (norm.size() >= 3 && norm != " ") {
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
            auto h = fnv1a64(std::string_view(norm).substr(i, 3), seed_);
            v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))] += 1.0;
        }
    }
    const double n = v.norm();
    if (!(n > 0.0)) throw ZeroNormVector("text has no trigram features: '" + text + "'");
    v /= n;
    return v;
}

std::vector<EmbeddingVector> HashedLocalProvider::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

// ---------------------------------------------------------------------------
// remote

RemoteEmbeddingProvider::RemoteEmbeddingProvider(ProviderSpec spec)
    : spec_(std::move(spec)), dim_(spec_.dim) {}

std::string RemoteEmbeddingProvider::identity() const {
    return "remote:" + spec_.endpoint + ":" + spec_.model_name;
}

int RemoteEmbeddingProvider::dim() const {
    std::lock_guard lock(mutex_);
    return dim_;
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    Json body = {{"model", spec_.model_name}, {"input", texts}};
    auto response = http::post_json(spec_.endpoint, "/embeddings", body.dump(),
                                    http::bearer_from_env(spec_.token_env), spec_.timeout_seconds);
    if (response.status < 200 || response.status >= 300)
        throw ProviderError(response.status, response.body);
    Json reply;
    try {
        reply = Json::parse(response.body);
    } catch (const Json::parse_error&) {
        throw ProviderError(response.status, "non-JSON embeddings reply: " + response.body);
    }
    const auto& data = reply.at("data");
    if (!data.is_array() || data.size() != texts.size())
        throw ProviderError(response.status, "embeddings reply has wrong number of items");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& item : data) {
        const auto& emb = item.at("embedding");
        EmbeddingVector v(static_cast<Eigen::Index>(emb.size()));
        for (std::size_t i = 0; i < emb.size(); ++i) v[static_cast<Eigen::Index>(i)] = emb[i].get<double>();
        out.push_back(std::move(v));
    }
    std::lock_guard lock(mutex_);
    for (const auto& v : out) {
        if (dim_ == 0) dim_ = static_cast<int>(v.size());
        if (v.size() != dim_)
            throw DimensionMismatch("embedding endpoint returned dim " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(dim_));
    }
    return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec) {
    if (spec.kind == ProviderKind::remote) return std::make_unique<RemoteEmbeddingProvider>(spec);
    return std::make_unique<HashedLocalProvider>(spec.dim, spec.seed);
}

// ---------------------------------------------------------------------------
// cache

void EmbeddingCache::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return;
    Json j = Json::parse(read_file(path));
    std::lock_guard lock(mutex_);
    for (const auto& [k, v] : j.at("entries").items()) entries_[k] = v.get<std::vector<double>>();
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
    Json entries = Json::object();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [k, v] : entries_) entries[k] = v;
    }
    write_file_atomic(path, Json{{"format", "revmine-embedding-cache/1"}, {"entries", entries}}.dump() + "\n");
}

std::string EmbeddingCache::key(const std::string& provider_identity, const std::string& text) {
    return sha256_hex(provider_identity + '\0' + text);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return Eigen::Map<const EmbeddingVector>(it->second.data(),
                                             static_cast<Eigen::Index>(it->second.size()));
}

void EmbeddingCache::put(const std::string& key, const EmbeddingVector& v) {
    std::lock_guard lock(mutex_);
    entries_[key] = std::vector<double>(v.data(), v.data() + v.size());
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         EmbeddingCache* cache) {
    std::vector<EmbeddingVector> out(texts.size());
    const std::string identity = provider.identity();
    std::vector<std::size_t> misses;
    std::vector<std::string> keys(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache) {
            keys[i] = EmbeddingCache::key(identity, texts[i]);
            if (auto hit = cache->get(keys[i])) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        misses.push_back(i);
    }

    const std::size_t batch = static_cast<std::size_t>(std::max(1, provider.max_batch()));
    const std::size_t in_flight = static_cast<std::size_t>(std::max(1, provider.max_in_flight()));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t b = 0; b < misses.size(); b += batch)
        batches.emplace_back(misses.begin() + static_cast<std::ptrdiff_t>(b),
                             misses.begin() + static_cast<std::ptrdiff_t>(std::min(misses.size(), b + batch)));

    auto run_one = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> sub;
        sub.reserve(idx.size());
        for (auto i : idx) sub.push_back(texts[i]);
        auto vecs = provider.embed(sub);
        if (vecs.size() != idx.size())
            throw DimensionMismatch("provider returned " + std::to_string(vecs.size()) +
                                    " vectors for " + std::to_string(idx.size()) + " texts");
        for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = std::move(vecs[j]);
    };

    for (std::size_t wave = 0; wave < batches.size(); wave += in_flight) {
        const std::size_t end = std::min(batches.size(), wave + in_flight);
        if (end - wave == 1) {
            run_one(batches[wave]);
            continue;
        }
        std::vector<std::future<void>> futures;
        for (std::size_t b = wave; b < end; ++b)
            futures.push_back(std::async(std::launch::async, run_one, std::cref(batches[b])));
        for (auto& f : futures) f.get();
    }

    const Eigen::Index dim = out.empty() ? 0 : out.front().size();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].size() != dim || (provider.dim() != 0 && dim != provider.dim()))
            throw DimensionMismatch("embedding " + std::to_string(i) + " has dim " +
                                    std::to_string(out[i].size()) + ", expected " +
                                    std::to_string(provider.dim()));
        if (!all_finite(out[i])) throw NonFiniteValue("embedding " + std::to_string(i) + " has NaN/Inf");
    }
    if (cache)
        for (auto i : misses) cache->put(keys[i], out[i]);
    return out;
}

}  // namespace revmine
