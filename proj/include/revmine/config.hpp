#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "revmine/advice_loop.hpp"
#include "revmine/clustering.hpp"
#include "revmine/corpus.hpp"
#include "revmine/embedding.hpp"
#include "revmine/gateway.hpp"

namespace revmine {

enum class Variant { full, vanilla, no_issue, no_eval, no_issue_no_eval };

// Accepts both "no_issue" and "no-issue" spellings.
Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

bool uses_issue_agent(Variant v);
bool uses_evaluator(Variant v);

struct CorpusConfig {
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::yelp_jsonl;
    std::set<int> stars = {1};   // empty keeps every rating
    bool lenient = false;
    std::string domain = "other";
    std::optional<std::string> source_label;

    bool operator==(const CorpusConfig&) const = default;
};

struct ClusteringConfig {
    int k = 12;
    int m = 5;
    ClusterOptions options;
};

struct RoleConfig {
    std::vector<std::string> tracks = {"track-a", "track-b", "track-c"};
    // Per-track evaluator; empty means each track evaluates itself.
    std::vector<std::string> evaluators;
    std::string issue = "issue-agent";
    std::string ranker = "ranker";
    std::string judge = "judge";
};

struct Temperatures {
    double issue = 0.0;
    double recommendation = 0.2;
    double evaluation = 0.2;
    double ranking = 0.2;
    double judge = 0.1;
};

struct RunConfig {
    Variant variant = Variant::full;
    std::uint64_t seed = 42;
    CorpusConfig corpus;
    ProviderSpec embedding;
    ClusteringConfig clustering;
    std::map<std::string, BackendSpec> backends;
    RoleConfig roles;
    LoopConfig loop;
    Temperatures temperatures;
    bool parallel = true;
    int max_parallel_issues = 4;
    // Not part of the snapshot.
    std::filesystem::path out_dir;

    // Backend names the variant actually calls, role -> name.
    std::map<std::string, std::string> active_roles() const;

    // Throws InvalidConfig when the variant's slots are not all filled.
    void validate() const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Inline credentials are rejected: tokens come from environment variables.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir);

/// Reads a YAML (or JSON) config file.
RunConfig load_run_config(const std::filesystem::path& path);

// YAML node tree -> JSON value; unquoted scalars become numbers, booleans or
// null where they parse as such.
Json yaml_to_json(const std::string& text);

/// The snapshot written to 00_config.json. Paths are absolute; out_dir is
/// left out.
Json to_json(const RunConfig& cfg);

/// Points every backend the config references at `script` as a scripted
/// backend.
void apply_backend_script(RunConfig& cfg, const std::filesystem::path& script);

}  // namespace revmine
