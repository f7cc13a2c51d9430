#include "revmine/config.hpp"

#include <charconv>

#include <yaml-cpp/yaml.h>

namespace revmine {

namespace fs = std::filesystem;

Variant parse_variant(const std::string& name) {
    std::string n = to_lower_ascii(trim(name));
    for (char& c : n)
        if (c == '-') c = '_';
    if (n == "full") return Variant::full;
    if (n == "vanilla") return Variant::vanilla;
    if (n == "no_issue") return Variant::no_issue;
    if (n == "no_eval") return Variant::no_eval;
    if (n == "no_issue_no_eval") return Variant::no_issue_no_eval;
    throw InvalidConfig("unknown variant '" + name + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::vanilla: return "vanilla";
        case Variant::no_issue: return "no_issue";
        case Variant::no_eval: return "no_eval";
        case Variant::no_issue_no_eval: return "no_issue_no_eval";
    }
    return "full";
}

bool uses_issue_agent(Variant v) { return v == Variant::full || v == Variant::no_eval; }
bool uses_evaluator(Variant v) { return v == Variant::full || v == Variant::no_issue; }

std::map<std::string, std::string> RunConfig::active_roles() const {
    std::map<std::string, std::string> roles_out;
    for (std::size_t i = 0; i < roles.tracks.size(); ++i) {
        const std::string label = "track-" + std::to_string(i + 1);
        roles_out[label] = roles.tracks[i];
        if (variant == Variant::vanilla) break;
        if (uses_evaluator(variant))
            roles_out["evaluator-" + std::to_string(i + 1)] =
                roles.evaluators.empty() ? roles.tracks[i] : roles.evaluators[i];
    }
    if (uses_issue_agent(variant)) roles_out["issue"] = roles.issue;
    if (variant != Variant::vanilla && roles.tracks.size() > 1) roles_out["ranker"] = roles.ranker;
    roles_out["judge"] = roles.judge;
    return roles_out;
}

void RunConfig::validate() const {
    if (corpus.path.empty()) throw InvalidConfig("corpus.path is required");
    for (int s : corpus.stars)
        if (s < 1 || s > 5) throw InvalidConfig("corpus.stars entries must lie in 1..5");
    if (clustering.k < 1) throw InvalidConfig("clustering.k must be >= 1");
    if (clustering.m < 1) throw InvalidConfig("clustering.m must be >= 1");
    if (roles.tracks.empty()) throw InvalidConfig("roles.tracks needs at least one backend");
    if (roles.tracks.size() > 5) throw InvalidConfig("roles.tracks takes at most five backends");
    if (!roles.evaluators.empty() && roles.evaluators.size() != roles.tracks.size())
        throw InvalidConfig("roles.evaluators must name one evaluator per track");
    if (max_parallel_issues < 1) throw InvalidConfig("max_parallel_issues must be >= 1");
    loop.validate();
    for (const auto& [role, name] : active_roles()) {
        if (name.empty()) throw InvalidConfig("role '" + role + "' has no backend");
        if (!backends.contains(name))
            throw InvalidConfig("role '" + role + "' names backend '" + name + "', which is not defined");
    }
}

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty()) return p;
    return fs::weakly_canonical(p.is_absolute() ? p : base / p);
}

void reject_inline_secrets(const Json& j, const std::string& where) {
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string k = to_lower_ascii(it.key());
        if (k == "api_key" || k == "apikey" || k == "token" || k == "secret" || k == "password")
            throw InvalidConfig(where + "." + it.key() +
                                ": credentials are read from the environment; name the variable with token_env");
    }
}

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidConfig(where + " must be a table");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw InvalidConfig("unknown key '" + it.key() + "' in " + where);
    }
}

std::vector<std::string> string_list(const Json& j, const std::string& where) {
    if (j.is_string()) return {j.get<std::string>()};
    if (!j.is_array()) throw InvalidConfig(where + " must be a list of backend names");
    return j.get<std::vector<std::string>>();
}

}  // namespace

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
    check_keys(j, "config",
               {"variant", "seed", "corpus", "embedding", "clustering", "backends", "roles", "loop", "temperatures",
                "parallel", "max_parallel_issues", "out_dir"});
    RunConfig cfg;
    try {
        if (j.contains("variant")) cfg.variant = parse_variant(j["variant"].get<std::string>());
        cfg.seed = j.value("seed", cfg.seed);
        cfg.parallel = j.value("parallel", cfg.parallel);
        cfg.max_parallel_issues = j.value("max_parallel_issues", cfg.max_parallel_issues);
        if (j.contains("out_dir")) cfg.out_dir = resolve(j["out_dir"].get<std::string>(), base_dir);

        const Json& c = j.at("corpus");
        check_keys(c, "corpus", {"path", "format", "stars", "lenient", "domain", "source_label"});
        cfg.corpus.path = resolve(c.at("path").get<std::string>(), base_dir);
        if (c.contains("format")) cfg.corpus.format = parse_corpus_format(c["format"].get<std::string>());
        if (c.contains("stars")) {
            const Json& s = c["stars"];
            cfg.corpus.stars = s.is_number() ? std::set<int>{s.get<int>()} : s.get<std::set<int>>();
        }
        cfg.corpus.lenient = c.value("lenient", false);
        cfg.corpus.domain = c.value("domain", cfg.corpus.domain);
        if (c.contains("source_label")) cfg.corpus.source_label = c["source_label"].get<std::string>();

        if (j.contains("embedding")) {
            reject_inline_secrets(j["embedding"], "embedding");
            cfg.embedding = provider_spec_from_json(j["embedding"]);
        }

        if (j.contains("clustering")) {
            const Json& cl = j["clustering"];
            check_keys(cl, "clustering", {"method", "k", "m", "max_iterations", "density_radius", "density_min_points"});
            cfg.clustering.k = cl.value("k", cfg.clustering.k);
            cfg.clustering.m = cl.value("m", cfg.clustering.m);
            if (cl.contains("method")) cfg.clustering.options.method = parse_cluster_method(cl["method"].get<std::string>());
            cfg.clustering.options.max_iterations = cl.value("max_iterations", cfg.clustering.options.max_iterations);
            cfg.clustering.options.density_radius = cl.value("density_radius", cfg.clustering.options.density_radius);
            cfg.clustering.options.density_min_points =
                cl.value("density_min_points", cfg.clustering.options.density_min_points);
        }

        if (j.contains("backends")) {
            const Json& b = j["backends"];
            if (!b.is_object()) throw InvalidConfig("backends must be a table of named backends");
            for (auto it = b.begin(); it != b.end(); ++it) {
                reject_inline_secrets(it.value(), "backends." + it.key());
                BackendSpec spec = backend_spec_from_json(it.key(), it.value());
                if (!spec.script_path.empty()) spec.script_path = resolve(spec.script_path, base_dir).string();
                cfg.backends[it.key()] = spec;
            }
        }

        if (j.contains("roles")) {
            const Json& r = j["roles"];
            check_keys(r, "roles", {"tracks", "evaluators", "issue", "ranker", "judge"});
            if (r.contains("tracks")) cfg.roles.tracks = string_list(r["tracks"], "roles.tracks");
            if (r.contains("evaluators")) cfg.roles.evaluators = string_list(r["evaluators"], "roles.evaluators");
            cfg.roles.issue = r.value("issue", cfg.roles.issue);
            cfg.roles.ranker = r.value("ranker", cfg.roles.ranker);
            cfg.roles.judge = r.value("judge", cfg.roles.judge);
        }

        if (j.contains("loop")) {
            const Json& l = j["loop"];
            check_keys(l, "loop", {"weights", "eta", "t_max"});
            if (l.contains("weights")) {
                const Json& w = l["weights"];
                if (w.is_array()) {
                    if (w.size() != 4) throw InvalidConfig("loop.weights needs four values (S, R, A, C)");
                    for (int i = 0; i < 4; ++i) cfg.loop.weights[i] = w[static_cast<std::size_t>(i)].get<double>();
                } else {
                    check_keys(w, "loop.weights", {"S", "R", "A", "C"});
                    cfg.loop.weights = {w.value("S", 0.25), w.value("R", 0.25), w.value("A", 0.25), w.value("C", 0.25)};
                }
            }
            cfg.loop.eta = l.value("eta", cfg.loop.eta);
            cfg.loop.t_max = l.value("t_max", cfg.loop.t_max);
        }

        if (j.contains("temperatures")) {
            const Json& t = j["temperatures"];
            check_keys(t, "temperatures", {"issue", "recommendation", "evaluation", "ranking", "judge"});
            cfg.temperatures.issue = t.value("issue", cfg.temperatures.issue);
            cfg.temperatures.recommendation = t.value("recommendation", cfg.temperatures.recommendation);
            cfg.temperatures.evaluation = t.value("evaluation", cfg.temperatures.evaluation);
            cfg.temperatures.ranking = t.value("ranking", cfg.temperatures.ranking);
            cfg.temperatures.judge = t.value("judge", cfg.temperatures.judge);
        }
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
    }
    return cfg;
}

namespace {

Json scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") return s;   // quoted
    if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
    if (s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "False" || s == "FALSE") return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) return i;
    double d = 0;
    if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last) return d;
    return s;
}

Json node_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Scalar: return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            Json arr = Json::array();
            for (const auto& item : node) arr.push_back(node_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            Json obj = Json::object();
            for (const auto& kv : node) obj[kv.first.as<std::string>()] = node_to_json(kv.second);
            return obj;
        }
    }
    return nullptr;
}

}  // namespace

Json yaml_to_json(const std::string& text) {
    try {
        return node_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw InvalidConfig(std::string("config is not valid YAML: ") + e.what());
    }
}

RunConfig load_run_config(const fs::path& path) {
    const Json j = yaml_to_json(read_file(path));
    if (!j.is_object()) throw InvalidConfig(path.string() + ": expected a table at the top level");
    return run_config_from_json(j, fs::absolute(path).parent_path());
}

Json to_json(const RunConfig& cfg) {
    Json corpus = {{"path", cfg.corpus.path.string()},
                   {"format", to_string(cfg.corpus.format)},
                   {"stars", cfg.corpus.stars},
                   {"lenient", cfg.corpus.lenient},
                   {"domain", cfg.corpus.domain}};
    if (cfg.corpus.source_label) corpus["source_label"] = *cfg.corpus.source_label;

    Json backends = Json::object();
    for (const auto& [name, spec] : cfg.backends) backends[name] = to_json(spec);

    Json roles = {{"tracks", cfg.roles.tracks}, {"issue", cfg.roles.issue}, {"ranker", cfg.roles.ranker},
                  {"judge", cfg.roles.judge}};
    if (!cfg.roles.evaluators.empty()) roles["evaluators"] = cfg.roles.evaluators;

    const auto& w = cfg.loop.weights;
    return {{"variant", to_string(cfg.variant)},
            {"seed", cfg.seed},
            {"corpus", corpus},
            {"embedding", to_json(cfg.embedding)},
            {"clustering",
             {{"method", to_string(cfg.clustering.options.method)},
              {"k", cfg.clustering.k},
              {"m", cfg.clustering.m},
              {"max_iterations", cfg.clustering.options.max_iterations},
              {"density_radius", cfg.clustering.options.density_radius},
              {"density_min_points", cfg.clustering.options.density_min_points}}},
            {"backends", backends},
            {"roles", roles},
            {"loop", {{"weights", {{"S", w[0]}, {"R", w[1]}, {"A", w[2]}, {"C", w[3]}}}, {"eta", cfg.loop.eta},
                      {"t_max", cfg.loop.t_max}}},
            {"temperatures",
             {{"issue", cfg.temperatures.issue},
              {"recommendation", cfg.temperatures.recommendation},
              {"evaluation", cfg.temperatures.evaluation},
              {"ranking", cfg.temperatures.ranking},
              {"judge", cfg.temperatures.judge}}},
            {"parallel", cfg.parallel},
            {"max_parallel_issues", cfg.max_parallel_issues}};
}

void apply_backend_script(RunConfig& cfg, const fs::path& script) {
    const std::string path = fs::weakly_canonical(fs::absolute(script)).string();
    std::set<std::string> names(cfg.roles.tracks.begin(), cfg.roles.tracks.end());
    names.insert(cfg.roles.evaluators.begin(), cfg.roles.evaluators.end());
    names.insert({cfg.roles.issue, cfg.roles.ranker, cfg.roles.judge});
    for (const auto& [name, spec] : cfg.backends) names.insert(name);
    for (const auto& name : names) {
        if (name.empty()) continue;
        BackendSpec spec;
        spec.name = name;
        spec.kind = BackendKind::scripted;
        spec.script_path = path;
        if (auto it = cfg.backends.find(name); it != cfg.backends.end()) spec.temperature = it->second.temperature;
        cfg.backends[name] = spec;
    }
}

}  // namespace revmine
