#include <gtest/gtest.h>

#include "revmine/config.hpp"
#include "support.hpp"

using namespace revmine;

namespace {

Json minimal() {
    return Json::parse(R"({
        "corpus": {"path": "reviews.jsonl"},
        "backends": {
            "track-a": {"kind": "scripted", "script": "s.json"},
            "track-b": {"kind": "scripted", "script": "s.json"},
            "track-c": {"kind": "scripted", "script": "s.json"},
            "issue-agent": {"kind": "scripted", "script": "s.json"},
            "ranker": {"kind": "scripted", "script": "s.json"},
            "judge": {"endpoint": "https://llm.example/v1", "model": "m", "token_env": "JUDGE_TOKEN"}
        }})");
}

}  // namespace

TEST(Variant, ParseAndRoles) {
    EXPECT_EQ(parse_variant("no-issue-no-eval"), Variant::no_issue_no_eval);
    EXPECT_EQ(parse_variant(" No_Eval "), Variant::no_eval);
    EXPECT_THROW(parse_variant("lite"), InvalidConfig);
    for (auto v : {Variant::full, Variant::vanilla, Variant::no_issue, Variant::no_eval, Variant::no_issue_no_eval})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_TRUE(uses_issue_agent(Variant::no_eval));
    EXPECT_FALSE(uses_issue_agent(Variant::no_issue));
    EXPECT_TRUE(uses_evaluator(Variant::no_issue));
    EXPECT_FALSE(uses_evaluator(Variant::no_issue_no_eval));
}

TEST(RunConfig, DefaultsAndPathResolution) {
    const RunConfig cfg = run_config_from_json(minimal(), "/data/cfg");
    EXPECT_EQ(cfg.corpus.path, "/data/cfg/reviews.jsonl");
    EXPECT_EQ(cfg.backends.at("ranker").script_path, "/data/cfg/s.json");
    EXPECT_EQ(cfg.clustering.k, 12);
    EXPECT_EQ(cfg.clustering.m, 5);
    EXPECT_EQ(cfg.loop.eta, 3.5);
    EXPECT_EQ(cfg.loop.t_max, 3);
    EXPECT_EQ(cfg.loop.weights, Eigen::Vector4d::Constant(0.25));
    EXPECT_EQ(cfg.temperatures.issue, 0.0);
    EXPECT_EQ(cfg.temperatures.judge, 0.1);
    EXPECT_EQ(cfg.corpus.stars, std::set<int>{1});
    EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, RejectsUnknownKeysAndInlineSecrets) {
    Json j = minimal();
    j["colour"] = "blue";
    EXPECT_THROW(run_config_from_json(j, "/"), InvalidConfig);
    j = minimal();
    j["backends"]["judge"]["api_key"] = "sk-live";
    EXPECT_THROW(run_config_from_json(j, "/"), InvalidConfig);
    j = minimal();
    j["embedding"] = {{"kind", "remote"}, {"endpoint", "http://e"}, {"model", "m"}, {"token", "abc"}};
    EXPECT_THROW(run_config_from_json(j, "/"), InvalidConfig);
    j = minimal();
    j["loop"] = {{"weights", {{"S", 0.25}, {"X", 0.75}}}};
    EXPECT_THROW(run_config_from_json(j, "/"), InvalidConfig);
}

TEST(RunConfig, SnapshotCarriesNoSecretValues) {
    ::setenv("JUDGE_TOKEN", "super-secret-value", 1);
    const RunConfig cfg = run_config_from_json(minimal(), "/data");
    const std::string snap = to_json(cfg).dump();
    EXPECT_EQ(snap.find("super-secret-value"), std::string::npos);
    EXPECT_NE(snap.find("JUDGE_TOKEN"), std::string::npos);
    EXPECT_FALSE(to_json(cfg).contains("out_dir"));
    ::unsetenv("JUDGE_TOKEN");
}

TEST(RunConfig, SnapshotRoundTrip) {
    const RunConfig cfg = load_run_config(test::fixture("config.yaml"));
    const RunConfig back = run_config_from_json(to_json(cfg), "/elsewhere");
    EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(RunConfig, ValidateChecksActiveRoles) {
    RunConfig cfg = run_config_from_json(minimal(), "/");
    cfg.roles.ranker = "missing";
    EXPECT_THROW(cfg.validate(), InvalidConfig);
    cfg.variant = Variant::vanilla;   // vanilla never ranks
    EXPECT_NO_THROW(cfg.validate());
    cfg.variant = Variant::full;
    cfg.roles.tracks = {"track-a"};   // one track needs no ranker either
    EXPECT_NO_THROW(cfg.validate());
    cfg.roles.evaluators = {"judge", "judge"};
    EXPECT_THROW(cfg.validate(), InvalidConfig);
    cfg.roles.evaluators = {};
    cfg.loop.eta = 0.5;
    EXPECT_THROW(cfg.validate(), InvalidConfig);
}

TEST(RunConfig, ActiveRolesPerVariant) {
    RunConfig cfg = run_config_from_json(minimal(), "/");
    auto roles = cfg.active_roles();
    EXPECT_EQ(roles.at("evaluator-2"), "track-b");   // self-evaluation by default
    EXPECT_TRUE(roles.contains("issue"));
    cfg.variant = Variant::no_issue_no_eval;
    roles = cfg.active_roles();
    EXPECT_FALSE(roles.contains("issue"));
    EXPECT_FALSE(roles.contains("evaluator-1"));
    EXPECT_TRUE(roles.contains("ranker"));
    cfg.variant = Variant::vanilla;
    roles = cfg.active_roles();
    EXPECT_EQ(roles.size(), 2u);
    EXPECT_EQ(roles.at("track-1"), "track-a");
}

TEST(Yaml, ScalarsAndQuoting) {
    const Json j = yaml_to_json("a: 1\nb: 2.5\nc: true\nd: '42'\ne: ~\nf: [x, 3]\ng: {h: no}\n");
    EXPECT_EQ(j.at("a"), 1);
    EXPECT_EQ(j.at("b"), 2.5);
    EXPECT_EQ(j.at("c"), true);
    EXPECT_EQ(j.at("d"), "42");
    EXPECT_TRUE(j.at("e").is_null());
    EXPECT_EQ(j.at("f"), Json({"x", 3}));
    EXPECT_EQ(j.at("g").at("h"), "no");
    EXPECT_THROW(yaml_to_json("a: [1, 2"), InvalidConfig);
}

TEST(LoadRunConfig, Fixture) {
    const RunConfig cfg = load_run_config(test::fixture("config.yaml"));
    EXPECT_EQ(cfg.variant, Variant::full);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.corpus.domain, "restaurant");
    EXPECT_EQ(cfg.clustering.k, 6);
    EXPECT_EQ(cfg.clustering.m, 4);
    EXPECT_EQ(cfg.backends.size(), 6u);
    EXPECT_TRUE(cfg.corpus.path.is_absolute());
    EXPECT_NO_THROW(cfg.validate());
}

TEST(ApplyBackendScript, OverridesEveryReferencedBackend) {
    RunConfig cfg = run_config_from_json(minimal(), "/");
    apply_backend_script(cfg, test::fixture("script.json"));
    for (const auto& [name, spec] : cfg.backends) {
        EXPECT_EQ(spec.kind, BackendKind::scripted) << name;
        EXPECT_EQ(std::filesystem::path(spec.script_path).filename(), "script.json");
    }
}
