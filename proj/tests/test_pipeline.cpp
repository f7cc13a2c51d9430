#include <gtest/gtest.h>

#include "revmine/pipeline.hpp"
#include "support.hpp"

using namespace revmine;
namespace fs = std::filesystem;

namespace {

void quiet() { set_log_quiet(true); }

std::size_t count_status(const RunReport& r, const std::string& status) {
    std::size_t n = 0;
    for (const auto& i : r.issues) n += i.status == status;
    return n;
}

const StageReport& stage(const RunReport& r, const std::string& name) {
    for (const auto& s : r.stages)
        if (s.name == name) return s;
    throw std::out_of_range(name);
}

// The fixture judge script gives 87.5 to every issue except one rated 65.625.
constexpr double kFixtureFullComposite = (5 * 87.5 + 65.625) / 6.0;

}  // namespace

TEST(CanonicalStage, Spellings) {
    EXPECT_EQ(canonical_stage("04"), "04_representatives");
    EXPECT_EQ(canonical_stage("representatives"), "04_representatives");
    EXPECT_EQ(canonical_stage("08_judge"), "08_judge");
    EXPECT_THROW(canonical_stage("09"), InvalidConfig);
}

TEST(Pipeline, FullRun) {
    quiet();
    test::TempDir tmp;
    const auto out = tmp / "run";
    const RunReport r = run_pipeline(test::fixture_config(out));
    EXPECT_TRUE(r.complete());
    ASSERT_EQ(r.issues.size(), 6u);
    EXPECT_EQ(count_status(r, "succeeded"), 6u);
    ASSERT_TRUE(r.overall_composite);
    EXPECT_NEAR(*r.overall_composite, kFixtureFullComposite, 1e-12);
    for (const auto& s : r.stages) EXPECT_EQ(s.status, "completed") << s.name;

    for (const auto& i : r.issues) {
        ASSERT_EQ(i.tracks.size(), 3u);
        EXPECT_EQ(i.tracks[0].iterations, 2);
        EXPECT_EQ(i.tracks[0].stop_reason, "threshold");
        EXPECT_EQ(i.tracks[1].iterations, 1);
        EXPECT_EQ(i.tracks[2].iterations, 3);
        EXPECT_EQ(i.tracks[2].stop_reason, "t_max");
        EXPECT_EQ(i.chosen_track, "track-b");
        EXPECT_TRUE(fs::exists(out / "06_advice" / i.issue_id / "track-1" / "iter-2.json"));
        EXPECT_TRUE(fs::exists(out / "07_final" / (i.issue_id + ".json")));
    }
    EXPECT_EQ(r.call_counts.at("issue-agent"), 1u);
    EXPECT_EQ(r.call_counts.at("track-a"), 6u * 4u);
    EXPECT_EQ(r.call_counts.at("track-b"), 6u * 2u);
    EXPECT_EQ(r.call_counts.at("track-c"), 6u * 6u);
    EXPECT_EQ(r.call_counts.at("ranker"), 6u);
    EXPECT_EQ(r.call_counts.at("judge"), 6u);
    for (const char* f : {"00_config.json", "01_corpus.json", "02_embeddings.cache", "03_clusters.json",
                          "04_representatives.json", "05_issues.json", "05_issues.validated.json",
                          "08_judge/records.jsonl", "08_judge/report.json", "08_judge/heatmap.csv", "report.csv",
                          "heatmap.svg", "manifest.json", "run_report.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;

    const Json issues = Json::parse(read_file(out / "05_issues.json"));
    EXPECT_EQ(issues.at("b").at("theme"), "Staff attitude");
}

TEST(Pipeline, RefusesExistingRun) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "run"), {"03", {}});
    EXPECT_THROW(run_pipeline(test::fixture_config(tmp / "run")), InvalidConfig);
    fs::create_directories(tmp / "other");
    write_file_atomic(tmp / "other" / "x", "x");
    EXPECT_THROW(run_pipeline(test::fixture_config(tmp / "other")), InvalidConfig);
}

TEST(Pipeline, Deterministic) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "a"));
    run_pipeline(test::fixture_config(tmp / "b"));
    EXPECT_TRUE(test::diff_dirs(tmp / "a", tmp / "b").empty());
    EXPECT_EQ(test::stable_report(tmp / "a"), test::stable_report(tmp / "b"));
}

TEST(Pipeline, SequentialMatchesParallel) {
    quiet();
    test::TempDir tmp;
    RunConfig seq = test::fixture_config(tmp / "seq");
    seq.parallel = false;
    run_pipeline(seq);
    run_pipeline(test::fixture_config(tmp / "par"));
    const auto diffs = test::diff_dirs(tmp / "seq", tmp / "par");
    // Only the snapshot differs, in its "parallel" flag.
    EXPECT_EQ(diffs, std::vector<std::string>{"00_config.json"});
}

TEST(Pipeline, NoEvalHasSingleIterationTraces) {
    quiet();
    test::TempDir tmp;
    const RunReport r = run_pipeline(test::fixture_config(tmp / "run", Variant::no_eval));
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(r.issues.size(), 6u);
    for (const auto& i : r.issues)
        for (const auto& t : i.tracks) EXPECT_EQ(t.iterations, 1);
    EXPECT_EQ(r.call_counts.at("track-a"), 6u);
    for (const auto& e : fs::recursive_directory_iterator(tmp / "run" / "06_advice"))
        EXPECT_NE(e.path().filename(), "iter-2.json");
}

TEST(Pipeline, NoIssueUsesPseudoIssues) {
    quiet();
    test::TempDir tmp;
    const RunConfig cfg = test::fixture_config(tmp / "run", Variant::no_issue);
    const RunReport r = run_pipeline(cfg);
    EXPECT_TRUE(r.complete());
    EXPECT_FALSE(r.call_counts.contains("issue-agent"));
    ASSERT_EQ(r.issues.size(), std::size_t(cfg.clustering.m));
    const Json reps = Json::parse(read_file(tmp / "run" / "04_representatives.json"));
    const Json pseudo = Json::parse(read_file(tmp / "run" / "05_pseudo_issues.json"));
    ASSERT_EQ(pseudo.at("items").size(), reps.at("entries").size());
    for (std::size_t k = 0; k < r.issues.size(); ++k) {
        EXPECT_EQ(r.issues[k].theme, kUnthemed);
        EXPECT_EQ(r.issues[k].issue, reps.at("entries")[k].at("review_text").get<std::string>());
    }
    EXPECT_FALSE(fs::exists(tmp / "run" / "05_issues.json"));
}

TEST(Pipeline, NoIssueNoEval) {
    quiet();
    test::TempDir tmp;
    const RunReport r = run_pipeline(test::fixture_config(tmp / "run", Variant::no_issue_no_eval));
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(r.issues.size(), 4u);
    for (const auto& i : r.issues)
        for (const auto& t : i.tracks) EXPECT_EQ(t.iterations, 1);
}

TEST(Pipeline, Vanilla) {
    quiet();
    test::TempDir tmp;
    const RunReport r = run_pipeline(test::fixture_config(tmp / "run", Variant::vanilla));
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(stage(r, "05_issues").status, "not_applicable");
    EXPECT_EQ(stage(r, "06_advice").status, "not_applicable");
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].issue_id, "vanilla");
    EXPECT_EQ(r.call_counts.at("track-a"), 1u);
    EXPECT_FALSE(r.call_counts.contains("ranker"));
    // judge/vanilla row: 3,2,4,3,2,3,4,4
    EXPECT_DOUBLE_EQ(*r.overall_composite, (50 + 25 + 75 + 50 + 25 + 50 + 75 + 75) / 8.0);
    const FinalAdvice f = final_advice_from_json(Json::parse(read_file(tmp / "run" / "07_final" / "vanilla.json")));
    EXPECT_EQ(f.advice.recommendations.size(), 4u);
}

TEST(Pipeline, ResumeAfterStopMatchesUninterrupted) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "whole"));
    const RunReport partial = run_pipeline(test::fixture_config(tmp / "split"), {"04", {}});
    EXPECT_FALSE(partial.complete());
    EXPECT_EQ(stage(partial, "04_representatives").status, "completed");
    EXPECT_EQ(stage(partial, "05_issues").status, "pending");
    EXPECT_FALSE(fs::exists(tmp / "split" / "05_issues.json"));

    const RunReport resumed = resume(tmp / "split");
    EXPECT_TRUE(resumed.complete());
    const auto reused = resumed.session.at("reused_stages").get<std::vector<std::string>>();
    EXPECT_EQ(reused, (std::vector<std::string>{"01_corpus", "02_embeddings", "03_clusters", "04_representatives"}));
    EXPECT_TRUE(test::diff_dirs(tmp / "whole", tmp / "split").empty());
    EXPECT_EQ(test::stable_report(tmp / "whole"), test::stable_report(tmp / "split"));
}

TEST(Pipeline, ResumeRerunsFromTamperedStage) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "whole"));
    run_pipeline(test::fixture_config(tmp / "run"));
    write_file_atomic(tmp / "run" / "07_final" / "outcomes.json", "{}");
    const RunReport r = resume(tmp / "run");
    EXPECT_TRUE(r.complete());
    const auto reused = r.session.at("reused_stages").get<std::vector<std::string>>();
    EXPECT_EQ(reused.back(), "06_advice");
    EXPECT_TRUE(test::diff_dirs(tmp / "whole", tmp / "run").empty());
}

TEST(Pipeline, ResumeDetectsConfigDrift) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "run"), {"02", {}});
    RunConfig changed = test::fixture_config(tmp / "run");
    changed.loop.eta = 4.0;
    try {
        resume(tmp / "run", changed);
        FAIL();
    } catch (const ConfigDrift& e) {
        EXPECT_NE(std::string(e.what()).find("loop"), std::string::npos);
    }
    EXPECT_NO_THROW(resume(tmp / "run", test::fixture_config(tmp / "run")));
    EXPECT_THROW(resume(tmp / "nowhere"), FileNotFound);
}

TEST(Pipeline, TrackFailureIsIsolated) {
    quiet();
    test::TempDir tmp;
    RunConfig cfg = test::fixture_config(tmp / "run");
    apply_backend_script(cfg, test::patched_script(tmp.path(), {{"rec/track-3", {"No list here."}}}));
    const RunReport r = run_pipeline(cfg);
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(count_status(r, "succeeded"), 6u);
    for (const auto& i : r.issues) {
        EXPECT_EQ(i.tracks[2].status, "failed");
        EXPECT_NE(i.tracks[2].error.find("TooFewRecommendations"), std::string::npos);
        EXPECT_TRUE(fs::exists(tmp / "run" / "06_advice" / i.issue_id / "track-3" / "failed.json"));
        const FinalAdvice f = final_advice_from_json(Json::parse(read_file(tmp / "run" / "07_final" / (i.issue_id + ".json"))));
        EXPECT_EQ(f.contenders.size(), 2u);
        EXPECT_EQ(f.failed_tracks.size(), 1u);
    }
    // Each failing recommendation call is repaired twice before the track gives up.
    EXPECT_EQ(stage(r, "06_advice").repairs, 6u * std::size_t(kMaxRepairs + 1));
}

TEST(Pipeline, IssueFailsWhenTooFewTracksSurvive) {
    quiet();
    test::TempDir tmp;
    RunConfig cfg = test::fixture_config(tmp / "run");
    apply_backend_script(cfg, test::patched_script(tmp.path(), {{"rec/track-2", {"No list."}}, {"rec/track-3", {"No list."}}}));
    // No issue reaches the judge, so the judge stage has nothing to aggregate.
    EXPECT_THROW(run_pipeline(cfg), StageFailed);
    const Json report = Json::parse(read_file(tmp / "run" / "run_report.json"));
    ASSERT_EQ(report.at("issues").size(), 6u);
    for (const auto& i : report.at("issues")) {
        EXPECT_EQ(i.at("status"), "failed");
        EXPECT_EQ(i.at("failed_stage"), "06_advice");
        EXPECT_NE(i.at("error").get<std::string>().find("1 of 3 tracks"), std::string::npos);
    }
    EXPECT_EQ(report.at("stages")[7].at("status"), "failed");
}

TEST(Pipeline, StageFailureThenResume) {
    quiet();
    test::TempDir tmp;
    RunConfig cfg = test::fixture_config(tmp / "run");
    const auto script = test::patched_script(tmp.path(), {{"judge", {"not json"}}, {"judge/5ce8903e92984512", {"nope"}}});
    apply_backend_script(cfg, script);
    EXPECT_THROW(run_pipeline(cfg), StageFailed);
    const Json report = Json::parse(read_file(tmp / "run" / "run_report.json"));
    EXPECT_EQ(report.at("stages")[7].at("status"), "failed");
    EXPECT_EQ(report.at("stages")[6].at("status"), "completed");

    write_file_atomic(script, read_file(test::fixture("script.json")));
    const RunReport r = resume(tmp / "run");
    EXPECT_TRUE(r.complete());
    EXPECT_NEAR(*r.overall_composite, kFixtureFullComposite, 1e-12);
    EXPECT_EQ(r.session.at("reused_stages").size(), 7u);
}

TEST(Pipeline, RejudgeReproducesRecords) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "run"));
    const std::string before = read_file(tmp / "run" / "08_judge" / "records.jsonl");
    const RunReport r = rejudge(tmp / "run");
    EXPECT_EQ(read_file(tmp / "run" / "08_judge" / "records.jsonl"), before);
    EXPECT_EQ(r.session.at("reused_stages").size(), 7u);
}

TEST(CompareRuns, TableMatchesRecords) {
    quiet();
    test::TempDir tmp;
    std::vector<fs::path> dirs;
    for (auto v : {Variant::full, Variant::no_issue, Variant::vanilla}) {
        dirs.push_back(tmp / to_string(v));
        run_pipeline(test::fixture_config(dirs.back(), v));
    }
    const ComparisonTable t = compare_runs(dirs);
    ASSERT_EQ(t.rows.size(), 3u);
    for (const auto& row : t.rows) {
        double sum = 0;
        const auto recs = parse_records_jsonl(read_file(row.dir / "08_judge" / "records.jsonl"));
        for (const auto& rec : recs) sum += rec.composite;
        EXPECT_NEAR(row.composite, sum / double(recs.size()), 1e-9);
        EXPECT_EQ(row.n_records, recs.size());
    }
    const std::string csv = comparison_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,restaurant");
    EXPECT_NE(csv.find("\nvanilla,53.125\n"), std::string::npos);
    EXPECT_NE(csv.find("\nno_issue,87.5\n"), std::string::npos);

    const std::string deltas = deltas_csv(t);
    EXPECT_NE(deltas.find("full,restaurant,composite," + format_number(t.rows[0].composite) + ",0\n"), std::string::npos);
    EXPECT_NE(deltas.find("vanilla,restaurant,composite,53.125," + format_number(53.125 - t.rows[0].composite)),
              std::string::npos);

    write_comparison(t, tmp.path());
    for (const char* f : {"comparison.csv", "deltas.csv", "heatmap.csv", "heatmap.svg"})
        EXPECT_TRUE(fs::exists(tmp / f));
}

TEST(CompareRuns, IncompleteRunRejected) {
    quiet();
    test::TempDir tmp;
    run_pipeline(test::fixture_config(tmp / "run"), {"05", {}});
    EXPECT_THROW(compare_runs({tmp / "run"}), IncompleteRun);
    EXPECT_THROW(compare_runs({tmp / "missing"}), IncompleteRun);
}
