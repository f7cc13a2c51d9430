#include <gtest/gtest.h>

#include "golden.hpp"
#include "revmine/ranking.hpp"

using namespace revmine;

namespace {

IssueItem item() { return make_issue_item("Staff", "Host ignores waiting guests"); }

TrackOutcome ok_track(const std::string& label, const std::string& backend, const std::string& tag) {
    TrackOutcome o;
    o.label = label;
    o.backend = backend;
    EvaluatedAdvice a;
    a.issue_id = item().issue_id;
    a.track = label;
    AdviceCandidate c;
    c.issue_id = a.issue_id;
    c.track = backend;
    c.recommendations = {tag + " greet within a minute", tag + " add a waitlist app", tag + " coach the host"};
    a.trace.push_back({c, std::nullopt});
    o.advice = a;
    return o;
}

TrackOutcome failed_track(const std::string& label, const std::string& backend) {
    TrackOutcome o;
    o.label = label;
    o.backend = backend;
    o.error = "TooFewRecommendations: found 1";
    return o;
}

}  // namespace

TEST(OrdinalWord, Values) {
    EXPECT_EQ(ordinal_word(1), "first");
    EXPECT_EQ(ordinal_word(5), "fifth");
    EXPECT_EQ(ordinal_word(7), "7th");
}

TEST(ParseChoice, Structured) {
    EXPECT_EQ(parse_choice(R"({"choice": 2, "reason": "cheap"})", 3).index, 2);
    EXPECT_EQ(parse_choice(R"({"choice": 2, "reason": "cheap"})", 3).rationale, "cheap");
    EXPECT_EQ(parse_choice("```json\n{\"choice\": \"third\", \"rationale\": \"r\"}\n```", 3).index, 3);
    EXPECT_EQ(parse_choice(R"({"choice": 1.0, "explanation": "e"})", 2).rationale, "e");
    EXPECT_THROW(parse_choice(R"({"choice": 4})", 3), AmbiguousChoice);
    EXPECT_THROW(parse_choice(R"({"choice": 0})", 3), AmbiguousChoice);
    EXPECT_THROW(parse_choice(R"({"choice": 1.5})", 3), AmbiguousChoice);
}

TEST(ParseChoice, FreeText) {
    const auto c = parse_choice("The SECOND recommendation is best because it is cheap to run.", 3);
    EXPECT_EQ(c.index, 2);
    EXPECT_EQ(c.rationale, "it is cheap to run.");
    EXPECT_EQ(parse_choice("Option 3 wins.", 3).index, 3);
    EXPECT_EQ(parse_choice("I pick #1", 2).index, 1);
    EXPECT_EQ(parse_choice("2", 2).index, 2);
    EXPECT_EQ(parse_choice("<think>first or third?</think>Third.", 3).index, 3);
    EXPECT_EQ(parse_choice("The second one; the second is clearly better.", 3).index, 2);
}

TEST(ParseChoice, Ambiguous) {
    EXPECT_THROW(parse_choice("No strong preference.", 3), AmbiguousChoice);
    EXPECT_THROW(parse_choice("The first and the second are tied.", 3), AmbiguousChoice);
    EXPECT_THROW(parse_choice("The third.", 2), AmbiguousChoice);
}

TEST(RankingPrompt, PermutedOrderGoldens) {
    const auto a = ok_track("track-1", "alpha", "A:");
    const auto b = ok_track("track-2", "beta", "B:");
    const auto c = ok_track("track-3", "gamma", "C:");
    EXPECT_TRUE(test::matches_golden("ranking_abc.txt", test::dump_request(build_ranking_prompt(item(), {*a.advice, *b.advice, *c.advice}))));
    EXPECT_TRUE(test::matches_golden("ranking_cab.txt", test::dump_request(build_ranking_prompt(item(), {*c.advice, *a.advice, *b.advice}))));
    EXPECT_THROW(build_ranking_prompt(item(), {*a.advice}), InvalidConfig);
}

TEST(RankingPrompt, FourWayWidensHeader) {
    const auto t = ok_track("track-1", "alpha", "A:");
    const auto req = build_ranking_prompt(item(), {*t.advice, *t.advice, *t.advice, *t.advice});
    EXPECT_NE(req.user.find("given four recommendations"), std::string::npos);
    EXPECT_NE(req.user.find("one of the four - first, second, third or fourth is the best option"), std::string::npos);
    EXPECT_NE(req.user.find("Fourth recommendation:\n1. A: greet"), std::string::npos);
    EXPECT_NE(req.user.find("<1, 2, 3 or 4>"), std::string::npos);
}

TEST(SelectFinal, ChoiceFollowsPresentedPosition) {
    // The ranker always says "second"; which track wins depends on the order given.
    auto ranker = test::scripted("ranker", {{"rank", "The second, because it is cheaper."}});
    const auto abc = select_final(item(), {ok_track("track-1", "alpha", "A:"), ok_track("track-2", "beta", "B:"),
                                           ok_track("track-3", "gamma", "C:")}, &ranker);
    EXPECT_EQ(abc.chosen_track, "beta");
    EXPECT_EQ(abc.chosen_label, "track-2");
    EXPECT_EQ(abc.choice_index, 2);
    EXPECT_EQ(abc.rationale, "it is cheaper.");
    EXPECT_EQ(abc.advice.recommendations.front(), "B: greet within a minute");

    const auto cab = select_final(item(), {ok_track("track-3", "gamma", "C:"), ok_track("track-1", "alpha", "A:"),
                                           ok_track("track-2", "beta", "B:")}, &ranker);
    EXPECT_EQ(cab.chosen_track, "alpha");
    EXPECT_EQ(ranker.requests().at(0).tag, "rank/" + item().issue_id);
}

TEST(SelectFinal, FailedTracksAreSkipped) {
    auto ranker = test::scripted("ranker", {{"rank", R"({"choice": 2, "reason": "r"})"}});
    const auto f = select_final(item(), {ok_track("track-1", "alpha", "A:"), failed_track("track-2", "beta"),
                                         ok_track("track-3", "gamma", "C:")}, &ranker);
    EXPECT_EQ(f.contenders.size(), 2u);
    EXPECT_EQ(f.chosen_track, "gamma");
    ASSERT_EQ(f.failed_tracks.size(), 1u);
    EXPECT_EQ(f.failed_tracks[0].backend, "beta");
    EXPECT_NE(ranker.requests().at(0).user.find("which one of the two - first or second"), std::string::npos);
}

TEST(SelectFinal, SoleSurvivorNeedsNoRanker) {
    const auto f = select_final(item(), {failed_track("track-1", "alpha"), ok_track("track-2", "beta", "B:")}, nullptr);
    EXPECT_EQ(f.chosen_track, "beta");
    EXPECT_EQ(f.rationale, kSoleSurvivor);
    EXPECT_THROW(select_final(item(), {failed_track("track-1", "alpha")}, nullptr), TrackFailure);
    EXPECT_THROW(select_final(item(), {ok_track("track-1", "a", "A:"), ok_track("track-2", "b", "B:")}, nullptr),
                 InvalidConfig);
}

TEST(SelectFinal, AmbiguousReplyIsRepaired) {
    auto ranker = test::scripted("ranker", {{"rank", {"Both are fine.", "The first and third.", R"({"choice": 1, "reason": "ok"})"}}});
    RepairLog log;
    const auto f = select_final(item(), {ok_track("track-1", "alpha", "A:"), ok_track("track-2", "beta", "B:")},
                                &ranker, 0.2, &log);
    EXPECT_EQ(f.chosen_track, "alpha");
    EXPECT_EQ(log.events().size(), 2u);
}

TEST(FinalAdviceJson, RoundTrip) {
    auto ranker = test::scripted("ranker", {{"rank", "first because"}});
    const auto f = select_final(item(), {ok_track("track-1", "alpha", "A:"), failed_track("track-2", "beta"),
                                         ok_track("track-3", "gamma", "C:")}, &ranker);
    EXPECT_EQ(final_advice_from_json(to_json(f)), f);
}
