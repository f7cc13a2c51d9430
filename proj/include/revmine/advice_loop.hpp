#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "revmine/gateway.hpp"
#include "revmine/issue_agent.hpp"

namespace revmine {

inline constexpr int kMinRecommendations = 3;
inline constexpr int kMaxRecommendations = 4;
inline constexpr double kDefaultAgentTemperature = 0.2;

// In-loop rubric: specificity, relevance, actionability, concision, each 1..5.
struct RubricScores {
    int specificity = 1;
    int relevance = 1;
    int actionability = 1;
    int concision = 1;

    Eigen::Vector4d as_vector() const {
        return {double(specificity), double(relevance), double(actionability), double(concision)};
    }
    bool operator==(const RubricScores&) const = default;
};

struct LoopConfig {
    Eigen::Vector4d weights = Eigen::Vector4d::Constant(0.25);
    double eta = 3.5;
    int t_max = 3;

    // Throws InvalidConfig unless weights are nonnegative and sum to 1
    // (within 1e-9), 1 <= eta <= 5 and t_max >= 1.
    void validate() const;
    bool operator==(const LoopConfig&) const = default;
};

/// w_S·S + w_R·R + w_A·A + w_C·C.
double weighted_score(const RubricScores& scores, const Eigen::Vector4d& weights);

struct AdviceCandidate {
    std::string issue_id;
    std::string track;
    int iteration = 1;
    std::vector<std::string> recommendations;
    std::string raw_text;

    bool operator==(const AdviceCandidate&) const = default;
};

struct EvaluationRecord {
    RubricScores scores;
    std::string feedback;
    double weighted = 0.0;
    bool passed = false;

    bool operator==(const EvaluationRecord&) const = default;
};

enum class StopReason { threshold, t_max };
std::string to_string(StopReason reason);

struct TraceEntry {
    AdviceCandidate candidate;
    // Absent when the loop runs without an evaluator.
    std::optional<EvaluationRecord> evaluation;

    bool operator==(const TraceEntry&) const = default;
};

struct EvaluatedAdvice {
    std::string issue_id;
    std::string track;
    std::vector<TraceEntry> trace;
    StopReason stop_reason = StopReason::t_max;
    bool evaluated = true;

    const AdviceCandidate& final_candidate() const { return trace.back().candidate; }
    const std::optional<EvaluationRecord>& final_eval() const { return trace.back().evaluation; }
    bool operator==(const EvaluatedAdvice&) const = default;
};

// Numbered "1. ..." rendering used in evaluator, ranker and judge prompts.
std::string render_recommendations(const std::vector<std::string>& recommendations);

ChatRequest build_recommendation_prompt(const IssueItem& item, const std::optional<std::string>& feedback,
                                        const std::optional<AdviceCandidate>& prior);

/// List items of a reply: numbered ("1." / "1)" / "(1)") or bulleted
/// ("-", "*", "•") lines, with unmarked lines folded into the preceding item.
/// Text with no markers comes back as a single block.
std::vector<std::string> parse_list_items(const std::string& raw);

/// Recommendations from a reply; more than four are cut to four, fewer than
/// three throw TooFewRecommendations.
AdviceCandidate parse_advice(const std::string& raw);

ChatRequest build_evaluation_prompt(const AdviceCandidate& advice, const IssueItem& item);

/// Accepts {"SRAC": [s, r, a, c]}, {"S": .., "R": .., ...} or the spelled-out
/// rubric names, with "feedback" or "explanation" text. The weighted score is
/// always recomputed here.
EvaluationRecord parse_evaluation(const Json& raw, const LoopConfig& cfg = {});

struct LoopOptions {
    bool evaluate = true;
    double recommendation_temperature = kDefaultAgentTemperature;
    double evaluation_temperature = kDefaultAgentTemperature;
    RepairLog* repair_log = nullptr;
};

// Raised by refine(); carries whatever trace was built before the failure.
class RefineFailure : public Error {
public:
    RefineFailure(const Error& cause, EvaluatedAdvice partial)
        : Error(cause.kind(), cause.what()), partial_(std::move(partial)) {}
    const EvaluatedAdvice& partial() const noexcept { return partial_; }

private:
    EvaluatedAdvice partial_;
};

/// Generate, evaluate, revise until the weighted score reaches eta or t_max
/// iterations have run. `track` labels the tags and artifacts ("track-1").
EvaluatedAdvice refine(const IssueItem& item, Backend& recommender, Backend& evaluator, const LoopConfig& cfg,
                       const std::string& track, const LoopOptions& options = {});

struct TrackSpec {
    std::string label;   // "track-1"
    Backend* recommender = nullptr;
    Backend* evaluator = nullptr;
};

struct TrackOutcome {
    std::string label;
    std::string backend;
    std::optional<EvaluatedAdvice> advice;
    std::string error;

    bool ok() const { return advice.has_value(); }
};

/// Runs every track for one issue, concurrently when `parallel` is set.
/// Outcomes come back in track order.
std::vector<TrackOutcome> run_tracks(const IssueItem& item, const std::vector<TrackSpec>& tracks,
                                     const LoopConfig& cfg, const LoopOptions& options, bool parallel);

// An issue needs at least min(2, tracks) surviving tracks to go on to ranking.
bool enough_tracks(const std::vector<TrackOutcome>& outcomes);

Json to_json(const RubricScores& s);
Json to_json(const AdviceCandidate& c);
Json to_json(const EvaluationRecord& e);
Json to_json(const TraceEntry& t);
Json to_json(const EvaluatedAdvice& a);
AdviceCandidate advice_candidate_from_json(const Json& j);
EvaluationRecord evaluation_record_from_json(const Json& j);
EvaluatedAdvice evaluated_advice_from_json(const Json& j);

}  // namespace revmine
