#pragma once

#include <string>
#include <utility>
#include <vector>

#include "revmine/advice_loop.hpp"

namespace revmine {

struct FailedTrack {
    std::string label;
    std::string backend;
    std::string error;

    bool operator==(const FailedTrack&) const = default;
};

struct FinalAdvice {
    std::string issue_id;
    std::string theme;
    std::string issue;
    std::string chosen_track;   // backend name
    std::string chosen_label;   // "track-2"
    int choice_index = 1;       // 1-based among `contenders`
    AdviceCandidate advice;
    std::string rationale;
    std::vector<EvaluatedAdvice> contenders;
    std::vector<FailedTrack> failed_tracks;

    bool operator==(const FinalAdvice&) const = default;
};

inline const std::string kSoleSurvivor = "sole survivor";

// "first", "second", ... (1-based).
std::string ordinal_word(int n);

/// Contenders are labelled first, second, ... in the order given.
ChatRequest build_ranking_prompt(const IssueItem& item, const std::vector<EvaluatedAdvice>& contenders);

struct RankChoice {
    int index = 0;
    std::string rationale;
};

/// Reads {"choice": n, "reason": ...} when present, otherwise a single
/// ordinal ("second", "option 2") from free text. Throws AmbiguousChoice
/// when there is no ordinal, more than one, or one beyond `n_contenders`.
RankChoice parse_choice(const std::string& raw, int n_contenders);

/// Picks the final advice among the surviving tracks. With one survivor no
/// ranker call is made and `ranker` may be null.
FinalAdvice select_final(const IssueItem& item, const std::vector<TrackOutcome>& outcomes, Backend* ranker,
                         double temperature = kDefaultAgentTemperature, RepairLog* log = nullptr);

Json to_json(const FinalAdvice& f);
FinalAdvice final_advice_from_json(const Json& j);

}  // namespace revmine
