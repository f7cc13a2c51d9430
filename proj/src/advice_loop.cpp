#include "revmine/advice_loop.hpp"

#include <cmath>
#include <future>
#include <regex>

#include "revmine/prompts.hpp"

namespace revmine {

void LoopConfig::validate() const {
    if ((weights.array() < 0.0).any()) throw InvalidConfig("loop weights must be nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw InvalidConfig("loop weights must sum to 1");
    if (!(eta >= 1.0 && eta <= 5.0)) throw InvalidConfig("eta must lie in [1, 5]");
    if (t_max < 1) throw InvalidConfig("t_max must be >= 1");
}

double weighted_score(const RubricScores& scores, const Eigen::Vector4d& weights) {
    return weights.dot(scores.as_vector());
}

std::string to_string(StopReason reason) { return reason == StopReason::threshold ? "threshold" : "t_max"; }

std::string render_recommendations(const std::vector<std::string>& recommendations) {
    std::string out;
    for (std::size_t i = 0; i < recommendations.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + recommendations[i];
    }
    return out;
}

ChatRequest build_recommendation_prompt(const IssueItem& item, const std::optional<std::string>& feedback,
                                        const std::optional<AdviceCandidate>& prior) {
    ChatRequest request;
    request.user = prompts::render(prompts::get("recommendation").text,
                                   {{"theme", item.theme}, {"issue", item.issue}});
    const bool revise = prior.has_value() && feedback.has_value();
    if (revise && trim(*feedback).empty()) {
        log_warn("empty evaluator feedback for issue " + item.issue_id + "; sending the first-round prompt");
    } else if (revise) {
        request.user += prompts::render(prompts::get("recommendation_revision").text,
                                        {{"prior", render_recommendations(prior->recommendations)},
                                         {"feedback", trim(*feedback)}});
    }
    request.temperature_override = kDefaultAgentTemperature;
    request.tag = "rec";
    return request;
}

std::vector<std::string> parse_list_items(const std::string& raw) {
    static const std::regex marker(R"(^\s*(?:\(?\d{1,2}[.):]|[-*+]|•)\s+(.*)$)");
    const std::string text = sanitize(raw);
    std::vector<std::string> items;
    bool any_marker = false;
    for (const auto& line : split_lines(text)) {
        std::smatch m;
        if (std::regex_match(line, m, marker)) {
            any_marker = true;
            items.push_back(trim(m[1].str()));
        } else if (any_marker && !trim(line).empty()) {
            items.back() += " " + trim(line);
        }
    }
    if (!any_marker) {
        if (trim(text).empty()) return {};
        return {trim(text)};
    }
    std::erase_if(items, [](const std::string& s) { return s.empty(); });
    return items;
}

AdviceCandidate parse_advice(const std::string& raw) {
    AdviceCandidate c;
    c.raw_text = raw;
    c.recommendations = parse_list_items(raw);
    if (c.recommendations.size() < static_cast<std::size_t>(kMinRecommendations))
        throw TooFewRecommendations("found " + std::to_string(c.recommendations.size()) +
                                    " recommendation(s); need 3 to 4 list items");
    if (c.recommendations.size() > static_cast<std::size_t>(kMaxRecommendations)) {
        log_warn("reply had " + std::to_string(c.recommendations.size()) + " recommendations; kept the first 4");
        c.recommendations.resize(kMaxRecommendations);
    }
    return c;
}

ChatRequest build_evaluation_prompt(const AdviceCandidate& advice, const IssueItem& item) {
    ChatRequest request;
    request.user = prompts::render(prompts::get("evaluation").text,
                                   {{"advice", "\n" + render_recommendations(advice.recommendations) + "\n"},
                                    {"issue", item.issue},
                                    {"theme", item.theme},
                                    {"examples", std::string(prompts::get("evaluation_examples").text)}});
    request.temperature_override = kDefaultAgentTemperature;
    request.tag = "eval";
    return request;
}

namespace {

int score_value(const Json& v, const std::string& name) {
    double d = 0;
    if (v.is_number()) {
        d = v.get<double>();
    } else if (v.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = trim(v.get<std::string>());
            d = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw MissingScore("score " + name + " is not a number");
        }
    } else {
        throw MissingScore("score " + name + " is not a number");
    }
    if (d != std::floor(d) || d < 1 || d > 5)
        throw ScoreOutOfRange("score " + name + " = " + v.dump() + " is not an integer in 1..5");
    return static_cast<int>(d);
}

const Json* find_any(const Json& obj, std::initializer_list<const char*> names) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string key = to_lower_ascii(it.key());
        for (const char* n : names)
            if (key == n) return &it.value();
    }
    return nullptr;
}

}  // namespace

EvaluationRecord parse_evaluation(const Json& raw, const LoopConfig& cfg) {
    if (!raw.is_object()) throw MissingScore("evaluation reply is not a JSON object");
    EvaluationRecord rec;
    if (const Json* srac = find_any(raw, {"srac", "scores"}); srac && srac->is_array()) {
        if (srac->size() != 4) throw MissingScore("SRAC must hold exactly four scores");
        rec.scores = {score_value((*srac)[0], "S"), score_value((*srac)[1], "R"), score_value((*srac)[2], "A"),
                      score_value((*srac)[3], "C")};
    } else {
        auto get = [&](std::initializer_list<const char*> names, const std::string& label) {
            const Json* v = find_any(raw, names);
            if (v == nullptr) throw MissingScore("missing score " + label);
            return score_value(*v, label);
        };
        rec.scores = {get({"s", "specificity"}, "S"), get({"r", "relevance"}, "R"),
                      get({"a", "actionability"}, "A"), get({"c", "concision", "conciseness"}, "C")};
    }
    if (const Json* fb = find_any(raw, {"feedback", "explanation"}); fb && fb->is_string())
        rec.feedback = fb->get<std::string>();
    rec.weighted = weighted_score(rec.scores, cfg.weights);
    rec.passed = rec.weighted >= cfg.eta;
    return rec;
}

EvaluatedAdvice refine(const IssueItem& item, Backend& recommender, Backend& evaluator, const LoopConfig& cfg,
                       const std::string& track, const LoopOptions& options) {
    cfg.validate();
    EvaluatedAdvice result;
    result.issue_id = item.issue_id;
    result.track = track;
    result.evaluated = options.evaluate;
    const std::string suffix = "/" + track + "/" + item.issue_id;

    std::optional<std::string> feedback;
    std::optional<AdviceCandidate> prior;
    try {
        for (int t = 1; t <= cfg.t_max; ++t) {
            ChatRequest rec_req = build_recommendation_prompt(item, feedback, prior);
            rec_req.tag += suffix;
            rec_req.temperature_override = options.recommendation_temperature;
            AdviceCandidate candidate = complete_parsed(
                recommender, rec_req, parse_advice,
                "Give 3 to 4 recommendations as a numbered list, one per line, and nothing else.",
                options.repair_log);
            candidate.issue_id = item.issue_id;
            candidate.track = recommender.name();
            candidate.iteration = t;

            if (!options.evaluate) {
                result.trace.push_back({std::move(candidate), std::nullopt});
                result.stop_reason = StopReason::t_max;
                return result;
            }

            ChatRequest eval_req = build_evaluation_prompt(candidate, item);
            eval_req.tag += suffix;
            eval_req.temperature_override = options.evaluation_temperature;
            EvaluationRecord evaluation = complete_parsed(
                evaluator, eval_req,
                [&](const std::string& text) { return parse_evaluation(extract_json(text), cfg); },
                kJsonRepairInstruction, options.repair_log);

            const bool passed = evaluation.passed;
            feedback = evaluation.feedback;
            prior = candidate;
            result.trace.push_back({std::move(candidate), std::move(evaluation)});
            if (passed) {
                result.stop_reason = StopReason::threshold;
                return result;
            }
        }
    } catch (const Error& e) {
        throw RefineFailure(e, result);
    }
    result.stop_reason = StopReason::t_max;
    return result;
}

std::vector<TrackOutcome> run_tracks(const IssueItem& item, const std::vector<TrackSpec>& tracks,
                                     const LoopConfig& cfg, const LoopOptions& options, bool parallel) {
    auto run_one = [&](const TrackSpec& spec) {
        TrackOutcome out;
        out.label = spec.label;
        out.backend = spec.recommender->name();
        try {
            out.advice = refine(item, *spec.recommender, *spec.evaluator, cfg, spec.label, options);
        } catch (const Error& e) {
            out.error = e.kind() + ": " + e.what();
            log_warn("issue " + item.issue_id + " " + spec.label + " failed: " + out.error);
        }
        return out;
    };
    std::vector<TrackOutcome> outcomes;
    if (parallel && tracks.size() > 1) {
        std::vector<std::future<TrackOutcome>> futures;
        for (const auto& t : tracks) futures.push_back(std::async(std::launch::async, run_one, std::cref(t)));
        for (auto& f : futures) outcomes.push_back(f.get());
    } else {
        for (const auto& t : tracks) outcomes.push_back(run_one(t));
    }
    return outcomes;
}

bool enough_tracks(const std::vector<TrackOutcome>& outcomes) {
    std::size_t ok = 0;
    for (const auto& o : outcomes) ok += o.ok() ? 1 : 0;
    return ok >= std::min<std::size_t>(2, outcomes.size()) && ok > 0;
}

// ---------------------------------------------------------------------------

Json to_json(const RubricScores& s) {
    return {{"S", s.specificity}, {"R", s.relevance}, {"A", s.actionability}, {"C", s.concision}};
}

Json to_json(const AdviceCandidate& c) {
    return {{"issue_id", c.issue_id},
            {"track", c.track},
            {"iteration", c.iteration},
            {"recommendations", c.recommendations},
            {"raw_text", c.raw_text}};
}

Json to_json(const EvaluationRecord& e) {
    return {{"scores", to_json(e.scores)}, {"feedback", e.feedback}, {"weighted", e.weighted}, {"passed", e.passed}};
}

Json to_json(const TraceEntry& t) {
    return {{"candidate", to_json(t.candidate)},
            {"evaluation", t.evaluation ? to_json(*t.evaluation) : Json(nullptr)}};
}

Json to_json(const EvaluatedAdvice& a) {
    Json trace = Json::array();
    for (const auto& t : a.trace) trace.push_back(to_json(t));
    return {{"issue_id", a.issue_id},
            {"track", a.track},
            {"evaluated", a.evaluated},
            {"stop_reason", to_string(a.stop_reason)},
            {"iterations", a.trace.size()},
            {"trace", trace}};
}

AdviceCandidate advice_candidate_from_json(const Json& j) {
    return {j.at("issue_id").get<std::string>(), j.at("track").get<std::string>(), j.at("iteration").get<int>(),
            j.at("recommendations").get<std::vector<std::string>>(), j.at("raw_text").get<std::string>()};
}

EvaluationRecord evaluation_record_from_json(const Json& j) {
    const Json& s = j.at("scores");
    return {{s.at("S").get<int>(), s.at("R").get<int>(), s.at("A").get<int>(), s.at("C").get<int>()},
            j.at("feedback").get<std::string>(),
            j.at("weighted").get<double>(),
            j.at("passed").get<bool>()};
}

EvaluatedAdvice evaluated_advice_from_json(const Json& j) {
    EvaluatedAdvice a;
    a.issue_id = j.at("issue_id").get<std::string>();
    a.track = j.at("track").get<std::string>();
    a.evaluated = j.at("evaluated").get<bool>();
    a.stop_reason = j.at("stop_reason").get<std::string>() == "threshold" ? StopReason::threshold : StopReason::t_max;
    for (const auto& t : j.at("trace")) {
        TraceEntry e{advice_candidate_from_json(t.at("candidate")), std::nullopt};
        if (!t.at("evaluation").is_null()) e.evaluation = evaluation_record_from_json(t.at("evaluation"));
        a.trace.push_back(std::move(e));
    }
    return a;
}

}  // namespace revmine
