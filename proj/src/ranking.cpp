#include "revmine/ranking.hpp"

#include <regex>
#include <set>

#include "revmine/prompts.hpp"

namespace revmine {

namespace {
constexpr std::string_view kOrdinals[] = {"first", "second", "third", "fourth", "fifth"};
}

std::string ordinal_word(int n) {
    if (n >= 1 && n <= static_cast<int>(std::size(kOrdinals))) return std::string(kOrdinals[n - 1]);
    return std::to_string(n) + "th";
}

ChatRequest build_ranking_prompt(const IssueItem& item, const std::vector<EvaluatedAdvice>& contenders) {
    const auto n = contenders.size();
    if (n < 2 || n > std::size(kOrdinals))
        throw InvalidConfig("build_ranking_prompt: need 2 to 5 contenders, got " + std::to_string(n));

    std::string header;
    if (n == 2) {
        header = std::string(prompts::get("ranking_two").text);
    } else if (n == 3) {
        header = std::string(prompts::get("ranking_three").text);
    } else {
        // Same wording as the three-way prompt with the count and ordinals widened.
        std::string ordinals;
        for (std::size_t i = 1; i <= n; ++i) {
            if (i > 1) ordinals += (i == n) ? " or " : ", ";
            ordinals += ordinal_word(static_cast<int>(i));
        }
        header = std::string(prompts::get("ranking_three").text);
        header = std::regex_replace(header, std::regex("three recommendations"),
                                    prompts::count_word(n) + " recommendations");
        header = std::regex_replace(header, std::regex("one of the three - first, second or third"),
                                    "one of the " + prompts::count_word(n) + " - " + ordinals);
    }

    std::string blocks;
    std::string choices;
    for (std::size_t i = 0; i < n; ++i) {
        std::string label = ordinal_word(static_cast<int>(i + 1));
        label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
        blocks += label + " recommendation:\n" +
                  render_recommendations(contenders[i].final_candidate().recommendations) + "\n\n";
        if (i) choices += (i + 1 == n) ? " or " : ", ";
        choices += std::to_string(i + 1);
    }

    ChatRequest request;
    request.user = header + prompts::render(prompts::get("ranking_body").text, {{"issue", item.issue},
                                                                                 {"theme", item.theme},
                                                                                 {"contenders", blocks},
                                                                                 {"choices", choices}});
    request.temperature_override = kDefaultAgentTemperature;
    request.tag = "rank/" + item.issue_id;
    return request;
}

namespace {

std::optional<int> ordinal_value(const std::string& word) {
    const std::string w = to_lower_ascii(word);
    for (std::size_t i = 0; i < std::size(kOrdinals); ++i)
        if (w == kOrdinals[i]) return static_cast<int>(i + 1);
    if (w.size() == 1 && w[0] >= '1' && w[0] <= '5') return w[0] - '0';
    return std::nullopt;
}

std::string after_because(const std::string& text) {
    static const std::regex because(R"(\bbecause\b\s*)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, because)) return trim(m.suffix().str());
    return trim(text);
}

}  // namespace

RankChoice parse_choice(const std::string& raw, int n_contenders) {
    if (n_contenders < 1) throw InvalidConfig("parse_choice: no contenders");
    const std::string text = sanitize(raw);

    // Structured reply.
    try {
        Json j = extract_json(text);
        if (j.is_object() && j.contains("choice")) {
            const Json& c = j["choice"];
            std::optional<int> idx;
            if (c.is_number_integer()) idx = c.get<int>();
            else if (c.is_number() && c.get<double>() == std::floor(c.get<double>())) idx = static_cast<int>(c.get<double>());
            else if (c.is_string()) idx = ordinal_value(trim(c.get<std::string>()));
            if (!idx || *idx < 1 || *idx > n_contenders)
                throw AmbiguousChoice("choice " + c.dump() + " does not name one of " + std::to_string(n_contenders) +
                                      " options");
            std::string reason;
            for (const char* key : {"reason", "rationale", "explanation"})
                if (j.contains(key) && j[key].is_string()) {
                    reason = j[key].get<std::string>();
                    break;
                }
            return {*idx, reason};
        }
    } catch (const NoJsonFound&) {
    } catch (const ParseError&) {
    }

    // Free text: exactly one distinct ordinal must be named.
    static const std::regex words(R"(\b(first|second|third|fourth|fifth)\b)", std::regex::icase);
    static const std::regex numbered(R"(\b(?:option|recommendation|choice|number|no\.?)\s*#?\s*([1-5])\b|#([1-5])\b)",
                                     std::regex::icase);
    std::set<int> found;
    for (std::sregex_iterator it(text.begin(), text.end(), words), end; it != end; ++it)
        found.insert(*ordinal_value((*it)[1].str()));
    for (std::sregex_iterator it(text.begin(), text.end(), numbered), end; it != end; ++it)
        found.insert(std::stoi((*it)[1].matched ? (*it)[1].str() : (*it)[2].str()));
    if (found.empty() && text.size() == 1) {
        if (auto v = ordinal_value(text)) found.insert(*v);
    }
    if (found.size() != 1)
        throw AmbiguousChoice(found.empty() ? "reply names no option" : "reply names more than one option");
    const int idx = *found.begin();
    if (idx > n_contenders)
        throw AmbiguousChoice("reply names option " + std::to_string(idx) + " of " + std::to_string(n_contenders));
    return {idx, after_because(text)};
}

FinalAdvice select_final(const IssueItem& item, const std::vector<TrackOutcome>& outcomes, Backend* ranker,
                         double temperature, RepairLog* log) {
    FinalAdvice out;
    out.issue_id = item.issue_id;
    out.theme = item.theme;
    out.issue = item.issue;
    std::vector<std::string> backends;
    for (const auto& o : outcomes) {
        if (o.ok()) {
            out.contenders.push_back(*o.advice);
            backends.push_back(o.backend);
        } else {
            out.failed_tracks.push_back({o.label, o.backend, o.error});
        }
    }
    if (out.contenders.empty()) throw TrackFailure("issue " + item.issue_id + ": every track failed");

    RankChoice choice{1, kSoleSurvivor};
    if (out.contenders.size() > 1) {
        if (ranker == nullptr) throw InvalidConfig("select_final: several contenders but no ranker backend");
        ChatRequest request = build_ranking_prompt(item, out.contenders);
        request.temperature_override = temperature;
        const int n = static_cast<int>(out.contenders.size());
        choice = complete_parsed(
            *ranker, request, [&](const std::string& text) { return parse_choice(text, n); },
            "Respond with only the JSON object {\"choice\": <number of the best option>, \"reason\": "
            "\"<short reason>\"}.",
            log);
    }
    const auto& chosen = out.contenders[static_cast<std::size_t>(choice.index - 1)];
    out.choice_index = choice.index;
    out.rationale = choice.rationale;
    out.chosen_track = backends[static_cast<std::size_t>(choice.index - 1)];
    out.chosen_label = chosen.track;
    out.advice = chosen.final_candidate();
    return out;
}

Json to_json(const FinalAdvice& f) {
    Json contenders = Json::array();
    for (const auto& c : f.contenders) contenders.push_back(to_json(c));
    Json failed = Json::array();
    for (const auto& t : f.failed_tracks) failed.push_back({{"label", t.label}, {"backend", t.backend}, {"error", t.error}});
    return {{"issue_id", f.issue_id},
            {"theme", f.theme},
            {"issue", f.issue},
            {"chosen_track", f.chosen_track},
            {"chosen_label", f.chosen_label},
            {"choice_index", f.choice_index},
            {"advice", to_json(f.advice)},
            {"rationale", f.rationale},
            {"contenders", contenders},
            {"failed_tracks", failed}};
}

FinalAdvice final_advice_from_json(const Json& j) {
    FinalAdvice f;
    f.issue_id = j.at("issue_id").get<std::string>();
    f.theme = j.at("theme").get<std::string>();
    f.issue = j.at("issue").get<std::string>();
    f.chosen_track = j.at("chosen_track").get<std::string>();
    f.chosen_label = j.at("chosen_label").get<std::string>();
    f.choice_index = j.at("choice_index").get<int>();
    f.advice = advice_candidate_from_json(j.at("advice"));
    f.rationale = j.at("rationale").get<std::string>();
    for (const auto& c : j.at("contenders")) f.contenders.push_back(evaluated_advice_from_json(c));
    for (const auto& t : j.at("failed_tracks"))
        f.failed_tracks.push_back(
            {t.at("label").get<std::string>(), t.at("backend").get<std::string>(), t.at("error").get<std::string>()});
    return f;
}

}  // namespace revmine
