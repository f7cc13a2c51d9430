#include "revmine/issue_agent.hpp"

#include <set>

#include "revmine/prompts.hpp"

namespace revmine {

std::string issue_id_for(const std::string& theme, const std::string& issue) {
    return sha256_hex(theme + '\x1f' + issue).substr(0, 16);
}

IssueItem make_issue_item(const std::string& theme, const std::string& issue) {
    return {theme, issue, issue_id_for(theme, issue)};
}

ChatRequest build_issue_prompt(const RepresentativeSet& representatives) {
    if (representatives.entries.empty())
        throw InvalidConfig("build_issue_prompt: no representative reviews");
    std::string reviews;
    for (std::size_t i = 0; i < representatives.entries.size(); ++i) {
        if (i) reviews += "\n\n";
        reviews += "\"" + representatives.entries[i].review_text + "\"";
    }
    const auto n = representatives.entries.size();
    ChatRequest request;
    request.user = prompts::render(prompts::get("issue_agent").text,
                                   {{"count", prompts::count_word(n)},
                                    {"review_noun", n == 1 ? "review" : "reviews"},
                                    {"reviews", reviews}});
    request.temperature_override = kIssueTemperature;
    request.tag = "issue";
    return request;
}

namespace {

std::string fold(const std::string& s) { return to_lower_ascii(trim(s)); }

const Json* find_key_ci(const Json& obj, const std::string& key) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (to_lower_ascii(it.key()) == key) return &it.value();
    return nullptr;
}

void note(std::vector<std::string>* repairs, std::string message) {
    log_warn("issue map repair: " + message);
    if (repairs) repairs->push_back(std::move(message));
}

std::string key_for(std::size_t index) {
    std::string key;
    std::size_t n = index;
    do {
        key.insert(key.begin(), static_cast<char>('a' + n % 26));
        n = n / 26;
    } while (n-- > 0);
    return key;
}

}  // namespace

IssueMap parse_issue_map(const Json& raw, std::vector<std::string>* repairs) {
    std::vector<std::pair<std::string, const Json*>> entries;
    if (raw.is_object()) {
        // A wrapper such as {"themes": [...]} is unwrapped.
        if (raw.size() == 1 && raw.begin().value().is_array())
            return parse_issue_map(raw.begin().value(), repairs);
        for (auto it = raw.begin(); it != raw.end(); ++it) entries.emplace_back(it.key(), &it.value());
    } else if (raw.is_array()) {
        for (std::size_t i = 0; i < raw.size(); ++i) entries.emplace_back(key_for(i), &raw[i]);
        note(repairs, "themes given as an array; keys assigned in order");
    } else {
        throw SchemaError("$", "expected an object of themes");
    }

    IssueMap map;
    std::set<std::string> seen_issues;
    for (const auto& [key, value] : entries) {
        const std::string path = "$." + key;
        if (!value->is_object()) throw SchemaError(path, "theme entry is not an object");
        const Json* theme = find_key_ci(*value, "theme");
        const Json* issues = find_key_ci(*value, "issues");
        if (theme == nullptr || !theme->is_string()) throw SchemaError(path + ".theme", "missing theme name");
        if (issues == nullptr || !issues->is_array()) throw SchemaError(path + ".issues", "missing issue list");
        const std::string name = trim(theme->get<std::string>());
        if (name.empty()) throw SchemaError(path + ".theme", "empty theme name");

        Theme* target = nullptr;
        for (auto& t : map.themes)
            if (fold(t.name) == fold(name)) target = &t;
        if (target) {
            note(repairs, "theme '" + name + "' repeats '" + target->name + "'; merged");
        } else {
            map.themes.push_back({key, name, {}});
            target = &map.themes.back();
        }

        for (std::size_t i = 0; i < issues->size(); ++i) {
            const Json& issue = (*issues)[i];
            if (!issue.is_string())
                throw SchemaError(path + ".issues[" + std::to_string(i) + "]", "issue is not a string");
            const std::string text = trim(issue.get<std::string>());
            if (text.empty()) {
                note(repairs, "empty issue under '" + name + "' dropped");
                continue;
            }
            if (!seen_issues.insert(fold(text)).second) {
                note(repairs, "duplicate issue '" + text + "' under '" + name + "' dropped");
                continue;
            }
            target->issues.push_back(text);
        }
    }

    for (auto& t : map.themes) {
        if (t.issues.size() > kMaxIssuesPerTheme) {
            note(repairs, "theme '" + t.name + "' had " + std::to_string(t.issues.size()) +
                              " issues; truncated to " + std::to_string(kMaxIssuesPerTheme));
            t.issues.resize(kMaxIssuesPerTheme);
        }
    }
    std::erase_if(map.themes, [&](const Theme& t) {
        if (!t.issues.empty()) return false;
        note(repairs, "theme '" + t.name + "' has no issues; dropped");
        return true;
    });
    if (map.themes.empty()) throw SchemaError("$", "no usable themes");
    return map;
}

std::vector<IssueItem> flatten_issues(const IssueMap& map) {
    std::vector<IssueItem> items;
    for (const auto& t : map.themes)
        for (const auto& i : t.issues) items.push_back(make_issue_item(t.name, i));
    return items;
}

bool satisfies_invariants(const IssueMap& map) {
    std::set<std::string> names;
    std::set<std::string> issues;
    for (const auto& t : map.themes) {
        if (t.issues.empty() || t.issues.size() > kMaxIssuesPerTheme) return false;
        if (!names.insert(fold(t.name)).second) return false;
        for (const auto& i : t.issues)
            if (!issues.insert(fold(i)).second) return false;
    }
    return true;
}

OrderedJson to_prompt_json(const IssueMap& map) {
    OrderedJson out = OrderedJson::object();
    for (const auto& t : map.themes) out[t.key] = {{"theme", t.name}, {"issues", t.issues}};
    return out;
}

IssueMap run_issue_agent(Backend& backend, const RepresentativeSet& representatives,
                         std::optional<double> temperature, std::vector<std::string>* repairs,
                         RepairLog* log, Json* raw_out) {
    ChatRequest request = build_issue_prompt(representatives);
    if (temperature) request.temperature_override = temperature;
    return complete_parsed(
        backend, request,
        [&](const std::string& text) {
            Json raw = extract_json(text);
            std::vector<std::string> local;
            IssueMap map = parse_issue_map(raw, &local);
            if (repairs) repairs->insert(repairs->end(), local.begin(), local.end());
            if (raw_out) *raw_out = raw;
            return map;
        },
        kJsonRepairInstruction, log);
}

Json to_json(const IssueItem& item) {
    return {{"issue_id", item.issue_id}, {"theme", item.theme}, {"issue", item.issue}};
}

IssueItem issue_item_from_json(const Json& j) {
    return {j.at("theme").get<std::string>(), j.at("issue").get<std::string>(), j.at("issue_id").get<std::string>()};
}

}  // namespace revmine
