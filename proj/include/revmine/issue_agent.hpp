#pragma once

#include <string>
#include <vector>

#include "revmine/clustering.hpp"
#include "revmine/gateway.hpp"

namespace revmine {

inline constexpr std::size_t kMaxIssuesPerTheme = 5;
inline constexpr double kIssueTemperature = 0.0;

struct Theme {
    std::string key;   // "a", "b", ...
    std::string name;
    std::vector<std::string> issues;

    bool operator==(const Theme&) const = default;
};

// Invariants: every theme has 1..5 issues, no issue appears under two
// themes, theme names are distinct after trimming and case-folding.
struct IssueMap {
    std::vector<Theme> themes;

    bool operator==(const IssueMap&) const = default;
};

struct IssueItem {
    std::string theme;
    std::string issue;
    std::string issue_id;

    bool operator==(const IssueItem&) const = default;
};

// Stable content id of a (theme, issue) pair.
std::string issue_id_for(const std::string& theme, const std::string& issue);
IssueItem make_issue_item(const std::string& theme, const std::string& issue);

ChatRequest build_issue_prompt(const RepresentativeSet& representatives);

/// Validates the model's theme/issue object and repairs rule violations:
/// duplicate issues stay with the first theme that lists them, themes with
/// the same name are merged, long themes are cut to five issues and emptied
/// themes are dropped. Every repair is appended to `repairs`.
///
/// Throws SchemaError when the structure cannot be recognised.
IssueMap parse_issue_map(const Json& raw, std::vector<std::string>* repairs = nullptr);

/// Theme-major, issue-minor.
std::vector<IssueItem> flatten_issues(const IssueMap& map);

bool satisfies_invariants(const IssueMap& map);

// The `{"a": {"theme": ..., "issues": [...]}, ...}` shape the agent emits.
OrderedJson to_prompt_json(const IssueMap& map);

// Prompt + completion + parse, with JSON repair-retry.
IssueMap run_issue_agent(Backend& backend, const RepresentativeSet& representatives,
                         std::optional<double> temperature, std::vector<std::string>* repairs,
                         RepairLog* log, Json* raw_out = nullptr);

Json to_json(const IssueItem& item);
IssueItem issue_item_from_json(const Json& j);

}  // namespace revmine
