#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace revmine::prompts {

struct PromptTemplate {
    std::string_view id;
    int version;
    std::string_view text;
};

// Throws std::out_of_range for an unknown id.
const PromptTemplate& get(std::string_view id);
const std::vector<PromptTemplate>& all();

// "issue_agent@1"
std::string versioned_id(const PromptTemplate& t);

// Replaces each "{name}" for the given slots; other braces are left alone.
std::string render(std::string_view text, const std::map<std::string, std::string>& slots);

// "one", "two", ... "ten", then digits.
std::string count_word(std::size_t n);

}  // namespace revmine::prompts
