#pragma once

#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

namespace revmine::test {

// Flattens a request into the text stored in a golden file.
inline std::string dump_request(const ChatRequest& r) {
    std::string out = "[tag] " + r.tag + "\n";
    if (r.temperature_override) out += "[temperature] " + std::to_string(*r.temperature_override) + "\n";
    if (r.system) out += "[system]\n" + *r.system + "\n";
    out += "[user]\n" + r.user + "\n";
    return out;
}

// Compares against tests/golden/<name>; REVMINE_UPDATE_GOLDEN=1 rewrites it.
inline ::testing::AssertionResult matches_golden(const std::string& name, const std::string& actual) {
    const auto path = golden(name);
    if (const char* update = std::getenv("REVMINE_UPDATE_GOLDEN"); update && std::string(update) == "1") {
        write_file_atomic(path, actual);
        return ::testing::AssertionSuccess();
    }
    if (!std::filesystem::exists(path)) return ::testing::AssertionFailure() << "missing golden " << path;
    const std::string expected = read_file(path);
    if (expected == actual) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "golden " << name << " differs\n--- expected\n"
                                         << expected << "\n--- actual\n"
                                         << actual;
}

}  // namespace revmine::test
