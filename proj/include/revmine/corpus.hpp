#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "revmine/util.hpp"

namespace revmine {

struct Review {
    std::string id;
    std::string business_id;
    int stars = 0;
    std::string text;
    std::optional<std::string> date;

    bool operator==(const Review&) const = default;
};

struct Corpus {
    std::vector<Review> reviews;
    std::string source_label;
    std::string domain_label = "other";

    std::size_t size() const noexcept { return reviews.size(); }
    bool empty() const noexcept { return reviews.empty(); }
    bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { yelp_jsonl, csv };

CorpusFormat parse_corpus_format(const std::string& name);
std::string to_string(CorpusFormat format);

struct LoadOptions {
    // Lenient mode collects malformed records instead of aborting.
    bool lenient = false;
    std::string domain_label = "other";
    std::optional<std::string> source_label;
};

struct SkippedRecord {
    std::size_t line_no = 0;
    std::string reason;
};

Corpus load_reviews(const std::filesystem::path& path, CorpusFormat format,
                    const LoadOptions& options = {},
                    std::vector<SkippedRecord>* skipped = nullptr);

// Same as load_reviews but over in-memory bytes; `source_label` is required.
Corpus parse_reviews(std::string_view bytes, CorpusFormat format, const LoadOptions& options,
                     std::vector<SkippedRecord>* skipped = nullptr);

Corpus filter_by_stars(const Corpus& corpus, const std::set<int>& allowed);

// RFC 4180 record splitter; quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

Json to_json(const Review& review);
Json to_json(const Corpus& corpus);
Corpus corpus_from_json(const Json& j);

}  // namespace revmine
