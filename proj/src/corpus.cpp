#include "revmine/corpus.hpp"

#include <cmath>
#include <unordered_set>

#include "revmine/errors.hpp"

namespace revmine {

CorpusFormat parse_corpus_format(const std::string& name) {
    if (name == "yelp-jsonl" || name == "yelp" || name == "jsonl") return CorpusFormat::yelp_jsonl;
    if (name == "csv") return CorpusFormat::csv;
    throw InvalidConfig("unknown corpus format '" + name + "'");
}

std::string to_string(CorpusFormat format) {
    return format == CorpusFormat::csv ? "csv" : "yelp-jsonl";
}

namespace {

struct RawRecord {
    std::size_t line_no;
    std::string id;
    std::string business_id;
    std::string stars;
    std::string text;
    std::string date;
};

int parse_stars(const std::string& raw_field, std::size_t line_no) {
    const std::string field = trim(raw_field);
    std::size_t consumed = 0;
    double value = 0;
    try {
        value = std::stod(field, &consumed);
    } catch (const std::exception&) {
        throw MalformedRecord(line_no, "stars is not a number: '" + field + "'");
    }
    if (consumed != field.size())
        throw MalformedRecord(line_no, "stars is not a number: '" + field + "'");
    if (!std::isfinite(value) || value != std::floor(value))
        throw MalformedRecord(line_no, "stars must be an integer");
    if (value < 1 || value > 5)
        throw MalformedRecord(line_no, "stars out of range [1,5]: " + field);
    return static_cast<int>(value);
}

Review make_review(const RawRecord& raw) {
    Review r;
    if (raw.id.empty()) throw MalformedRecord(raw.line_no, "missing review id");
    r.id = raw.id;
    r.business_id = raw.business_id;
    r.stars = parse_stars(raw.stars, raw.line_no);
    r.text = trim(raw.text);
    if (r.text.empty()) throw MalformedRecord(raw.line_no, "empty review text");
    if (!raw.date.empty()) r.date = raw.date;
    return r;
}

RawRecord raw_from_json_line(const std::string& line, std::size_t line_no) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");
    RawRecord raw{line_no, {}, {}, {}, {}, {}};
    auto id = j.find("review_id");
    if (id == j.end() || !id->is_string()) throw MalformedRecord(line_no, "missing string field review_id");
    raw.id = id->get<std::string>();
    auto stars = j.find("stars");
    if (stars == j.end() || !stars->is_number()) throw MalformedRecord(line_no, "missing numeric field stars");
    raw.stars = stars->dump();
    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) throw MalformedRecord(line_no, "missing string field text");
    raw.text = text->get<std::string>();
    if (auto b = j.find("business_id"); b != j.end() && b->is_string()) raw.business_id = b->get<std::string>();
    if (auto d = j.find("date"); d != j.end() && d->is_string()) raw.date = d->get<std::string>();
    return raw;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (field_started || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                field.clear();
                row.clear();
                field_started = false;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

Corpus parse_reviews(std::string_view bytes, CorpusFormat format, const LoadOptions& options,
                     std::vector<SkippedRecord>* skipped) {
    Corpus corpus;
    corpus.source_label = options.source_label.value_or("corpus");
    corpus.domain_label = options.domain_label;

    std::unordered_set<std::string> seen;
    auto accept = [&](const auto& produce, std::size_t line_no) {
        try {
            Review r = produce();
            if (!seen.insert(r.id).second) {
                log_warn("duplicate review id '" + r.id + "' on line " + std::to_string(line_no) +
                         " dropped");
                return;
            }
            corpus.reviews.push_back(std::move(r));
        } catch (const MalformedRecord& e) {
            if (!options.lenient) throw;
            if (skipped) skipped->push_back({e.line_no(), e.reason()});
        }
    };

    if (format == CorpusFormat::yelp_jsonl) {
        auto lines = split_lines(bytes);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            accept([&] { return make_review(raw_from_json_line(lines[i], i + 1)); }, i + 1);
        }
        return corpus;
    }

    auto rows = parse_csv(bytes);
    if (rows.empty()) return corpus;
    const auto& header = rows.front();
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        return std::nullopt;
    };
    auto id_col = column("id");
    auto stars_col = column("stars");
    auto text_col = column("text");
    if (!id_col || !stars_col || !text_col)
        throw MalformedRecord(1, "csv header must contain id, stars and text columns");
    auto business_col = column("business_id");
    auto date_col = column("date");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        // Row numbers count records, not physical lines, since quoted fields may span lines.
        std::size_t line_no = r + 1;
        accept(
            [&] {
                if (row.size() != header.size())
                    throw MalformedRecord(line_no, "expected " + std::to_string(header.size()) +
                                                       " fields, got " + std::to_string(row.size()));
                RawRecord raw{line_no, row[*id_col], business_col ? row[*business_col] : "",
                              row[*stars_col], row[*text_col], date_col ? row[*date_col] : ""};
                return make_review(raw);
            },
            line_no);
    }
    return corpus;
}

Corpus load_reviews(const std::filesystem::path& path, CorpusFormat format,
                    const LoadOptions& options, std::vector<SkippedRecord>* skipped) {
    if (!std::filesystem::is_regular_file(path))
        throw FileNotFound("review file not found: " + path.string());
    LoadOptions opts = options;
    if (!opts.source_label) opts.source_label = path.stem().string();
    return parse_reviews(read_file(path), format, opts, skipped);
}

Corpus filter_by_stars(const Corpus& corpus, const std::set<int>& allowed) {
    Corpus out;
    out.source_label = corpus.source_label;
    out.domain_label = corpus.domain_label;
    for (const auto& r : corpus.reviews)
        if (allowed.contains(r.stars)) out.reviews.push_back(r);
    return out;
}

Json to_json(const Review& review) {
    Json j = {{"id", review.id},
              {"business_id", review.business_id},
              {"stars", review.stars},
              {"text", review.text}};
    j["date"] = review.date ? Json(*review.date) : Json(nullptr);
    return j;
}

Json to_json(const Corpus& corpus) {
    Json reviews = Json::array();
    for (const auto& r : corpus.reviews) reviews.push_back(to_json(r));
    return {{"source_label", corpus.source_label},
            {"domain_label", corpus.domain_label},
            {"reviews", std::move(reviews)}};
}

Corpus corpus_from_json(const Json& j) {
    Corpus c;
    c.source_label = j.at("source_label").get<std::string>();
    c.domain_label = j.at("domain_label").get<std::string>();
    for (const auto& r : j.at("reviews")) {
        Review review;
        review.id = r.at("id").get<std::string>();
        review.business_id = r.at("business_id").get<std::string>();
        review.stars = r.at("stars").get<int>();
        review.text = r.at("text").get<std::string>();
        if (!r.at("date").is_null()) review.date = r.at("date").get<std::string>();
        c.reviews.push_back(std::move(review));
    }
    return c;
}

}  // namespace revmine
