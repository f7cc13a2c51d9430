#include "revmine/judge.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "revmine/prompts.hpp"

namespace revmine {

namespace {
constexpr std::array<std::string_view, kNumDimensions> kNames = {
    "actionability", "specificity",    "feasibility", "expected_impact",
    "novelty",       "non_redundancy", "bias",        "reading_clarity"};
constexpr std::array<std::string_view, kNumDimensions> kLabels = {
    "Actionability", "Specificity",    "Feasibility", "Expected impact",
    "Novelty",       "Non-redundancy", "Bias",        "Reading clarity"};

std::size_t index_of(Dimension d) { return static_cast<std::size_t>(d); }

std::string normalize_key(const std::string& key) {
    std::string k = to_lower_ascii(trim(key));
    for (char& c : k)
        if (c == ' ' || c == '-') c = '_';
    return k;
}
}  // namespace

std::string to_string(Dimension d) { return std::string(kNames[index_of(d)]); }

Dimension parse_dimension(const std::string& name) {
    const std::string k = normalize_key(name);
    for (std::size_t i = 0; i < kNumDimensions; ++i)
        if (k == kNames[i]) return kDimensions[i];
    throw InvalidConfig("unknown judge dimension '" + name + "'");
}

double rescale(int raw) {
    if (raw < 1 || raw > 5) throw OutOfRange("rating " + std::to_string(raw) + " is outside 1..5");
    return 100.0 * (raw - 1) / 4.0;
}

DimensionRating make_rating(Dimension d, int raw) { return {d, raw, rescale(raw)}; }

DimensionVector scaled_vector(std::span<const DimensionRating> ratings) {
    std::array<bool, kNumDimensions> seen{};
    DimensionVector v = DimensionVector::Zero();
    for (const auto& r : ratings) {
        const auto i = index_of(r.dimension);
        if (seen[i]) throw DuplicateDimension("dimension " + to_string(r.dimension) + " rated twice");
        seen[i] = true;
        v[static_cast<Eigen::Index>(i)] = r.scaled;
    }
    for (std::size_t i = 0; i < kNumDimensions; ++i)
        if (!seen[i]) throw MissingDimension("dimension " + std::string(kNames[i]) + " not rated");
    return v;
}

double composite(std::span<const DimensionRating> ratings) { return scaled_vector(ratings).mean(); }

ChatRequest build_judge_prompt(const FinalAdvice& advice, const std::string& business_context,
                               const std::string& original_context) {
    auto or_none = [](const std::string& s) { return trim(s).empty() ? std::string("(none)") : s; };
    ChatRequest request;
    request.user = prompts::render(prompts::get("judge").text,
                                   {{"business_context", or_none(business_context)},
                                    {"original_context", or_none(original_context)},
                                    {"recommendation", render_recommendations(advice.advice.recommendations)}});
    request.temperature_override = kJudgeTemperature;
    request.tag = "judge/" + advice.issue_id;
    return request;
}

std::vector<DimensionRating> parse_judge_ratings(const Json& raw) {
    if (!raw.is_object()) throw MissingDimension("judge reply is not a JSON object");
    std::array<const Json*, kNumDimensions> found{};
    for (auto it = raw.begin(); it != raw.end(); ++it) {
        const std::string k = normalize_key(it.key());
        for (std::size_t i = 0; i < kNumDimensions; ++i) {
            if (k != kNames[i]) continue;
            if (found[i]) throw DuplicateDimension("dimension " + k + " given twice");
            found[i] = &it.value();
        }
    }
    std::vector<DimensionRating> ratings;
    for (std::size_t i = 0; i < kNumDimensions; ++i) {
        const std::string name(kNames[i]);
        if (found[i] == nullptr) throw MissingDimension("missing rating for " + name);
        const Json& v = *found[i];
        double d = 0;
        if (v.is_number()) {
            d = v.get<double>();
        } else if (v.is_string()) {
            const std::string s = trim(v.get<std::string>());
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw MissingDimension("rating for " + name + " is not a number");
        } else {
            throw MissingDimension("rating for " + name + " is not a number");
        }
        if (d != std::floor(d) || d < 1 || d > 5)
            throw ScoreOutOfRange("rating for " + name + " = " + v.dump() + " is not an integer in 1..5");
        ratings.push_back(make_rating(kDimensions[i], static_cast<int>(d)));
    }
    return ratings;
}

JudgeRecord judge_advice(Backend& backend, const FinalAdvice& advice, const JudgeContexts& contexts,
                         double temperature, RepairLog* log) {
    ChatRequest request = build_judge_prompt(advice, contexts.business, contexts.original);
    request.temperature_override = temperature;
    JudgeRecord record;
    record.issue_id = advice.issue_id;
    record.judge_backend = backend.name();
    record.ratings = complete_parsed(
        backend, request, [](const std::string& text) { return parse_judge_ratings(extract_json(text)); },
        "Respond again with only the JSON object holding all eight integer ratings from 1 to 5.", log);
    record.composite = composite(record.ratings);
    return record;
}

JudgeReport aggregate(std::vector<JudgeRecord> records, RunMetadata metadata) {
    if (records.empty()) throw EmptyRecords("no judge records to aggregate");
    JudgeReport report;
    Eigen::MatrixXd scaled(static_cast<Eigen::Index>(records.size()), kNumDimensions);
    Eigen::VectorXd composites(static_cast<Eigen::Index>(records.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        scaled.row(row) = scaled_vector(records[r].ratings).transpose();
        composites[row] = composite(records[r].ratings);
    }
    report.per_dimension_means = scaled.colwise().mean().transpose();
    report.overall_composite_mean = composites.mean();
    report.records = std::move(records);
    report.metadata = std::move(metadata);
    return report;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw NonFiniteValue("cannot format number");
    return std::string(buf, ptr);
}

namespace {
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
}  // namespace

std::string report_csv(const JudgeReport& report) {
    const std::string prefix = csv_field(report.metadata.variant) + "," + csv_field(report.metadata.domain_label) + ",";
    std::string out = "variant,domain,dimension,mean\n";
    for (std::size_t i = 0; i < kNumDimensions; ++i)
        out += prefix + std::string(kNames[i]) + "," +
               format_number(report.per_dimension_means[static_cast<Eigen::Index>(i)]) + "\n";
    out += prefix + "composite," + format_number(report.overall_composite_mean) + "\n";
    return out;
}

HeatmapGrid heatmap_grid(std::span<const JudgeReport> reports) {
    HeatmapGrid grid;
    grid.values.resize(static_cast<Eigen::Index>(reports.size()), kNumDimensions);
    for (std::size_t r = 0; r < reports.size(); ++r) {
        grid.variants.push_back(reports[r].metadata.variant);
        grid.domains.push_back(reports[r].metadata.domain_label);
        grid.values.row(static_cast<Eigen::Index>(r)) = reports[r].per_dimension_means.transpose();
    }
    return grid;
}

std::string heatmap_csv(const HeatmapGrid& grid) {
    std::string out = "variant,domain";
    for (auto n : kNames) out += "," + std::string(n);
    out += "\n";
    for (Eigen::Index r = 0; r < grid.values.rows(); ++r) {
        out += csv_field(grid.variants[static_cast<std::size_t>(r)]) + "," +
               csv_field(grid.domains[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < grid.values.cols(); ++c) out += "," + format_number(grid.values(r, c));
        out += "\n";
    }
    return out;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// White (0) to dark blue (100).
std::string ramp(double value) {
    const double t = std::clamp(value / 100.0, 0.0, 1.0);
    auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lerp(247, 8), lerp(251, 48), lerp(255, 107));
    return buf;
}

}  // namespace

std::string heatmap_svg(const HeatmapGrid& grid) {
    constexpr int cell_w = 90, cell_h = 36, left = 190, top = 70;
    const auto rows = static_cast<int>(grid.values.rows());
    const int width = left + cell_w * static_cast<int>(kNumDimensions) + 10;
    const int height = top + cell_h * rows + 10;
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "font-family=\"sans-serif\" font-size=\"12\">\n",
                  width, height);
    out += buf;
    for (std::size_t c = 0; c < kNumDimensions; ++c) {
        const int x = left + cell_w * static_cast<int>(c) + cell_w / 2;
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", x, top - 12,
                      xml_escape(std::string(kLabels[c])).c_str());
        out += buf;
    }
    for (int r = 0; r < rows; ++r) {
        const int y = top + cell_h * r;
        const std::string label = grid.variants[static_cast<std::size_t>(r)] + " / " +
                                  grid.domains[static_cast<std::size_t>(r)];
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n", left - 8,
                      y + cell_h / 2 + 4, xml_escape(label).c_str());
        out += buf;
        for (std::size_t c = 0; c < kNumDimensions; ++c) {
            const double v = grid.values(r, static_cast<Eigen::Index>(c));
            const int x = left + cell_w * static_cast<int>(c);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" stroke=\"#ffffff\"/>\n"
                          "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" fill=\"%s\">%.1f</text>\n",
                          x, y, cell_w, cell_h, ramp(v).c_str(), x + cell_w / 2, y + cell_h / 2 + 4,
                          v > 55 ? "#ffffff" : "#000000", v);
            out += buf;
        }
    }
    out += "</svg>\n";
    return out;
}

Json to_json(const DimensionRating& r) {
    return {{"dimension", to_string(r.dimension)}, {"raw", r.raw}, {"scaled", r.scaled}};
}

Json to_json(const JudgeRecord& r) {
    Json ratings = Json::array();
    for (const auto& x : r.ratings) ratings.push_back(to_json(x));
    return {{"issue_id", r.issue_id}, {"judge_backend", r.judge_backend}, {"ratings", ratings},
            {"composite", r.composite}};
}

Json to_json(const RunMetadata& m) {
    return {{"domain", m.domain_label}, {"variant", m.variant}, {"source", m.source_label}, {"backends", m.backends}};
}

Json to_json(const JudgeReport& r) {
    Json means = Json::object();
    for (std::size_t i = 0; i < kNumDimensions; ++i)
        means[std::string(kNames[i])] = r.per_dimension_means[static_cast<Eigen::Index>(i)];
    Json composites = Json::object();
    for (const auto& rec : r.records) composites[rec.issue_id] = rec.composite;
    return {{"metadata", to_json(r.metadata)},
            {"n_records", r.records.size()},
            {"per_dimension_means", means},
            {"overall_composite_mean", r.overall_composite_mean},
            {"record_composites", composites}};
}

JudgeRecord judge_record_from_json(const Json& j) {
    JudgeRecord r;
    r.issue_id = j.at("issue_id").get<std::string>();
    r.judge_backend = j.at("judge_backend").get<std::string>();
    for (const auto& x : j.at("ratings")) {
        DimensionRating rating = make_rating(parse_dimension(x.at("dimension").get<std::string>()), x.at("raw").get<int>());
        if (rating.scaled != x.at("scaled").get<double>())
            throw SchemaError("ratings", "scaled value disagrees with raw rating");
        r.ratings.push_back(rating);
    }
    r.composite = composite(r.ratings);
    return r;
}

RunMetadata run_metadata_from_json(const Json& j) {
    return {j.at("domain").get<std::string>(), j.at("variant").get<std::string>(),
            j.value("source", std::string()), j.value("backends", std::map<std::string, std::string>{})};
}

std::string records_jsonl(std::span<const JudgeRecord> records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

std::vector<JudgeRecord> parse_records_jsonl(const std::string& text) {
    std::vector<JudgeRecord> records;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            records.push_back(judge_record_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw MalformedRecord(line_no, e.what());
        }
    }
    return records;
}

}  // namespace revmine
