#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "revmine/ranking.hpp"

namespace revmine {

enum class Dimension {
    actionability,
    specificity,
    feasibility,
    expected_impact,
    novelty,
    non_redundancy,
    bias,
    reading_clarity,
};

inline constexpr std::size_t kNumDimensions = 8;
inline constexpr std::array<Dimension, kNumDimensions> kDimensions = {
    Dimension::actionability, Dimension::specificity, Dimension::feasibility, Dimension::expected_impact,
    Dimension::novelty,       Dimension::non_redundancy, Dimension::bias,     Dimension::reading_clarity};

using DimensionVector = Eigen::Matrix<double, kNumDimensions, 1>;

std::string to_string(Dimension d);
Dimension parse_dimension(const std::string& name);

inline constexpr double kJudgeTemperature = 0.1;

struct DimensionRating {
    Dimension dimension = Dimension::actionability;
    int raw = 1;
    double scaled = 0.0;

    bool operator==(const DimensionRating&) const = default;
};

struct JudgeRecord {
    std::string issue_id;
    std::vector<DimensionRating> ratings;
    double composite = 0.0;
    std::string judge_backend;

    bool operator==(const JudgeRecord&) const = default;
};

struct RunMetadata {
    std::string domain_label;
    std::string variant;
    std::string source_label;
    std::map<std::string, std::string> backends;   // role -> backend name

    bool operator==(const RunMetadata&) const = default;
};

struct JudgeReport {
    std::vector<JudgeRecord> records;
    DimensionVector per_dimension_means = DimensionVector::Zero();
    double overall_composite_mean = 0.0;
    RunMetadata metadata;
};

/// 100·(raw−1)/4. Throws OutOfRange outside 1..5.
double rescale(int raw);

DimensionRating make_rating(Dimension d, int raw);

/// Unweighted mean of the scaled values. Throws MissingDimension or
/// DuplicateDimension unless every dimension appears exactly once.
double composite(std::span<const DimensionRating> ratings);

/// Scaled values in kDimensions order (validates like composite()).
DimensionVector scaled_vector(std::span<const DimensionRating> ratings);

ChatRequest build_judge_prompt(const FinalAdvice& advice, const std::string& business_context,
                               const std::string& original_context);

/// Reads the eight integer ratings from a judge reply object. Keys are
/// matched case-insensitively with spaces and hyphens read as underscores.
std::vector<DimensionRating> parse_judge_ratings(const Json& raw);

struct JudgeContexts {
    std::string business;
    std::string original;
};

JudgeRecord judge_advice(Backend& backend, const FinalAdvice& advice, const JudgeContexts& contexts,
                         double temperature = kJudgeTemperature, RepairLog* log = nullptr);

/// Means are recomputed from `records`. Throws EmptyRecords.
JudgeReport aggregate(std::vector<JudgeRecord> records, RunMetadata metadata);

// Shortest text that parses back to the same double.
std::string format_number(double v);

/// Long table: variant,domain,dimension,mean with one row per dimension
/// followed by the composite row.
std::string report_csv(const JudgeReport& report);

// One row per run, one column per dimension.
struct HeatmapGrid {
    std::vector<std::string> variants;
    std::vector<std::string> domains;
    Eigen::MatrixXd values;   // rows x kNumDimensions
};

HeatmapGrid heatmap_grid(std::span<const JudgeReport> reports);
std::string heatmap_csv(const HeatmapGrid& grid);
std::string heatmap_svg(const HeatmapGrid& grid);

Json to_json(const DimensionRating& r);
Json to_json(const JudgeRecord& r);
Json to_json(const RunMetadata& m);
Json to_json(const JudgeReport& r);
JudgeRecord judge_record_from_json(const Json& j);
RunMetadata run_metadata_from_json(const Json& j);

// records.jsonl: one JudgeRecord per line.
std::string records_jsonl(std::span<const JudgeRecord> records);
std::vector<JudgeRecord> parse_records_jsonl(const std::string& text);

}  // namespace revmine
