#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revmine/config.hpp"
#include "revmine/judge.hpp"

namespace revmine {

// Stage names double as artifact prefixes in the run directory.
inline const std::vector<std::string> kStages = {"01_corpus",   "02_embeddings", "03_clusters", "04_representatives",
                                                 "05_issues",   "06_advice",     "07_final",    "08_judge"};

inline const std::string kUnthemed = "(unthemed)";
inline constexpr std::size_t kPseudoIssueChars = 500;

/// Accepts "04", "04_representatives" or "representatives".
std::string canonical_stage(const std::string& name);

struct RunOptions {
    // Stop cleanly once this stage has completed.
    std::optional<std::string> stop_after;
    // Treat this stage and everything after it as not yet run.
    std::optional<std::string> rerun_from;
};

struct StageReport {
    std::string name;
    // completed | failed | pending | not_applicable
    std::string status;
    std::map<std::string, std::size_t> calls;
    std::size_t repairs = 0;
    std::string error;
};

struct TrackReport {
    std::string label;
    std::string backend;
    std::string status;   // ok | failed
    std::string error;
    int iterations = 0;
    std::string stop_reason;
};

struct IssueReport {
    std::string issue_id;
    std::string theme;
    std::string issue;
    std::string status;   // succeeded | failed | pending
    std::string failed_stage;
    std::string error;
    std::vector<TrackReport> tracks;
    std::string chosen_track;
    std::optional<double> composite;
};

struct RunReport {
    std::filesystem::path out_dir;
    std::string variant;
    std::string domain;
    std::string source;
    std::vector<StageReport> stages;
    std::vector<IssueReport> issues;
    std::map<std::string, std::size_t> call_counts;
    std::optional<std::string> judge_report;
    std::optional<double> overall_composite;
    // Wall clock, timestamps and which stages this invocation reused. Differs
    // between otherwise identical runs.
    Json session = Json::object();

    bool complete() const;
};

Json to_json(const RunReport& report);

/// Runs every stage for `cfg.variant` into `cfg.out_dir`, which must not
/// already hold a run. On a stage error the report is written, completed
/// stages stay resumable and StageFailed is thrown.
RunReport run_pipeline(const RunConfig& cfg, const RunOptions& options = {});

/// Continues the run in `out_dir`, skipping stages whose artifacts are present
/// with matching checksums. With `provided`, throws ConfigDrift unless it
/// matches the stored snapshot.
RunReport resume(const std::filesystem::path& out_dir, const std::optional<RunConfig>& provided = std::nullopt,
                 const RunOptions& options = {});

// Re-runs only the judge stage of a run whose earlier stages are complete.
RunReport rejudge(const std::filesystem::path& out_dir, const std::optional<RunConfig>& provided = std::nullopt);

struct ComparisonRow {
    std::filesystem::path dir;
    RunMetadata metadata;
    DimensionVector means = DimensionVector::Zero();
    double composite = 0.0;
    std::size_t n_records = 0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
};

/// Recomputes each run's judge means from its persisted records. Throws
/// IncompleteRun for a directory without a completed judge stage.
ComparisonTable compare_runs(const std::vector<std::filesystem::path>& dirs);

// variant x domain composite table.
std::string comparison_csv(const ComparisonTable& table);

/// variant,domain,dimension,mean,delta. The delta is taken against the
/// "full" run of the same domain, or the first run of that domain.
std::string deltas_csv(const ComparisonTable& table);

/// Writes comparison.csv, deltas.csv, heatmap.csv and heatmap.svg.
void write_comparison(const ComparisonTable& table, const std::filesystem::path& out_dir);

}  // namespace revmine
