// revmine: turn negative reviews into ranked, judged business advice.

#include <iostream>

#include "CLI11.hpp"
#include "revmine/pipeline.hpp"

namespace fs = std::filesystem;
using namespace revmine;

namespace {

void print_summary(const RunReport& r) {
    std::size_t ok = 0, failed = 0;
    for (const auto& i : r.issues) {
        ok += i.status == "succeeded";
        failed += i.status == "failed";
    }
    std::cout << "run: " << r.out_dir.string() << "\n"
              << "variant: " << r.variant << "  domain: " << r.domain << "\n";
    for (const auto& s : r.stages) std::cout << "  " << s.name << ": " << s.status << "\n";
    std::cout << "issues: " << ok << " succeeded, " << failed << " failed, " << r.issues.size() << " total\n";
    if (r.overall_composite) std::cout << "composite: " << format_number(*r.overall_composite) << "\n";
}

std::optional<RunConfig> maybe_config(const std::string& path, const std::string& script) {
    if (path.empty()) return std::nullopt;
    RunConfig cfg = load_run_config(path);
    if (!script.empty()) apply_backend_script(cfg, script);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Review-to-advice pipeline"};
    app.require_subcommand(1);
    std::string backend_script;
    bool quiet = false;
    app.add_option("--backend-script", backend_script, "Serve every backend from this response script")
        ->check(CLI::ExistingFile);
    app.add_flag("-q,--quiet", quiet, "Only print errors");

    auto* run = app.add_subcommand("run", "Run the pipeline");
    std::string config_path, variant, out_dir, stop_after;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "Config file (YAML or JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--variant", variant, "full | vanilla | no-issue | no-eval | no-issue-no-eval");
    run->add_option("--seed", seed, "Clustering seed");
    run->add_option("--out-dir", out_dir, "Run directory");
    run->add_option("--stop-after", stop_after, "Stop once this stage has completed (e.g. 04)");

    auto* res = app.add_subcommand("resume", "Continue an interrupted run");
    std::string resume_dir, resume_config;
    res->add_option("--out-dir", resume_dir, "Run directory")->required();
    res->add_option("--config", resume_config, "Check this config against the stored snapshot");

    auto* judge = app.add_subcommand("judge", "Re-run the judge stage of a run");
    std::string judge_dir;
    judge->add_option("--out-dir", judge_dir, "Run directory")->required();

    auto* report = app.add_subcommand("report", "Compare judged runs");
    std::vector<std::string> dirs;
    std::string report_out = ".";
    report->add_option("--dirs", dirs, "Run directories")->required()->delimiter(',');
    report->add_option("--out", report_out, "Where to write the comparison files");

    CLI11_PARSE(app, argc, argv);
    set_log_quiet(quiet);

    try {
        if (*run) {
            RunConfig cfg = load_run_config(config_path);
            if (!variant.empty()) cfg.variant = parse_variant(variant);
            if (seed) cfg.seed = *seed;
            if (!out_dir.empty()) cfg.out_dir = fs::absolute(out_dir);
            if (!backend_script.empty()) apply_backend_script(cfg, backend_script);
            RunOptions options;
            if (!stop_after.empty()) options.stop_after = stop_after;
            print_summary(run_pipeline(cfg, options));
        } else if (*res) {
            print_summary(resume(resume_dir, maybe_config(resume_config, backend_script)));
        } else if (*judge) {
            print_summary(rejudge(judge_dir));
        } else if (*report) {
            std::vector<fs::path> paths(dirs.begin(), dirs.end());
            const ComparisonTable table = compare_runs(paths);
            fs::create_directories(report_out);
            write_comparison(table, report_out);
            std::cout << comparison_csv(table);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
