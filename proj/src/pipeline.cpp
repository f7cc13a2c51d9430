#include "revmine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <type_traits>

#include "revmine/prompts.hpp"
#include "revmine/ranking.hpp"

namespace revmine {

namespace fs = std::filesystem;

std::string canonical_stage(const std::string& name) {
    const std::string n = to_lower_ascii(trim(name));
    for (const auto& s : kStages)
        if (n == s || n == s.substr(0, 2) || n == s.substr(3)) return s;
    throw InvalidConfig("unknown stage '" + name + "'");
}

bool RunReport::complete() const {
    return std::all_of(stages.begin(), stages.end(),
                       [](const StageReport& s) { return s.status == "completed" || s.status == "not_applicable"; });
}

Json to_json(const RunReport& r) {
    Json stages = Json::array();
    for (const auto& s : r.stages) {
        Json j = {{"name", s.name}, {"status", s.status}, {"calls", s.calls}, {"repairs", s.repairs}};
        if (!s.error.empty()) j["error"] = s.error;
        stages.push_back(j);
    }
    Json issues = Json::array();
    for (const auto& i : r.issues) {
        Json tracks = Json::array();
        for (const auto& t : i.tracks) {
            Json tj = {{"label", t.label}, {"backend", t.backend}, {"status", t.status}};
            if (t.status == "ok") {
                tj["iterations"] = t.iterations;
                tj["stop_reason"] = t.stop_reason;
            } else {
                tj["error"] = t.error;
            }
            tracks.push_back(tj);
        }
        Json j = {{"issue_id", i.issue_id}, {"theme", i.theme}, {"issue", i.issue}, {"status", i.status},
                  {"tracks", tracks}};
        if (!i.failed_stage.empty()) j["failed_stage"] = i.failed_stage;
        if (!i.error.empty()) j["error"] = i.error;
        if (!i.chosen_track.empty()) j["chosen_track"] = i.chosen_track;
        if (i.composite) j["composite"] = *i.composite;
        issues.push_back(j);
    }
    return {{"variant", r.variant},
            {"domain", r.domain},
            {"source", r.source},
            {"complete", r.complete()},
            {"stages", stages},
            {"issues", issues},
            {"call_counts", r.call_counts},
            {"judge_report", r.judge_report ? Json(*r.judge_report) : Json(nullptr)},
            {"overall_composite", r.overall_composite ? Json(*r.overall_composite) : Json(nullptr)},
            {"session", r.session}};
}

namespace {

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T, typename F>
auto parallel_map(const std::vector<T>& xs, std::size_t width, F&& f) {
    using R = std::invoke_result_t<F&, const T&>;
    std::vector<R> out;
    out.reserve(xs.size());
    if (width <= 1) {
        for (const auto& x : xs) out.push_back(f(x));
        return out;
    }
    for (std::size_t start = 0; start < xs.size(); start += width) {
        std::vector<std::future<R>> wave;
        for (std::size_t i = start; i < std::min(xs.size(), start + width); ++i)
            wave.push_back(std::async(std::launch::async, [&f, &xs, i] { return f(xs[i]); }));
        for (auto& w : wave) out.push_back(w.get());
    }
    return out;
}

std::string quoted_reviews(const RepresentativeSet& reps) {
    std::string out;
    for (std::size_t i = 0; i < reps.entries.size(); ++i) {
        if (i) out += "\n\n";
        out += "\"" + reps.entries[i].review_text + "\"";
    }
    return out;
}

std::string error_text(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() + ": " + err->what();
    return std::string("internal: ") + e.what();
}

std::vector<std::string> stage_outputs(const std::string& stage) {
    if (stage == "01_corpus") return {"01_corpus.json"};
    if (stage == "02_embeddings") return {};   // the cache is content-addressed and kept
    if (stage == "03_clusters") return {"03_clusters.json"};
    if (stage == "04_representatives") return {"04_representatives.json"};
    if (stage == "05_issues") return {"05_issues.json", "05_issues.validated.json", "05_pseudo_issues.json"};
    if (stage == "06_advice") return {"06_advice"};
    if (stage == "07_final") return {"07_final"};
    if (stage == "08_judge") return {"08_judge", "report.csv", "heatmap.svg"};
    return {};
}

Json snapshot_of(const RunConfig& cfg) { return Json::parse(to_json(cfg).dump()); }

class Pipeline {
public:
    Pipeline(RunConfig cfg, RunOptions options) : cfg_(std::move(cfg)), options_(std::move(options)) {
        dir_ = cfg_.out_dir;
        if (fs::exists(dir_ / "manifest.json"))
            manifest_ = Json::parse(read_file(dir_ / "manifest.json"));
        if (!manifest_.contains("stages")) manifest_ = {{"format", "revmine-manifest/1"}, {"stages", Json::object()}};
        std::set<std::string> names;
        for (const auto& [role, name] : cfg_.active_roles()) names.insert(name);
        for (const auto& name : names) registry_.add(make_backend(cfg_.backends.at(name)));
    }

    RunReport run() {
        const auto started = std::chrono::steady_clock::now();
        session_ = {{"started_at", iso_now()}, {"out_dir", fs::absolute(dir_).string()}};
        Json wall = Json::object();
        Json reused = Json::array();
        std::vector<StageReport> stages;
        bool rerun = false;
        bool halted = false;
        std::string failure;

        for (const auto& name : kStages) {
            StageReport sr{name, "pending", {}, 0, ""};
            if (!applicable(name)) {
                sr.status = "not_applicable";
                stages.push_back(sr);
                continue;
            }
            if (halted) {
                stages.push_back(sr);
                continue;
            }
            if (options_.rerun_from && *options_.rerun_from == name) rerun = true;
            if (!rerun && stage_complete(name)) {
                reused.push_back(name);
                fill_from_manifest(sr);
            } else {
                rerun = true;
                invalidate_from(name);
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    execute(name);
                    fill_from_manifest(sr);
                } catch (const std::exception& e) {
                    sr.status = "failed";
                    sr.error = error_text(e);
                    failure = name + " failed: " + sr.error;
                    halted = true;
                    log_warn(failure);
                }
                wall[name] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
            }
            if (options_.stop_after && *options_.stop_after == name && !halted) {
                halted = true;
                log_info("stopping after stage " + name);
            }
            stages.push_back(sr);
        }

        session_["stage_wall_ms"] = wall;
        session_["reused_stages"] = reused;
        session_["finished_at"] = iso_now();
        session_["total_wall_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();

        RunReport report = build_report(std::move(stages));
        write_file_atomic(dir_ / "run_report.json", dump_json(to_json(report)));
        if (!failure.empty()) throw StageFailed(failure + " (completed stages are kept; use resume)");
        return report;
    }

private:
    // ---- manifest -------------------------------------------------------

    bool applicable(const std::string& stage) const {
        if (cfg_.variant == Variant::vanilla) return stage != "05_issues" && stage != "06_advice";
        return true;
    }

    bool stage_complete(const std::string& stage) const {
        const Json& stages = manifest_["stages"];
        if (!stages.contains(stage)) return false;
        for (const auto& [rel, sum] : stages[stage]["files"].items()) {
            const fs::path p = dir_ / rel;
            if (!fs::exists(p) || sha256_hex(read_file(p)) != sum.get<std::string>()) {
                log_warn("stage " + stage + ": " + rel + " is missing or changed; re-running");
                return false;
            }
        }
        return true;
    }

    bool done(const std::string& stage) const { return manifest_["stages"].contains(stage); }

    void fill_from_manifest(StageReport& sr) const {
        const Json& e = manifest_["stages"][sr.name];
        sr.status = "completed";
        sr.calls = e["calls"].get<std::map<std::string, std::size_t>>();
        sr.repairs = e["repairs"].size();
    }

    void invalidate_from(const std::string& stage) {
        bool after = false;
        for (const auto& s : kStages) {
            after = after || s == stage;
            if (!after) continue;
            manifest_["stages"].erase(s);
            for (const auto& rel : stage_outputs(s)) {
                const fs::path p = dir_ / rel;
                if (fs::exists(p)) {
                    log_warn("replacing partial artifact " + rel + " of stage " + s);
                    fs::remove_all(p);
                }
            }
        }
        save_manifest();
    }

    void save_manifest() const { write_file_atomic(dir_ / "manifest.json", dump_json(manifest_)); }

    void execute(const std::string& name) {
        const auto before = registry_.call_counts();
        RepairLog log;
        log_ = &log;
        std::vector<std::string> files;
        if (name == "01_corpus") files = stage_corpus();
        else if (name == "02_embeddings") files = stage_embeddings();
        else if (name == "03_clusters") files = stage_clusters();
        else if (name == "04_representatives") files = stage_representatives();
        else if (name == "05_issues") files = stage_issues();
        else if (name == "06_advice") files = stage_advice();
        else if (name == "07_final") files = stage_final();
        else files = stage_judge();
        log_ = nullptr;

        Json sums = Json::object();
        for (const auto& rel : files) sums[rel] = sha256_hex(read_file(dir_ / rel));
        Json calls = Json::object();
        for (const auto& [backend, n] : registry_.call_counts()) {
            const auto it = before.find(backend);
            const std::size_t prior = it == before.end() ? 0 : it->second;
            if (n > prior) calls[backend] = n - prior;
        }
        auto events = log.events();
        std::sort(events.begin(), events.end(), [](const RepairEvent& a, const RepairEvent& b) {
            return std::tie(a.tag, a.attempt, a.error) < std::tie(b.tag, b.attempt, b.error);
        });
        Json repairs = Json::array();
        for (const auto& e : events) repairs.push_back({{"tag", e.tag}, {"attempt", e.attempt}, {"error", e.error}});
        manifest_["stages"][name] = {{"files", sums}, {"calls", calls}, {"repairs", repairs}};
        save_manifest();
    }

    // ---- artifact io ----------------------------------------------------

    std::string put(const std::string& rel, const std::string& text) {
        write_file_atomic(dir_ / rel, text);
        return rel;
    }
    std::string put(const std::string& rel, const Json& j) { return put(rel, dump_json(j)); }
    Json get(const std::string& rel) const { return Json::parse(read_file(dir_ / rel)); }

    std::vector<std::string> files_under(const std::string& rel) const {
        std::vector<std::string> out;
        for (const auto& e : fs::recursive_directory_iterator(dir_ / rel))
            if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir_).generic_string());
        std::sort(out.begin(), out.end());
        return out;
    }

    // ---- lazily restored state -------------------------------------------

    const Corpus& corpus() {
        if (!corpus_) corpus_ = corpus_from_json(get("01_corpus.json"));
        return *corpus_;
    }

    const std::vector<EmbeddingVector>& vectors() {
        if (!vectors_) {
            auto provider = make_provider(cfg_.embedding);
            EmbeddingCache cache;
            cache.load(dir_ / "02_embeddings.cache");
            std::vector<std::string> texts;
            for (const auto& r : corpus().reviews) texts.push_back(r.text);
            vectors_ = embed_batch(*provider, texts, &cache);
            cache.save(dir_ / "02_embeddings.cache");
        }
        return *vectors_;
    }

    const ClusterAssignment& assignment() {
        if (!assignment_) assignment_ = cluster_assignment_from_json(get("03_clusters.json"));
        return *assignment_;
    }

    const RepresentativeSet& reps() {
        if (!reps_) reps_ = representative_set_from_json(get("04_representatives.json"));
        return *reps_;
    }

    const std::vector<IssueItem>& items() {
        if (!items_) {
            const Json j = get(uses_issue_agent(cfg_.variant) ? "05_issues.validated.json" : "05_pseudo_issues.json");
            items_.emplace();
            for (const auto& i : j.at("items")) items_->push_back(issue_item_from_json(i));
        }
        return *items_;
    }

    // ---- stages ---------------------------------------------------------

    std::vector<std::string> stage_corpus() {
        LoadOptions lo;
        lo.lenient = cfg_.corpus.lenient;
        lo.domain_label = cfg_.corpus.domain;
        lo.source_label = cfg_.corpus.source_label;
        std::vector<SkippedRecord> skipped;
        Corpus loaded = load_reviews(cfg_.corpus.path, cfg_.corpus.format, lo, &skipped);
        const std::size_t n_loaded = loaded.size();
        corpus_ = cfg_.corpus.stars.empty() ? loaded : filter_by_stars(loaded, cfg_.corpus.stars);
        if (corpus_->empty()) throw EmptyRecords("no reviews left after the star filter");
        Json j = to_json(*corpus_);
        j["loaded"] = n_loaded;
        j["star_filter"] = cfg_.corpus.stars;
        Json sk = Json::array();
        for (const auto& s : skipped) sk.push_back({{"line", s.line_no}, {"reason", s.reason}});
        j["skipped"] = sk;
        log_info("corpus: " + std::to_string(corpus_->size()) + " of " + std::to_string(n_loaded) + " reviews kept");
        return {put("01_corpus.json", j)};
    }

    std::vector<std::string> stage_embeddings() {
        vectors_.reset();
        vectors();
        return {"02_embeddings.cache"};
    }

    std::vector<std::string> stage_clusters() {
        assignment_ = cluster(vectors(), cfg_.clustering.k, cfg_.seed, cfg_.clustering.options);
        return {put("03_clusters.json", to_json(*assignment_, cfg_.clustering.options.method))};
    }

    std::vector<std::string> stage_representatives() {
        reps_ = select_top_m(corpus(), assignment(), vectors(), cfg_.clustering.m);
        return {put("04_representatives.json", to_json(*reps_))};
    }

    std::vector<std::string> stage_issues() {
        items_.emplace();
        Json items = Json::array();
        if (uses_issue_agent(cfg_.variant)) {
            std::vector<std::string> repairs;
            Json raw;
            IssueMap map = run_issue_agent(registry_.get(cfg_.roles.issue), reps(), cfg_.temperatures.issue, &repairs,
                                           log_, &raw);
            *items_ = flatten_issues(map);
            for (const auto& i : *items_) items.push_back(to_json(i));
            return {put("05_issues.json", dump_json(to_prompt_json(map))),
                    put("05_issues.validated.json", Json{{"raw", raw}, {"repairs", repairs}, {"items", items}})};
        }
        for (const auto& e : reps().entries) {
            IssueItem item{kUnthemed, utf8_truncate(e.review_text, kPseudoIssueChars),
                           issue_id_for(kUnthemed, e.review_id)};
            Json j = to_json(item);
            j["review_id"] = e.review_id;
            j["cluster_id"] = e.cluster_id;
            items.push_back(j);
            items_->push_back(std::move(item));
        }
        return {put("05_pseudo_issues.json", Json{{"items", items}})};
    }

    std::vector<TrackSpec> track_specs() {
        std::vector<TrackSpec> tracks;
        for (std::size_t i = 0; i < cfg_.roles.tracks.size(); ++i) {
            const std::string& rec = cfg_.roles.tracks[i];
            const std::string& ev = cfg_.roles.evaluators.empty() ? rec : cfg_.roles.evaluators[i];
            tracks.push_back({"track-" + std::to_string(i + 1), &registry_.get(rec),
                              registry_.contains(ev) ? &registry_.get(ev) : &registry_.get(rec)});
        }
        return tracks;
    }

    std::size_t width() const { return cfg_.parallel ? static_cast<std::size_t>(cfg_.max_parallel_issues) : 1; }

    std::vector<std::string> stage_advice() {
        const auto tracks = track_specs();
        LoopOptions lo;
        lo.evaluate = uses_evaluator(cfg_.variant);
        lo.recommendation_temperature = cfg_.temperatures.recommendation;
        lo.evaluation_temperature = cfg_.temperatures.evaluation;
        lo.repair_log = log_;
        const auto outcomes = parallel_map(items(), width(), [&](const IssueItem& item) {
            return run_tracks(item, tracks, cfg_.loop, lo, cfg_.parallel);
        });

        Json summary = Json::array();
        fs::create_directories(dir_ / "06_advice");
        for (std::size_t k = 0; k < items().size(); ++k) {
            const IssueItem& item = items()[k];
            const std::string base = "06_advice/" + item.issue_id + "/";
            Json tracks_json = Json::array();
            std::size_t ok = 0;
            for (const auto& o : outcomes[k]) {
                const std::string tdir = base + o.label + "/";
                Json t = {{"label", o.label}, {"backend", o.backend}};
                if (o.ok()) {
                    ++ok;
                    for (const auto& entry : o.advice->trace) {
                        Json j = to_json(entry);
                        j["issue_id"] = item.issue_id;
                        j["track"] = o.label;
                        put(tdir + "iter-" + std::to_string(entry.candidate.iteration) + ".json", j);
                    }
                    Json fin = to_json(*o.advice);
                    fin["backend"] = o.backend;
                    put(tdir + "final.json", fin);
                    t["status"] = "ok";
                    t["iterations"] = o.advice->trace.size();
                    t["stop_reason"] = to_string(o.advice->stop_reason);
                } else {
                    put(tdir + "failed.json", Json{{"label", o.label}, {"backend", o.backend}, {"error", o.error}});
                    t["status"] = "failed";
                    t["error"] = o.error;
                }
                tracks_json.push_back(t);
            }
            const bool enough = enough_tracks(outcomes[k]);
            Json entry = {{"issue_id", item.issue_id}, {"status", enough ? "ok" : "failed"}, {"tracks", tracks_json}};
            if (!enough)
                entry["error"] = "TrackFailure: " + std::to_string(ok) + " of " + std::to_string(outcomes[k].size()) +
                                 " tracks succeeded";
            summary.push_back(entry);
        }
        put("06_advice/outcomes.json", Json{{"issues", summary}});
        return files_under("06_advice");
    }

    std::vector<TrackOutcome> load_outcomes(const Json& entry) const {
        std::vector<TrackOutcome> out;
        const std::string base = "06_advice/" + entry.at("issue_id").get<std::string>() + "/";
        for (const auto& t : entry.at("tracks")) {
            TrackOutcome o;
            o.label = t.at("label").get<std::string>();
            o.backend = t.at("backend").get<std::string>();
            if (t.at("status") == "ok") o.advice = evaluated_advice_from_json(get(base + o.label + "/final.json"));
            else o.error = t.at("error").get<std::string>();
            out.push_back(std::move(o));
        }
        return out;
    }

    std::vector<std::string> stage_final() {
        fs::create_directories(dir_ / "07_final");
        if (cfg_.variant == Variant::vanilla) return stage_vanilla();

        const Json advice = get("06_advice/outcomes.json");
        std::map<std::string, const Json*> by_id;
        for (const auto& e : advice.at("issues")) by_id[e.at("issue_id").get<std::string>()] = &e;
        std::vector<IssueItem> rankable;
        for (const auto& item : items())
            if (by_id.contains(item.issue_id) && by_id[item.issue_id]->at("status") == "ok") rankable.push_back(item);

        Backend* ranker = registry_.contains(cfg_.roles.ranker) ? &registry_.get(cfg_.roles.ranker) : nullptr;
        struct Ranked {
            std::optional<FinalAdvice> final;
            std::string error;
        };
        const auto ranked = parallel_map(rankable, width(), [&](const IssueItem& item) {
            Ranked r;
            try {
                r.final = select_final(item, load_outcomes(*by_id.at(item.issue_id)), ranker,
                                       cfg_.temperatures.ranking, log_);
            } catch (const Error& e) {
                r.error = e.kind() + ": " + e.what();
                log_warn("issue " + item.issue_id + " ranking failed: " + r.error);
            }
            return r;
        });

        Json summary = Json::array();
        for (std::size_t k = 0; k < rankable.size(); ++k) {
            Json entry = {{"issue_id", rankable[k].issue_id}};
            if (ranked[k].final) {
                put("07_final/" + rankable[k].issue_id + ".json", to_json(*ranked[k].final));
                entry["status"] = "ok";
                entry["chosen_track"] = ranked[k].final->chosen_track;
                entry["choice_index"] = ranked[k].final->choice_index;
            } else {
                entry["status"] = "failed";
                entry["error"] = ranked[k].error;
            }
            summary.push_back(entry);
        }
        put("07_final/outcomes.json", Json{{"issues", summary}});
        return files_under("07_final");
    }

    std::vector<std::string> stage_vanilla() {
        const auto& r = reps();
        const auto n = r.entries.size();
        ChatRequest request;
        request.user = prompts::render(prompts::get("vanilla").text, {{"count", prompts::count_word(n)},
                                                                      {"review_noun", n == 1 ? "review" : "reviews"},
                                                                      {"reviews", quoted_reviews(r)}});
        request.temperature_override = cfg_.temperatures.recommendation;
        request.tag = "vanilla";
        Backend& backend = registry_.get(cfg_.roles.tracks.front());
        AdviceCandidate c = complete_parsed(
            backend, request, parse_advice,
            "Give 3 to 4 recommendations as a numbered list, one per line, and nothing else.", log_);
        c.issue_id = "vanilla";
        c.track = backend.name();
        c.iteration = 1;

        FinalAdvice f;
        f.issue_id = "vanilla";
        f.theme = "(vanilla)";
        f.chosen_track = backend.name();
        f.chosen_label = "track-1";
        f.choice_index = 1;
        f.advice = c;
        f.rationale = "single pass";
        f.contenders.push_back({"vanilla", "track-1", {{c, std::nullopt}}, StopReason::t_max, false});
        put("07_final/vanilla.json", to_json(f));
        put("07_final/outcomes.json",
            Json{{"issues", Json::array({{{"issue_id", "vanilla"},
                                          {"status", "ok"},
                                          {"chosen_track", f.chosen_track},
                                          {"choice_index", 1}}})}});
        return files_under("07_final");
    }

    RunMetadata metadata() {
        return {cfg_.corpus.domain, to_string(cfg_.variant), corpus().source_label, cfg_.active_roles()};
    }

    std::string original_context(const FinalAdvice& f) {
        if (cfg_.variant == Variant::vanilla) return quoted_reviews(reps());
        if (f.theme == kUnthemed) return f.issue;
        return "Theme: " + f.theme + "\nIssue: " + f.issue;
    }

    std::vector<std::string> stage_judge() {
        const Json finals_index = get("07_final/outcomes.json");
        std::vector<FinalAdvice> finals;
        for (const auto& e : finals_index.at("issues"))
            if (e.at("status") == "ok")
                finals.push_back(final_advice_from_json(get("07_final/" + e.at("issue_id").get<std::string>() + ".json")));

        Backend& judge = registry_.get(cfg_.roles.judge);
        struct Judged {
            std::optional<JudgeRecord> record;
            std::string error;
        };
        std::vector<std::string> contexts;
        for (const auto& f : finals) contexts.push_back(original_context(f));
        std::vector<std::size_t> idx(finals.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const auto judged = parallel_map(idx, width(), [&](std::size_t i) {
            Judged j;
            try {
                j.record = judge_advice(judge, finals[i], {cfg_.corpus.domain, contexts[i]}, cfg_.temperatures.judge,
                                        log_);
            } catch (const Error& e) {
                j.error = e.kind() + ": " + e.what();
                log_warn("issue " + finals[i].issue_id + " judging failed: " + j.error);
            }
            return j;
        });

        std::vector<JudgeRecord> records;
        Json summary = Json::array();
        for (std::size_t i = 0; i < finals.size(); ++i) {
            Json entry = {{"issue_id", finals[i].issue_id}};
            if (judged[i].record) {
                records.push_back(*judged[i].record);
                entry["status"] = "ok";
                entry["composite"] = judged[i].record->composite;
            } else {
                entry["status"] = "failed";
                entry["error"] = judged[i].error;
            }
            summary.push_back(entry);
        }
        // Outcomes first so a failed aggregate still leaves the per-issue errors on disk.
        put("08_judge/outcomes.json", Json{{"issues", summary}});
        const JudgeReport report = aggregate(records, metadata());
        const std::vector<JudgeReport> one = {report};
        const HeatmapGrid grid = heatmap_grid(one);
        return {put("08_judge/records.jsonl", records_jsonl(report.records)),
                put("08_judge/report.json", to_json(report)),
                "08_judge/outcomes.json",
                put("08_judge/heatmap.csv", heatmap_csv(grid)),
                put("report.csv", report_csv(report)),
                put("heatmap.svg", heatmap_svg(grid))};
    }

    // ---- report ---------------------------------------------------------

    RunReport build_report(std::vector<StageReport> stages) {
        RunReport r;
        r.out_dir = dir_;
        r.variant = to_string(cfg_.variant);
        r.domain = cfg_.corpus.domain;
        r.stages = std::move(stages);
        r.session = session_;
        if (done("01_corpus")) r.source = corpus().source_label;
        for (const auto& [stage, entry] : manifest_["stages"].items())
            for (const auto& [backend, n] : entry["calls"].items()) r.call_counts[backend] += n.get<std::size_t>();

        auto index = [&](const std::string& stage, const std::string& rel) {
            std::map<std::string, Json> out;
            if (!done(stage)) return out;
            const Json j = get(rel);
            for (const auto& e : j.at("issues")) out[e.at("issue_id").get<std::string>()] = e;
            return out;
        };
        const auto advice = index("06_advice", "06_advice/outcomes.json");
        const auto finals = index("07_final", "07_final/outcomes.json");
        const auto judged = index("08_judge", "08_judge/outcomes.json");

        std::vector<IssueItem> listed;
        if (cfg_.variant == Variant::vanilla) {
            if (done("07_final")) listed.push_back({"(vanilla)", "", "vanilla"});
        } else if (done("05_issues")) {
            listed = items();
        }

        for (const auto& item : listed) {
            IssueReport ir;
            ir.issue_id = item.issue_id;
            ir.theme = item.theme;
            ir.issue = item.issue;
            ir.status = "pending";
            auto fail = [&](const std::string& stage, const Json& e) {
                ir.status = "failed";
                ir.failed_stage = stage;
                ir.error = e.value("error", std::string());
            };
            if (auto it = advice.find(item.issue_id); it != advice.end()) {
                for (const auto& t : it->second.at("tracks")) {
                    TrackReport tr;
                    tr.label = t.at("label").get<std::string>();
                    tr.backend = t.at("backend").get<std::string>();
                    tr.status = t.at("status").get<std::string>();
                    tr.error = t.value("error", std::string());
                    tr.iterations = t.value("iterations", 0);
                    tr.stop_reason = t.value("stop_reason", std::string());
                    ir.tracks.push_back(tr);
                }
                if (it->second.at("status") != "ok") fail("06_advice", it->second);
            }
            if (ir.status == "pending") {
                if (auto it = finals.find(item.issue_id); it != finals.end()) {
                    if (it->second.at("status") == "ok") ir.chosen_track = it->second.at("chosen_track").get<std::string>();
                    else fail("07_final", it->second);
                }
            }
            if (ir.status == "pending") {
                if (auto it = judged.find(item.issue_id); it != judged.end()) {
                    if (it->second.at("status") == "ok") {
                        ir.status = "succeeded";
                        ir.composite = it->second.at("composite").get<double>();
                    } else {
                        fail("08_judge", it->second);
                    }
                }
            }
            r.issues.push_back(std::move(ir));
        }
        if (done("08_judge")) {
            r.judge_report = "08_judge/report.json";
            r.overall_composite = get("08_judge/report.json").at("overall_composite_mean").get<double>();
        }
        return r;
    }

    RunConfig cfg_;
    RunOptions options_;
    fs::path dir_;
    Json manifest_;
    BackendRegistry registry_;
    RepairLog* log_ = nullptr;
    Json session_;

    std::optional<Corpus> corpus_;
    std::optional<std::vector<EmbeddingVector>> vectors_;
    std::optional<ClusterAssignment> assignment_;
    std::optional<RepresentativeSet> reps_;
    std::optional<std::vector<IssueItem>> items_;
};

RunOptions canonical(RunOptions options) {
    if (options.stop_after) options.stop_after = canonical_stage(*options.stop_after);
    if (options.rerun_from) options.rerun_from = canonical_stage(*options.rerun_from);
    return options;
}

}  // namespace

RunReport run_pipeline(const RunConfig& cfg, const RunOptions& options) {
    cfg.validate();
    if (cfg.out_dir.empty()) throw InvalidConfig("no output directory given");
    if (fs::exists(cfg.out_dir / "00_config.json"))
        throw InvalidConfig(cfg.out_dir.string() + " already holds a run; use resume");
    if (fs::exists(cfg.out_dir) && !fs::is_empty(cfg.out_dir))
        throw InvalidConfig(cfg.out_dir.string() + " is not empty");
    fs::create_directories(cfg.out_dir);
    write_file_atomic(cfg.out_dir / "00_config.json", dump_json(snapshot_of(cfg)));
    return Pipeline(cfg, canonical(options)).run();
}

namespace {

RunConfig stored_config(const fs::path& out_dir, const std::optional<RunConfig>& provided) {
    const fs::path snap_path = out_dir / "00_config.json";
    if (!fs::exists(snap_path)) throw FileNotFound(out_dir.string() + " holds no run (00_config.json missing)");
    const Json stored = Json::parse(read_file(snap_path));
    if (provided) {
        const Json given = snapshot_of(*provided);
        if (given != stored) {
            std::string keys;
            for (const auto& [k, v] : stored.items())
                if (!given.contains(k) || given[k] != v) keys += (keys.empty() ? "" : ", ") + k;
            for (const auto& [k, v] : given.items())
                if (!stored.contains(k)) keys += (keys.empty() ? "" : ", ") + k;
            throw ConfigDrift("configuration differs from the stored snapshot in: " + keys);
        }
    }
    RunConfig cfg = run_config_from_json(stored, out_dir);
    cfg.out_dir = out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

RunReport resume(const fs::path& out_dir, const std::optional<RunConfig>& provided, const RunOptions& options) {
    return Pipeline(stored_config(out_dir, provided), canonical(options)).run();
}

RunReport rejudge(const fs::path& out_dir, const std::optional<RunConfig>& provided) {
    RunOptions options;
    options.rerun_from = "08_judge";
    return Pipeline(stored_config(out_dir, provided), options).run();
}

// ---------------------------------------------------------------------------

ComparisonTable compare_runs(const std::vector<fs::path>& dirs) {
    if (dirs.empty()) throw InvalidConfig("compare_runs: no run directories given");
    ComparisonTable table;
    for (const auto& dir : dirs) {
        const fs::path manifest = dir / "manifest.json";
        const fs::path records = dir / "08_judge" / "records.jsonl";
        const fs::path report = dir / "08_judge" / "report.json";
        if (!fs::exists(manifest) || !fs::exists(records) || !fs::exists(report) ||
            !Json::parse(read_file(manifest))["stages"].contains("08_judge"))
            throw IncompleteRun(dir.string() + " has no completed judge stage");
        const RunMetadata meta = run_metadata_from_json(Json::parse(read_file(report)).at("metadata"));
        const JudgeReport rep = aggregate(parse_records_jsonl(read_file(records)), meta);
        table.rows.push_back({dir, meta, rep.per_dimension_means, rep.overall_composite_mean, rep.records.size()});
    }
    return table;
}

namespace {

template <typename Key>
std::vector<std::string> distinct(const ComparisonTable& t, Key key) {
    std::vector<std::string> out;
    for (const auto& r : t.rows)
        if (std::find(out.begin(), out.end(), key(r)) == out.end()) out.push_back(key(r));
    return out;
}

}  // namespace

std::string comparison_csv(const ComparisonTable& table) {
    const auto variants = distinct(table, [](const ComparisonRow& r) { return r.metadata.variant; });
    const auto domains = distinct(table, [](const ComparisonRow& r) { return r.metadata.domain_label; });
    std::string out = "variant";
    for (const auto& d : domains) out += "," + d;
    out += "\n";
    for (const auto& v : variants) {
        out += v;
        for (const auto& d : domains) {
            double sum = 0;
            int n = 0;
            for (const auto& r : table.rows)
                if (r.metadata.variant == v && r.metadata.domain_label == d) {
                    sum += r.composite;
                    ++n;
                }
            if (n > 1) log_warn("several runs for " + v + "/" + d + "; their composites are averaged");
            out += ",";
            if (n) out += format_number(sum / n);
        }
        out += "\n";
    }
    return out;
}

std::string deltas_csv(const ComparisonTable& table) {
    std::string out = "variant,domain,dimension,mean,delta\n";
    for (const auto& r : table.rows) {
        const ComparisonRow* base = nullptr;
        for (const auto& b : table.rows)
            if (b.metadata.domain_label == r.metadata.domain_label && b.metadata.variant == "full") {
                base = &b;
                break;
            }
        if (base == nullptr)
            for (const auto& b : table.rows)
                if (b.metadata.domain_label == r.metadata.domain_label) {
                    base = &b;
                    break;
                }
        const std::string prefix = r.metadata.variant + "," + r.metadata.domain_label + ",";
        for (std::size_t i = 0; i < kNumDimensions; ++i) {
            const auto e = static_cast<Eigen::Index>(i);
            out += prefix + to_string(kDimensions[i]) + "," + format_number(r.means[e]) + "," +
                   format_number(r.means[e] - base->means[e]) + "\n";
        }
        out += prefix + "composite," + format_number(r.composite) + "," + format_number(r.composite - base->composite) +
               "\n";
    }
    return out;
}

void write_comparison(const ComparisonTable& table, const fs::path& out_dir) {
    std::vector<JudgeReport> reports;
    for (const auto& r : table.rows) {
        JudgeReport rep;
        rep.metadata = r.metadata;
        rep.per_dimension_means = r.means;
        rep.overall_composite_mean = r.composite;
        reports.push_back(rep);
    }
    const HeatmapGrid grid = heatmap_grid(reports);
    write_file_atomic(out_dir / "comparison.csv", comparison_csv(table));
    write_file_atomic(out_dir / "deltas.csv", deltas_csv(table));
    write_file_atomic(out_dir / "heatmap.csv", heatmap_csv(grid));
    write_file_atomic(out_dir / "heatmap.svg", heatmap_svg(grid));
}

}  // namespace revmine
