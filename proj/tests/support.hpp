#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <string>

#include "revmine/config.hpp"
#include "revmine/gateway.hpp"

namespace revmine::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(REVMINE_FIXTURES) / name; }
inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(REVMINE_GOLDEN) / name; }

// Removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("revmine-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline RunConfig fixture_config(const std::filesystem::path& out_dir, Variant variant = Variant::full) {
    RunConfig cfg = load_run_config(fixture("config.yaml"));
    cfg.variant = variant;
    cfg.out_dir = out_dir;
    return cfg;
}

inline BackendSpec scripted_spec(const std::string& name) {
    BackendSpec spec;
    spec.name = name;
    spec.kind = BackendKind::scripted;
    spec.script_path = "(inline)";
    return spec;
}

inline ScriptedBackend scripted(const std::string& name, const Json& script) {
    return ScriptedBackend(scripted_spec(name), script_from_json(script));
}

// rel path -> bytes for every file under `dir`, minus run_report.json.
inline std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = std::filesystem::relative(e.path(), dir).generic_string();
        if (rel != "run_report.json") out[rel] = read_file(e.path());
    }
    return out;
}

// run_report.json without its per-invocation "session" block.
inline Json stable_report(const std::filesystem::path& dir) {
    Json j = Json::parse(read_file(dir / "run_report.json"));
    j.erase("session");
    j.erase("out_dir");
    return j;
}

// Rel paths whose bytes differ or that exist on one side only.
inline std::vector<std::string> diff_dirs(const std::filesystem::path& a, const std::filesystem::path& b) {
    const auto sa = snapshot_dir(a), sb = snapshot_dir(b);
    std::vector<std::string> out;
    for (const auto& [rel, bytes] : sa)
        if (auto it = sb.find(rel); it == sb.end() || it->second != bytes) out.push_back(rel);
    for (const auto& [rel, bytes] : sb)
        if (!sa.contains(rel)) out.push_back(rel);
    return out;
}

// The fixture script with some rows replaced, written into `dir`.
inline std::filesystem::path patched_script(const std::filesystem::path& dir, const Json& patch) {
    Json script = Json::parse(read_file(fixture("script.json")));
    for (const auto& [tag, rows] : patch.items()) script[tag] = rows;
    const auto path = dir / "script.json";
    write_file_atomic(path, script.dump(2));
    return path;
}

}  // namespace revmine::test
