#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "revmine/errors.hpp"
#include "revmine/util.hpp"

namespace revmine {

enum class BackendKind { remote, scripted };

struct BackendSpec {
    std::string name;
    BackendKind kind = BackendKind::scripted;
    std::string endpoint;
    std::string model;
    std::string token_env;
    double temperature = 0.2;
    int max_retries = 3;
    int backoff_base_ms = 1000;
    int max_in_flight = 4;
    double timeout_seconds = 120.0;
    // seeds the retry jitter
    std::uint64_t seed = 0;
    std::string script_path;
};

Json to_json(const BackendSpec& spec);
BackendSpec backend_spec_from_json(const std::string& name, const Json& j);

struct ChatRequest {
    std::optional<std::string> system;
    std::string user;
    std::optional<double> temperature_override;
    // Routing key for scripted backends, e.g. "eval/track-1/<issue_id>".
    std::string tag;
};

struct ChatResponse {
    std::string text;
    std::string backend;
    long latency_ms = 0;
    int attempt = 1;
};

class Backend {
public:
    explicit Backend(BackendSpec spec) : spec_(std::move(spec)) {}
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const BackendSpec& spec() const noexcept { return spec_; }
    const std::string& name() const noexcept { return spec_.name; }
    std::size_t calls() const noexcept { return calls_.load(); }

    ChatResponse complete(const ChatRequest& request);

protected:
    virtual ChatResponse do_complete(const ChatRequest& request) = 0;

private:
    BackendSpec spec_;
    std::atomic<std::size_t> calls_{0};
};

// Tag -> ordered responses. The i-th request carrying tag T receives entry i
// of the table row found by walking T's '/'-separated prefixes (longest
// first) and finally "*". Past the end of a row the last entry repeats.
using ScriptTable = std::map<std::string, std::vector<std::string>>;

ScriptTable load_script(const std::filesystem::path& path);
ScriptTable script_from_json(const Json& j);

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(BackendSpec spec, ScriptTable table);
    // Requests seen so far, in arrival order.
    std::vector<ChatRequest> requests() const;

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    ScriptTable table_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> cursors_;
    std::vector<ChatRequest> requests_;
};

// Chat-completions over HTTP. Retries transport errors, 429 and 5xx with
// exponential backoff (base, factor 2, seeded jitter of up to +25%).
class RemoteBackend final : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    explicit RemoteBackend(BackendSpec spec, Sleeper sleeper = {});

    // Request body as sent on the wire.
    Json request_body(const ChatRequest& request) const;

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    std::chrono::milliseconds backoff(int attempt);

    Sleeper sleeper_;
    std::counting_semaphore<1024> in_flight_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

/// Strips `<think>…</think>` blocks, Markdown fence lines and surrounding
/// whitespace. Idempotent.
std::string sanitize(std::string_view text);

/// Sanitizes, then parses the first balanced JSON object or array.
/// Throws NoJsonFound or ParseError.
Json extract_json(std::string_view text);

struct RepairEvent {
    std::string tag;
    int attempt = 0;
    std::string error;
};

class RepairLog {
public:
    void record(RepairEvent event);
    std::vector<RepairEvent> events() const;

private:
    mutable std::mutex mutex_;
    std::vector<RepairEvent> events_;
};

inline constexpr int kMaxRepairs = 2;

/// Completes `request` and feeds the reply to `parse`. When `parse` throws an
/// OutputError the same backend is re-asked with its previous reply and
/// `repair_instruction`; after kMaxRepairs failed repairs the error surfaces.
template <typename Parse>
auto complete_parsed(Backend& backend, const ChatRequest& request, Parse&& parse,
                     const std::string& repair_instruction, RepairLog* log = nullptr)
    -> decltype(parse(std::declval<const std::string&>())) {
    ChatRequest current = request;
    for (int attempt = 0;; ++attempt) {
        ChatResponse response = backend.complete(current);
        try {
            return parse(response.text);
        } catch (const OutputError& e) {
            if (log) log->record({request.tag, attempt + 1, e.kind() + ": " + e.what()});
            if (attempt == kMaxRepairs) throw;
            current = request;
            current.user = request.user + "\n\nYour previous reply was:\n" + response.text +
                           "\n\nThat reply could not be used (" + e.what() + "). " + repair_instruction;
        }
    }
}

inline const std::string kJsonRepairInstruction =
    "Respond again with only valid JSON and no other text.";

// Owns one Backend per configured name.
class BackendRegistry {
public:
    void add(std::unique_ptr<Backend> backend);
    Backend& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::map<std::string, std::size_t> call_counts() const;

private:
    std::map<std::string, std::unique_ptr<Backend>> backends_;
};

}  // namespace revmine
