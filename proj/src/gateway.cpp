#include "revmine/gateway.hpp"

#include <cmath>
#include <regex>
#include <thread>

#include "revmine/http.hpp"

namespace revmine {

Json to_json(const BackendSpec& spec) {
    Json j = {{"kind", spec.kind == BackendKind::remote ? "remote" : "scripted"},
              {"temperature", spec.temperature},
              {"max_retries", spec.max_retries}};
    if (spec.kind == BackendKind::remote) {
        j["endpoint"] = spec.endpoint;
        j["model"] = spec.model;
        j["token_env"] = spec.token_env;
        j["backoff_base_ms"] = spec.backoff_base_ms;
        j["max_in_flight"] = spec.max_in_flight;
        j["timeout_seconds"] = spec.timeout_seconds;
        j["seed"] = spec.seed;
    } else {
        j["script"] = spec.script_path;
    }
    return j;
}

BackendSpec backend_spec_from_json(const std::string& name, const Json& j) {
    BackendSpec spec;
    spec.name = name;
    const std::string kind = j.value("kind", std::string("remote"));
    if (kind == "remote") spec.kind = BackendKind::remote;
    else if (kind == "scripted") spec.kind = BackendKind::scripted;
    else throw InvalidConfig("backend '" + name + "': unknown kind '" + kind + "'");
    spec.endpoint = j.value("endpoint", std::string());
    spec.model = j.value("model", std::string());
    spec.token_env = j.value("token_env", std::string());
    spec.temperature = j.value("temperature", 0.2);
    spec.max_retries = j.value("max_retries", 3);
    spec.backoff_base_ms = j.value("backoff_base_ms", 1000);
    spec.max_in_flight = j.value("max_in_flight", 4);
    spec.timeout_seconds = j.value("timeout_seconds", 120.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.script_path = j.value("script", std::string());
    if (spec.temperature < 0) throw InvalidConfig("backend '" + name + "': temperature must be >= 0");
    if (spec.max_retries < 0) throw InvalidConfig("backend '" + name + "': max_retries must be >= 0");
    if (spec.max_in_flight < 1 || spec.max_in_flight > 1024)
        throw InvalidConfig("backend '" + name + "': max_in_flight must be in [1, 1024]");
    if (spec.kind == BackendKind::remote && (spec.endpoint.empty() || spec.model.empty()))
        throw InvalidConfig("backend '" + name + "': remote backends need endpoint and model");
    if (spec.kind == BackendKind::scripted && spec.script_path.empty())
        throw InvalidConfig("backend '" + name + "': scripted backends need a script file");
    return spec;
}

ChatResponse Backend::complete(const ChatRequest& request) {
    if (trim(request.user).empty()) throw InvalidConfig("chat request with empty user message");
    ++calls_;
    const auto start = std::chrono::steady_clock::now();
    ChatResponse response = do_complete(request);
    response.backend = spec_.name;
    response.latency_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                std::chrono::steady_clock::now() - start)
                                                .count());
    return response;
}

// ---------------------------------------------------------------------------
// scripted

ScriptTable script_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidConfig("backend script must be a JSON object of tag -> responses");
    ScriptTable table;
    for (const auto& [tag, responses] : j.items()) {
        auto& row = table[tag];
        auto add = [&](const Json& r) { row.push_back(r.is_string() ? r.get<std::string>() : r.dump()); };
        if (responses.is_array()) {
            for (const auto& r : responses) add(r);
        } else {
            add(responses);
        }
    }
    return table;
}

ScriptTable load_script(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FileNotFound("backend script not found: " + path.string());
    return script_from_json(Json::parse(read_file(path)));
}

ScriptedBackend::ScriptedBackend(BackendSpec spec, ScriptTable table)
    : Backend(std::move(spec)), table_(std::move(table)) {}

std::vector<ChatRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

ChatResponse ScriptedBackend::do_complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    const std::vector<std::string>* row = nullptr;
    std::string key = request.tag;
    for (;;) {
        if (auto it = table_.find(key); it != table_.end()) {
            row = &it->second;
            break;
        }
        auto slash = key.rfind('/');
        if (slash == std::string::npos) break;
        key.resize(slash);
    }
    if (row == nullptr)
        if (auto it = table_.find("*"); it != table_.end()) row = &it->second;
    if (row == nullptr || row->empty())
        throw ScriptExhausted("backend '" + name() + "' has no scripted response for tag '" + request.tag + "'");
    std::size_t& cursor = cursors_[request.tag];
    const std::string& text = (*row)[std::min(cursor, row->size() - 1)];
    ++cursor;
    return {text, name(), 0, 1};
}

// ---------------------------------------------------------------------------
// remote

RemoteBackend::RemoteBackend(BackendSpec spec, Sleeper sleeper)
    : Backend(std::move(spec)),
      sleeper_(std::move(sleeper)),
      in_flight_(this->spec().max_in_flight),
      rng_(this->spec().seed) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Json RemoteBackend::request_body(const ChatRequest& request) const {
    Json messages = Json::array();
    if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    return {{"model", spec().model},
            {"messages", messages},
            {"temperature", request.temperature_override.value_or(spec().temperature)}};
}

std::chrono::milliseconds RemoteBackend::backoff(int attempt) {
    double jitter;
    {
        std::lock_guard lock(rng_mutex_);
        jitter = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }
    const double ms = spec().backoff_base_ms * std::pow(2.0, attempt - 1) * (1.0 + 0.25 * jitter);
    return std::chrono::milliseconds(static_cast<long>(ms));
}

ChatResponse RemoteBackend::do_complete(const ChatRequest& request) {
    const std::string body = request_body(request).dump();
    const auto headers = http::bearer_from_env(spec().token_env);
    std::string last_error;
    for (int attempt = 1; attempt <= spec().max_retries + 1; ++attempt) {
        if (attempt > 1) sleeper_(backoff(attempt - 1));
        http::Response response;
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            response = http::post_json(spec().endpoint, "/chat/completions", body, headers, spec().timeout_seconds);
        } catch (const ProviderUnreachable& e) {
            last_error = e.what();
            continue;
        }
        if (response.status == 429 || response.status >= 500) {
            last_error = "HTTP " + std::to_string(response.status);
            continue;
        }
        if (response.status < 200 || response.status >= 300) throw ProviderError(response.status, response.body);
        try {
            Json reply = Json::parse(response.body);
            const auto& content = reply.at("choices").at(0).at("message").at("content");
            return {content.is_string() ? content.get<std::string>() : content.dump(), name(), 0, attempt};
        } catch (const Json::exception& e) {
            throw ProviderError(response.status, std::string("unexpected reply shape: ") + e.what());
        }
    }
    throw BackendExhausted("backend '" + name() + "' failed after " + std::to_string(spec().max_retries + 1) +
                           " attempts: " + last_error);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == BackendKind::remote) return std::make_unique<RemoteBackend>(spec);
    return std::make_unique<ScriptedBackend>(spec, load_script(spec.script_path));
}

// ---------------------------------------------------------------------------
// sanitation and JSON extraction

namespace {

std::string sanitize_once(std::string_view text) {
    static const std::regex think(R"(<think>[\s\S]*?</think>)", std::regex::icase);
    std::string s = std::regex_replace(std::string(text), think, "");
    std::string out;
    for (const auto& line : split_lines(s)) {
        if (trim(line).rfind("```", 0) == 0) continue;
        out += line;
        out += '\n';
    }
    return trim(out);
}

// End offset (exclusive) of the balanced value starting at `start`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '{': stack.push_back('}'); break;
            case '[': stack.push_back(']'); break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) return std::string_view::npos;
                stack.pop_back();
                if (stack.empty()) return i + 1;
                break;
            default: break;
        }
    }
    return std::string_view::npos;
}

}  // namespace

std::string sanitize(std::string_view text) {
    std::string current(text);
    for (;;) {
        std::string next = sanitize_once(current);
        if (next == current) return next;
        current = std::move(next);
    }
}

Json extract_json(std::string_view text) {
    const std::string clean = sanitize(text);
    std::optional<std::size_t> first_failure;
    std::string first_message;
    for (std::size_t pos = clean.find_first_of("{["); pos != std::string::npos;
         pos = clean.find_first_of("{[", pos + 1)) {
        const std::size_t end = balanced_end(clean, pos);
        if (end == std::string::npos) {
            if (!first_failure) {
                first_failure = pos;
                first_message = "unbalanced JSON starting at offset " + std::to_string(pos);
            }
            continue;
        }
        try {
            return Json::parse(std::string_view(clean).substr(pos, end - pos));
        } catch (const Json::parse_error& e) {
            if (!first_failure) {
                first_failure = pos;
                first_message = "invalid JSON at offset " + std::to_string(pos) + ": " + e.what();
            }
        }
    }
    if (first_failure) throw ParseError(*first_failure, first_message);
    throw NoJsonFound("no JSON object or array in reply");
}

// ---------------------------------------------------------------------------

void RepairLog::record(RepairEvent event) {
    std::lock_guard lock(mutex_);
    log_warn("repair-retry for '" + event.tag + "' after: " + event.error);
    events_.push_back(std::move(event));
}

std::vector<RepairEvent> RepairLog::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

void BackendRegistry::add(std::unique_ptr<Backend> backend) {
    auto name = backend->name();
    backends_[name] = std::move(backend);
}

Backend& BackendRegistry::get(const std::string& name) const {
    auto it = backends_.find(name);
    if (it == backends_.end()) throw UnknownBackend("no backend named '" + name + "'");
    return *it->second;
}

bool BackendRegistry::contains(const std::string& name) const { return backends_.contains(name); }

std::map<std::string, std::size_t> BackendRegistry::call_counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [name, b] : backends_) out[name] = b->calls();
    return out;
}

}  // namespace revmine
