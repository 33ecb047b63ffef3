#include "drp/llm.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "drp/error.hpp"
#include "drp/hashing.hpp"
#include "drp/http_util.hpp"
#include "drp/tokenize.hpp"

namespace drp {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace fs = std::filesystem;

const char* to_string(ChatRole role) noexcept {
    switch (role) {
        case ChatRole::System:    return "system";
        case ChatRole::User:      return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

void ChatRequest::validate() const {
    if (messages.empty()) throw Error(ErrorKind::InvalidArgument, "chat request has no messages");
    if (messages.front().role == ChatRole::Assistant)
        throw Error(ErrorKind::InvalidArgument, "first message must be system or user");
    if (!std::isfinite(temperature) || temperature < 0.0 || temperature > 2.0)
        throw Error(ErrorKind::InvalidArgument, "temperature must be finite and in [0, 2]");
    if (max_tokens <= 0) throw Error(ErrorKind::InvalidArgument, "max_tokens must be positive");
}

void ProviderSpec::validate() const {
    if (kind == ProviderKind::Remote && base_url.empty())
        throw Error(ErrorKind::Config, "remote provider '" + model_id + "' requires base_url");
    if (max_tokens <= 0) throw Error(ErrorKind::Config, "max_tokens must be positive");
    if (request_timeout_s <= 0.0) throw Error(ErrorKind::Config, "request_timeout_s must be positive");
}

json to_json(const ProviderSpec& spec) {
    json j;
    j["kind"] = spec.kind == ProviderKind::Remote ? "remote" : "mock";
    if (!spec.base_url.empty()) j["base_url"] = spec.base_url;
    j["model_id"] = spec.model_id;
    j["request_timeout_s"] = spec.request_timeout_s;
    j["max_retries"] = spec.max_retries;
    j["retry_base_delay_s"] = spec.retry_base_delay_s;
    j["max_tokens"] = spec.max_tokens;
    return j;
}

ProviderSpec provider_spec_from_json(const json& j) {
    static const std::vector<std::string> kKnown = {"kind",        "base_url",           "model_id", "request_timeout_s",
                                                    "max_retries", "retry_base_delay_s", "max_tokens"};
    if (!j.is_object()) throw Error(ErrorKind::Config, "provider spec must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end())
            throw Error(ErrorKind::Config, "unknown provider key '" + key + "'");
    ProviderSpec spec;
    try {
        const auto kind = j.value("kind", std::string("mock"));
        if (kind == "remote") {
            spec.kind = ProviderKind::Remote;
        } else if (kind == "mock") {
            spec.kind = ProviderKind::Mock;
        } else {
            throw Error(ErrorKind::Config, "provider kind must be 'remote' or 'mock'");
        }
        spec.base_url = j.value("base_url", "");
        spec.model_id = j.value("model_id", "");
        spec.request_timeout_s = j.value("request_timeout_s", spec.request_timeout_s);
        spec.max_retries = j.value("max_retries", spec.max_retries);
        spec.retry_base_delay_s = j.value("retry_base_delay_s", spec.retry_base_delay_s);
        spec.max_tokens = j.value("max_tokens", spec.max_tokens);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad provider spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string chat_request_body(const ChatRequest& request) {
    ojson body;
    body["model"] = request.model_id;
    body["messages"] = ojson::array();
    for (const auto& m : request.messages) {
        ojson msg;
        msg["role"] = to_string(m.role);
        msg["content"] = m.content;
        body["messages"].push_back(std::move(msg));
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    return body.dump();
}

std::string canonical_request_hash(const ChatRequest& request) { return sha256_hex(chat_request_body(request)); }

ReasoningSplit split_reasoning(const std::string& raw) {
    static constexpr std::string_view kOpen = "<think>";
    static constexpr std::string_view kClose = "</think>";

    std::string content = raw;
    std::vector<std::string> traces;

    // Some reasoning models omit the opening tag and start straight with the trace.
    const auto close = content.find(kClose);
    const auto open = content.find(kOpen);
    if (close != std::string::npos && (open == std::string::npos || close < open)) {
        traces.push_back(content.substr(0, close));
        content.erase(0, close + kClose.size());
    }

    for (auto pos = content.find(kOpen); pos != std::string::npos; pos = content.find(kOpen)) {
        const auto end = content.find(kClose, pos + kOpen.size());
        if (end == std::string::npos) {
            traces.push_back(content.substr(pos + kOpen.size()));
            content.erase(pos);
        } else {
            traces.push_back(content.substr(pos + kOpen.size(), end - pos - kOpen.size()));
            content.erase(pos, end + kClose.size() - pos);
        }
    }

    ReasoningSplit out;
    out.content = trim(content);
    if (!traces.empty()) {
        std::string joined;
        for (const auto& t : traces) {
            auto piece = trim(t);
            if (piece.empty()) continue;
            if (!joined.empty()) joined += "\n\n";
            joined += piece;
        }
        out.reasoning_trace = std::move(joined);
    }
    return out;
}

// ---------------------------------------------------------------------------

RemoteChatProvider::RemoteChatProvider(ProviderSpec spec, std::string api_key)
    : spec_(std::move(spec)), api_key_(api_key.empty() ? api_key_from_env() : std::move(api_key)) {
    if (spec_.kind != ProviderKind::Remote) throw Error(ErrorKind::Config, "RemoteChatProvider needs a remote spec");
    spec_.validate();
}

RawCompletion RemoteChatProvider::send(const ChatRequest& request) {
    const auto endpoint = split_base_url(spec_.base_url);
    const std::string path = endpoint.path_prefix + "/v1/chat/completions";
    const std::string body = chat_request_body(request);

    for (std::size_t attempt = 0;; ++attempt) {
        httplib::Client client(endpoint.origin);
        configure_client(client, spec_.request_timeout_s, api_key_);
        auto res = client.Post(path, body, "application/json");

        bool retryable = false;
        std::optional<Error> failure;
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            failure.emplace(timed_out ? ErrorKind::Timeout : ErrorKind::Provider,
                            "request to " + spec_.base_url + " failed: " + httplib::to_string(err));
            retryable = true;
        } else if (res->status == 429 || res->status >= 500) {
            failure.emplace(HttpError(res->status, res->body.substr(0, 512)));
            retryable = true;
        } else if (res->status != 200) {
            throw HttpError(res->status, res->body.substr(0, 512));
        }

        if (!failure) {
            try {
                const auto reply = json::parse(res->body);
                const auto& message = reply.at("choices").at(0).at("message");
                RawCompletion out;
                out.content = message.at("content").get<std::string>();
                if (auto it = message.find("reasoning_content"); it != message.end() && it->is_string())
                    out.reasoning_trace = it->get<std::string>();
                return out;
            } catch (const json::exception& e) {
                throw Error(ErrorKind::Protocol, std::string("unparseable chat response: ") + e.what());
            }
        }
        if (!retryable || attempt >= spec_.max_retries) throw *failure;
        const double delay = spec_.retry_base_delay_s * std::pow(2.0, static_cast<double>(attempt));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
}

// ---------------------------------------------------------------------------

namespace {

RawCompletion completion_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("content") || !j["content"].is_string())
        throw Error(ErrorKind::Protocol, where + ": fixture needs a string 'content'");
    RawCompletion out;
    out.content = j["content"].get<std::string>();
    if (auto it = j.find("reasoning_trace"); it != j.end() && it->is_string()) out.reasoning_trace = it->get<std::string>();
    return out;
}

json read_json_file(const fs::path& path, ErrorKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(kind, "cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(kind, "malformed JSON in '" + path.string() + "': " + e.what());
    }
}

}  // namespace

FixtureMockProvider::FixtureMockProvider(fs::path fixture_dir) : dir_(std::move(fixture_dir)) {
    const auto script_path = dir_ / "script.json";
    if (fs::exists(script_path)) {
        const auto script = read_json_file(script_path, ErrorKind::Protocol);
        if (!script.is_array()) throw Error(ErrorKind::Protocol, "script.json must be an array");
        for (const auto& entry : script) script_.push_back(completion_from_json(entry, script_path.string()));
    }
}

RawCompletion FixtureMockProvider::send(const ChatRequest& request) {
    const auto digest = canonical_request_hash(request);
    const auto path = dir_ / (digest + ".json");
    if (fs::exists(path)) return completion_from_json(read_json_file(path, ErrorKind::Protocol), path.string());

    std::lock_guard lock(mu_);
    if (cursor_ < script_.size()) return script_[cursor_++];
    throw Error(ErrorKind::FixtureMiss, "no mock fixture for request " + digest + " in '" + dir_.string() + "'");
}

std::size_t FixtureMockProvider::script_remaining() const {
    std::lock_guard lock(mu_);
    return script_.size() - cursor_;
}

std::shared_ptr<ChatProvider> make_chat_provider(const ProviderSpec& spec, const fs::path& fixture_dir) {
    if (spec.kind == ProviderKind::Remote) return std::make_shared<RemoteChatProvider>(spec);
    return std::make_shared<FixtureMockProvider>(fixture_dir);
}

ChatResponse complete(const ChatRequest& request, ChatProvider& provider) {
    request.validate();
    const auto start = std::chrono::steady_clock::now();
    RawCompletion raw = provider.send(request);
    const auto elapsed = std::chrono::steady_clock::now() - start;

    auto split = split_reasoning(raw.content);
    ChatResponse out;
    out.content = std::move(split.content);
    if (raw.reasoning_trace && split.reasoning_trace) {
        out.reasoning_trace = trim(*raw.reasoning_trace) + "\n\n" + *split.reasoning_trace;
    } else if (raw.reasoning_trace) {
        out.reasoning_trace = trim(*raw.reasoning_trace);
    } else {
        out.reasoning_trace = std::move(split.reasoning_trace);
    }
    out.model_id = request.model_id;
    out.cached = false;
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    if (out.content.empty()) throw Error(ErrorKind::Protocol, "provider returned empty content");
    return out;
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

std::optional<ChatResponse> ResponseCache::load(const std::string& digest) const {
    const auto path = dir_ / (digest + ".json");
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    const auto j = read_json_file(path, ErrorKind::CacheIo);
    try {
        ChatResponse r;
        r.content = j.at("content").get<std::string>();
        if (auto it = j.find("reasoning_trace"); it != j.end() && it->is_string()) r.reasoning_trace = it->get<std::string>();
        r.model_id = j.value("model_id", "");
        r.cached = true;
        r.latency_ms = 0;
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CacheIo, "malformed cache entry '" + path.string() + "': " + e.what());
    }
}

void ResponseCache::store(const std::string& digest, const ChatResponse& response) const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::CacheIo, "cannot create cache dir '" + dir_.string() + "': " + ec.message());

    json j;
    j["content"] = response.content;
    j["reasoning_trace"] = response.reasoning_trace ? json(*response.reasoning_trace) : json(nullptr);
    j["model_id"] = response.model_id;

    thread_local std::mt19937_64 rng{std::random_device{}()};
    const auto final_path = dir_ / (digest + ".json");
    const auto tmp_path = dir_ / (digest + ".json.tmp." + std::to_string(rng()));
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::CacheIo, "cannot write '" + tmp_path.string() + "'");
        out << j.dump();
        out.flush();
        if (!out) throw Error(ErrorKind::CacheIo, "write failed for '" + tmp_path.string() + "'");
    }
    fs::rename(tmp_path, final_path, ec);
    if (ec) {
        fs::remove(tmp_path, ec);
        throw Error(ErrorKind::CacheIo, "cannot rename cache entry into '" + final_path.string() + "'");
    }
}

ChatResponse cached_complete(const ChatRequest& request, ChatProvider& provider, const ResponseCache& cache) {
    request.validate();
    const auto digest = canonical_request_hash(request);
    if (auto hit = cache.load(digest)) return *hit;
    auto response = complete(request, provider);
    cache.store(digest, response);
    return response;
}

// ---------------------------------------------------------------------------

const char* to_string(LlmRole role) noexcept {
    switch (role) {
        case LlmRole::Extractor:  return "extractor";
        case LlmRole::Validator:  return "validator";
        case LlmRole::Summarizer: return "summarizer";
        case LlmRole::Generator:  return "generator";
        case LlmRole::Judge:      return "judge";
    }
    return "extractor";
}

LlmRole llm_role_from_string(const std::string& name) {
    for (auto role : kAllRoles)
        if (name == to_string(role)) return role;
    throw Error(ErrorKind::Config, "unknown LLM role '" + name + "'");
}

Gateway::Gateway(std::size_t max_concurrency, std::optional<fs::path> cache_dir)
    : max_concurrency_(std::max<std::size_t>(1, max_concurrency)) {
    if (cache_dir) cache_.emplace(*cache_dir);
    for (auto role : kAllRoles) counters_[role];
}

void Gateway::bind(LlmRole role, ProviderSpec spec, std::shared_ptr<ChatProvider> provider) {
    spec.validate();
    if (!provider) throw Error(ErrorKind::InvalidArgument, "null provider");
    bindings_[role] = Binding{std::move(spec), std::move(provider)};
}

bool Gateway::bound(LlmRole role) const { return bindings_.count(role) != 0; }

const ProviderSpec& Gateway::spec(LlmRole role) const {
    auto it = bindings_.find(role);
    if (it == bindings_.end()) throw Error(ErrorKind::Config, std::string("no provider bound for role ") + to_string(role));
    return it->second.spec;
}

ChatRequest Gateway::make_request(LlmRole role, std::vector<ChatMessage> messages, double temperature) const {
    const auto& s = spec(role);
    ChatRequest req;
    req.model_id = s.model_id;
    req.messages = std::move(messages);
    req.temperature = temperature;
    req.max_tokens = s.max_tokens;
    return req;
}

void Gateway::acquire() {
    std::unique_lock lock(slot_mu_);
    slot_cv_.wait(lock, [&] { return in_flight_ < max_concurrency_; });
    ++in_flight_;
}

void Gateway::release() {
    {
        std::lock_guard lock(slot_mu_);
        --in_flight_;
    }
    slot_cv_.notify_one();
}

ChatResponse Gateway::complete(LlmRole role, const ChatRequest& request) {
    auto it = bindings_.find(role);
    if (it == bindings_.end()) throw Error(ErrorKind::Config, std::string("no provider bound for role ") + to_string(role));
    request.validate();
    auto& counters = counters_.at(role);
    counters.requests.fetch_add(1);

    std::optional<ChatResponse> response;
    std::string digest;
    if (cache_) {
        digest = canonical_request_hash(request);
        response = cache_->load(digest);
        if (response) counters.cache_hits.fetch_add(1);
    }
    if (!response) {
        acquire();
        try {
            counters.provider_calls.fetch_add(1);
            response = drp::complete(request, *it->second.provider);
        } catch (...) {
            release();
            throw;
        }
        release();
        if (cache_) cache_->store(digest, *response);
    }

    Observer observer;
    {
        std::lock_guard lock(observer_mu_);
        observer = observer_;
    }
    if (observer) observer(role, request, *response);
    return *response;
}

std::map<LlmRole, RoleStats> Gateway::stats() const {
    std::map<LlmRole, RoleStats> out;
    for (const auto& [role, c] : counters_)
        out[role] = RoleStats{c.requests.load(), c.provider_calls.load(), c.cache_hits.load()};
    return out;
}

std::size_t Gateway::total_provider_calls() const {
    std::size_t n = 0;
    for (const auto& [role, c] : counters_) n += c.provider_calls.load();
    return n;
}

void Gateway::set_observer(Observer observer) {
    std::lock_guard lock(observer_mu_);
    observer_ = std::move(observer);
}

}  // namespace drp
