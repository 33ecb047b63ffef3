#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace drp {

enum class ChatRole { System, User, Assistant };

[[nodiscard]] const char* to_string(ChatRole role) noexcept;

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed_hint;  // not part of the cache key

    // Throws InvalidArgument: empty messages, first role not system/user,
    // temperature outside [0, 2], non-positive max_tokens.
    void validate() const;
};

struct ChatResponse {
    std::string content;
    std::optional<std::string> reasoning_trace;
    std::string model_id;
    bool cached = false;
    std::int64_t latency_ms = 0;
};

enum class ProviderKind { Remote, Mock };

struct ProviderSpec {
    ProviderKind kind = ProviderKind::Mock;
    std::string base_url;  // required for remote
    std::string model_id;
    double request_timeout_s = 120.0;
    std::size_t max_retries = 3;
    double retry_base_delay_s = 1.0;  // backoff: base * 2^attempt
    int max_tokens = 1024;

    void validate() const;
    bool operator==(const ProviderSpec&) const = default;
};

[[nodiscard]] nlohmann::json to_json(const ProviderSpec& spec);
[[nodiscard]] ProviderSpec provider_spec_from_json(const nlohmann::json& j);

// Chat-completions request body: {"model","messages":[{"role","content"}],
// "temperature","max_tokens"}, keys in that order, compact. This is both the
// wire body and the canonical serialization behind the cache key.
[[nodiscard]] std::string chat_request_body(const ChatRequest& request);

// SHA-256 (hex) of chat_request_body.
[[nodiscard]] std::string canonical_request_hash(const ChatRequest& request);

struct ReasoningSplit {
    std::string content;
    std::optional<std::string> reasoning_trace;
};

// Moves every <think>...</think> segment (and a bare leading "...</think>"
// prefix) into the reasoning trace; the returned content never contains
// "<think>".
[[nodiscard]] ReasoningSplit split_reasoning(const std::string& raw);

struct RawCompletion {
    std::string content;
    std::optional<std::string> reasoning_trace;
};

// Implementations must be safe to call concurrently.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    [[nodiscard]] virtual RawCompletion send(const ChatRequest& request) = 0;
};

// Speaks the chat-completions wire protocol. Retries transport errors and
// HTTP 429/5xx with exponential backoff.
class RemoteChatProvider final : public ChatProvider {
public:
    explicit RemoteChatProvider(ProviderSpec spec, std::string api_key = {});
    [[nodiscard]] RawCompletion send(const ChatRequest& request) override;

private:
    ProviderSpec spec_;
    std::string api_key_;
};

// Offline provider. Looks up `<dir>/<digest>.json` first, then falls back to
// the next entry of `<dir>/script.json` (an ordered array) when present.
// Throws FixtureMiss otherwise.
class FixtureMockProvider final : public ChatProvider {
public:
    explicit FixtureMockProvider(std::filesystem::path fixture_dir);
    [[nodiscard]] RawCompletion send(const ChatRequest& request) override;

    [[nodiscard]] std::size_t script_remaining() const;

private:
    std::filesystem::path dir_;
    std::vector<RawCompletion> script_;
    mutable std::mutex mu_;
    std::size_t cursor_ = 0;
};

// Programmatic provider for tests and embedding applications.
class CallbackProvider final : public ChatProvider {
public:
    using Fn = std::function<RawCompletion(const ChatRequest&)>;
    explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}
    [[nodiscard]] RawCompletion send(const ChatRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

[[nodiscard]] std::shared_ptr<ChatProvider> make_chat_provider(const ProviderSpec& spec,
                                                               const std::filesystem::path& fixture_dir);

// One provider call; splits reasoning, times the call, rejects empty content.
[[nodiscard]] ChatResponse complete(const ChatRequest& request, ChatProvider& provider);

// Content-addressed response store: one `<digest>.json` file per entry,
// written to a temp file and renamed into place.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    [[nodiscard]] std::optional<ChatResponse> load(const std::string& digest) const;
    void store(const std::string& digest, const ChatResponse& response) const;
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

// Hit: stored response with cached=true and no provider call.
// Miss: complete(), persist, cached=false.
[[nodiscard]] ChatResponse cached_complete(const ChatRequest& request, ChatProvider& provider,
                                           const ResponseCache& cache);

enum class LlmRole { Extractor, Validator, Summarizer, Generator, Judge };

inline constexpr LlmRole kAllRoles[] = {LlmRole::Extractor, LlmRole::Validator, LlmRole::Summarizer,
                                        LlmRole::Generator, LlmRole::Judge};

[[nodiscard]] const char* to_string(LlmRole role) noexcept;
[[nodiscard]] LlmRole llm_role_from_string(const std::string& name);

struct RoleStats {
    std::size_t requests = 0;
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
};

// Routes every LLM role through one place: provider binding, optional cache,
// in-flight limit, per-role counters.
class Gateway {
public:
    using Observer = std::function<void(LlmRole, const ChatRequest&, const ChatResponse&)>;

    explicit Gateway(std::size_t max_concurrency = 4, std::optional<std::filesystem::path> cache_dir = std::nullopt);

    void bind(LlmRole role, ProviderSpec spec, std::shared_ptr<ChatProvider> provider);
    [[nodiscard]] bool bound(LlmRole role) const;
    [[nodiscard]] const ProviderSpec& spec(LlmRole role) const;

    // Builds a request from the role's spec (model, max_tokens).
    [[nodiscard]] ChatRequest make_request(LlmRole role, std::vector<ChatMessage> messages, double temperature) const;

    [[nodiscard]] ChatResponse complete(LlmRole role, const ChatRequest& request);

    [[nodiscard]] std::map<LlmRole, RoleStats> stats() const;
    [[nodiscard]] std::size_t total_provider_calls() const;

    // Called after every successful completion (cached or not).
    void set_observer(Observer observer);

private:
    struct Binding {
        ProviderSpec spec;
        std::shared_ptr<ChatProvider> provider;
    };
    struct Counters {
        std::atomic<std::size_t> requests{0};
        std::atomic<std::size_t> provider_calls{0};
        std::atomic<std::size_t> cache_hits{0};
    };

    void acquire();
    void release();

    std::map<LlmRole, Binding> bindings_;
    std::map<LlmRole, Counters> counters_;
    std::optional<ResponseCache> cache_;
    std::size_t max_concurrency_;
    std::size_t in_flight_ = 0;
    std::mutex slot_mu_;
    std::condition_variable slot_cv_;
    std::mutex observer_mu_;
    Observer observer_;
};

}  // namespace drp
