#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "drp/corpus.hpp"
#include "drp/embed.hpp"
#include "drp/error.hpp"
#include "drp/llm.hpp"
#include "drp/run_bundle.hpp"

namespace drp::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("drp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Embeds by lookup; unknown texts are an error.
class StubEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit StubEmbeddingProvider(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {
        dim_ = table_.begin()->second.size();
    }
    [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) {
            auto it = table_.find(t);
            if (it == table_.end()) throw Error(ErrorKind::InvalidArgument, "stub has no vector for '" + t + "'");
            out.emplace_back(it->second);
        }
        return out;
    }

private:
    std::map<std::string, std::vector<double>> table_;
    std::size_t dim_ = 0;
};

inline ReviewSample sample(std::string user, std::string item, std::string text, std::int64_t ts = 0,
                           std::string title = "Title") {
    ReviewSample s;
    s.user_id = std::move(user);
    s.item_id = std::move(item);
    s.item_title = std::move(title);
    s.review_text = std::move(text);
    s.timestamp = ts;
    return s;
}

inline std::filesystem::path source_dir() { return DRP_SOURCE_DIR; }

struct GoldenRequest {
    ChatRequest request;
    std::string body;
    std::string digest;
};

inline GoldenRequest load_golden_request() {
    const auto j = nlohmann::json::parse(read_text_file(source_dir() / "tests/fixtures/golden_request.json"));
    GoldenRequest g;
    const auto& r = j.at("request");
    g.request.model_id = r.at("model_id").get<std::string>();
    for (const auto& m : r.at("messages")) {
        const auto role = m.at("role").get<std::string>();
        g.request.messages.push_back({role == "system" ? ChatRole::System
                                      : role == "user" ? ChatRole::User
                                                       : ChatRole::Assistant,
                                      m.at("content").get<std::string>()});
    }
    g.request.temperature = r.at("temperature").get<double>();
    g.request.max_tokens = r.at("max_tokens").get<int>();
    if (r.contains("seed_hint")) g.request.seed_hint = r.at("seed_hint").get<std::int64_t>();
    g.body = j.at("body").get<std::string>();
    g.digest = j.at("digest").get<std::string>();
    return g;
}

}  // namespace drp::test
