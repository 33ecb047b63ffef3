#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "drp/embed.hpp"
#include "drp/llm.hpp"
#include "drp/pipeline.hpp"
#include "drp/uvq.hpp"

namespace drp {

enum class EmbeddingKind { Hash, Remote };

struct EmbeddingSettings {
    EmbeddingKind kind = EmbeddingKind::Hash;
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::string model;
    std::string base_url;
    double timeout_s = 60.0;
};

// The single JSON document behind every CLI command. Relative paths are
// resolved against the directory holding the config file.
struct CliConfig {
    nlohmann::json source = nlohmann::json::object();  // document as written
    std::filesystem::path base_dir;                     // relative paths resolve here
    std::filesystem::path corpus;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> prompt_dir;
    std::filesystem::path fixture_dir;
    RunConfig run;
    UvqAggregation uvq_aggregation = UvqAggregation::Sum;
    EmbeddingSettings embedding;
    std::map<LlmRole, ProviderSpec> roles;  // every role present after parsing
    bool mock = false;
};

// Throws Config on unknown keys or bad values.
[[nodiscard]] CliConfig parse_cli_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
// Throws Io when the file is missing, Config when it is not valid JSON.
[[nodiscard]] CliConfig load_cli_config(const std::filesystem::path& path);

// --mock: every role becomes a mock provider and the embedder becomes the
// hash embedder. Model ids are kept so cache keys stay stable.
void apply_mock_override(CliConfig& cfg);

// Resolved config as recorded in run manifests: the document with mode and
// mock state applied. Paths stay as written.
[[nodiscard]] nlohmann::json resolved_config_json(const CliConfig& cfg);

[[nodiscard]] std::unique_ptr<Gateway> make_gateway(const CliConfig& cfg);
[[nodiscard]] std::unique_ptr<EmbeddingProvider> make_embedder(const CliConfig& cfg);
[[nodiscard]] PromptSet load_prompts(const CliConfig& cfg);

}  // namespace drp
