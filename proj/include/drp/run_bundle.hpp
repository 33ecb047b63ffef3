#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/llm.hpp"
#include "drp/pipeline.hpp"

namespace drp {

// File-name tag for a temperature: its JSON spelling ("0.0", "0.8").
[[nodiscard]] std::string temperature_tag(double temperature);

struct ManifestInputs {
    nlohmann::json resolved_config = nlohmann::json::object();  // full CLI config as run
    std::string prompt_version;
    std::string corpus_sha256;
    std::map<LlmRole, RoleStats> gateway_stats;  // provider traffic, kept out of the digest
    std::string config_dir;                      // where relative config paths resolve; not digested
};

// Writes <dir>/manifest.json plus generations/reports/summaries.<tag>.jsonl
// (and cluster.json, representatives.json in drp mode). Returns the
// manifest. Its "digest" covers every field except "runtime", which holds
// the timestamp and provider traffic counts.
nlohmann::json write_run_bundle(const RunBundle& bundle, const std::filesystem::path& dir,
                                const ManifestInputs& inputs);

[[nodiscard]] std::string manifest_digest(const nlohmann::json& manifest);

[[nodiscard]] nlohmann::json read_manifest(const std::filesystem::path& dir);
[[nodiscard]] std::vector<double> manifest_temperatures(const nlohmann::json& manifest);

// Throw Io when the file is missing, Parse on malformed lines.
[[nodiscard]] std::vector<GeneratedReview> read_generations(const std::filesystem::path& dir, double temperature);
[[nodiscard]] std::vector<ValidatedReport> read_reports(const std::filesystem::path& dir, double temperature);
[[nodiscard]] std::vector<UserDifferenceSummary> read_summaries(const std::filesystem::path& dir, double temperature);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace drp
