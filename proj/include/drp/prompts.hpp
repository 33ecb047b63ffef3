#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace drp {

// Template names; each maps to prompts/<name>.txt.
namespace prompt {
inline constexpr const char* kExtractSystem = "extract_system";
inline constexpr const char* kExtractUser = "extract_user";
inline constexpr const char* kValidateSystem = "validate_system";
inline constexpr const char* kValidateUser = "validate_user";
inline constexpr const char* kSummarizeSystem = "summarize_system";
inline constexpr const char* kSummarizeUser = "summarize_user";
inline constexpr const char* kGenerateSystem = "generate_system";
inline constexpr const char* kGenerateNonP = "generate_user_non_p";
inline constexpr const char* kGenerateRag = "generate_user_rag";
inline constexpr const char* kGenerateDrp = "generate_user_drp";
inline constexpr const char* kJudgeSystem = "judge_system";
inline constexpr const char* kJudgeUser = "judge_user";
}  // namespace prompt

class PromptSet {
public:
    // Templates compiled into the library from prompts/*.txt.
    [[nodiscard]] static PromptSet defaults();

    // Defaults overridden by every <name>.txt found in `dir`.
    // Throws Io (missing dir) or Config (unknown template name).
    [[nodiscard]] static PromptSet load(const std::filesystem::path& dir);

    // Throws Config for an unknown name.
    [[nodiscard]] const std::string& get(const std::string& name) const;

    // SHA-256 over all (name, template) pairs; recorded in run manifests.
    [[nodiscard]] std::string version() const;

    [[nodiscard]] const std::map<std::string, std::string>& templates() const noexcept { return templates_; }
    bool operator==(const PromptSet&) const = default;

private:
    std::map<std::string, std::string> templates_;
};

// Replaces every {{name}} with vars.at(name). Throws Config when a
// placeholder has no value.
[[nodiscard]] std::string render_template(const std::string& tpl, const std::map<std::string, std::string>& vars);

}  // namespace drp
