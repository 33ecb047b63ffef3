#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace drp {

// One autonomously discovered difference dimension.
struct DifferenceDimension {
    std::string name;        // nonempty, <= 64 chars after trimming
    std::string definition;  // one sentence

    bool operator==(const DifferenceDimension&) const = default;
};

enum class Direction { TargetHigher, TargetLower, Qualitative };

[[nodiscard]] const char* to_string(Direction d) noexcept;
// Unknown tokens map to Qualitative.
[[nodiscard]] Direction direction_from_string(const std::string& token) noexcept;

struct DifferenceFeature {
    DifferenceDimension dimension;
    std::string description;
    Direction direction = Direction::Qualitative;
    std::optional<std::string> evidence;

    bool operator==(const DifferenceFeature&) const = default;
};

// The extractor's output for one (target, representative) pair,
// computed in the context of one target item.
struct DifferenceReport {
    std::string target_user;
    std::string representative_user;
    std::string item_id;
    std::vector<DifferenceFeature> features;
    std::string raw_output;
    std::optional<std::string> reasoning_trace;
    std::string extractor_model;
    double temperature = 0.0;
};

struct DroppedFeature {
    DifferenceFeature feature;
    std::string reason;
};

// Reflectively validated report: kept + dropped == source.features as multisets.
struct ValidatedReport {
    DifferenceReport source;
    std::vector<DifferenceFeature> kept;
    std::vector<DroppedFeature> dropped;
    std::string validator_model;
};

inline constexpr const char* kNoDifferencesSentinel = "NO_DISTINCTIVE_DIFFERENCES";

struct UserDifferenceSummary {
    std::string target_user;
    std::string item_id;
    std::string text;
    std::size_t source_report_count = 0;
};

enum class GenerationMode { Drp, Rag, NonP };

[[nodiscard]] const char* to_string(GenerationMode mode) noexcept;
[[nodiscard]] GenerationMode generation_mode_from_string(const std::string& name);

struct GeneratedReview {
    std::string target_user;
    std::string item_id;
    std::string text;
    GenerationMode mode = GenerationMode::Drp;
    double temperature = 0.0;
    std::string prompt_digest;
};

[[nodiscard]] nlohmann::json to_json(const DifferenceFeature& f);
[[nodiscard]] DifferenceFeature difference_feature_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const DifferenceReport& r);
[[nodiscard]] DifferenceReport difference_report_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const ValidatedReport& r);
[[nodiscard]] ValidatedReport validated_report_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const UserDifferenceSummary& s);
[[nodiscard]] UserDifferenceSummary summary_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const GeneratedReview& g);
[[nodiscard]] GeneratedReview generated_review_from_json(const nlohmann::json& j);

}  // namespace drp
