#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/llm.hpp"
#include "drp/prompts.hpp"
#include "drp/types.hpp"

namespace drp {

enum class FeatureCategory { Writing, Emotion, Semantics, Structure, Pragmatics };

inline constexpr FeatureCategory kAllCategories[] = {FeatureCategory::Writing, FeatureCategory::Emotion,
                                                     FeatureCategory::Semantics, FeatureCategory::Structure,
                                                     FeatureCategory::Pragmatics};

[[nodiscard]] const char* to_string(FeatureCategory c) noexcept;
// Case-insensitive. Throws JudgeParse for anything outside the five names.
[[nodiscard]] FeatureCategory feature_category_from_string(const std::string& name);

struct ValidityVerdict {
    bool comparative = false;
    bool atomic = false;
    bool clear = false;
    std::optional<FeatureCategory> category;
    bool consistent = false;

    [[nodiscard]] bool categorized() const noexcept { return category.has_value(); }
    [[nodiscard]] bool valid() const noexcept { return comparative && atomic && clear && categorized() && consistent; }
    bool operator==(const ValidityVerdict&) const = default;
};

// Parses the five-line judge grammar. Each key must appear once with a legal
// value; anything else throws OutputParseError(JudgeParse).
[[nodiscard]] ValidityVerdict parse_judge_output(const std::string& raw);

// "[name] description (direction: x)", the form shown to the judge.
[[nodiscard]] std::string render_feature_for_judge(const DifferenceFeature& f);

// One judge call. `siblings` are the same user's other features that share
// the canonical dimension name; the judge uses them to rate consistency.
[[nodiscard]] ValidityVerdict judge_feature(const DifferenceFeature& feature,
                                            std::span<const DifferenceFeature> siblings, Gateway& gateway,
                                            const PromptSet& prompts, double temperature = 0.0);

// Lowercased, punctuation-trimmed tokens, sorted, joined by single spaces.
[[nodiscard]] std::string canonical_dimension_name(const std::string& name);

struct FeatureKey {
    FeatureCategory category = FeatureCategory::Writing;
    std::string name;
    Direction direction = Direction::Qualitative;

    auto operator<=>(const FeatureKey&) const = default;
    bool operator==(const FeatureKey&) const = default;
};

struct JudgedFeature {
    DifferenceFeature feature;
    ValidityVerdict verdict;
};

// Throws InvalidArgument when the verdict is not valid().
[[nodiscard]] FeatureKey canonical_feature_key(const DifferenceFeature& feature, const ValidityVerdict& verdict);

// Drops invalid features, collapses duplicates by key and removes every
// feature of a (category, name) that occurs with both target_higher and
// target_lower. The survivor for a key is the lexicographically smallest
// feature, so the result does not depend on input order. Sorted by key.
[[nodiscard]] std::vector<JudgedFeature> dedup_and_resolve(std::span<const JudgedFeature> user_features);

enum class UvqAggregation { Sum, Union };

[[nodiscard]] const char* to_string(UvqAggregation a) noexcept;
[[nodiscard]] UvqAggregation uvq_aggregation_from_string(const std::string& name);

struct UvqReport {
    std::map<std::string, std::size_t> per_user;
    std::size_t dataset_uvq = 0;
    // Empty when no feature survived; otherwise holds all five categories.
    std::map<FeatureCategory, double> category_proportions;
    std::size_t judged_total = 0;
    UvqAggregation aggregation = UvqAggregation::Sum;
};

// per_user_sets are the outputs of dedup_and_resolve. With Union the dataset
// count and the proportions are taken over distinct keys across users.
[[nodiscard]] UvqReport compute_uvq(const std::map<std::string, std::vector<JudgedFeature>>& per_user_sets,
                                    std::size_t judged_total = 0,
                                    UvqAggregation aggregation = UvqAggregation::Sum);

// Throws DegenerateInput for fewer than two points, mismatched lengths or
// zero variance.
[[nodiscard]] double pearson(std::span<const double> xs, std::span<const double> ys);

// Kept features of every validated report, grouped by target user.
[[nodiscard]] std::map<std::string, std::vector<DifferenceFeature>> collect_kept_features(
    std::span<const ValidatedReport> reports);

// Judges every feature (in parallel through the gateway), then dedups per
// user and aggregates.
[[nodiscard]] UvqReport analyze_uvq(std::span<const ValidatedReport> reports, Gateway& gateway,
                                    const PromptSet& prompts, UvqAggregation aggregation = UvqAggregation::Sum,
                                    std::size_t max_concurrency = 4);

[[nodiscard]] nlohmann::json to_json(const ValidityVerdict& v);
[[nodiscard]] nlohmann::json to_json(const UvqReport& r);
[[nodiscard]] UvqReport uvq_report_from_json(const nlohmann::json& j);

}  // namespace drp
