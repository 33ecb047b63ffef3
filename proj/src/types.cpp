#include "drp/types.hpp"

#include <algorithm>
#include <cctype>

#include "drp/error.hpp"
#include "drp/tokenize.hpp"

namespace drp {

using json = nlohmann::json;

const char* to_string(Direction d) noexcept {
    switch (d) {
        case Direction::TargetHigher: return "target_higher";
        case Direction::TargetLower:  return "target_lower";
        case Direction::Qualitative:  return "qualitative";
    }
    return "qualitative";
}

Direction direction_from_string(const std::string& token) noexcept {
    std::string t;
    for (char c : trim(token))
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '*' && c != '`' && c != '.')
            t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "target_higher") return Direction::TargetHigher;
    if (t == "target_lower") return Direction::TargetLower;
    return Direction::Qualitative;
}

const char* to_string(GenerationMode mode) noexcept {
    switch (mode) {
        case GenerationMode::Drp:  return "drp";
        case GenerationMode::Rag:  return "rag";
        case GenerationMode::NonP: return "non_p";
    }
    return "drp";
}

GenerationMode generation_mode_from_string(const std::string& name) {
    if (name == "drp") return GenerationMode::Drp;
    if (name == "rag") return GenerationMode::Rag;
    if (name == "non_p") return GenerationMode::NonP;
    throw Error(ErrorKind::Config, "unknown mode '" + name + "' (expected drp, rag or non_p)");
}

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

json to_json(const DifferenceFeature& f) {
    return {{"dimension", f.dimension.name},
            {"definition", f.dimension.definition},
            {"description", f.description},
            {"direction", to_string(f.direction)},
            {"evidence", optional_string(f.evidence)}};
}

DifferenceFeature difference_feature_from_json(const json& j) {
    DifferenceFeature f;
    f.dimension.name = j.at("dimension").get<std::string>();
    f.dimension.definition = j.at("definition").get<std::string>();
    f.description = j.at("description").get<std::string>();
    f.direction = direction_from_string(j.at("direction").get<std::string>());
    f.evidence = read_optional_string(j, "evidence");
    return f;
}

json to_json(const DifferenceReport& r) {
    json features = json::array();
    for (const auto& f : r.features) features.push_back(to_json(f));
    return {{"target_user", r.target_user},
            {"representative_user", r.representative_user},
            {"item_id", r.item_id},
            {"features", std::move(features)},
            {"raw_output", r.raw_output},
            {"reasoning_trace", optional_string(r.reasoning_trace)},
            {"extractor_model", r.extractor_model},
            {"temperature", r.temperature}};
}

DifferenceReport difference_report_from_json(const json& j) {
    DifferenceReport r;
    r.target_user = j.at("target_user").get<std::string>();
    r.representative_user = j.at("representative_user").get<std::string>();
    r.item_id = j.value("item_id", "");
    for (const auto& f : j.at("features")) r.features.push_back(difference_feature_from_json(f));
    r.raw_output = j.value("raw_output", "");
    r.reasoning_trace = read_optional_string(j, "reasoning_trace");
    r.extractor_model = j.value("extractor_model", "");
    r.temperature = j.value("temperature", 0.0);
    return r;
}

json to_json(const ValidatedReport& r) {
    json kept = json::array();
    for (const auto& f : r.kept) kept.push_back(to_json(f));
    json dropped = json::array();
    for (const auto& d : r.dropped) dropped.push_back({{"feature", to_json(d.feature)}, {"reason", d.reason}});
    return {{"source", to_json(r.source)},
            {"kept", std::move(kept)},
            {"dropped", std::move(dropped)},
            {"validator_model", r.validator_model}};
}

ValidatedReport validated_report_from_json(const json& j) {
    ValidatedReport r;
    r.source = difference_report_from_json(j.at("source"));
    for (const auto& f : j.at("kept")) r.kept.push_back(difference_feature_from_json(f));
    for (const auto& d : j.at("dropped"))
        r.dropped.push_back({difference_feature_from_json(d.at("feature")), d.value("reason", "")});
    r.validator_model = j.value("validator_model", "");
    return r;
}

json to_json(const UserDifferenceSummary& s) {
    return {{"target_user", s.target_user},
            {"item_id", s.item_id},
            {"text", s.text},
            {"source_report_count", s.source_report_count}};
}

UserDifferenceSummary summary_from_json(const json& j) {
    return {j.at("target_user").get<std::string>(), j.value("item_id", ""), j.at("text").get<std::string>(),
            j.value("source_report_count", std::size_t{0})};
}

json to_json(const GeneratedReview& g) {
    return {{"target_user", g.target_user},
            {"item_id", g.item_id},
            {"text", g.text},
            {"mode", to_string(g.mode)},
            {"temperature", g.temperature},
            {"prompt_digest", g.prompt_digest}};
}

GeneratedReview generated_review_from_json(const json& j) {
    GeneratedReview g;
    g.target_user = j.at("target_user").get<std::string>();
    g.item_id = j.at("item_id").get<std::string>();
    g.text = j.at("text").get<std::string>();
    g.mode = generation_mode_from_string(j.value("mode", "drp"));
    g.temperature = j.value("temperature", 0.0);
    g.prompt_digest = j.value("prompt_digest", "");
    return g;
}

}  // namespace drp
