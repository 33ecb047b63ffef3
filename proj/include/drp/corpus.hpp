#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace drp {

// One (user, item, text) triple of the historical dataset.
struct ReviewSample {
    std::string user_id;
    std::string item_id;
    std::string item_title;
    std::string item_description;
    std::string review_text;
    std::int64_t timestamp = 0;
    std::optional<double> rating;

    bool operator==(const ReviewSample&) const = default;
};

// Train samples of a single user in canonical order: ascending timestamp,
// ties broken by item_id.
struct UserHistory {
    std::string user_id;
    std::vector<ReviewSample> samples;
};

enum class Split { Train, Test };

// Immutable after load. Both partitions are kept in canonical
// (user_id, timestamp, item_id) order.
struct Corpus {
    std::string dataset_name;
    std::vector<ReviewSample> train;
    std::vector<ReviewSample> test;

    bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { Jsonl };

// Throws IoError, ParseError(line) or PartitionError.
[[nodiscard]] Corpus load_corpus(const std::filesystem::path& path,
                                 CorpusFormat format = CorpusFormat::Jsonl);

// Parses an in-memory JSONL document. `dataset_name` is recorded as-is.
[[nodiscard]] Corpus parse_corpus(std::string_view jsonl, std::string dataset_name);

// Writes the corpus back to the JSONL interchange format (train first, then test).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
[[nodiscard]] std::string corpus_to_jsonl(const Corpus& corpus);

// Throws UnknownUser if the user has no train samples.
[[nodiscard]] UserHistory user_history(const Corpus& corpus, const std::string& user_id);

// Distinct train users, lexicographically sorted.
[[nodiscard]] std::vector<std::string> all_users(const Corpus& corpus);

// Canonical sample order used throughout: timestamp, then item_id.
[[nodiscard]] bool canonical_less(const ReviewSample& a, const ReviewSample& b) noexcept;

[[nodiscard]] nlohmann::json to_json(const ReviewSample& sample);
[[nodiscard]] ReviewSample review_sample_from_json(const nlohmann::json& j);

}  // namespace drp
