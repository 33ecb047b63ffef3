#pragma once

#include <string>
#include <vector>

#include "drp/corpus.hpp"
#include "drp/embed.hpp"

namespace drp {

enum class RetrievalMode { Similarity, Recency };

[[nodiscard]] const char* to_string(RetrievalMode mode) noexcept;
[[nodiscard]] RetrievalMode retrieval_mode_from_string(const std::string& name);

struct RetrievedEntry {
    ReviewSample sample;
    double score = 0.0;
};

// A user's key history, used as context for extraction and generation.
// Entries are ordered by score desc, then timestamp desc, then item_id.
struct RetrievedHistory {
    std::string user_id;
    std::vector<RetrievedEntry> entries;
    std::size_t k_requested = 0;
    std::string query_text;
};

// Query for a target item: title and description joined by a space.
[[nodiscard]] std::string item_query(const ReviewSample& item);

// Similarity mode scores by cosine(embed(query), embed(review_text)) and needs
// a provider; recency mode scores by timestamp. Throws EmptyHistory.
[[nodiscard]] RetrievedHistory retrieve_key_history(const UserHistory& history, const std::string& query_text,
                                                    std::size_t k, RetrievalMode mode,
                                                    const EmbeddingProvider* provider);

}  // namespace drp
