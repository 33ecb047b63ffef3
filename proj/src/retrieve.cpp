#include "drp/retrieve.hpp"

#include <algorithm>

#include "drp/error.hpp"
#include "drp/tokenize.hpp"

namespace drp {

const char* to_string(RetrievalMode mode) noexcept {
    return mode == RetrievalMode::Similarity ? "similarity" : "recency";
}

RetrievalMode retrieval_mode_from_string(const std::string& name) {
    if (name == "similarity") return RetrievalMode::Similarity;
    if (name == "recency") return RetrievalMode::Recency;
    throw Error(ErrorKind::Config, "unknown retrieval mode '" + name + "'");
}

std::string item_query(const ReviewSample& item) {
    return trim(item.item_title + " " + item.item_description);
}

RetrievedHistory retrieve_key_history(const UserHistory& history, const std::string& query_text, std::size_t k,
                                      RetrievalMode mode, const EmbeddingProvider* provider) {
    if (history.samples.empty()) throw Error(ErrorKind::EmptyHistory, "user '" + history.user_id + "' has no history");
    if (k == 0) throw Error(ErrorKind::InvalidArgument, "retrieval k must be >= 1");

    RetrievedHistory out{history.user_id, {}, k, query_text};
    out.entries.reserve(history.samples.size());

    if (mode == RetrievalMode::Recency) {
        for (const auto& s : history.samples) out.entries.push_back({s, static_cast<double>(s.timestamp)});
    } else {
        if (provider == nullptr) throw Error(ErrorKind::Provider, "similarity retrieval needs an embedding provider");
        const auto query = embed_text(query_text.empty() ? std::string(" ") : query_text, *provider);
        std::vector<std::string> texts;
        texts.reserve(history.samples.size());
        for (const auto& s : history.samples) texts.push_back(s.review_text);
        const auto vectors = provider->embed(texts);
        if (vectors.size() != texts.size()) throw Error(ErrorKind::Provider, "provider returned wrong number of embeddings");
        for (std::size_t i = 0; i < texts.size(); ++i)
            out.entries.push_back({history.samples[i], cosine(query, vectors[i])});
    }

    std::stable_sort(out.entries.begin(), out.entries.end(), [](const RetrievedEntry& a, const RetrievedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.sample.timestamp != b.sample.timestamp) return a.sample.timestamp > b.sample.timestamp;
        return a.sample.item_id < b.sample.item_id;
    });
    if (out.entries.size() > k) out.entries.resize(k);
    return out;
}

}  // namespace drp
