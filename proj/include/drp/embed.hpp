#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "drp/corpus.hpp"

namespace drp {

// Fixed-length real vector. All values finite.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values);

    [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] double norm() const noexcept;
    // Throws ZeroVector when the norm is zero.
    [[nodiscard]] EmbeddingVector normalized() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

[[nodiscard]] double dot(const EmbeddingVector& a, const EmbeddingVector& b);
[[nodiscard]] double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
[[nodiscard]] double squared_distance(const EmbeddingVector& a, const EmbeddingVector& b);

struct UserProfileEmbedding {
    std::string user_id;
    EmbeddingVector vector;  // L2-normalized
};

// Implementations must be safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    [[nodiscard]] virtual std::size_t dim() const noexcept = 0;
    // One vector per input, in input order. Inputs are nonempty.
    [[nodiscard]] virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
};

// Offline provider: word unigrams, word bigrams and character trigrams of the
// tokenized text are hashed (seeded FNV-1a) into `dim` buckets; the count
// vector is L2-normalized. Pure function of (text, dim, seed).
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    HashEmbeddingProvider(std::size_t dim, std::uint64_t seed);

    [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct RemoteEmbeddingConfig {
    std::string base_url;
    std::string model;
    std::size_t dim = 0;
    double timeout_s = 60.0;
    std::size_t batch_size = 64;
    std::string api_key;  // empty: read DRP_API_KEY
};

// POST {base_url}/v1/embeddings with {"model", "input": [...]}; reads
// data[i].embedding in input order.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

    [[nodiscard]] std::size_t dim() const noexcept override { return config_.dim; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;

private:
    RemoteEmbeddingConfig config_;
};

// Throws EmptyText for empty input.
[[nodiscard]] EmbeddingVector embed_text(const std::string& text, const EmbeddingProvider& provider);

// L2-normalized mean of the review embeddings. Throws EmptyHistory or
// ZeroVector (when the mean cancels out).
[[nodiscard]] UserProfileEmbedding profile_embedding(const UserHistory& history,
                                                     const EmbeddingProvider& provider);

}  // namespace drp
