#include "drp/embed.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "drp/error.hpp"
#include "drp/hashing.hpp"
#include "drp/http_util.hpp"
#include "drp/tokenize.hpp"

namespace drp {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "embedding contains a non-finite value");
}

double EmbeddingVector::norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::normalized() const {
    const double n = norm();
    if (n == 0.0) throw Error(ErrorKind::ZeroVector, "cannot normalize a zero vector");
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] / n;
    return EmbeddingVector(std::move(out));
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "dot of vectors with different dims");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine with a zero vector");
    return dot(a, b) / (na * nb);
}

double squared_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "distance between vectors with different dims");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// ---------------------------------------------------------------------------

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim == 0) throw Error(ErrorKind::InvalidArgument, "embedding dim must be positive");
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
        std::vector<double> counts(dim_, 0.0);
        auto bump = [&](const std::string& feature) { counts[fnv1a64(feature, seed_) % dim_] += 1.0; };

        const auto tokens = tokenize(text).tokens;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            bump("w:" + tokens[i]);
            if (i + 1 < tokens.size()) bump("b:" + tokens[i] + ' ' + tokens[i + 1]);
        }
        // character n-grams over the raw bytes keep punctuation-only text embeddable
        const std::size_t n = std::min<std::size_t>(3, text.size());
        for (std::size_t i = 0; i + n <= text.size(); ++i) bump("c:" + text.substr(i, n));

        out.push_back(EmbeddingVector(std::move(counts)).normalized());
    }
    return out;
}

// ---------------------------------------------------------------------------

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw Error(ErrorKind::Config, "remote embedding provider requires base_url");
    if (config_.dim == 0) throw Error(ErrorKind::Config, "remote embedding provider requires dim");
    if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(std::span<const std::string> texts) const {
    using json = nlohmann::json;
    const auto endpoint = split_base_url(config_.base_url);
    const std::string key = config_.api_key.empty() ? api_key_from_env() : config_.api_key;

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += config_.batch_size) {
        const std::size_t end = std::min(texts.size(), begin + config_.batch_size);
        json body = {{"model", config_.model}, {"input", json::array()}};
        for (std::size_t i = begin; i < end; ++i) {
            if (texts[i].empty()) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
            body["input"].push_back(texts[i]);
        }

        httplib::Client client(endpoint.origin);
        configure_client(client, config_.timeout_s, key);
        auto res = client.Post(endpoint.path_prefix + "/v1/embeddings", body.dump(), "application/json");
        if (!res) throw Error(ErrorKind::Provider, "embeddings request failed: " + httplib::to_string(res.error()));
        if (res->status != 200) throw Error(ErrorKind::Provider, "embeddings endpoint returned " + std::to_string(res->status));

        json reply;
        try {
            reply = json::parse(res->body);
            const auto& data = reply.at("data");
            if (data.size() != end - begin) throw Error(ErrorKind::Provider, "embeddings count mismatch");
            for (const auto& item : data) {
                auto values = item.at("embedding").get<std::vector<double>>();
                if (values.size() != config_.dim)
                    throw Error(ErrorKind::Provider, "embedding dim " + std::to_string(values.size()) +
                                                         " != configured " + std::to_string(config_.dim));
                out.emplace_back(std::move(values));
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Provider, std::string("malformed embeddings response: ") + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

EmbeddingVector embed_text(const std::string& text, const EmbeddingProvider& provider) {
    if (text.empty()) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
    auto v = provider.embed(std::span<const std::string>(&text, 1));
    if (v.size() != 1 || v[0].dim() != provider.dim())
        throw Error(ErrorKind::Provider, "provider returned an unexpected embedding shape");
    return std::move(v[0]);
}

UserProfileEmbedding profile_embedding(const UserHistory& history, const EmbeddingProvider& provider) {
    if (history.samples.empty()) throw Error(ErrorKind::EmptyHistory, "user '" + history.user_id + "' has no history");

    // Sum in canonical order so the result does not depend on input order.
    std::vector<std::string> texts;
    texts.reserve(history.samples.size());
    auto samples = history.samples;
    std::stable_sort(samples.begin(), samples.end(), canonical_less);
    for (const auto& s : samples) texts.push_back(s.review_text);

    const auto vectors = provider.embed(texts);
    if (vectors.size() != texts.size()) throw Error(ErrorKind::Provider, "provider returned wrong number of embeddings");
    std::vector<double> mean(provider.dim(), 0.0);
    for (const auto& v : vectors) {
        if (v.dim() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "provider returned wrong embedding dim");
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    }
    for (double& x : mean) x /= static_cast<double>(vectors.size());
    return {history.user_id, EmbeddingVector(std::move(mean)).normalized()};
}

}  // namespace drp
