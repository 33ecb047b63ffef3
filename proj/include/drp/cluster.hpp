#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/embed.hpp"

namespace drp {

struct KMeansOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
    double tol = 1e-9;
    std::size_t restarts = 10;  // k-means++ restarts; the lowest-inertia run wins
};

struct ClusterModel {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<EmbeddingVector> centroids;
    std::map<std::string, std::size_t> assignment;
    double inertia = 0.0;

    // Diagnostics of the winning restart (not serialized): inertia after every
    // assignment step, and whether the assignment reached a fixed point.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
    bool converged = false;

    // Throws UnknownUser.
    [[nodiscard]] std::size_t cluster_of(const std::string& user_id) const;
};

// Lloyd's algorithm with k-means++ seeding. Every assignment is to the
// nearest centroid (squared Euclidean, ties to the lowest index). An empty
// cluster is repaired by moving its centroid onto the point farthest from its
// own centroid. Stops at an assignment fixed point, when the largest centroid
// shift drops below `tol`, or after `max_iters`. Each Lloyd fixed point is
// then refined by single-point moves between clusters (Hartigan), followed by
// Lloyd again, until no move lowers the objective.
//
// Throws TooFewPoints (fewer than k distinct points), DimensionMismatch.
[[nodiscard]] ClusterModel kmeans_fit(std::span<const UserProfileEmbedding> points, const KMeansOptions& options);

// Sum of squared distances of every assigned point to its centroid.
[[nodiscard]] double recompute_inertia(const ClusterModel& model, std::span<const UserProfileEmbedding> points);

struct RepresentativeSet {
    std::string target_user;
    std::vector<std::string> members;
};

// Round-robin over the clusters other than the target's (ascending index);
// each turn takes the not-yet-chosen user of that cluster closest to its
// centroid (ties by user_id). Throws UnknownUser, InsufficientUsers.
[[nodiscard]] RepresentativeSet select_representatives(const ClusterModel& model,
                                                       std::span<const UserProfileEmbedding> points,
                                                       const std::string& target_user, std::size_t count);

[[nodiscard]] nlohmann::json to_json(const ClusterModel& model);
[[nodiscard]] ClusterModel cluster_model_from_json(const nlohmann::json& j);

}  // namespace drp
