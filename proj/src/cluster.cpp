#include "drp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "drp/error.hpp"

namespace drp {
namespace {

// splitmix64; used instead of <random> distributions so draws are identical
// on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

using Points = std::vector<const EmbeddingVector*>;

std::size_t nearest(const EmbeddingVector& p, const std::vector<EmbeddingVector>& centroids) {
    std::size_t best = 0;
    double best_d = squared_distance(p, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double inertia_of(const Points& pts, const std::vector<EmbeddingVector>& centroids,
                  const std::vector<std::size_t>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) s += squared_distance(*pts[i], centroids[labels[i]]);
    return s;
}

std::vector<EmbeddingVector> plus_plus_init(const Points& pts, std::size_t k, Rng& rng) {
    const std::size_t n = pts.size();
    std::vector<EmbeddingVector> centroids;
    centroids.reserve(k);
    centroids.push_back(*pts[std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)))]);

    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(*pts[i], centroids.back()));
            total += d2[i];
        }
        const double target = rng.uniform() * total;
        double cum = 0.0;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            cum += d2[i];
            pick = i;
            if (cum > target) break;
        }
        centroids.push_back(*pts[pick]);
    }
    return centroids;
}

// Assign to nearest centroid, repairing empty clusters until none remain.
// Returns the labels; may move centroids of repaired clusters.
std::vector<std::size_t> assign_with_repair(const Points& pts, std::vector<EmbeddingVector>& centroids) {
    const std::size_t n = pts.size();
    const std::size_t k = centroids.size();
    std::vector<std::size_t> labels(n);
    for (std::size_t round = 0; round <= 2 * k; ++round) {
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = nearest(*pts[i], centroids);
            ++sizes[labels[i]];
        }
        bool repaired = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[labels[i]] < 2) continue;
                const double d = squared_distance(*pts[i], centroids[labels[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[labels[far]];
            labels[far] = c;
            ++sizes[c];
            centroids[c] = *pts[far];
            repaired = true;
        }
        if (!repaired) return labels;
    }
    return labels;
}

struct RunResult {
    std::vector<EmbeddingVector> centroids;
    std::vector<std::size_t> labels;
    double inertia = 0.0;
    std::vector<double> trace;
    std::size_t iterations = 0;
    bool converged = false;
};

// Lloyd iterations from the current r.centroids, appending to r.trace.
void lloyd(const Points& pts, std::size_t k, std::size_t max_iters, double tol, RunResult& r) {
    const std::size_t dim = pts[0]->dim();
    const std::size_t iters = std::max<std::size_t>(1, max_iters);
    std::vector<std::size_t> prev;
    r.converged = false;
    for (std::size_t it = 0; it < iters; ++it) {
        r.labels = assign_with_repair(pts, r.centroids);
        r.trace.push_back(inertia_of(pts, r.centroids, r.labels));
        ++r.iterations;
        if (r.labels == prev) {
            r.converged = true;
            break;
        }
        prev = r.labels;

        // update step, summing in point order
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto& s = sums[r.labels[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += (*pts[i])[d];
            ++counts[r.labels[i]];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
            EmbeddingVector updated(std::move(sums[c]));
            shift = std::max(shift, std::sqrt(squared_distance(updated, r.centroids[c])));
            r.centroids[c] = std::move(updated);
        }
        if (shift < tol) {
            // centroids are final; bring the assignment in line with them
            r.labels = assign_with_repair(pts, r.centroids);
            r.trace.push_back(inertia_of(pts, r.centroids, r.labels));
            r.converged = r.labels == prev;
            break;
        }
        if (it + 1 == iters) {
            r.labels = assign_with_repair(pts, r.centroids);
            r.trace.push_back(inertia_of(pts, r.centroids, r.labels));
        }
    }
    r.inertia = inertia_of(pts, r.centroids, r.labels);
}

std::vector<EmbeddingVector> cluster_means(const Points& pts, const std::vector<std::size_t>& labels, std::size_t k) {
    const std::size_t dim = pts[0]->dim();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) sums[labels[i]][d] += (*pts[i])[d];
        ++counts[labels[i]];
    }
    std::vector<EmbeddingVector> out;
    for (std::size_t c = 0; c < k; ++c) {
        for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
        out.emplace_back(std::move(sums[c]));
    }
    return out;
}

// Single-point moves (Hartigan): move x from a to b when
// n_b/(n_b+1) |x-c_b|^2 < n_a/(n_a-1) |x-c_a|^2, i.e. when the move lowers
// the objective with both means updated. Returns whether anything moved.
bool hartigan_pass(const Points& pts, std::size_t k, RunResult& r) {
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : r.labels) ++sizes[l];
    auto means = cluster_means(pts, r.labels, k);
    bool moved_any = false;
    for (std::size_t sweep = 0; sweep < 100 * pts.size(); ++sweep) {
        bool moved = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::size_t a = r.labels[i];
            if (sizes[a] < 2) continue;
            const double na = static_cast<double>(sizes[a]);
            const double remove_gain = na / (na - 1.0) * squared_distance(*pts[i], means[a]);
            std::size_t best = a;
            double best_cost = remove_gain;
            for (std::size_t b = 0; b < k; ++b) {
                if (b == a) continue;
                const double nb = static_cast<double>(sizes[b]);
                const double cost = nb / (nb + 1.0) * squared_distance(*pts[i], means[b]);
                if (cost < best_cost) {
                    best_cost = cost;
                    best = b;
                }
            }
            // relative margin keeps rounding noise from cycling moves
            if (best == a || best_cost >= remove_gain * (1.0 - 1e-12)) continue;
            r.labels[i] = best;
            --sizes[a];
            ++sizes[best];
            means = cluster_means(pts, r.labels, k);
            moved = moved_any = true;
        }
        if (!moved) break;
    }
    if (moved_any) {
        r.centroids = std::move(means);
        r.inertia = inertia_of(pts, r.centroids, r.labels);
        r.trace.push_back(r.inertia);
    }
    return moved_any;
}

RunResult fit_once(const Points& pts, std::size_t k, std::size_t max_iters, double tol, Rng& rng) {
    RunResult r;
    r.centroids = plus_plus_init(pts, k, rng);
    lloyd(pts, k, max_iters, tol, r);
    for (std::size_t round = 0; round < std::max<std::size_t>(1, max_iters); ++round) {
        if (!hartigan_pass(pts, k, r)) break;
        lloyd(pts, k, max_iters, tol, r);
    }
    return r;
}

}  // namespace

std::size_t ClusterModel::cluster_of(const std::string& user_id) const {
    auto it = assignment.find(user_id);
    if (it == assignment.end()) throw Error(ErrorKind::UnknownUser, "user '" + user_id + "' is not clustered");
    return it->second;
}

ClusterModel kmeans_fit(std::span<const UserProfileEmbedding> points, const KMeansOptions& options) {
    if (options.k == 0) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    if (points.size() < options.k)
        throw Error(ErrorKind::TooFewPoints, std::to_string(points.size()) + " points for k=" + std::to_string(options.k));

    Points pts;
    std::set<std::string> ids;
    std::set<std::vector<double>> distinct;
    for (const auto& p : points) {
        if (p.vector.dim() != points[0].vector.dim())
            throw Error(ErrorKind::DimensionMismatch, "user '" + p.user_id + "' has a different embedding dim");
        if (!ids.insert(p.user_id).second)
            throw Error(ErrorKind::InvalidArgument, "duplicate user '" + p.user_id + "'");
        distinct.insert(p.vector.values());
        pts.push_back(&p.vector);
    }
    if (points[0].vector.dim() == 0) throw Error(ErrorKind::DimensionMismatch, "zero-dimensional points");
    if (distinct.size() < options.k)
        throw Error(ErrorKind::TooFewPoints,
                    std::to_string(distinct.size()) + " distinct points for k=" + std::to_string(options.k));

    RunResult best;
    bool have_best = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
        Rng rng(options.seed * 0x9e3779b97f4a7c15ULL + r);
        RunResult run = fit_once(pts, options.k, options.max_iters, options.tol, rng);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    ClusterModel model;
    model.k = options.k;
    model.seed = options.seed;
    model.centroids = std::move(best.centroids);
    for (std::size_t i = 0; i < points.size(); ++i) model.assignment[points[i].user_id] = best.labels[i];
    model.inertia = best.inertia;
    model.inertia_trace = std::move(best.trace);
    model.iterations = best.iterations;
    model.converged = best.converged;
    return model;
}

double recompute_inertia(const ClusterModel& model, std::span<const UserProfileEmbedding> points) {
    double s = 0.0;
    for (const auto& p : points) s += squared_distance(p.vector, model.centroids.at(model.cluster_of(p.user_id)));
    return s;
}

RepresentativeSet select_representatives(const ClusterModel& model, std::span<const UserProfileEmbedding> points,
                                         const std::string& target_user, std::size_t count) {
    if (count == 0) throw Error(ErrorKind::InvalidArgument, "M must be >= 1");
    const std::size_t own = model.cluster_of(target_user);

    // per foreign cluster: members ordered by (distance to centroid, user_id)
    std::vector<std::vector<std::pair<double, std::string>>> pools(model.k);
    for (const auto& p : points) {
        const std::size_t c = model.cluster_of(p.user_id);
        if (c == own || p.user_id == target_user) continue;
        pools[c].emplace_back(squared_distance(p.vector, model.centroids.at(c)), p.user_id);
    }
    std::size_t available = 0;
    for (auto& pool : pools) {
        std::sort(pool.begin(), pool.end());
        available += pool.size();
    }
    if (available < count)
        throw Error(ErrorKind::InsufficientUsers, "only " + std::to_string(available) + " users outside the cluster of '" +
                                                      target_user + "', need " + std::to_string(count));

    RepresentativeSet out{target_user, {}};
    std::vector<std::size_t> cursor(model.k, 0);
    while (out.members.size() < count) {
        for (std::size_t c = 0; c < model.k && out.members.size() < count; ++c) {
            if (cursor[c] < pools[c].size()) out.members.push_back(pools[c][cursor[c]++].second);
        }
    }
    return out;
}

nlohmann::json to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["inertia"] = model.inertia;
    j["centroids"] = nlohmann::json::array();
    for (const auto& c : model.centroids) j["centroids"].push_back(c.values());
    j["assignment"] = model.assignment;
    return j;
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    ClusterModel m;
    try {
        m.k = j.at("k").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.inertia = j.at("inertia").get<double>();
        for (const auto& c : j.at("centroids")) m.centroids.emplace_back(c.get<std::vector<double>>());
        m.assignment = j.at("assignment").get<std::map<std::string, std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed cluster model: ") + e.what());
    }
    if (m.centroids.size() != m.k) throw Error(ErrorKind::Parse, "centroid count does not match k");
    for (const auto& [user, c] : m.assignment)
        if (c >= m.k) throw Error(ErrorKind::Parse, "assignment of '" + user + "' out of range");
    return m;
}

}  // namespace drp
