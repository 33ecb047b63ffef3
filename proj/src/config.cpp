#include "drp/config.hpp"

#include <algorithm>
#include <set>

#include "drp/error.hpp"
#include "drp/run_bundle.hpp"

namespace drp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!known.count(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

CliConfig parse_cli_config(const json& doc, const fs::path& base_dir) {
    reject_unknown(doc,
                   {"corpus", "cache_dir", "output_dir", "prompt_dir", "fixture_dir", "seed", "M", "cluster_k",
                    "retrieval_k", "retrieval_mode", "temperatures", "kmeans", "max_concurrency", "uvq_aggregation",
                    "embedding", "roles", "mode"},
                   "config");
    CliConfig cfg;
    cfg.source = doc;
    cfg.base_dir = base_dir;
    try {
        if (!doc.contains("corpus")) throw Error(ErrorKind::Config, "config needs 'corpus'");
        cfg.corpus = resolve(base_dir, doc.at("corpus").get<std::string>());
        cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("runs")));
        if (doc.contains("cache_dir")) cfg.cache_dir = resolve(base_dir, doc.at("cache_dir").get<std::string>());
        if (doc.contains("prompt_dir")) cfg.prompt_dir = resolve(base_dir, doc.at("prompt_dir").get<std::string>());
        cfg.fixture_dir = resolve(base_dir, doc.value("fixture_dir", std::string("fixtures/mock")));

        auto& run = cfg.run;
        if (doc.contains("mode")) run.mode = generation_mode_from_string(doc.at("mode").get<std::string>());
        run.seed = doc.value("seed", run.seed);
        run.M = doc.value("M", run.M);
        run.cluster_k = doc.value("cluster_k", run.cluster_k);
        run.retrieval_k = doc.value("retrieval_k", run.retrieval_k);
        if (doc.contains("retrieval_mode"))
            run.retrieval_mode = retrieval_mode_from_string(doc.at("retrieval_mode").get<std::string>());
        if (doc.contains("temperatures")) run.temperatures = doc.at("temperatures").get<std::vector<double>>();
        run.max_concurrency = doc.value("max_concurrency", run.max_concurrency);
        if (doc.contains("kmeans")) {
            const auto& km = doc.at("kmeans");
            reject_unknown(km, {"max_iters", "tol", "restarts"}, "kmeans");
            run.kmeans_max_iters = km.value("max_iters", run.kmeans_max_iters);
            run.kmeans_tol = km.value("tol", run.kmeans_tol);
            run.kmeans_restarts = km.value("restarts", run.kmeans_restarts);
        }
        if (doc.contains("uvq_aggregation"))
            cfg.uvq_aggregation = uvq_aggregation_from_string(doc.at("uvq_aggregation").get<std::string>());

        if (doc.contains("embedding")) {
            const auto& e = doc.at("embedding");
            reject_unknown(e, {"kind", "dim", "seed", "model", "base_url", "timeout_s"}, "embedding");
            const auto kind = e.value("kind", std::string("hash"));
            if (kind == "hash") {
                cfg.embedding.kind = EmbeddingKind::Hash;
            } else if (kind == "remote") {
                cfg.embedding.kind = EmbeddingKind::Remote;
            } else {
                throw Error(ErrorKind::Config, "embedding.kind must be 'hash' or 'remote'");
            }
            cfg.embedding.dim = e.value("dim", cfg.embedding.dim);
            cfg.embedding.seed = e.value("seed", cfg.embedding.seed);
            cfg.embedding.model = e.value("model", std::string());
            cfg.embedding.base_url = e.value("base_url", std::string());
            cfg.embedding.timeout_s = e.value("timeout_s", cfg.embedding.timeout_s);
            if (cfg.embedding.dim == 0) throw Error(ErrorKind::Config, "embedding.dim must be >= 1");
            if (cfg.embedding.kind == EmbeddingKind::Remote && cfg.embedding.base_url.empty())
                throw Error(ErrorKind::Config, "remote embedding needs base_url");
        }

        const json roles = doc.value("roles", json::object());
        reject_unknown(roles, {"extractor", "validator", "summarizer", "generator", "judge"}, "roles");
        for (auto role : kAllRoles) {
            const std::string key = to_string(role);
            if (roles.contains(key)) {
                cfg.roles[role] = provider_spec_from_json(roles.at(key));
            } else if (role == LlmRole::Validator && roles.contains("extractor")) {
                cfg.roles[role] = provider_spec_from_json(roles.at("extractor"));
            } else {
                ProviderSpec spec;
                spec.model_id = "mock-" + key;
                cfg.roles[role] = spec;
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    cfg.run.validate();
    return cfg;
}

CliConfig load_cli_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "config not found: " + path.string());
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return parse_cli_config(doc, fs::absolute(path).parent_path());
}

void apply_mock_override(CliConfig& cfg) {
    cfg.mock = true;
    for (auto& [_, spec] : cfg.roles) spec.kind = ProviderKind::Mock;
    cfg.embedding.kind = EmbeddingKind::Hash;
}

json resolved_config_json(const CliConfig& cfg) {
    json out = cfg.source;
    out["mode"] = to_string(cfg.run.mode);
    json roles = json::object();
    for (const auto& [role, spec] : cfg.roles) roles[to_string(role)] = to_json(spec);
    out["roles"] = roles;
    return out;
}

std::unique_ptr<Gateway> make_gateway(const CliConfig& cfg) {
    auto gw = std::make_unique<Gateway>(cfg.run.max_concurrency, cfg.cache_dir);
    // Mock roles share one provider so a scripted fixture is consumed in call order.
    std::shared_ptr<ChatProvider> mock;
    for (const auto& [role, spec] : cfg.roles) {
        if (spec.kind == ProviderKind::Mock) {
            if (!mock) mock = make_chat_provider(spec, cfg.fixture_dir);
            gw->bind(role, spec, mock);
        } else {
            gw->bind(role, spec, make_chat_provider(spec, cfg.fixture_dir));
        }
    }
    return gw;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const CliConfig& cfg) {
    if (cfg.embedding.kind == EmbeddingKind::Hash)
        return std::make_unique<HashEmbeddingProvider>(cfg.embedding.dim, cfg.embedding.seed);
    RemoteEmbeddingConfig rc;
    rc.base_url = cfg.embedding.base_url;
    rc.model = cfg.embedding.model;
    rc.dim = cfg.embedding.dim;
    rc.timeout_s = cfg.embedding.timeout_s;
    return std::make_unique<RemoteEmbeddingProvider>(rc);
}

PromptSet load_prompts(const CliConfig& cfg) {
    return cfg.prompt_dir ? PromptSet::load(*cfg.prompt_dir) : PromptSet::defaults();
}

}  // namespace drp
