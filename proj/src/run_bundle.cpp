#include "drp/run_bundle.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "drp/error.hpp"
#include "drp/hashing.hpp"

namespace drp {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string temperature_tag(double temperature) { return json(temperature).dump(); }

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

template <typename T>
std::string to_jsonl(const std::vector<T>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += to_json(row).dump();
        out += '\n';
    }
    return out;
}

template <typename T, typename F>
std::vector<T> from_jsonl(const fs::path& path, F parse) {
    std::istringstream in(read_text_file(path));
    std::vector<T> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            rows.push_back(parse(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(lineno, path.filename().string() + ": " + e.what());
        }
    }
    return rows;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json failure_json(const SampleFailure& f) {
    return {{"user_id", f.user_id}, {"item_id", f.item_id}, {"temperature", f.temperature},
            {"stage", f.stage}, {"error", f.error}};
}

}  // namespace

std::string manifest_digest(const json& manifest) {
    json body = manifest;
    body.erase("runtime");
    body.erase("digest");
    return sha256_hex(body.dump());
}

json write_run_bundle(const RunBundle& bundle, const fs::path& dir, const ManifestInputs& inputs) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

    json files = json::object();
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text_file(dir / name, text);
        files[name] = sha256_hex(text);
    };

    json temps = json::array();
    json counts = json::object();
    json calls = json::object();
    json failures = json::array();
    std::map<std::string, std::size_t> total_calls;
    for (const auto& out : bundle.outputs) {
        const auto tag = temperature_tag(out.temperature);
        temps.push_back(out.temperature);
        emit("generations." + tag + ".jsonl", to_jsonl(out.generations));
        emit("reports." + tag + ".jsonl", to_jsonl(out.reports));
        emit("summaries." + tag + ".jsonl", to_jsonl(out.summaries));
        counts[tag] = {{"generations", out.generations.size()},
                       {"reports", out.reports.size()},
                       {"summaries", out.summaries.size()},
                       {"failures", out.failures.size()}};
        json per_role = json::object();
        for (const auto& [role, n] : out.calls) {
            per_role[to_string(role)] = n;
            total_calls[to_string(role)] += n;
        }
        calls[tag] = per_role;
        for (const auto& f : out.failures) failures.push_back(failure_json(f));
    }

    json reps = json::object();
    if (bundle.cluster) {
        emit("cluster.json", to_json(*bundle.cluster).dump(2) + "\n");
        for (const auto& [user, set] : bundle.representatives) reps[user] = set.members;
    }

    json stats = json::object();
    std::size_t provider_calls = 0, cache_hits = 0;
    for (const auto& [role, s] : inputs.gateway_stats) {
        stats[to_string(role)] = {{"requests", s.requests}, {"provider_calls", s.provider_calls},
                                  {"cache_hits", s.cache_hits}};
        provider_calls += s.provider_calls;
        cache_hits += s.cache_hits;
    }

    json manifest = {
        {"mode", to_string(bundle.config.mode)},
        {"run_config", to_json(bundle.config)},
        {"config", inputs.resolved_config},
        {"prompt_version", inputs.prompt_version},
        {"corpus_sha256", inputs.corpus_sha256},
        {"temperatures", temps},
        {"counts", counts},
        {"calls", total_calls},
        {"calls_by_temperature", calls},
        {"failures", failures},
        {"representatives", reps},
        {"files", files},
        {"runtime",
         {{"created_at", iso_now()},
          {"config_dir", inputs.config_dir},
          {"provider_calls", provider_calls},
          {"remote_calls", provider_calls},
          {"cache_hits", cache_hits},
          {"by_role", stats}}},
    };
    manifest["digest"] = manifest_digest(manifest);
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

json read_manifest(const fs::path& dir) {
    const auto path = dir / "manifest.json";
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

std::vector<double> manifest_temperatures(const json& manifest) {
    return manifest.at("temperatures").get<std::vector<double>>();
}

std::vector<GeneratedReview> read_generations(const fs::path& dir, double temperature) {
    return from_jsonl<GeneratedReview>(dir / ("generations." + temperature_tag(temperature) + ".jsonl"),
                                       generated_review_from_json);
}

std::vector<ValidatedReport> read_reports(const fs::path& dir, double temperature) {
    return from_jsonl<ValidatedReport>(dir / ("reports." + temperature_tag(temperature) + ".jsonl"),
                                       validated_report_from_json);
}

std::vector<UserDifferenceSummary> read_summaries(const fs::path& dir, double temperature) {
    return from_jsonl<UserDifferenceSummary>(dir / ("summaries." + temperature_tag(temperature) + ".jsonl"),
                                             summary_from_json);
}

}  // namespace drp
