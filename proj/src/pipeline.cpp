#include "drp/pipeline.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>
#include <unicode/unistr.h>

#include "drp/error.hpp"
#include "drp/parallel.hpp"
#include "drp/tokenize.hpp"

namespace drp {

using json = nlohmann::json;

void RunConfig::validate() const {
    if (M == 0) throw Error(ErrorKind::Config, "M must be >= 1");
    if (cluster_k == 0) throw Error(ErrorKind::Config, "cluster_k must be >= 1");
    if (retrieval_k == 0) throw Error(ErrorKind::Config, "retrieval_k must be >= 1");
    if (temperatures.empty()) throw Error(ErrorKind::Config, "temperatures must be nonempty");
    for (double t : temperatures)
        if (!(t >= 0.0 && t <= 2.0)) throw Error(ErrorKind::Config, "temperatures must lie in [0, 2]");
    if (max_concurrency == 0) throw Error(ErrorKind::Config, "max_concurrency must be >= 1");
}

json to_json(const RunConfig& cfg) {
    return {{"mode", to_string(cfg.mode)},
            {"M", cfg.M},
            {"cluster_k", cfg.cluster_k},
            {"retrieval_k", cfg.retrieval_k},
            {"retrieval_mode", to_string(cfg.retrieval_mode)},
            {"temperatures", cfg.temperatures},
            {"seed", cfg.seed},
            {"kmeans", {{"max_iters", cfg.kmeans_max_iters}, {"tol", cfg.kmeans_tol}, {"restarts", cfg.kmeans_restarts}}},
            {"max_concurrency", cfg.max_concurrency}};
}

namespace {

std::size_t codepoints(const std::string& s) {
    return static_cast<std::size_t>(icu::UnicodeString::fromUTF8(s).countChar32());
}

// "**DIMENSION:** x" / "- Dimension: x" -> ("DIMENSION", "x")
std::optional<std::pair<std::string, std::string>> field_line(const std::string& line) {
    static const std::regex kField(R"(^[\s\-*#>`]*([A-Za-z]+)[*`]*\s*:[*`]*\s*(.*)$)");
    std::smatch m;
    if (!std::regex_match(line, m, kField)) return std::nullopt;
    std::string key = m[1].str();
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::toupper(c); });
    if (key != "DIMENSION" && key != "DEFINITION" && key != "DESCRIPTION" && key != "DIRECTION" && key != "EVIDENCE")
        return std::nullopt;
    return std::make_pair(key, trim(m[2].str()));
}

std::string marker_of(const std::string& line) {
    std::string t;
    for (char c : line)
        if (c != '*' && c != '`' && c != '#' && !std::isspace(static_cast<unsigned char>(c)))
            t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return t;
}

std::vector<ChatMessage> chat(const PromptSet& prompts, const char* system_name, const std::string& user_name,
                              const std::map<std::string, std::string>& vars) {
    return {{ChatRole::System, render_template(prompts.get(system_name), vars)},
            {ChatRole::User, render_template(prompts.get(user_name), vars)}};
}

std::string render_features(const std::vector<DifferenceFeature>& features) {
    std::string out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        out += "[" + std::to_string(i) + "] " + f.dimension.name + " (" + to_string(f.direction) + "): " + f.description;
        if (i + 1 < features.size()) out += '\n';
    }
    return out;
}

}  // namespace

std::string render_item(const ReviewSample& item) {
    std::string out = "Title: " + item.item_title;
    if (!trim(item.item_description).empty()) out += "\nDescription: " + item.item_description;
    return out;
}

std::string render_history(const RetrievedHistory& history) {
    std::string out;
    for (std::size_t i = 0; i < history.entries.size(); ++i) {
        const auto& s = history.entries[i].sample;
        out += "[" + std::to_string(i + 1) + "] Item: " + s.item_title + "\nReview: " + s.review_text;
        if (i + 1 < history.entries.size()) out += "\n\n";
    }
    return out;
}

// ----- Step 1 ----------------------------------------------------------------

std::vector<DifferenceFeature> parse_difference_output(const std::string& raw, std::size_t* skipped_blocks) {
    std::vector<DifferenceFeature> features;
    std::size_t skipped = 0;

    std::optional<std::map<std::string, std::string>> block;
    std::string last_key;
    auto close_block = [&] {
        if (!block) return;
        auto get = [&](const char* k) {
            auto it = block->find(k);
            return it == block->end() ? std::string() : trim(it->second);
        };
        DifferenceFeature f;
        f.dimension.name = get("DIMENSION");
        f.dimension.definition = get("DEFINITION");
        f.description = get("DESCRIPTION");
        f.direction = direction_from_string(get("DIRECTION"));
        if (auto ev = get("EVIDENCE"); !ev.empty()) f.evidence = ev;
        if (f.dimension.name.empty() || codepoints(f.dimension.name) > 64 || f.dimension.definition.empty() ||
            f.description.empty()) {
            ++skipped;
        } else {
            features.push_back(std::move(f));
        }
        block.reset();
        last_key.clear();
    };

    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto marker = marker_of(line);
        if (marker == "[FEATURE]") {
            close_block();
            block.emplace();
            continue;
        }
        if (marker == "[/FEATURE]") {
            close_block();
            continue;
        }
        if (!block) continue;
        if (auto field = field_line(line)) {
            last_key = field->first;
            auto& slot = (*block)[last_key];
            slot = slot.empty() ? field->second : slot + " " + field->second;
        } else if (!last_key.empty() && !trim(line).empty()) {
            auto& slot = (*block)[last_key];
            slot += (slot.empty() ? "" : " ") + trim(line);
        }
    }
    close_block();

    if (skipped_blocks) *skipped_blocks = skipped;
    if (features.empty())
        throw OutputParseError(ErrorKind::ExtractionParse, "no well-formed [FEATURE] block in extractor output", raw);
    return features;
}

DifferenceReport extract_differences(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                     const RetrievedHistory& rep_ctx, const PipelineContext& ctx, double temperature) {
    if (target_ctx.entries.empty() || rep_ctx.entries.empty())
        throw Error(ErrorKind::EmptyHistory, "extraction needs nonempty contexts");
    if (target_ctx.user_id == rep_ctx.user_id)
        throw Error(ErrorKind::InvalidArgument, "target and representative must differ");

    const std::map<std::string, std::string> vars = {{"item", render_item(item)},
                                                     {"target_history", render_history(target_ctx)},
                                                     {"representative_history", render_history(rep_ctx)}};
    auto request = ctx.gateway.make_request(
        LlmRole::Extractor, chat(ctx.prompts, prompt::kExtractSystem, prompt::kExtractUser, vars), temperature);
    const auto response = ctx.gateway.complete(LlmRole::Extractor, request);

    DifferenceReport report;
    report.target_user = target_ctx.user_id;
    report.representative_user = rep_ctx.user_id;
    report.item_id = item.item_id;
    report.raw_output = response.content;
    report.reasoning_trace = response.reasoning_trace;
    report.extractor_model = request.model_id;
    report.temperature = temperature;
    report.features = parse_difference_output(response.content);
    return report;
}

// ----- Step 2 ----------------------------------------------------------------

std::map<std::size_t, Verdict> parse_verdicts(const std::string& raw, std::size_t count) {
    static const std::regex kVerdict(R"(^\W*VERDICT\s*#?\s*(\d+)\s*[:.)\]]?\s*\**\s*(KEEP|DROP)\b(.*)$)",
                                     std::regex::icase);
    std::map<std::size_t, Verdict> out;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (!std::regex_match(line, m, kVerdict)) continue;
        std::size_t index = 0;
        try {
            index = std::stoul(m[1].str());
        } catch (const std::exception&) {
            continue;
        }
        if (index >= count || out.count(index)) continue;
        std::string decision = m[2].str();
        std::transform(decision.begin(), decision.end(), decision.begin(), [](unsigned char c) { return std::toupper(c); });

        // strip leading separators (em dash, en dash, hyphen, colon) and emphasis
        std::string reason = trim(m[3].str());
        for (bool changed = true; changed;) {
            changed = false;
            for (std::string_view sep : {"\xE2\x80\x94", "\xE2\x80\x93", "-", ":", "*"}) {
                if (reason.rfind(sep, 0) == 0) {
                    reason = trim(reason.substr(sep.size()));
                    changed = true;
                }
            }
        }
        out[index] = Verdict{decision == "KEEP", reason};
    }
    return out;
}

ValidatedReport validate_differences(const DifferenceReport& report, const RetrievedHistory& target_ctx,
                                     const RetrievedHistory& rep_ctx, const PipelineContext& ctx, double temperature) {
    ValidatedReport out;
    out.source = report;
    out.validator_model = ctx.gateway.spec(LlmRole::Validator).model_id;
    if (report.features.empty()) return out;

    const std::map<std::string, std::string> vars = {{"target_history", render_history(target_ctx)},
                                                     {"representative_history", render_history(rep_ctx)},
                                                     {"features", render_features(report.features)}};
    auto request = ctx.gateway.make_request(
        LlmRole::Validator, chat(ctx.prompts, prompt::kValidateSystem, prompt::kValidateUser, vars), temperature);
    const auto response = ctx.gateway.complete(LlmRole::Validator, request);
    const auto verdicts = parse_verdicts(response.content, report.features.size());

    for (std::size_t i = 0; i < report.features.size(); ++i) {
        auto it = verdicts.find(i);
        if (it != verdicts.end() && !it->second.keep) {
            out.dropped.push_back({report.features[i], it->second.reason});
        } else {
            out.kept.push_back(report.features[i]);
        }
    }
    return out;
}

// ----- Step 3 ----------------------------------------------------------------

UserDifferenceSummary summarize_differences(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                            std::span<const ValidatedReport> validated, const PipelineContext& ctx,
                                            double temperature) {
    if (validated.size() != ctx.config.M)
        throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(ctx.config.M) + " validated reports, got " +
                                                    std::to_string(validated.size()));
    UserDifferenceSummary summary;
    summary.target_user = target_ctx.user_id;
    summary.item_id = item.item_id;
    summary.source_report_count = validated.size();

    std::string differences;
    std::size_t kept_total = 0;
    for (std::size_t r = 0; r < validated.size(); ++r) {
        const auto& v = validated[r];
        if (v.kept.empty()) continue;
        if (!differences.empty()) differences += "\n\n";
        differences += "Compared with other reviewer #" + std::to_string(r + 1) + ":";
        for (const auto& f : v.kept) {
            differences += "\n- [" + f.dimension.name + "] " + f.description + " (" + to_string(f.direction) + ")";
            ++kept_total;
        }
    }
    if (kept_total == 0) {
        summary.text = kNoDifferencesSentinel;
        return summary;
    }

    const std::map<std::string, std::string> vars = {{"target_history", render_history(target_ctx)},
                                                     {"differences", differences}};
    auto request = ctx.gateway.make_request(
        LlmRole::Summarizer, chat(ctx.prompts, prompt::kSummarizeSystem, prompt::kSummarizeUser, vars), temperature);
    summary.text = ctx.gateway.complete(LlmRole::Summarizer, request).content;
    return summary;
}

GeneratedReview generate_review(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                const UserDifferenceSummary* summary, GenerationMode mode, const PipelineContext& ctx,
                                double temperature) {
    if (target_ctx.entries.empty()) throw Error(ErrorKind::EmptyHistory, "generation needs a nonempty context");

    std::map<std::string, std::string> vars = {{"item", render_item(item)}};
    const char* user_template = prompt::kGenerateNonP;
    if (mode != GenerationMode::NonP) {
        vars["history"] = render_history(target_ctx);
        user_template = prompt::kGenerateRag;
    }
    if (mode == GenerationMode::Drp) {
        if (summary == nullptr) throw Error(ErrorKind::InvalidArgument, "drp generation needs a summary");
        vars["summary"] = summary->text;
        user_template = prompt::kGenerateDrp;
    }
    auto request = ctx.gateway.make_request(
        LlmRole::Generator, chat(ctx.prompts, prompt::kGenerateSystem, user_template, vars), temperature);
    const auto response = ctx.gateway.complete(LlmRole::Generator, request);

    GeneratedReview out;
    out.target_user = target_ctx.user_id;
    out.item_id = item.item_id;
    out.text = response.content;
    out.mode = mode;
    out.temperature = temperature;
    out.prompt_digest = canonical_request_hash(request);
    return out;
}

// ----- whole run -------------------------------------------------------------

namespace {

struct SampleContext {
    const ReviewSample* item = nullptr;
    std::optional<RetrievedHistory> target;
    std::vector<RetrievedHistory> representatives;
    std::optional<std::string> failure;
};

struct SampleResult {
    std::optional<GeneratedReview> generation;
    std::vector<ValidatedReport> reports;
    std::optional<UserDifferenceSummary> summary;
    std::optional<SampleFailure> failure;
};

}  // namespace

RunBundle run_pipeline(const Corpus& corpus, const PipelineContext& ctx) {
    const auto& cfg = ctx.config;
    cfg.validate();

    RunBundle bundle;
    bundle.config = cfg;

    std::vector<const ReviewSample*> items;
    for (const auto& s : corpus.test) items.push_back(&s);
    std::sort(items.begin(), items.end(), [](const ReviewSample* a, const ReviewSample* b) {
        return std::tie(a->user_id, a->item_id) < std::tie(b->user_id, b->item_id);
    });

    // Step 0: representative selection, once per run (temperature-independent).
    std::map<std::string, UserHistory> histories;
    for (const auto& user : all_users(corpus)) histories.emplace(user, user_history(corpus, user));

    if (cfg.mode == GenerationMode::Drp) {
        if (ctx.embedder == nullptr) throw Error(ErrorKind::Config, "drp mode needs an embedding provider");
        std::vector<UserProfileEmbedding> profiles(histories.size());
        std::vector<const UserHistory*> order;
        for (const auto& [user, h] : histories) order.push_back(&h);
        parallel_for(order.size(), cfg.max_concurrency,
                     [&](std::size_t i) { profiles[i] = profile_embedding(*order[i], *ctx.embedder); });

        KMeansOptions opts;
        opts.k = cfg.cluster_k;
        opts.seed = cfg.seed;
        opts.max_iters = cfg.kmeans_max_iters;
        opts.tol = cfg.kmeans_tol;
        opts.restarts = cfg.kmeans_restarts;
        bundle.cluster = kmeans_fit(profiles, opts);

        for (const auto* item : items) {
            if (!bundle.representatives.count(item->user_id))
                bundle.representatives.emplace(item->user_id,
                                               select_representatives(*bundle.cluster, profiles, item->user_id, cfg.M));
        }
    }

    // Retrieval is also temperature-independent.
    std::vector<SampleContext> contexts(items.size());
    parallel_for(items.size(), cfg.max_concurrency, [&](std::size_t i) {
        auto& sc = contexts[i];
        sc.item = items[i];
        try {
            const auto query = item_query(*sc.item);
            sc.target = retrieve_key_history(histories.at(sc.item->user_id), query, cfg.retrieval_k, cfg.retrieval_mode,
                                             ctx.embedder);
            if (cfg.mode == GenerationMode::Drp) {
                for (const auto& rep : bundle.representatives.at(sc.item->user_id).members)
                    sc.representatives.push_back(retrieve_key_history(histories.at(rep), query, cfg.retrieval_k,
                                                                       cfg.retrieval_mode, ctx.embedder));
            }
        } catch (const Error& e) {
            sc.failure = e.what();
        }
    });

    for (double temperature : cfg.temperatures) {
        const auto before = ctx.gateway.stats();
        std::vector<SampleResult> results(items.size());

        parallel_for(items.size(), cfg.max_concurrency, [&](std::size_t i) {
            const auto& sc = contexts[i];
            auto& res = results[i];
            std::string stage = "retrieve";
            try {
                if (sc.failure) throw Error(ErrorKind::EmptyHistory, *sc.failure);
                std::optional<UserDifferenceSummary> summary;
                if (cfg.mode == GenerationMode::Drp) {
                    for (const auto& rep_ctx : sc.representatives) {
                        stage = "extract";
                        auto report = extract_differences(*sc.item, *sc.target, rep_ctx, ctx, temperature);
                        stage = "validate";
                        res.reports.push_back(validate_differences(report, *sc.target, rep_ctx, ctx, temperature));
                    }
                    stage = "summarize";
                    summary = summarize_differences(*sc.item, *sc.target, res.reports, ctx, temperature);
                }
                stage = "generate";
                res.generation = generate_review(*sc.item, *sc.target, summary ? &*summary : nullptr, cfg.mode, ctx,
                                                 temperature);
                res.summary = std::move(summary);
            } catch (const Error& e) {
                res.failure = SampleFailure{sc.item->user_id, sc.item->item_id, temperature, stage, e.what()};
                res.reports.clear();
                res.summary.reset();
                res.generation.reset();
                spdlog::warn("skipping ({}, {}) at T={} in {}: {}", sc.item->user_id, sc.item->item_id, temperature,
                             stage, e.what());
            }
        });

        TemperatureOutputs out;
        out.temperature = temperature;
        for (auto& res : results) {
            if (res.failure) {
                out.failures.push_back(std::move(*res.failure));
                continue;
            }
            for (auto& r : res.reports) out.reports.push_back(std::move(r));
            if (res.summary) out.summaries.push_back(std::move(*res.summary));
            out.generations.push_back(std::move(*res.generation));
        }
        const auto after = ctx.gateway.stats();
        for (auto role : kAllRoles) out.calls[role] = after.at(role).requests - before.at(role).requests;
        bundle.outputs.push_back(std::move(out));
    }
    return bundle;
}

}  // namespace drp
