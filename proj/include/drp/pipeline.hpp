#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/cluster.hpp"
#include "drp/corpus.hpp"
#include "drp/embed.hpp"
#include "drp/llm.hpp"
#include "drp/prompts.hpp"
#include "drp/retrieve.hpp"
#include "drp/types.hpp"

namespace drp {

struct RunConfig {
    GenerationMode mode = GenerationMode::Drp;
    std::size_t M = 4;  // representatives per target user
    std::size_t cluster_k = 5;
    std::size_t retrieval_k = 4;
    RetrievalMode retrieval_mode = RetrievalMode::Similarity;
    std::vector<double> temperatures{0.0, 0.8};
    std::uint64_t seed = 0;
    std::size_t kmeans_max_iters = 100;
    double kmeans_tol = 1e-9;
    std::size_t kmeans_restarts = 10;
    std::size_t max_concurrency = 4;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const RunConfig& cfg);

// Everything a pipeline stage needs besides its inputs.
struct PipelineContext {
    const RunConfig& config;
    Gateway& gateway;
    const PromptSet& prompts;
    const EmbeddingProvider* embedder = nullptr;  // required for similarity retrieval and drp clustering
};

// ----- Step 1: extraction ---------------------------------------------------

// Reads [FEATURE] ... [/FEATURE] blocks, ignoring surrounding prose. Blocks
// missing DIMENSION, DEFINITION or DESCRIPTION (or with a dimension name over
// 64 characters) are skipped; an unknown DIRECTION becomes qualitative.
// Throws ExtractionParseError when no block survives.
[[nodiscard]] std::vector<DifferenceFeature> parse_difference_output(const std::string& raw,
                                                                     std::size_t* skipped_blocks = nullptr);

[[nodiscard]] DifferenceReport extract_differences(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                                   const RetrievedHistory& rep_ctx, const PipelineContext& ctx,
                                                   double temperature);

// ----- Step 2: reflective validation ---------------------------------------

struct Verdict {
    bool keep = true;
    std::string reason;
};

// Parses "VERDICT <index>: KEEP|DROP <dash> <reason>" lines. Indices outside
// [0, count) are ignored; the first verdict for an index wins.
[[nodiscard]] std::map<std::size_t, Verdict> parse_verdicts(const std::string& raw, std::size_t count);

// One validator call per report (none for an empty report). Features without
// a verdict are kept.
[[nodiscard]] ValidatedReport validate_differences(const DifferenceReport& report, const RetrievedHistory& target_ctx,
                                                   const RetrievedHistory& rep_ctx, const PipelineContext& ctx,
                                                   double temperature);

// ----- Step 3: summarize, then generate ------------------------------------

// One summarizer call over all kept features, grouped by representative.
// When nothing was kept the summary is kNoDifferencesSentinel and no call is
// made. Requires |validated| == config.M.
[[nodiscard]] UserDifferenceSummary summarize_differences(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                                          std::span<const ValidatedReport> validated,
                                                          const PipelineContext& ctx, double temperature);

// drp: item + history + summary; rag: item + history; non_p: item only.
[[nodiscard]] GeneratedReview generate_review(const ReviewSample& item, const RetrievedHistory& target_ctx,
                                              const UserDifferenceSummary* summary, GenerationMode mode,
                                              const PipelineContext& ctx, double temperature);

// Prompt fragments, exposed for tests.
[[nodiscard]] std::string render_item(const ReviewSample& item);
[[nodiscard]] std::string render_history(const RetrievedHistory& history);

// ----- whole run ------------------------------------------------------------

struct SampleFailure {
    std::string user_id;
    std::string item_id;
    double temperature = 0.0;
    std::string stage;
    std::string error;
};

struct TemperatureOutputs {
    double temperature = 0.0;
    std::vector<GeneratedReview> generations;  // ordered by (user_id, item_id)
    std::vector<ValidatedReport> reports;      // ordered by (user_id, item_id, representative index)
    std::vector<UserDifferenceSummary> summaries;
    std::vector<SampleFailure> failures;
    std::map<LlmRole, std::size_t> calls;      // requests issued per role at this temperature
};

struct RunBundle {
    RunConfig config;
    std::optional<ClusterModel> cluster;
    std::map<std::string, RepresentativeSet> representatives;  // by target user
    std::vector<TemperatureOutputs> outputs;                   // in config.temperatures order
};

// Step 0 once (drp mode only), then Steps 1-3 for every test sample at every
// temperature. A failing sample is recorded and skipped.
[[nodiscard]] RunBundle run_pipeline(const Corpus& corpus, const PipelineContext& ctx);

}  // namespace drp
