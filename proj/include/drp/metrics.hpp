#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/corpus.hpp"
#include "drp/tokenize.hpp"
#include "drp/types.hpp"

namespace drp {

// ----- BLEU ---------------------------------------------------------------

// Clipped n-gram statistics accumulated over a corpus.
struct BleuStats {
    std::vector<std::size_t> matches;  // index n-1
    std::vector<std::size_t> totals;
    std::size_t hyp_length = 0;
    std::size_t ref_length = 0;
};

[[nodiscard]] BleuStats bleu_stats(std::span<const TokenSequence> hypotheses,
                                   std::span<const TokenSequence> references, std::size_t max_n = 4);

// Corpus-level BLEU in [0, 100]: geometric mean of the corpus-level clipped
// precisions times the brevity penalty. Any zero precision gives 0.
// Throws LengthMismatch (sizes differ) or EmptyInput (no pairs).
[[nodiscard]] double bleu(std::span<const TokenSequence> hypotheses, std::span<const TokenSequence> references,
                          std::size_t max_n = 4);

// Per-sentence diagnostic BLEU in [0, 100], add-one smoothing for n >= 2.
[[nodiscard]] double sentence_bleu(const TokenSequence& hypothesis, const TokenSequence& reference,
                                   std::size_t max_n = 4);

// ----- METEOR -------------------------------------------------------------

struct MeteorDetail {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fmean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> alignment;  // (hyp index, ref index), sorted by hyp index
};

// Fmean = 10PR/(R+9P); penalty = 0.5 (chunks/m)^3; score = Fmean (1 - penalty).
[[nodiscard]] MeteorDetail meteor_from_counts(std::size_t matches, std::size_t hyp_length, std::size_t ref_length,
                                              std::size_t chunks);

// Exact stage, then Porter-stem stage on the leftovers. Each stage takes a
// maximum-cardinality alignment with the fewest crossing pairs.
// Throws EmptyInput.
[[nodiscard]] MeteorDetail meteor_detail(const TokenSequence& hypothesis, const TokenSequence& reference);
[[nodiscard]] double meteor(const TokenSequence& hypothesis, const TokenSequence& reference);

// Number of aligned pairs (i, j), (i', j') with i < i' and j > j'.
[[nodiscard]] std::size_t crossing_pairs(std::span<const std::pair<std::size_t, std::size_t>> alignment);

// ----- ROUGE --------------------------------------------------------------

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Clipped unigram overlap. Throws EmptyInput.
[[nodiscard]] RougeScore rouge_1(const TokenSequence& hypothesis, const TokenSequence& reference);
// Longest common subsequence. Throws EmptyInput.
[[nodiscard]] RougeScore rouge_l(const TokenSequence& hypothesis, const TokenSequence& reference);
[[nodiscard]] std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

// ----- reports ------------------------------------------------------------

struct SampleMetrics {
    std::string user_id;
    std::string item_id;
    double bleu = 0.0;  // sentence-level, smoothed
    double meteor = 0.0;
    double rouge1_f = 0.0;
    double rougeL_f = 0.0;
};

struct CorpusMetrics {
    double bleu = 0.0;  // corpus-level
    double meteor = 0.0;
    double rouge1_f = 0.0;
    double rougeL_f = 0.0;
};

struct MetricReport {
    std::vector<SampleMetrics> per_sample;  // sorted by (user_id, item_id)
    CorpusMetrics corpus;
    std::size_t n_samples = 0;
};

// References are the test-split review texts. A hypothesis or reference with
// no tokens scores 0 on every per-sample metric. Throws MissingReference.
[[nodiscard]] MetricReport evaluate_run(std::span<const GeneratedReview> generations, const Corpus& corpus);

// Field-wise arithmetic mean. Throws SampleSetMismatch, EmptyInput.
[[nodiscard]] MetricReport average_reports(std::span<const MetricReport> reports);

[[nodiscard]] nlohmann::json to_json(const MetricReport& report);
[[nodiscard]] MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace drp
