#include "drp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "drp/error.hpp"
#include "drp/porter.hpp"

namespace drp {

using json = nlohmann::json;

namespace {

std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSequence& seq, std::size_t n) {
    std::unordered_map<std::string, std::size_t> counts;
    if (seq.size() < n) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        std::string key = seq.tokens[i];
        for (std::size_t t = 1; t < n; ++t) {
            key += '\x1f';
            key += seq.tokens[i + t];
        }
        ++counts[key];
    }
    return counts;
}

void accumulate(BleuStats& stats, const TokenSequence& hyp, const TokenSequence& ref) {
    for (std::size_t n = 1; n <= stats.matches.size(); ++n) {
        const auto h = ngram_counts(hyp, n);
        const auto r = ngram_counts(ref, n);
        std::size_t clipped = 0;
        for (const auto& [gram, count] : h) {
            auto it = r.find(gram);
            if (it != r.end()) clipped += std::min(count, it->second);
        }
        stats.matches[n - 1] += clipped;
        stats.totals[n - 1] += hyp.size() >= n ? hyp.size() - n + 1 : 0;
    }
    stats.hyp_length += hyp.size();
    stats.ref_length += ref.size();
}

double brevity_penalty(std::size_t c, std::size_t r) {
    if (c > r) return 1.0;
    if (c == 0) return 0.0;
    return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

RougeScore prf(std::size_t overlap, std::size_t hyp_len, std::size_t ref_len) {
    RougeScore s;
    s.precision = static_cast<double>(overlap) / static_cast<double>(hyp_len);
    s.recall = static_cast<double>(overlap) / static_cast<double>(ref_len);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// ----- METEOR alignment ---------------------------------------------------

using Pair = std::pair<std::size_t, std::size_t>;

// One word (or stem) type with unequal occurrence counts on the two sides:
// which occurrences of the longer side take part is a free choice.
struct ChoiceGroup {
    std::vector<std::size_t> longer;
    std::vector<std::size_t> shorter;
    bool hyp_is_longer = false;
    std::vector<std::vector<std::size_t>> subsets;  // filled when small enough
    std::vector<std::size_t> current;               // indices into `longer`
};

constexpr std::size_t kEnumerationBudget = 2000;

std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    k = std::min(k, n - k);
    double v = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        v = v * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (v > static_cast<double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(v));
}

std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        out.push_back(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t t = i; t < k; ++t) idx[t] = idx[t - 1] + 1;
    }
    return out;
}

void append_group_pairs(const ChoiceGroup& g, const std::vector<std::size_t>& subset, std::vector<Pair>& out) {
    for (std::size_t t = 0; t < subset.size(); ++t) {
        const std::size_t a = g.longer[subset[t]];
        const std::size_t b = g.shorter[t];
        out.push_back(g.hyp_is_longer ? Pair{a, b} : Pair{b, a});
    }
}

std::size_t crossings_with(const std::vector<Pair>& base, std::vector<Pair>& scratch, const std::vector<ChoiceGroup>& groups) {
    scratch = base;
    for (const auto& g : groups) append_group_pairs(g, g.current, scratch);
    return crossing_pairs(scratch);
}

// Aligns free positions whose keys match. `fixed` holds pairs from earlier
// stages; they count toward crossings but are not changed.
std::vector<Pair> align_stage(const std::vector<std::string>& hyp_keys, const std::vector<std::string>& ref_keys,
                              const std::vector<bool>& hyp_free, const std::vector<bool>& ref_free,
                              const std::vector<Pair>& fixed) {
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_key;
    for (std::size_t i = 0; i < hyp_keys.size(); ++i)
        if (hyp_free[i]) by_key[hyp_keys[i]].first.push_back(i);
    for (std::size_t j = 0; j < ref_keys.size(); ++j)
        if (ref_free[j]) by_key[ref_keys[j]].second.push_back(j);

    std::vector<Pair> base = fixed;
    std::vector<ChoiceGroup> groups;
    std::size_t total = 1;
    for (auto& [key, occ] : by_key) {
        auto& [h, r] = occ;
        if (h.empty() || r.empty()) continue;
        if (h.size() == r.size()) {
            for (std::size_t t = 0; t < h.size(); ++t) base.emplace_back(h[t], r[t]);
            continue;
        }
        ChoiceGroup g;
        g.hyp_is_longer = h.size() > r.size();
        g.longer = g.hyp_is_longer ? h : r;
        g.shorter = g.hyp_is_longer ? r : h;
        g.current.resize(g.shorter.size());
        std::iota(g.current.begin(), g.current.end(), 0);
        const std::size_t combos = binomial_capped(g.longer.size(), g.shorter.size(), kEnumerationBudget);
        if (combos <= kEnumerationBudget) g.subsets = all_subsets(g.longer.size(), g.shorter.size());
        total = std::min(kEnumerationBudget + 1, total * combos);
        groups.push_back(std::move(g));
    }

    std::vector<Pair> scratch;
    if (!groups.empty() && total <= kEnumerationBudget) {
        // exhaustive: odometer over every group's subsets
        std::vector<std::size_t> odo(groups.size(), 0);
        std::vector<std::size_t> best_odo = odo;
        std::size_t best = SIZE_MAX;
        for (;;) {
            for (std::size_t g = 0; g < groups.size(); ++g) groups[g].current = groups[g].subsets[odo[g]];
            const std::size_t c = crossings_with(base, scratch, groups);
            if (c < best) {
                best = c;
                best_odo = odo;
            }
            std::size_t g = 0;
            while (g < groups.size() && ++odo[g] == groups[g].subsets.size()) odo[g++] = 0;
            if (g == groups.size()) break;
        }
        for (std::size_t g = 0; g < groups.size(); ++g) groups[g].current = groups[g].subsets[best_odo[g]];
    } else if (!groups.empty()) {
        // coordinate descent, one group at a time
        std::size_t best = crossings_with(base, scratch, groups);
        for (int sweep = 0; sweep < 50 && best > 0; ++sweep) {
            bool improved = false;
            for (auto& g : groups) {
                std::vector<std::vector<std::size_t>> candidates;
                if (!g.subsets.empty() && g.subsets.size() <= 256) {
                    candidates = g.subsets;
                } else {
                    std::set<std::size_t> chosen(g.current.begin(), g.current.end());
                    for (std::size_t slot = 0; slot < g.current.size(); ++slot) {
                        for (std::size_t alt = 0; alt < g.longer.size(); ++alt) {
                            if (chosen.count(alt)) continue;
                            auto cand = g.current;
                            cand[slot] = alt;
                            std::sort(cand.begin(), cand.end());
                            candidates.push_back(std::move(cand));
                        }
                    }
                }
                const auto keep = g.current;
                auto best_subset = keep;
                for (auto& cand : candidates) {
                    g.current = cand;
                    const std::size_t c = crossings_with(base, scratch, groups);
                    if (c < best) {
                        best = c;
                        best_subset = cand;
                        improved = true;
                    }
                }
                g.current = best_subset;
            }
            if (!improved) break;
        }
    }

    std::vector<Pair> out(base.begin() + static_cast<std::ptrdiff_t>(fixed.size()), base.end());
    for (const auto& g : groups) append_group_pairs(g, g.current, out);
    return out;
}

}  // namespace

// ----- BLEU ---------------------------------------------------------------

BleuStats bleu_stats(std::span<const TokenSequence> hypotheses, std::span<const TokenSequence> references,
                     std::size_t max_n) {
    if (hypotheses.size() != references.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                                   std::to_string(references.size()) + " references");
    if (max_n == 0) throw Error(ErrorKind::InvalidArgument, "max_n must be >= 1");
    BleuStats stats;
    stats.matches.assign(max_n, 0);
    stats.totals.assign(max_n, 0);
    for (std::size_t i = 0; i < hypotheses.size(); ++i) accumulate(stats, hypotheses[i], references[i]);
    return stats;
}

double bleu(std::span<const TokenSequence> hypotheses, std::span<const TokenSequence> references, std::size_t max_n) {
    const auto stats = bleu_stats(hypotheses, references, max_n);
    if (hypotheses.empty()) throw Error(ErrorKind::EmptyInput, "bleu needs at least one pair");
    double log_sum = 0.0;
    for (std::size_t n = 0; n < max_n; ++n) {
        if (stats.matches[n] == 0 || stats.totals[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]));
    }
    return 100.0 * brevity_penalty(stats.hyp_length, stats.ref_length) *
           std::exp(log_sum / static_cast<double>(max_n));
}

double sentence_bleu(const TokenSequence& hypothesis, const TokenSequence& reference, std::size_t max_n) {
    BleuStats stats;
    stats.matches.assign(max_n, 0);
    stats.totals.assign(max_n, 0);
    accumulate(stats, hypothesis, reference);
    if (stats.matches[0] == 0 || stats.totals[0] == 0) return 0.0;
    double log_sum = std::log(static_cast<double>(stats.matches[0]) / static_cast<double>(stats.totals[0]));
    for (std::size_t n = 1; n < max_n; ++n)
        log_sum += std::log((static_cast<double>(stats.matches[n]) + 1.0) / (static_cast<double>(stats.totals[n]) + 1.0));
    return 100.0 * brevity_penalty(stats.hyp_length, stats.ref_length) *
           std::exp(log_sum / static_cast<double>(max_n));
}

// ----- METEOR -------------------------------------------------------------

std::size_t crossing_pairs(std::span<const std::pair<std::size_t, std::size_t>> alignment) {
    std::size_t n = 0;
    for (std::size_t a = 0; a < alignment.size(); ++a)
        for (std::size_t b = a + 1; b < alignment.size(); ++b) {
            const auto& [i1, j1] = alignment[a];
            const auto& [i2, j2] = alignment[b];
            if ((i1 < i2 && j1 > j2) || (i1 > i2 && j1 < j2)) ++n;
        }
    return n;
}

MeteorDetail meteor_from_counts(std::size_t matches, std::size_t hyp_length, std::size_t ref_length,
                                std::size_t chunks) {
    MeteorDetail d;
    d.matches = matches;
    d.chunks = chunks;
    if (matches == 0 || hyp_length == 0 || ref_length == 0) return d;
    d.precision = static_cast<double>(matches) / static_cast<double>(hyp_length);
    d.recall = static_cast<double>(matches) / static_cast<double>(ref_length);
    d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
    const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    d.penalty = 0.5 * frag * frag * frag;
    d.score = d.fmean * (1.0 - d.penalty);
    return d;
}

MeteorDetail meteor_detail(const TokenSequence& hypothesis, const TokenSequence& reference) {
    if (hypothesis.empty() || reference.empty()) throw Error(ErrorKind::EmptyInput, "meteor needs nonempty sequences");

    std::vector<bool> hyp_free(hypothesis.size(), true);
    std::vector<bool> ref_free(reference.size(), true);
    std::vector<Pair> alignment = align_stage(hypothesis.tokens, reference.tokens, hyp_free, ref_free, {});
    for (const auto& [i, j] : alignment) {
        hyp_free[i] = false;
        ref_free[j] = false;
    }

    std::vector<std::string> hyp_stems, ref_stems;
    for (const auto& t : hypothesis.tokens) hyp_stems.push_back(porter_stem(t));
    for (const auto& t : reference.tokens) ref_stems.push_back(porter_stem(t));
    const auto stemmed = align_stage(hyp_stems, ref_stems, hyp_free, ref_free, alignment);
    alignment.insert(alignment.end(), stemmed.begin(), stemmed.end());
    std::sort(alignment.begin(), alignment.end());

    std::size_t chunks = alignment.empty() ? 0 : 1;
    for (std::size_t t = 1; t < alignment.size(); ++t)
        if (alignment[t].first != alignment[t - 1].first + 1 || alignment[t].second != alignment[t - 1].second + 1)
            ++chunks;

    auto d = meteor_from_counts(alignment.size(), hypothesis.size(), reference.size(), chunks);
    d.alignment = std::move(alignment);
    return d;
}

double meteor(const TokenSequence& hypothesis, const TokenSequence& reference) {
    return meteor_detail(hypothesis, reference).score;
}

// ----- ROUGE --------------------------------------------------------------

RougeScore rouge_1(const TokenSequence& hypothesis, const TokenSequence& reference) {
    if (hypothesis.empty() || reference.empty()) throw Error(ErrorKind::EmptyInput, "rouge-1 needs nonempty sequences");
    const auto h = ngram_counts(hypothesis, 1);
    const auto r = ngram_counts(reference, 1);
    std::size_t overlap = 0;
    for (const auto& [tok, count] : h) {
        auto it = r.find(tok);
        if (it != r.end()) overlap += std::min(count, it->second);
    }
    return prf(overlap, hypothesis.size(), reference.size());
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a.tokens[i - 1] == b.tokens[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const TokenSequence& hypothesis, const TokenSequence& reference) {
    if (hypothesis.empty() || reference.empty()) throw Error(ErrorKind::EmptyInput, "rouge-l needs nonempty sequences");
    return prf(lcs_length(hypothesis, reference), hypothesis.size(), reference.size());
}

// ----- reports ------------------------------------------------------------

MetricReport evaluate_run(std::span<const GeneratedReview> generations, const Corpus& corpus) {
    std::map<std::pair<std::string, std::string>, const ReviewSample*> refs;
    for (const auto& s : corpus.test) refs[{s.user_id, s.item_id}] = &s;

    std::vector<const GeneratedReview*> ordered;
    for (const auto& g : generations) {
        if (!refs.count({g.target_user, g.item_id}))
            throw Error(ErrorKind::MissingReference,
                        "no test sample for (" + g.target_user + ", " + g.item_id + ")");
        ordered.push_back(&g);
    }
    std::sort(ordered.begin(), ordered.end(), [](const GeneratedReview* a, const GeneratedReview* b) {
        return std::tie(a->target_user, a->item_id) < std::tie(b->target_user, b->item_id);
    });
    for (std::size_t i = 1; i < ordered.size(); ++i)
        if (ordered[i]->target_user == ordered[i - 1]->target_user && ordered[i]->item_id == ordered[i - 1]->item_id)
            throw Error(ErrorKind::InvalidArgument,
                        "duplicate generation for (" + ordered[i]->target_user + ", " + ordered[i]->item_id + ")");

    MetricReport report;
    std::vector<TokenSequence> hyps, refs_tok;
    for (const auto* g : ordered) {
        auto hyp = tokenize(g->text);
        auto ref = tokenize(refs.at({g->target_user, g->item_id})->review_text);
        SampleMetrics m{g->target_user, g->item_id};
        if (!hyp.empty() && !ref.empty()) {
            m.bleu = sentence_bleu(hyp, ref);
            m.meteor = meteor(hyp, ref);
            m.rouge1_f = rouge_1(hyp, ref).f1;
            m.rougeL_f = rouge_l(hyp, ref).f1;
        }
        report.per_sample.push_back(std::move(m));
        hyps.push_back(std::move(hyp));
        refs_tok.push_back(std::move(ref));
    }
    report.n_samples = report.per_sample.size();
    if (report.n_samples > 0) {
        report.corpus.bleu = bleu(hyps, refs_tok);
        for (const auto& m : report.per_sample) {
            report.corpus.meteor += m.meteor;
            report.corpus.rouge1_f += m.rouge1_f;
            report.corpus.rougeL_f += m.rougeL_f;
        }
        const auto n = static_cast<double>(report.n_samples);
        report.corpus.meteor /= n;
        report.corpus.rouge1_f /= n;
        report.corpus.rougeL_f /= n;
    }
    return report;
}

MetricReport average_reports(std::span<const MetricReport> reports) {
    if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no reports to average");
    const auto& first = reports.front();
    for (const auto& r : reports) {
        bool same = r.per_sample.size() == first.per_sample.size() && r.n_samples == first.n_samples;
        for (std::size_t i = 0; same && i < r.per_sample.size(); ++i)
            same = r.per_sample[i].user_id == first.per_sample[i].user_id &&
                   r.per_sample[i].item_id == first.per_sample[i].item_id;
        if (!same) throw Error(ErrorKind::SampleSetMismatch, "reports cover different sample sets");
    }

    const auto n = static_cast<double>(reports.size());
    MetricReport out;
    out.n_samples = first.n_samples;
    for (std::size_t i = 0; i < first.per_sample.size(); ++i) {
        SampleMetrics m{first.per_sample[i].user_id, first.per_sample[i].item_id};
        for (const auto& r : reports) {
            m.bleu += r.per_sample[i].bleu;
            m.meteor += r.per_sample[i].meteor;
            m.rouge1_f += r.per_sample[i].rouge1_f;
            m.rougeL_f += r.per_sample[i].rougeL_f;
        }
        m.bleu /= n;
        m.meteor /= n;
        m.rouge1_f /= n;
        m.rougeL_f /= n;
        out.per_sample.push_back(std::move(m));
    }
    for (const auto& r : reports) {
        out.corpus.bleu += r.corpus.bleu;
        out.corpus.meteor += r.corpus.meteor;
        out.corpus.rouge1_f += r.corpus.rouge1_f;
        out.corpus.rougeL_f += r.corpus.rougeL_f;
    }
    out.corpus.bleu /= n;
    out.corpus.meteor /= n;
    out.corpus.rouge1_f /= n;
    out.corpus.rougeL_f /= n;
    return out;
}

json to_json(const MetricReport& report) {
    json per_sample = json::array();
    for (const auto& m : report.per_sample)
        per_sample.push_back({{"user_id", m.user_id},
                              {"item_id", m.item_id},
                              {"bleu", m.bleu},
                              {"meteor", m.meteor},
                              {"rouge1_f", m.rouge1_f},
                              {"rougeL_f", m.rougeL_f}});
    return {{"n_samples", report.n_samples},
            {"corpus",
             {{"bleu", report.corpus.bleu},
              {"meteor", report.corpus.meteor},
              {"rouge1_f", report.corpus.rouge1_f},
              {"rougeL_f", report.corpus.rougeL_f}}},
            {"per_sample", std::move(per_sample)}};
}

MetricReport metric_report_from_json(const json& j) {
    MetricReport r;
    try {
        r.n_samples = j.at("n_samples").get<std::size_t>();
        const auto& c = j.at("corpus");
        r.corpus = {c.at("bleu").get<double>(), c.at("meteor").get<double>(), c.at("rouge1_f").get<double>(),
                    c.at("rougeL_f").get<double>()};
        for (const auto& m : j.at("per_sample"))
            r.per_sample.push_back({m.at("user_id").get<std::string>(), m.at("item_id").get<std::string>(),
                                    m.at("bleu").get<double>(), m.at("meteor").get<double>(),
                                    m.at("rouge1_f").get<double>(), m.at("rougeL_f").get<double>()});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed metric report: ") + e.what());
    }
    return r;
}

}  // namespace drp
