// Runs every acceptance criterion at its tolerance and prints one PASS/FAIL
// line per criterion. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "drp/cli.hpp"
#include "drp/cluster.hpp"
#include "drp/config.hpp"
#include "drp/metrics.hpp"
#include "drp/pipeline.hpp"
#include "drp/run_bundle.hpp"
#include "drp/uvq.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drp;
namespace fs = std::filesystem;

namespace {

// Collects failed checks for one criterion.
struct Checker {
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::fabs(got - want) <= tol)) {
            std::ostringstream s;
            s.precision(17);
            s << what << ": got " << got << ", want " << want << " +/- " << tol;
            failures.push_back(s.str());
        }
    }
};

TokenSequence seq(std::vector<std::string> tokens) { return TokenSequence{std::move(tokens)}; }

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t lo, std::size_t hi, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> len(lo, hi), word(0, vocab - 1);
    std::vector<std::string> out(len(rng));
    for (auto& t : out) t = "w" + std::to_string(word(rng));
    return out;
}

std::vector<UserProfileEmbedding> points_of(const std::vector<std::vector<double>>& raw) {
    std::vector<UserProfileEmbedding> out;
    for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({"p" + std::to_string(i), EmbeddingVector(raw[i])});
    return out;
}

std::vector<std::vector<double>> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (auto& p : out)
        for (auto& x : p) x = u(rng);
    return out;
}

fs::path write_run_config(const fs::path& dir) {
    auto doc = nlohmann::json::parse(read_text_file(test::source_dir() / "fixtures/mock_run.json"));
    doc["corpus"] = (test::source_dir() / "fixtures/corpus.jsonl").string();
    doc["fixture_dir"] = (test::source_dir() / "fixtures/mock").string();
    doc["cache_dir"] = "cache";
    doc["output_dir"] = "runs";
    const auto path = dir / "config.json";
    write_text_file(path, doc.dump(2));
    return path;
}

// ----- 1 --------------------------------------------------------------------
void metric_oracles(Checker& c) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto h = random_tokens(rng, 1, 12, 4);
        const auto r = random_tokens(rng, 1, 12, 4);
        const auto tag = "pair " + std::to_string(trial);
        c.near(bleu(std::vector{seq(h)}, std::vector{seq(r)}), oracle::corpus_bleu({h}, {r}), 1e-9, tag + " bleu");

        const double ov = static_cast<double>(oracle::unigram_overlap(h, r));
        const double p1 = ov / static_cast<double>(h.size()), r1 = ov / static_cast<double>(r.size());
        c.near(rouge_1(seq(h), seq(r)).f1, oracle::f1(p1, r1), 1e-9, tag + " rouge_1");

        const double l = static_cast<double>(oracle::lcs_exhaustive(h, r));
        const double pl = l / static_cast<double>(h.size()), rl = l / static_cast<double>(r.size());
        c.near(rouge_l(seq(h), seq(r)).f1, oracle::f1(pl, rl), 1e-9, tag + " rouge_l");
    }

    const auto hyp = seq({"the", "cat", "sat", "on", "the", "mat"});
    const auto ref = seq({"the", "cat", "sat", "on", "a", "mat"});
    const auto st = bleu_stats(std::vector{hyp}, std::vector{ref});
    c.check(st.matches == std::vector<std::size_t>{5, 3, 2, 1} && st.totals == std::vector<std::size_t>{6, 5, 4, 3},
            "worked BLEU n-gram counts");
    c.near(bleu(std::vector{hyp}, std::vector{ref}), 53.73, 0.01, "worked BLEU");

    const auto short_hyp = seq({"the", "cat", "sat"});
    const auto long_ref = seq({"the", "cat", "sat", "on", "the", "mat"});
    c.check(rouge_1(short_hyp, long_ref).f1 == 2.0 / 3.0, "ROUGE-1 example is exactly 2/3");
    c.check(rouge_l(short_hyp, long_ref).f1 == 2.0 / 3.0, "ROUGE-L example is exactly 2/3");
}

// ----- 2 --------------------------------------------------------------------
void meteor_suite(Checker& c) {
    const std::pair<std::size_t, double> expected[] = {{1, 0.5}, {5, 0.996}, {10, 0.9995}};
    for (const auto& [m, want] : expected) {
        std::vector<std::string> tokens;
        for (std::size_t i = 0; i < m; ++i) tokens.push_back("t" + std::to_string(i));
        const double formula = 1.0 - 0.5 * std::pow(1.0 / static_cast<double>(m), 3.0);
        c.near(formula, want, 1e-9, "identity formula m=" + std::to_string(m));
        c.near(meteor(seq(tokens), seq(tokens)), formula, 1e-9, "identity score m=" + std::to_string(m));
    }

    std::mt19937_64 rng(13);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t hl = len(rng), rl = len(rng);
        std::uniform_int_distribution<std::size_t> mdist(1, std::min(hl, rl));
        const std::size_t m = mdist(rng);
        double prev = 2.0;
        for (std::size_t chunks = 1; chunks <= m; ++chunks) {
            const double s = meteor_from_counts(m, hl, rl, chunks).score;
            c.check(s <= prev && s >= 0.0, "meteor not monotone in chunks, trial " + std::to_string(trial));
            prev = s;
        }
    }
    // Observed alignments: more fragmented word orders never score higher.
    for (int trial = 0; trial < 200; ++trial) {
        auto r = random_tokens(rng, 4, 10, 1000);
        std::set<std::string> uniq(r.begin(), r.end());
        if (uniq.size() != r.size()) continue;
        auto h = r;
        std::shuffle(h.begin(), h.end(), rng);
        const auto d = meteor_detail(seq(h), seq(r));
        const auto base = meteor_from_counts(d.matches, h.size(), r.size(), d.chunks);
        c.near(d.score, base.score, 1e-12, "meteor detail consistent with counts");
        c.check(d.score <= meteor(seq(r), seq(r)) + 1e-12, "shuffled order scores above identity");
    }
}

// ----- 3 --------------------------------------------------------------------
void clustering_suite(Checker& c) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial % 6);
        const std::size_t k = 1 + static_cast<std::size_t>(trial % 3);
        const auto raw = random_points(rng, n, 2);
        const auto pts = points_of(raw);
        KMeansOptions opts;
        opts.k = k;
        opts.seed = static_cast<std::uint64_t>(trial);
        opts.restarts = 20;
        const auto tag = "fixture " + std::to_string(trial);
        const auto a = kmeans_fit(pts, opts);
        const auto b = kmeans_fit(pts, opts);
        c.check(a.assignment == b.assignment && a.centroids == b.centroids && a.inertia == b.inertia,
                tag + " not bitwise reproducible");
        for (std::size_t i = 1; i < a.inertia_trace.size(); ++i)
            c.check(a.inertia_trace[i] <= a.inertia_trace[i - 1], tag + " inertia increased");
        c.near(a.inertia, oracle::kmeans_optimum(raw, k), 1e-9, tag + " global optimum");
    }
}

// ----- 4 --------------------------------------------------------------------
void representative_suite(Checker& c) {
    std::mt19937_64 rng(19);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 6 + static_cast<std::size_t>(trial % 10);
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 4);
        const auto pts = points_of(random_points(rng, n, 3));
        KMeansOptions opts;
        opts.k = k;
        opts.seed = static_cast<std::uint64_t>(trial);
        opts.restarts = 1;
        const auto m = kmeans_fit(pts, opts);
        const auto& target = pts[static_cast<std::size_t>(trial) % n].user_id;
        std::size_t foreign = 0;
        for (const auto& p : pts) foreign += m.cluster_of(p.user_id) != m.cluster_of(target);
        const std::size_t count = std::min<std::size_t>(foreign, 1 + static_cast<std::size_t>(trial % 4));
        const auto reps = select_representatives(m, pts, target, count);
        ++checked;
        c.check(reps.members.size() == count, "wrong representative count");
        c.check(std::set<std::string>(reps.members.begin(), reps.members.end()).size() == count,
                "duplicate representative");
        for (const auto& u : reps.members)
            c.check(m.cluster_of(u) != m.cluster_of(target), "representative shares the target cluster");
    }
    c.check(checked == 1000, "not every fixture was exercised");

    // M=4 over two foreign clusters of two users each: the full foreign set.
    const auto pts = points_of({{0.0}, {1.0}, {10.0}, {11.0}, {20.0}, {21.0}});
    KMeansOptions opts;
    opts.k = 3;
    opts.seed = 1;
    const auto m = kmeans_fit(pts, opts);
    const auto reps = select_representatives(m, pts, "p0", 4);
    c.check(std::set<std::string>(reps.members.begin(), reps.members.end()) ==
                std::set<std::string>{"p2", "p3", "p4", "p5"},
            "forced M=4 example");
}

// ----- 5 --------------------------------------------------------------------
void end_to_end(Checker& c) {
    test::TempDir tmp;
    const auto config = write_run_config(tmp.path());
    const auto first = cli::cmd_run(config, "drp", true);
    const auto& m1 = first.manifest;
    c.check(m1["failures"].empty(), "failures in the fixture run");

    const std::size_t M = m1["run_config"]["M"].get<std::size_t>();
    for (const auto& tag : {"0.0", "0.8"}) {
        const auto& calls = m1["calls_by_temperature"][tag];
        const std::size_t samples = m1["counts"][tag]["generations"].get<std::size_t>();
        c.check(samples == 6, std::string("samples at ") + tag);
        // Every fixture report keeps a nonempty feature list, so each gets a validator call.
        c.check(calls.value("extractor", 0UL) == M * samples, std::string("extractor calls at ") + tag);
        c.check(calls.value("validator", 0UL) == M * samples, std::string("validator calls at ") + tag);
        c.check(calls.value("summarizer", 0UL) == samples, std::string("summarizer calls at ") + tag);
        c.check(calls.value("generator", 0UL) == samples, std::string("generator calls at ") + tag);
        c.check(calls.value("judge", 0UL) == 0, std::string("judge calls at ") + tag);
    }
    c.check(m1["runtime"]["provider_calls"].get<std::size_t>() == 2 * 6 * (2 * M + 2), "total provider calls");

    std::map<std::string, std::string> bytes;
    for (const auto& [name, _] : m1["files"].items()) bytes[name] = read_text_file(first.run_dir / name);

    const auto second = cli::cmd_run(config, "drp", true);
    c.check(second.manifest["runtime"]["provider_calls"] == 0, "warm rerun made provider calls");
    c.check(second.manifest["digest"] == m1["digest"], "warm rerun digest differs");
    c.check(second.manifest["files"] == m1["files"], "warm rerun file hashes differ");
    for (const auto& [name, text] : bytes)
        c.check(read_text_file(second.run_dir / name) == text, "warm rerun changed " + name);
}

// ----- 6 --------------------------------------------------------------------
void temperature_averaging(Checker& c) {
    const auto with_value = [](double v) {
        MetricReport r;
        r.per_sample.push_back({"u", "i", v, v, v, v});
        r.corpus = {v, v, v, v};
        r.n_samples = 1;
        return r;
    };
    const std::vector<MetricReport> pair{with_value(2.0), with_value(3.0)};
    const auto avg = average_reports(pair);
    c.near(avg.corpus.bleu, 2.5, 1e-12, "trivial average");
    c.near(avg.per_sample[0].rougeL_f, 2.5, 1e-12, "trivial per-sample average");

    test::TempDir tmp;
    const auto run = cli::cmd_run(write_run_config(tmp.path()), "drp", true);
    const auto corpus_path = test::source_dir() / "fixtures/corpus.jsonl";
    const auto averaged = cli::cmd_eval(run.run_dir, corpus_path);
    const auto a = metric_report_from_json(nlohmann::json::parse(read_text_file(run.run_dir / "metrics.0.0.json")));
    const auto b = metric_report_from_json(nlohmann::json::parse(read_text_file(run.run_dir / "metrics.0.8.json")));
    c.near(averaged.corpus.bleu, (a.corpus.bleu + b.corpus.bleu) / 2.0, 1e-12, "bleu mean");
    c.near(averaged.corpus.meteor, (a.corpus.meteor + b.corpus.meteor) / 2.0, 1e-12, "meteor mean");
    c.near(averaged.corpus.rouge1_f, (a.corpus.rouge1_f + b.corpus.rouge1_f) / 2.0, 1e-12, "rouge1 mean");
    c.near(averaged.corpus.rougeL_f, (a.corpus.rougeL_f + b.corpus.rougeL_f) / 2.0, 1e-12, "rougeL mean");
    c.check(averaged.per_sample.size() == a.per_sample.size(), "per-sample size");
    for (std::size_t i = 0; i < averaged.per_sample.size() && i < b.per_sample.size(); ++i)
        c.near(averaged.per_sample[i].meteor, (a.per_sample[i].meteor + b.per_sample[i].meteor) / 2.0, 1e-12,
               "per-sample meteor mean");
}

// ----- 7 --------------------------------------------------------------------
JudgedFeature judged(FeatureCategory cat, const std::string& name, Direction d, bool valid = true,
                     const std::string& desc = "d") {
    JudgedFeature f;
    f.feature.dimension = {name, "def"};
    f.feature.description = desc;
    f.feature.direction = d;
    f.verdict = ValidityVerdict{true, true, true, cat, valid};
    return f;
}

bool same_features(const std::vector<JudgedFeature>& a, const std::vector<JudgedFeature>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i].feature == b[i].feature) || !(a[i].verdict == b[i].verdict)) return false;
    return true;
}

void uvq_suite(Checker& c) {
    const std::vector<JudgedFeature> four{
        judged(FeatureCategory::Writing, "verbosity", Direction::TargetHigher),
        judged(FeatureCategory::Writing, "verbosity", Direction::TargetHigher),
        judged(FeatureCategory::Emotion, "enthusiasm", Direction::TargetHigher),
        judged(FeatureCategory::Emotion, "enthusiasm", Direction::TargetLower),
    };
    c.check(dedup_and_resolve(four).size() == 1, "4-feature conflict fixture");

    std::mt19937_64 rng(23);
    const std::vector<std::string> names{"verbosity", "Verbosity", "tone", "detail level", "Level detail", "pace"};
    const Direction dirs[] = {Direction::TargetHigher, Direction::TargetLower, Direction::Qualitative};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<JudgedFeature> in;
        const std::size_t n = rng() % 10;
        for (std::size_t i = 0; i < n; ++i)
            in.push_back(judged(kAllCategories[rng() % 5], names[rng() % names.size()], dirs[rng() % 3],
                                rng() % 5 != 0, "d" + std::to_string(rng() % 3)));
        const auto once = dedup_and_resolve(in);
        c.check(same_features(dedup_and_resolve(once), once), "dedup not idempotent");

        // Swapping every higher/lower leaves the surviving count unchanged.
        auto mirrored = in;
        for (auto& f : mirrored) {
            if (f.feature.direction == Direction::TargetHigher) f.feature.direction = Direction::TargetLower;
            else if (f.feature.direction == Direction::TargetLower) f.feature.direction = Direction::TargetHigher;
        }
        c.check(dedup_and_resolve(mirrored).size() == once.size(), "conflict resolution not symmetric");
        auto shuffled = in;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        c.check(same_features(dedup_and_resolve(shuffled), once), "dedup depends on order");

        const auto report = compute_uvq({{"u", once}, {"v", dedup_and_resolve(mirrored)}});
        if (report.dataset_uvq > 0) {
            double total = 0.0;
            for (const auto& [_, p] : report.category_proportions) total += p;
            c.near(total, 1.0, 1e-9, "category proportions sum");
        }
    }
    const std::vector<double> xs{1, 2, 3, 4}, ys{2, 1, 4, 3};
    c.near(pearson(xs, ys), 0.6, 1e-12, "pearson r = 0.6 fixture");
}

// ----- 8 --------------------------------------------------------------------
void wire_protocol(Checker& c) {
    const auto golden = test::load_golden_request();
    c.check(chat_request_body(golden.request) == golden.body, "golden body not byte-identical");
    c.check(canonical_request_hash(golden.request) == golden.digest, "golden digest");
    const auto split = split_reasoning("<think>steps</think>Answer");
    c.check(split.content == "Answer", "think stripping content");
    c.check(split.reasoning_trace == std::optional<std::string>("steps"), "think stripping trace");
}

// ----- 9 --------------------------------------------------------------------
void mode_monotonicity(Checker& c) {
    auto cfg = load_cli_config(test::source_dir() / "fixtures/mock_run.json");
    apply_mock_override(cfg);
    cfg.cache_dir.reset();
    const auto corpus = load_corpus(cfg.corpus);
    const auto prompts = load_prompts(cfg);
    const auto embedder = make_embedder(cfg);

    struct Captured {
        std::map<std::string, std::string> prompt_by_digest;  // generator prompts
        RunBundle bundle;
    };
    std::map<GenerationMode, Captured> runs;
    for (const auto mode : {GenerationMode::NonP, GenerationMode::Rag, GenerationMode::Drp}) {
        cfg.run.mode = mode;
        auto gw = make_gateway(cfg);
        auto& cap = runs[mode];
        std::mutex mu;
        gw->set_observer([&](LlmRole role, const ChatRequest& req, const ChatResponse&) {
            if (role != LlmRole::Generator) return;
            std::lock_guard lock(mu);
            cap.prompt_by_digest[canonical_request_hash(req)] = req.messages.back().content;
        });
        cap.bundle = run_pipeline(corpus, PipelineContext{cfg.run, *gw, prompts, embedder.get()});
    }

    const auto prompt_of = [&](GenerationMode mode, std::size_t t, std::size_t i) -> std::string {
        const auto& cap = runs.at(mode);
        const auto& g = cap.bundle.outputs.at(t).generations.at(i);
        return cap.prompt_by_digest.at(g.prompt_digest);
    };

    std::size_t compared = 0;
    for (std::size_t t = 0; t < cfg.run.temperatures.size(); ++t) {
        const auto& gens = runs.at(GenerationMode::Drp).bundle.outputs.at(t).generations;
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const auto& g = gens[i];
            const auto item = std::find_if(corpus.test.begin(), corpus.test.end(), [&](const ReviewSample& s) {
                return s.user_id == g.target_user && s.item_id == g.item_id;
            });
            if (item == corpus.test.end()) {
                c.check(false, "generation without a test sample");
                continue;
            }
            const auto history = retrieve_key_history(user_history(corpus, g.target_user), item_query(*item),
                                                      cfg.run.retrieval_k, cfg.run.retrieval_mode, embedder.get());
            const auto item_block = render_item(*item);
            const auto history_block = render_history(history);
            const auto& summaries = runs.at(GenerationMode::Drp).bundle.outputs.at(t).summaries;
            const auto summary = std::find_if(summaries.begin(), summaries.end(), [&](const UserDifferenceSummary& s) {
                return s.target_user == g.target_user && s.item_id == g.item_id;
            });
            c.check(summary != summaries.end(), "missing summary");
            if (summary == summaries.end()) continue;

            const auto non_p = prompt_of(GenerationMode::NonP, t, i);
            const auto rag = prompt_of(GenerationMode::Rag, t, i);
            const auto drp = prompt_of(GenerationMode::Drp, t, i);
            const auto has = [](const std::string& p, const std::string& part) { return p.find(part) != std::string::npos; };
            const auto who = g.target_user + "/" + g.item_id;
            c.check(has(non_p, item_block) && has(rag, item_block) && has(drp, item_block), who + " item in every mode");
            c.check(!has(non_p, history_block), who + " non_p carries history");
            c.check(has(rag, history_block) && has(drp, history_block), who + " history missing from rag or drp");
            c.check(!has(non_p, summary->text) && !has(rag, summary->text), who + " summary leaked into a baseline");
            c.check(has(drp, summary->text), who + " summary missing from drp");
            ++compared;
        }
    }
    c.check(compared == 12, "expected 12 compared samples");
}

struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<void(Checker&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"1 metric oracle suite", 10.0, metric_oracles},
        {"2 METEOR formula suite", 5.0, meteor_suite},
        {"3 clustering suite", 30.0, clustering_suite},
        {"4 representative-selection suite", 10.0, representative_suite},
        {"5 end-to-end mock run", 60.0, end_to_end},
        {"6 temperature averaging", 0.0, temperature_averaging},
        {"7 UVQ suite", 0.0, uvq_suite},
        {"8 wire-protocol conformance", 0.0, wire_protocol},
        {"9 mode monotonicity", 0.0, mode_monotonicity},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Checker c;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cr.budget_s > 0.0 && secs > cr.budget_s) c.failures.push_back("runtime over budget");
        const bool ok = c.failures.empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << cr.name << "  (" << std::fixed;
        std::cout.precision(2);
        std::cout << secs << " s)\n";
        for (std::size_t i = 0; i < c.failures.size() && i < 10; ++i) std::cout << "      " << c.failures[i] << "\n";
        if (c.failures.size() > 10) std::cout << "      ... " << c.failures.size() - 10 << " more\n";
    }
    std::cout << (failed ? "FAILED: " + std::to_string(failed) + " criteria" : std::string("ALL PASS")) << "\n";
    return failed ? 1 : 0;
}
