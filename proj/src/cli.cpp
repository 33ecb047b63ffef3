#include "drp/cli.hpp"

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "drp/cluster.hpp"
#include "drp/config.hpp"
#include "drp/corpus.hpp"
#include "drp/error.hpp"
#include "drp/hashing.hpp"
#include "drp/parallel.hpp"
#include "drp/pipeline.hpp"
#include "drp/run_bundle.hpp"

namespace drp::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

IngestSummary cmd_ingest(const fs::path& corpus_path) {
    const auto corpus = load_corpus(corpus_path);
    IngestSummary s;
    s.train = corpus.train.size();
    s.test = corpus.test.size();
    for (const auto& r : corpus.train) ++s.per_user[r.user_id].first;
    for (const auto& r : corpus.test) ++s.per_user[r.user_id].second;
    s.users = s.per_user.size();
    return s;
}

fs::path cmd_cluster(const fs::path& config_path, bool mock, const fs::path& out) {
    auto cfg = load_cli_config(config_path);
    if (mock) apply_mock_override(cfg);
    const auto corpus = load_corpus(cfg.corpus);
    const auto embedder = make_embedder(cfg);

    const auto users = all_users(corpus);
    std::vector<UserProfileEmbedding> profiles(users.size());
    parallel_for(users.size(), cfg.run.max_concurrency,
                 [&](std::size_t i) { profiles[i] = profile_embedding(user_history(corpus, users[i]), *embedder); });

    KMeansOptions opts;
    opts.k = cfg.run.cluster_k;
    opts.seed = cfg.run.seed;
    opts.max_iters = cfg.run.kmeans_max_iters;
    opts.tol = cfg.run.kmeans_tol;
    opts.restarts = cfg.run.kmeans_restarts;
    const auto model = kmeans_fit(profiles, opts);

    const fs::path path = out.empty() ? cfg.output_dir / "cluster.json" : out;
    write_text_file(path, to_json(model).dump(2) + "\n");
    return path;
}

RunResult cmd_run(const fs::path& config_path, const std::string& mode, bool mock) {
    auto cfg = load_cli_config(config_path);
    if (!mode.empty()) cfg.run.mode = generation_mode_from_string(mode);
    if (mock) apply_mock_override(cfg);

    const auto corpus_text = read_text_file(cfg.corpus);
    const auto corpus = load_corpus(cfg.corpus);
    const auto prompts = load_prompts(cfg);
    auto gateway = make_gateway(cfg);
    std::unique_ptr<EmbeddingProvider> embedder;
    if (cfg.run.mode == GenerationMode::Drp || cfg.run.retrieval_mode == RetrievalMode::Similarity)
        embedder = make_embedder(cfg);

    const PipelineContext ctx{cfg.run, *gateway, prompts, embedder.get()};
    const auto bundle = run_pipeline(corpus, ctx);

    ManifestInputs inputs;
    inputs.resolved_config = resolved_config_json(cfg);
    inputs.prompt_version = prompts.version();
    inputs.corpus_sha256 = sha256_hex(corpus_text);
    inputs.gateway_stats = gateway->stats();
    inputs.config_dir = cfg.base_dir.string();

    RunResult result;
    result.run_dir = cfg.output_dir / to_string(cfg.run.mode);
    result.manifest = write_run_bundle(bundle, result.run_dir, inputs);
    return result;
}

MetricReport cmd_eval(const fs::path& run_dir, const fs::path& corpus_path) {
    const auto manifest = read_manifest(run_dir);
    const auto corpus = load_corpus(corpus_path);
    std::vector<MetricReport> reports;
    for (double t : manifest_temperatures(manifest)) {
        const auto generations = read_generations(run_dir, t);
        reports.push_back(evaluate_run(generations, corpus));
        write_text_file(run_dir / ("metrics." + temperature_tag(t) + ".json"), to_json(reports.back()).dump(2) + "\n");
    }
    auto avg = average_reports(reports);
    write_text_file(run_dir / "metrics.avg.json", to_json(avg).dump(2) + "\n");
    return avg;
}

std::vector<UvqReport> cmd_uvq(const fs::path& run_dir, bool mock_judge) {
    const auto manifest = read_manifest(run_dir);
    const fs::path base = manifest.at("runtime").value("config_dir", run_dir.string());
    json doc = manifest.at("config");
    auto cfg = parse_cli_config(doc, base);
    if (mock_judge) cfg.roles[LlmRole::Judge].kind = ProviderKind::Mock;

    const auto prompts = load_prompts(cfg);
    auto gateway = make_gateway(cfg);
    std::vector<UvqReport> out;
    for (double t : manifest_temperatures(manifest)) {
        const auto reports = read_reports(run_dir, t);
        out.push_back(analyze_uvq(reports, *gateway, prompts, cfg.uvq_aggregation, cfg.run.max_concurrency));
        write_text_file(run_dir / ("uvq." + temperature_tag(t) + ".json"), to_json(out.back()).dump(2) + "\n");
    }
    return out;
}

CorrelationReport cmd_report(const std::vector<fs::path>& run_dirs) {
    CorrelationReport rep;
    std::vector<double> xs, ys;
    for (const auto& dir : run_dirs) {
        const auto manifest = read_manifest(dir);
        const auto avg = metric_report_from_json(json::parse(read_text_file(dir / "metrics.avg.json")));
        double uvq = 0.0;
        const auto temps = manifest_temperatures(manifest);
        for (double t : temps)
            uvq += static_cast<double>(
                uvq_report_from_json(json::parse(read_text_file(dir / ("uvq." + temperature_tag(t) + ".json"))))
                    .dataset_uvq);
        uvq /= static_cast<double>(temps.size());
        rep.rows.push_back({dir, avg.corpus.bleu, uvq});
        xs.push_back(avg.corpus.bleu);
        ys.push_back(uvq);
    }
    rep.pearson_r = pearson(xs, ys);
    return rep;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"drp: difference-aware personalized review generation"};
    app.require_subcommand(1);

    std::string corpus_path, config_path, mode, output, run_dir;
    std::vector<std::string> run_dirs;
    bool mock = false, mock_judge = false;

    auto* ingest = app.add_subcommand("ingest", "validate a corpus and print counts");
    ingest->add_option("corpus", corpus_path, "corpus JSONL")->required();

    auto* cluster = app.add_subcommand("cluster", "fit K-means over user profiles");
    cluster->add_option("-c,--config", config_path, "config JSON")->required();
    cluster->add_option("-o,--out", output, "output path");
    cluster->add_flag("--mock", mock, "use the hash embedder");

    auto* run = app.add_subcommand("run", "run the pipeline");
    run->add_option("-c,--config", config_path, "config JSON")->required();
    run->add_option("--mode", mode, "drp | rag | non_p")->check(CLI::IsMember({"drp", "rag", "non_p"}));
    run->add_flag("--mock", mock, "force mock providers and the hash embedder");

    auto* eval = app.add_subcommand("eval", "score a run against the test split");
    eval->add_option("run_dir", run_dir)->required();
    eval->add_option("corpus", corpus_path)->required();

    auto* uvq = app.add_subcommand("uvq", "judge kept features and count unique valid ones");
    uvq->add_option("run_dir", run_dir)->required();
    uvq->add_flag("--mock-judge", mock_judge, "answer judge calls from fixtures");

    auto* report = app.add_subcommand("report", "correlate BLEU and UVQ across runs");
    report->add_option("run_dirs", run_dirs)->required()->expected(2, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ingest->parsed()) {
            const auto s = cmd_ingest(corpus_path);
            out << "users: " << s.users << ", train: " << s.train << ", test: " << s.test << "\n";
            for (const auto& [user, counts] : s.per_user)
                out << "  " << user << ": train " << counts.first << ", test " << counts.second << "\n";
        } else if (cluster->parsed()) {
            out << "wrote " << cmd_cluster(config_path, mock, output).string() << "\n";
        } else if (run->parsed()) {
            const auto r = cmd_run(config_path, mode, mock);
            const auto& rt = r.manifest.at("runtime");
            out << "run: " << r.run_dir.string() << "\n"
                << "digest: " << r.manifest.at("digest").get<std::string>() << "\n"
                << "remote calls: " << rt.at("remote_calls").get<std::size_t>()
                << ", cache hits: " << rt.at("cache_hits").get<std::size_t>() << "\n"
                << "failures: " << r.manifest.at("failures").size() << "\n";
        } else if (eval->parsed()) {
            const auto avg = cmd_eval(run_dir, corpus_path);
            out << "samples: " << avg.n_samples << "\n"
                << "BLEU: " << avg.corpus.bleu << ", METEOR: " << avg.corpus.meteor
                << ", ROUGE-1: " << avg.corpus.rouge1_f << ", ROUGE-L: " << avg.corpus.rougeL_f << "\n";
        } else if (uvq->parsed()) {
            const auto reports = cmd_uvq(run_dir, mock_judge);
            for (const auto& r : reports)
                out << "uvq: " << r.dataset_uvq << " (judged " << r.judged_total << ")\n";
        } else if (report->parsed()) {
            std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
            const auto rep = cmd_report(dirs);
            for (const auto& row : rep.rows)
                out << row.run_dir.string() << "\tBLEU " << row.bleu << "\tUVQ " << row.uvq << "\n";
            out << "pearson r: " << rep.pearson_r << "\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace drp::cli
