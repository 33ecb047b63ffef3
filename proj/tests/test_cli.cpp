#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "drp/cli.hpp"
#include "drp/config.hpp"
#include "drp/run_bundle.hpp"
#include "support.hpp"

using namespace drp;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_doc() {
    return nlohmann::json::parse(read_text_file(test::source_dir() / "fixtures/mock_run.json"));
}

// Config in `dir` that reads the repo fixtures and writes runs and cache under `dir`.
fs::path write_config(const fs::path& dir, const fs::path& fixture_dir) {
    auto doc = base_doc();
    doc["corpus"] = (test::source_dir() / "fixtures/corpus.jsonl").string();
    doc["fixture_dir"] = fixture_dir.string();
    doc["cache_dir"] = "cache";
    doc["output_dir"] = "runs";
    const auto path = dir / "config.json";
    write_text_file(path, doc.dump(2));
    return path;
}

int run_args(std::vector<std::string> args, std::string* out_text = nullptr) {
    args.insert(args.begin(), "drp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = drp::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

fs::path mock_fixtures() { return test::source_dir() / "fixtures/mock"; }

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_cli_config(base_doc(), "/base");
    CHECK(cfg.corpus == fs::path("/base/corpus.jsonl"));
    CHECK(cfg.run.seed == 7);
    CHECK(cfg.run.temperatures == std::vector<double>{0.0, 0.8});
    CHECK(cfg.roles.at(LlmRole::Validator) == cfg.roles.at(LlmRole::Extractor));
    CHECK(cfg.roles.size() == 5);

    const auto rejects = [](nlohmann::json doc) {
        try {
            (void)parse_cli_config(doc, ".");
            FAIL("expected Config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
        }
    };
    auto doc = base_doc();
    doc["colour"] = "blue";
    rejects(doc);
    doc = base_doc();
    doc["roles"]["critic"] = {{"kind", "mock"}, {"model_id", "x"}};
    rejects(doc);
    doc = base_doc();
    doc["kmeans"]["iters"] = 3;
    rejects(doc);

    try {
        (void)load_cli_config("/nonexistent/drp.json");
        FAIL("expected Io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("ingest command") {
    const auto s = cli::cmd_ingest(test::source_dir() / "fixtures/corpus.jsonl");
    CHECK(s.users == 6);
    CHECK(s.train == 24);
    CHECK(s.test == 6);
    std::string out;
    CHECK(run_args({"ingest", (test::source_dir() / "fixtures/corpus.jsonl").string()}, &out) == 0);
    CHECK(out.find("users: 6, train: 24, test: 6") != std::string::npos);
    CHECK(run_args({"ingest", (test::source_dir() / "fixtures/corpus_overlap.jsonl").string()}) == 2);
    CHECK(run_args({"ingest", "/nonexistent.jsonl"}) == 2);
    CHECK(run_args({"frobnicate"}) == 2);
}

TEST_CASE("run, rerun, eval and uvq end to end") {
    test::TempDir tmp;
    const auto config = write_config(tmp.path(), mock_fixtures());

    const auto first = cli::cmd_run(config, "drp", true);
    CHECK(first.run_dir == tmp.path() / "runs" / "drp");
    CHECK(first.manifest["failures"].empty());
    CHECK(first.manifest["runtime"]["remote_calls"].get<int>() > 0);
    const auto gen = read_text_file(first.run_dir / "generations.0.0.jsonl");

    const auto second = cli::cmd_run(config, "drp", true);
    CHECK(second.manifest["runtime"]["remote_calls"] == 0);
    CHECK(second.manifest["digest"] == first.manifest["digest"]);
    CHECK(read_text_file(second.run_dir / "generations.0.0.jsonl") == gen);
    auto a = first.manifest, b = second.manifest;
    a.erase("runtime");
    b.erase("runtime");
    CHECK(a == b);
    CHECK(second.manifest["digest"] == manifest_digest(second.manifest));

    const auto metrics = cli::cmd_eval(first.run_dir, test::source_dir() / "fixtures/corpus.jsonl");
    CHECK(metrics.corpus.bleu >= 0.0);
    CHECK(metrics.corpus.bleu <= 1.0);
    CHECK(fs::exists(first.run_dir / "metrics.avg.json"));
    CHECK(fs::exists(first.run_dir / "metrics.0.8.json"));

    const auto uvq = cli::cmd_uvq(first.run_dir, true);
    REQUIRE(uvq.size() == 2);
    CHECK(uvq[0].dataset_uvq > 0);
    CHECK(uvq[0].judged_total >= uvq[0].dataset_uvq);
    CHECK(fs::exists(first.run_dir / "uvq.0.0.json"));

    const auto nonp = cli::cmd_run(config, "non_p", true);
    CHECK(nonp.manifest["calls"].value("extractor", 0) == 0);
    CHECK(nonp.manifest["calls"].value("generator", 0) == 12);
    CHECK(nonp.manifest["representatives"].empty());

    std::string out;
    CHECK(run_args({"run", "-c", config.string(), "--mode", "drp", "--mock"}, &out) == 0);
    CHECK(out.find("remote calls: 0") != std::string::npos);

    fs::remove(first.run_dir / "generations.0.8.jsonl");
    CHECK(run_args({"eval", first.run_dir.string(), (test::source_dir() / "fixtures/corpus.jsonl").string()}) == 2);
    CHECK(run_args({"run", "-c", config.string(), "--mode", "sideways", "--mock"}) == 2);
}

TEST_CASE("missing judge fixture exits with a provider error") {
    test::TempDir tmp;
    const auto config = write_config(tmp.path(), mock_fixtures());
    const auto run = cli::cmd_run(config, "drp", true);

    // Same run, but the recorded config now points at an empty fixture dir.
    auto manifest = read_manifest(run.run_dir);
    fs::create_directories(tmp.path() / "empty");
    manifest["config"]["fixture_dir"] = (tmp.path() / "empty").string();
    write_text_file(run.run_dir / "manifest.json", manifest.dump(2));
    CHECK(run_args({"uvq", run.run_dir.string(), "--mock-judge"}) == 3);
}
