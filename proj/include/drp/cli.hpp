#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/metrics.hpp"
#include "drp/uvq.hpp"

namespace drp::cli {

// Each command throws drp::Error; run_cli maps errors to exit codes.

struct IngestSummary {
    std::size_t users = 0;
    std::size_t train = 0;
    std::size_t test = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_user;  // (train, test)
};
[[nodiscard]] IngestSummary cmd_ingest(const std::filesystem::path& corpus_path);

// Writes the fitted model to `out` (default <output_dir>/cluster.json).
std::filesystem::path cmd_cluster(const std::filesystem::path& config_path, bool mock,
                                  const std::filesystem::path& out = {});

struct RunResult {
    std::filesystem::path run_dir;
    nlohmann::json manifest;
};
// mode empty: take it from the config.
[[nodiscard]] RunResult cmd_run(const std::filesystem::path& config_path, const std::string& mode, bool mock);

// Writes metrics.<tag>.json per temperature and metrics.avg.json.
[[nodiscard]] MetricReport cmd_eval(const std::filesystem::path& run_dir, const std::filesystem::path& corpus_path);

// Writes uvq.<tag>.json per temperature; returns them in temperature order.
[[nodiscard]] std::vector<UvqReport> cmd_uvq(const std::filesystem::path& run_dir, bool mock_judge);

struct CorrelationRow {
    std::filesystem::path run_dir;
    double bleu = 0.0;  // averaged corpus BLEU
    double uvq = 0.0;   // mean dataset_uvq over temperatures
};
struct CorrelationReport {
    std::vector<CorrelationRow> rows;
    double pearson_r = 0.0;
};
[[nodiscard]] CorrelationReport cmd_report(const std::vector<std::filesystem::path>& run_dirs);

// Full argv entry point. Returns 0, 2 (input/validation) or 3 (provider/runtime).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace drp::cli
