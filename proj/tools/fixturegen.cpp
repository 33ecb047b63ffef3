// Regenerates fixtures/mock/ from a rule-based responder. Run it after any
// prompt change:  drp_fixturegen fixtures/mock_run.json
//
// Every request issued by the three generation modes and by UVQ judging of
// the drp run is answered synthetically and written as <digest>.json, so the
// committed fixture set covers a full offline run.
#include <fstream>
#include <iostream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

#include "drp/config.hpp"
#include "drp/corpus.hpp"
#include "drp/error.hpp"
#include "drp/run_bundle.hpp"
#include "drp/tokenize.hpp"
#include "drp/uvq.hpp"

namespace fs = std::filesystem;
using namespace drp;

namespace {

std::string between(const std::string& s, const std::string& open, const std::string& close) {
    const auto a = s.find(open);
    if (a == std::string::npos) return {};
    const auto start = a + open.size();
    const auto b = close.empty() ? std::string::npos : s.find(close, start);
    return s.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

std::vector<std::string> reviews_in(const std::string& history) {
    std::vector<std::string> out;
    std::istringstream in(history);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("Review: ", 0) == 0) out.push_back(line.substr(8));
    return out;
}

struct Style {
    double tokens = 0.0;
    double exclaims = 0.0;
};

Style style_of(const std::vector<std::string>& reviews) {
    Style s;
    for (const auto& r : reviews) {
        s.tokens += static_cast<double>(tokenize(r).size());
        s.exclaims += static_cast<double>(std::count(r.begin(), r.end(), '!'));
    }
    if (!reviews.empty()) {
        s.tokens /= static_cast<double>(reviews.size());
        s.exclaims /= static_cast<double>(reviews.size());
    }
    return s;
}

std::string feature_block(const std::string& dim, const std::string& def, const std::string& desc,
                          const std::string& dir) {
    return "[FEATURE]\nDIMENSION: " + dim + "\nDEFINITION: " + def + "\nDESCRIPTION: " + desc + "\nDIRECTION: " + dir +
           "\n[/FEATURE]\n";
}

std::string respond_extract(const ChatRequest& req) {
    const auto& user = req.messages.back().content;
    const auto target = style_of(reviews_in(between(user, "TARGET reviewer's reviews:\n", "OTHER reviewer's reviews:")));
    const auto other = style_of(reviews_in(between(user, "OTHER reviewer's reviews:\n", "\n\nIdentify")));

    std::ostringstream think;
    think << "<think>Target averages " << target.tokens << " tokens and " << target.exclaims
          << " exclamation marks per review; the other reviewer averages " << other.tokens << " and "
          << other.exclaims << ".</think>\n";

    const bool warm = req.temperature > 0.0;
    std::string out = think.str();
    const bool longer = target.tokens > other.tokens;
    out += feature_block(warm ? "level verbosity" : "Verbosity Level",
                         "How many words the reviewer spends on a single review.",
                         longer ? "The target writes noticeably longer reviews than the other reviewer, because they "
                                  "explain their reactions in detail."
                                : "The target writes much shorter reviews than the other reviewer, because they only "
                                  "record a verdict.",
                         longer ? "target_higher" : "target_lower");
    if (target.exclaims != other.exclaims) {
        const bool more = target.exclaims > other.exclaims;
        out += feature_block("Enthusiasm", "How openly excited the reviewer sounds.",
                             more ? "The target is far more openly excited than the other reviewer and uses "
                                    "exclamation marks freely."
                                  : "The target is more restrained than the other reviewer and avoids exclamations.",
                             more ? "target_higher" : "target_lower");
    }
    out += feature_block("Focus", "What aspect of a book the reviewer comments on first.",
                         longer ? "The target discusses structure and craft where the other reviewer reacts to the "
                                  "experience."
                                : "The target judges the overall outcome where the other reviewer discusses details.",
                         "qualitative");
    return out;
}

std::string respond_validate(const ChatRequest& req) {
    static const std::regex kClaim(R"(^\[(\d+)\] .*\((target_higher|target_lower|qualitative)\):)");
    const auto claims = between(req.messages.back().content, "Claimed differences of the TARGET relative to the OTHER:\n",
                                "\n\nGive one VERDICT");
    std::string out;
    std::istringstream in(claims);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_search(line, m, kClaim)) continue;
        if (m[2].str() == "qualitative") {
            out += "VERDICT " + m[1].str() + ": DROP \xE2\x80\x94 too vague to check against the reviews\n";
        } else {
            out += "VERDICT " + m[1].str() + ": KEEP \xE2\x80\x94 supported by the review texts\n";
        }
    }
    return out;
}

std::string respond_summarize(const ChatRequest& req) {
    const auto diffs = between(req.messages.back().content, "Verified differences from other reviewers:\n",
                               "\n\nWrite the profile");
    std::set<std::string> points;
    std::istringstream in(diffs);
    std::string line;
    static const std::regex kPoint(R"(^- \[[^\]]*\] The target (.*?) \((target_higher|target_lower|qualitative)\)$)");
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_match(line, m, kPoint)) points.insert(m[1].str());
    }
    std::string out;
    for (auto p : points) {
        if (!p.empty() && p.back() == '.') p.pop_back();
        out += (out.empty() ? "This reviewer " : " Also, this reviewer ") + p + ".";
    }
    return out;
}

std::string respond_generate(const ChatRequest& req) {
    const auto& user = req.messages.back().content;
    const auto title = between(user, "Title: ", "\n");
    const auto history = reviews_in(between(user, "past reviews:\n", "\n\nWhat sets"));
    if (history.empty()) return "A readable book. Some chapters are stronger than others, and the ending is fine.";
    std::string text = history.front();
    const auto summary = between(user, "What sets this reviewer apart from other reviewers:\n", "");
    if (summary.find("openly excited") != std::string::npos) text += " Highly recommended!";
    if (summary.find("much shorter") != std::string::npos) text = text.substr(0, text.find('.') + 1);
    if (summary.find("structure and craft") != std::string::npos) text += " The structure holds up well.";
    (void)title;
    return text;
}

std::string respond_judge(const ChatRequest& req) {
    const auto& user = req.messages.back().content;
    const auto feature = between(user, "Feature: ", "\n");
    const auto related = between(user, "Related features:\n", "");
    auto direction_of = [](const std::string& s) {
        if (s.find("(direction: target_higher)") != std::string::npos) return std::string("target_higher");
        if (s.find("(direction: target_lower)") != std::string::npos) return std::string("target_lower");
        return std::string("qualitative");
    };
    const auto dir = direction_of(feature);
    bool consistent = true;
    std::istringstream in(related);
    std::string line;
    while (std::getline(in, line)) {
        const auto other = direction_of(line);
        if (line.rfind("- ", 0) == 0 && other != dir && other != "qualitative" && dir != "qualitative")
            consistent = false;
    }
    std::string lowered = feature;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string category = "Semantics";
    if (lowered.find("verbosity") != std::string::npos) category = "Writing";
    if (lowered.find("enthusiasm") != std::string::npos) category = "Emotion";
    return std::string("COMPARATIVE: YES\nATOMIC: YES\nCLEAR: YES\nCATEGORY: ") + category +
           "\nCONSISTENT: " + (consistent ? "YES" : "NO") + "\n";
}

class RecordingResponder final : public ChatProvider {
public:
    RecordingResponder(fs::path dir, const PromptSet& prompts) : dir_(std::move(dir)), prompts_(prompts) {}

    RawCompletion send(const ChatRequest& req) override {
        const auto& system = req.messages.front().content;
        std::string content;
        if (system == prompts_.get(prompt::kExtractSystem)) {
            content = respond_extract(req);
        } else if (system == prompts_.get(prompt::kValidateSystem)) {
            content = respond_validate(req);
        } else if (system == prompts_.get(prompt::kSummarizeSystem)) {
            content = respond_summarize(req);
        } else if (system == prompts_.get(prompt::kGenerateSystem)) {
            content = respond_generate(req);
        } else {
            content = respond_judge(req);
        }
        const auto digest = canonical_request_hash(req);
        std::lock_guard lock(mu_);
        write_text_file(dir_ / (digest + ".json"), nlohmann::json({{"content", content}}).dump(2) + "\n");
        written_.insert(digest);
        return {content, std::nullopt};
    }

    [[nodiscard]] std::size_t written() const { return written_.size(); }

private:
    fs::path dir_;
    const PromptSet& prompts_;
    std::mutex mu_;
    std::set<std::string> written_;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: drp_fixturegen <config.json>\n";
        return 2;
    }
    try {
        auto cfg = load_cli_config(argv[1]);
        apply_mock_override(cfg);
        cfg.cache_dir.reset();
        const auto corpus = load_corpus(cfg.corpus);
        const auto prompts = load_prompts(cfg);
        const auto embedder = make_embedder(cfg);

        for (const auto& entry : fs::directory_iterator(cfg.fixture_dir))
            if (entry.path().extension() == ".json" && entry.path().filename() != "script.json")
                fs::remove(entry.path());
        auto responder = std::make_shared<RecordingResponder>(cfg.fixture_dir, prompts);

        Gateway gateway(cfg.run.max_concurrency);
        for (const auto& [role, spec] : cfg.roles) gateway.bind(role, spec, responder);

        for (auto mode : {GenerationMode::NonP, GenerationMode::Rag, GenerationMode::Drp}) {
            RunConfig run = cfg.run;
            run.mode = mode;
            const PipelineContext ctx{run, gateway, prompts, embedder.get()};
            const auto bundle = run_pipeline(corpus, ctx);
            for (const auto& out : bundle.outputs) {
                if (!out.failures.empty()) throw Error(ErrorKind::Protocol, "fixture run produced failures");
                if (mode == GenerationMode::Drp)
                    (void)analyze_uvq(out.reports, gateway, prompts, cfg.uvq_aggregation, run.max_concurrency);
            }
        }
        std::cout << "wrote " << responder->written() << " fixtures to " << cfg.fixture_dir.string() << "\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    }
    return 0;
}
