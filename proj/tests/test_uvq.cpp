#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "drp/llm.hpp"
#include "drp/prompts.hpp"
#include "drp/run_bundle.hpp"
#include "drp/uvq.hpp"
#include "support.hpp"

using namespace drp;
using Catch::Matchers::WithinAbs;

namespace {

JudgedFeature jf(FeatureCategory c, const std::string& name, Direction d, bool valid = true,
                 const std::string& desc = "desc") {
    JudgedFeature out;
    out.feature.dimension = {name, "def"};
    out.feature.description = desc;
    out.feature.direction = d;
    out.verdict = ValidityVerdict{true, true, true, c, valid};
    return out;
}

bool same(const std::vector<JudgedFeature>& a, const std::vector<JudgedFeature>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i].feature == b[i].feature) || !(a[i].verdict == b[i].verdict)) return false;
    return true;
}

}  // namespace

TEST_CASE("judge grammar") {
    const auto v = parse_judge_output("COMPARATIVE: YES\nATOMIC: YES\nCLEAR: YES\nCATEGORY: Writing\nCONSISTENT: YES\n");
    CHECK(v.valid());
    CHECK(v.category == FeatureCategory::Writing);

    const auto none = parse_judge_output("COMPARATIVE: yes\nATOMIC: YES\nCLEAR: YES\nCATEGORY: NONE\nCONSISTENT: YES");
    CHECK_FALSE(none.categorized());
    CHECK_FALSE(none.valid());

    const auto expect_parse_error = [](const std::string& raw) {
        try {
            (void)parse_judge_output(raw);
            FAIL("expected JudgeParseError");
        } catch (const OutputParseError& e) {
            CHECK(e.kind() == ErrorKind::JudgeParse);
        }
    };
    expect_parse_error("COMPARATIVE: YES\nATOMIC: YES\nCLEAR: YES\nCATEGORY: Humor\nCONSISTENT: YES");
    expect_parse_error("COMPARATIVE: YES\nATOMIC: YES\nCLEAR: YES\nCATEGORY: Writing");
    expect_parse_error("COMPARATIVE: MAYBE\nATOMIC: YES\nCLEAR: YES\nCATEGORY: Writing\nCONSISTENT: YES");
    expect_parse_error("I think this feature is fine.");
}

TEST_CASE("judge_feature issues one call and shows siblings") {
    Gateway gw(1);
    std::vector<ChatRequest> seen;
    ProviderSpec spec;
    spec.model_id = "judge";
    gw.bind(LlmRole::Judge, spec, std::make_shared<CallbackProvider>([&](const ChatRequest& r) {
                seen.push_back(r);
                return RawCompletion{"COMPARATIVE: YES\nATOMIC: YES\nCLEAR: YES\nCATEGORY: Emotion\nCONSISTENT: NO",
                                     std::nullopt};
            }));
    const auto f = jf(FeatureCategory::Emotion, "Enthusiasm", Direction::TargetHigher).feature;
    const auto g = jf(FeatureCategory::Emotion, "enthusiasm", Direction::TargetLower, true, "SIBLING-TEXT").feature;
    const auto v = judge_feature(f, std::vector{g}, gw, PromptSet::defaults());
    CHECK_FALSE(v.valid());
    CHECK(v.category == FeatureCategory::Emotion);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].messages.back().content.find("SIBLING-TEXT") != std::string::npos);
}

TEST_CASE("canonical names and keys") {
    CHECK(canonical_dimension_name("Verbosity  Level") == "level verbosity");
    CHECK(canonical_dimension_name("level verbosity") == "level verbosity");
    CHECK(canonical_dimension_name("Emotional-Tone!") == "emotional-tone");
    const auto hi = jf(FeatureCategory::Writing, "Verbosity", Direction::TargetHigher);
    const auto lo = jf(FeatureCategory::Writing, "verbosity", Direction::TargetLower);
    CHECK_FALSE(canonical_feature_key(hi.feature, hi.verdict) == canonical_feature_key(lo.feature, lo.verdict));
    const auto bad = jf(FeatureCategory::Writing, "x", Direction::TargetHigher, false);
    CHECK_THROWS_AS(canonical_feature_key(bad.feature, bad.verdict), Error);
}

TEST_CASE("dedup and conflict removal examples") {
    const std::vector<JudgedFeature> four{
        jf(FeatureCategory::Writing, "verbosity", Direction::TargetHigher),
        jf(FeatureCategory::Writing, "verbosity", Direction::TargetHigher),
        jf(FeatureCategory::Emotion, "enthusiasm", Direction::TargetHigher),
        jf(FeatureCategory::Emotion, "enthusiasm", Direction::TargetLower),
    };
    const auto out = dedup_and_resolve(four);
    REQUIRE(out.size() == 1);
    CHECK(out[0].feature.dimension.name == "verbosity");

    std::vector<JudgedFeature> invalid{jf(FeatureCategory::Writing, "a", Direction::TargetHigher, false)};
    CHECK(dedup_and_resolve(invalid).empty());

    const std::vector<JudgedFeature> qual{jf(FeatureCategory::Writing, "tone", Direction::Qualitative),
                                          jf(FeatureCategory::Writing, "tone", Direction::TargetHigher)};
    CHECK(dedup_and_resolve(qual).size() == 2);

    // a conflict also removes the qualitative feature of the same (category, name)
    std::vector<JudgedFeature> three = qual;
    three.push_back(jf(FeatureCategory::Writing, "Tone", Direction::TargetLower));
    CHECK(dedup_and_resolve(three).empty());

    // same name in different categories stays distinct
    const std::vector<JudgedFeature> cats{jf(FeatureCategory::Writing, "tone", Direction::TargetHigher),
                                          jf(FeatureCategory::Emotion, "tone", Direction::TargetLower)};
    CHECK(dedup_and_resolve(cats).size() == 2);
}

TEST_CASE("dedup is idempotent and order independent") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> names{"verbosity", "Verbosity", "tone", "detail level", "Level detail"};
    const std::vector<Direction> dirs{Direction::TargetHigher, Direction::TargetLower, Direction::Qualitative};
    const std::vector<FeatureCategory> cats{FeatureCategory::Writing, FeatureCategory::Emotion};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<JudgedFeature> in;
        const std::size_t n = rng() % 9;
        for (std::size_t i = 0; i < n; ++i)
            in.push_back(jf(cats[rng() % cats.size()], names[rng() % names.size()], dirs[rng() % dirs.size()],
                            rng() % 5 != 0, "d" + std::to_string(rng() % 3)));
        const auto once = dedup_and_resolve(in);
        CHECK(once.size() <= in.size());
        for (const auto& f : once) CHECK(f.verdict.valid());
        CHECK(same(dedup_and_resolve(once), once));
        auto shuffled = in;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(same(dedup_and_resolve(shuffled), once));
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(same(dedup_and_resolve(shuffled), once));
    }
}

TEST_CASE("compute_uvq sums users and reports proportions") {
    std::map<std::string, std::vector<JudgedFeature>> sets;
    sets["a"] = {jf(FeatureCategory::Writing, "x", Direction::TargetHigher)};
    sets["b"] = {jf(FeatureCategory::Writing, "y", Direction::TargetHigher),
                 jf(FeatureCategory::Emotion, "z", Direction::TargetHigher),
                 jf(FeatureCategory::Structure, "w", Direction::TargetLower)};
    const auto r = compute_uvq(sets, 9);
    CHECK(r.per_user.at("a") == 1);
    CHECK(r.per_user.at("b") == 3);
    CHECK(r.dataset_uvq == 4);
    CHECK(r.judged_total == 9);
    CHECK_THAT(r.category_proportions.at(FeatureCategory::Writing), WithinAbs(0.5, 1e-12));
    CHECK_THAT(r.category_proportions.at(FeatureCategory::Emotion), WithinAbs(0.25, 1e-12));
    CHECK_THAT(r.category_proportions.at(FeatureCategory::Structure), WithinAbs(0.25, 1e-12));
    CHECK(r.category_proportions.at(FeatureCategory::Pragmatics) == 0.0);
    double total = 0.0;
    for (const auto& [_, p] : r.category_proportions) total += p;
    CHECK_THAT(total, WithinAbs(1.0, 1e-9));

    const auto empty = compute_uvq({});
    CHECK(empty.dataset_uvq == 0);
    CHECK(empty.category_proportions.empty());

    // additivity over disjoint user partitions
    std::map<std::string, std::vector<JudgedFeature>> only_a{{"a", sets["a"]}}, only_b{{"b", sets["b"]}};
    CHECK(compute_uvq(only_a).dataset_uvq + compute_uvq(only_b).dataset_uvq == r.dataset_uvq);

    // union counts a key shared by two users once
    sets["c"] = {jf(FeatureCategory::Writing, "x", Direction::TargetHigher)};
    CHECK(compute_uvq(sets, 0, UvqAggregation::Sum).dataset_uvq == 5);
    CHECK(compute_uvq(sets, 0, UvqAggregation::Union).dataset_uvq == 4);

    const auto back = uvq_report_from_json(to_json(r));
    CHECK(back.per_user == r.per_user);
    CHECK(back.category_proportions == r.category_proportions);
}

TEST_CASE("pearson") {
    const std::vector<double> xs{1, 2, 3}, lin{3, 5, 7}, neg{-1, -2, -3};
    CHECK_THAT(pearson(xs, lin), WithinAbs(1.0, 1e-12));
    CHECK_THAT(pearson(xs, neg), WithinAbs(-1.0, 1e-12));
    const std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3};
    CHECK_THAT(pearson(a, b), WithinAbs(0.6, 1e-12));
    std::vector<double> a2, b2;
    for (double x : a) a2.push_back(3.0 * x - 7.0);
    for (double y : b) b2.push_back(0.5 * y + 100.0);
    CHECK_THAT(pearson(a2, b2), WithinAbs(0.6, 1e-12));

    const auto degenerate = [](std::vector<double> x, std::vector<double> y) {
        try {
            (void)pearson(x, y);
            FAIL("expected DegenerateInput");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateInput);
        }
    };
    degenerate({1}, {1});
    degenerate({1, 1}, {1, 2});
    degenerate({1, 2}, {1, 2, 3});
}

TEST_CASE("analyze_uvq on the scripted run fixture") {
    // Hand-derived: user a has verbosity higher twice (1 unique) and an
    // enthusiasm higher/lower conflict (removed) -> 1. User b has one feature
    // judged invalid and two valid distinct features -> 2. UVQ = 3.
    const auto dir = test::source_dir() / "tests/fixtures/uvq_run";
    const auto reports = read_reports(dir, 0.0);
    Gateway gw(1);
    ProviderSpec spec;
    spec.model_id = "judge";
    gw.bind(LlmRole::Judge, spec, std::make_shared<FixtureMockProvider>(dir / "judge"));
    const auto r = analyze_uvq(reports, gw, PromptSet::defaults(), UvqAggregation::Sum, 1);
    CHECK(r.per_user.at("a") == 1);
    CHECK(r.per_user.at("b") == 2);
    CHECK(r.dataset_uvq == 3);
    CHECK(r.judged_total == 7);
}
