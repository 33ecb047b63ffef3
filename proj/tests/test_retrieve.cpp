#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drp/retrieve.hpp"
#include "support.hpp"

using namespace drp;
using Catch::Matchers::WithinAbs;

TEST_CASE("item_query joins title and description") {
    auto s = test::sample("u", "i", "r", 0, "The Title");
    CHECK(item_query(s) == "The Title");
    s.item_description = "About things.";
    CHECK(item_query(s) == "The Title About things.");
}

TEST_CASE("recency retrieval and clamping") {
    UserHistory h{"u", {test::sample("u", "a", "ra", 10), test::sample("u", "b", "rb", 20), test::sample("u", "c", "rc", 30)}};
    auto r = retrieve_key_history(h, "q", 2, RetrievalMode::Recency, nullptr);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].sample.timestamp == 30);
    CHECK(r.entries[1].sample.timestamp == 20);
    CHECK(r.k_requested == 2);

    UserHistory two{"u", {test::sample("u", "a", "ra", 1), test::sample("u", "b", "rb", 2)}};
    CHECK(retrieve_key_history(two, "q", 5, RetrievalMode::Recency, nullptr).entries.size() == 2);
    CHECK_THROWS_AS(retrieve_key_history(UserHistory{"u", {}}, "q", 2, RetrievalMode::Recency, nullptr), Error);
}

TEST_CASE("similarity retrieval ranks by cosine") {
    // unit query (1,0); cosines 0.9, 0.1, 0.5
    const auto unit = [](double c) { return std::vector<double>{c, std::sqrt(1.0 - c * c)}; };
    test::StubEmbeddingProvider stub({{"query", {1.0, 0.0}}, {"s1", unit(0.9)}, {"s2", unit(0.1)}, {"s3", unit(0.5)}});
    UserHistory h{"u", {test::sample("u", "1", "s1", 1), test::sample("u", "2", "s2", 2), test::sample("u", "3", "s3", 3)}};
    const auto r = retrieve_key_history(h, "query", 2, RetrievalMode::Similarity, &stub);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].sample.item_id == "1");
    CHECK(r.entries[1].sample.item_id == "3");
    CHECK_THAT(r.entries[0].score, WithinAbs(0.9, 1e-12));
    CHECK_THAT(r.entries[1].score, WithinAbs(0.5, 1e-12));
    CHECK_THROWS_AS(retrieve_key_history(h, "query", 2, RetrievalMode::Similarity, nullptr), Error);
}

TEST_CASE("score ties fall back to newer first, then item_id") {
    test::StubEmbeddingProvider stub({{"q", {1.0, 0.0}}, {"same", {1.0, 0.0}}});
    UserHistory h{"u", {test::sample("u", "b", "same", 5), test::sample("u", "a", "same", 5), test::sample("u", "c", "same", 9)}};
    const auto r = retrieve_key_history(h, "q", 3, RetrievalMode::Similarity, &stub);
    CHECK(r.entries[0].sample.item_id == "c");
    CHECK(r.entries[1].sample.item_id == "a");
    CHECK(r.entries[2].sample.item_id == "b");
}

TEST_CASE("retrieval mode names") {
    CHECK(retrieval_mode_from_string("similarity") == RetrievalMode::Similarity);
    CHECK(std::string(to_string(RetrievalMode::Recency)) == "recency");
    CHECK_THROWS_AS(retrieval_mode_from_string("bm25"), Error);
}
