#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drp/embed.hpp"
#include "support.hpp"

using namespace drp;
using Catch::Matchers::WithinAbs;

TEST_CASE("EmbeddingVector rejects non-finite values and zero normalization") {
    CHECK_THROWS_AS(EmbeddingVector({1.0, NAN}), Error);
    CHECK_THROWS_AS(EmbeddingVector({0.0, 0.0}).normalized(), Error);
    const auto v = EmbeddingVector({3.0, 4.0}).normalized();
    CHECK_THAT(v.norm(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(v[0], WithinAbs(0.6, 1e-12));
}

TEST_CASE("vector helpers") {
    const EmbeddingVector a({1.0, 0.0}), b({0.0, 2.0});
    CHECK(dot(a, b) == 0.0);
    CHECK_THAT(cosine(a, EmbeddingVector({2.0, 0.0})), WithinAbs(1.0, 1e-12));
    CHECK(squared_distance(a, b) == 5.0);
    CHECK_THROWS_AS(dot(a, EmbeddingVector({1.0})), Error);
}

TEST_CASE("hash embedder is deterministic, normalized and discriminative") {
    HashEmbeddingProvider p(8, 42);
    const auto a = embed_text("abc", p);
    const auto b = embed_text("abc", p);
    CHECK(a == b);
    CHECK(a.dim() == 8);
    CHECK_THAT(a.norm(), WithinAbs(1.0, 1e-9));
    CHECK_THROWS_AS(embed_text("", p), Error);

    HashEmbeddingProvider wide(256, 7);
    std::vector<std::string> texts;
    for (int i = 0; i < 100; ++i) texts.push_back("review number " + std::to_string(i) + " of the fixture set");
    const auto vecs = wide.embed(texts);
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (std::size_t j = i + 1; j < vecs.size(); ++j) CHECK_FALSE(vecs[i] == vecs[j]);
}

TEST_CASE("profile_embedding is the normalized mean") {
    const std::vector<double> e1{1.0, 0.0, 0.0}, e2{0.0, 2.0, 0.0}, e3{0.0, 0.0, 3.0};
    test::StubEmbeddingProvider stub({{"a", e1}, {"b", e2}, {"c", e3}, {"neg", {-1.0, 0.0, 0.0}}});

    UserHistory h{"u", {test::sample("u", "1", "a"), test::sample("u", "2", "b"), test::sample("u", "3", "c")}};
    const auto p = profile_embedding(h, stub);
    // mean = (1/3, 2/3, 1) -> norm sqrt(14)/3
    const double norm = std::sqrt(14.0) / 3.0;
    CHECK(p.user_id == "u");
    CHECK_THAT(p.vector[0], WithinAbs((1.0 / 3.0) / norm, 1e-12));
    CHECK_THAT(p.vector[1], WithinAbs((2.0 / 3.0) / norm, 1e-12));
    CHECK_THAT(p.vector[2], WithinAbs(1.0 / norm, 1e-12));

    UserHistory single{"u", {test::sample("u", "1", "b")}};
    CHECK(profile_embedding(single, stub).vector == EmbeddingVector({0.0, 1.0, 0.0}));

    UserHistory cancel{"u", {test::sample("u", "1", "a"), test::sample("u", "2", "neg")}};
    try {
        (void)profile_embedding(cancel, stub);
        FAIL("expected ZeroVector");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroVector);
    }
    CHECK_THROWS_AS(profile_embedding(UserHistory{"u", {}}, stub), Error);
}
