#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>
#include <vector>

#include "glitchhunter/baselines.hpp"
#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"
#include "helpers.hpp"

using namespace glitchhunter;
using testutil::thrown_errc;

namespace {

// Two axis-separated gaussian blobs; ids [0, first) then [first, n).
EmbeddingMatrix two_blobs(std::size_t first, std::size_t n, std::size_t m, std::uint64_t seed) {
    EmbeddingMatrix mat;
    mat.rows = n;
    mat.cols = m;
    mat.data.resize(n * m);
    util::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double base = i < first ? 0.0 : 10.0;
        for (std::size_t d = 0; d < m; ++d)
            mat.row_mut(i)[d] = float(base + 0.3 * rng.gaussian());
    }
    return mat;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("random sampling draws a sorted distinct floor-sized subset") {
    for (auto [n, fraction] : {std::pair<std::size_t, double>{100, 0.1},
                               {100, 0.05},
                               {37, 0.5},
                               {1000, 0.333},
                               {5, 0.9}}) {
        auto ids = baselines::random_sampling(n, fraction, 7);
        CHECK(ids.size() == std::size_t(fraction * double(n)));
        CHECK(std::is_sorted(ids.begin(), ids.end()));
        CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
        for (TokenId id : ids) CHECK(id < n);
    }
}

TEST_CASE("fraction one selects the whole vocabulary") {
    auto ids = baselines::random_sampling(12, 1.0, 3);
    REQUIRE(ids.size() == 12);
    for (TokenId i = 0; i < 12; ++i) CHECK(ids[i] == i);
}

TEST_CASE("sampling fraction is validated") {
    CHECK(thrown_errc([] { baselines::random_sampling(10, 0.0, 1); }) == Errc::SpecInvalid);
    CHECK(thrown_errc([] { baselines::random_sampling(10, -0.5, 1); }) == Errc::SpecInvalid);
    CHECK(thrown_errc([] { baselines::random_sampling(10, 1.5, 1); }) == Errc::SpecInvalid);
    double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(thrown_errc([&] { baselines::random_sampling(10, nan, 1); }) == Errc::SpecInvalid);
}

TEST_CASE("sampling is a pure function of the seed") {
    auto a = baselines::random_sampling(500, 0.2, 42);
    auto b = baselines::random_sampling(500, 0.2, 42);
    auto c = baselines::random_sampling(500, 0.2, 43);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("rule-based sampling drops dictionary words") {
    Vocabulary vocab;
    vocab.strings = {" the", "davidjl", "The", "}}^", "KEY", "zzqqx"};
    auto words = taxonomy::WordList::from_words({"the", "key", "by"});

    auto kept = baselines::rule_based_sampling(vocab, 1.0, 9, words);
    std::set<TokenId> kept_set(kept.begin(), kept.end());
    // " the", "The", "KEY" normalize to dictionary words and disappear
    CHECK(kept_set == std::set<TokenId>{1, 3, 5});
}

TEST_CASE("an empty word list makes the rule-based draw identical to random") {
    Vocabulary vocab;
    for (int i = 0; i < 200; ++i) vocab.strings.push_back("tok" + std::to_string(i));
    taxonomy::WordList empty;
    auto plain = baselines::random_sampling(vocab.size(), 0.25, 11);
    auto ruled = baselines::rule_based_sampling(vocab, 0.25, 11, empty);
    CHECK(plain == ruled);
}

TEST_CASE("rule-based results are a subset of the same-seed random draw") {
    Vocabulary vocab;
    const char* cycle[] = {"the", "about", "xkcd9", "}}", "water"};
    for (int i = 0; i < 100; ++i) vocab.strings.push_back(cycle[i % 5]);
    auto words = taxonomy::WordList::from_words({"the", "about", "water"});

    auto drawn = baselines::random_sampling(vocab.size(), 0.4, 5);
    auto kept = baselines::rule_based_sampling(vocab, 0.4, 5, words);
    CHECK(kept.size() < drawn.size());
    CHECK(std::includes(drawn.begin(), drawn.end(), kept.begin(), kept.end()));
    for (TokenId id : kept) CHECK((vocab.at(id) == "xkcd9" || vocab.at(id) == "}}"));
}

TEST_CASE("k-means with one cluster keeps everything") {
    auto mat = two_blobs(10, 20, 3, 1);
    baselines::KMeansOptions opt;
    opt.k = 1;
    auto res = baselines::kmeans_centroid_cluster(mat, opt);
    CHECK(res.chosen_cluster == 0);
    REQUIRE(res.members.size() == 20);
    for (TokenId i = 0; i < 20; ++i) {
        CHECK(res.members[i] == i);
        CHECK(res.assignment[i] == 0);
    }
}

TEST_CASE("k-means separates two blobs and keeps the one nearest the mean") {
    // 40/20 split puts the global mean twice as close to the big blob's center
    auto mat = two_blobs(40, 60, 4, 2);
    baselines::KMeansOptions opt;
    opt.k = 2;
    opt.seed = 3;
    auto res = baselines::kmeans_centroid_cluster(mat, opt);

    std::vector<TokenId> expected;
    for (TokenId i = 0; i < 40; ++i) expected.push_back(i);
    CHECK(res.members == expected);

    // assignment splits exactly at the blob boundary
    for (std::size_t i = 0; i < 60; ++i)
        CHECK((res.assignment[i] == res.assignment[0]) == (i < 40));
}

TEST_CASE("wcss never increases between iterations") {
    for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull}) {
        auto mat = two_blobs(25, 80, 5, seed + 100);
        baselines::KMeansOptions opt;
        opt.k = 5;
        opt.seed = seed;
        auto res = baselines::kmeans_centroid_cluster(mat, opt);
        REQUIRE(res.wcss_trace.size() == res.iterations);
        for (std::size_t t = 1; t < res.wcss_trace.size(); ++t)
            CHECK(res.wcss_trace[t] <= res.wcss_trace[t - 1] + 1e-9);
    }
}

TEST_CASE("k-means validates its inputs") {
    EmbeddingMatrix empty;
    baselines::KMeansOptions opt;
    CHECK(thrown_errc([&] { baselines::kmeans_centroid_cluster(empty, opt); }) ==
          Errc::EmptyMatrix);

    auto mat = two_blobs(3, 6, 2, 4);
    opt.k = 7;
    CHECK(thrown_errc([&] { baselines::kmeans_centroid_cluster(mat, opt); }) ==
          Errc::DegenerateInput);
    opt.k = 0;
    CHECK(thrown_errc([&] { baselines::kmeans_centroid_cluster(mat, opt); }) ==
          Errc::DegenerateInput);
}

TEST_CASE("both seeding strategies are deterministic") {
    auto mat = two_blobs(30, 90, 4, 5);
    for (bool plusplus : {true, false}) {
        baselines::KMeansOptions opt;
        opt.k = 4;
        opt.seed = 17;
        opt.plusplus_seeding = plusplus;
        auto a = baselines::kmeans_centroid_cluster(mat, opt);
        auto b = baselines::kmeans_centroid_cluster(mat, opt);
        CHECK(a.members == b.members);
        CHECK(a.assignment == b.assignment);
        CHECK(a.wcss_trace == b.wcss_trace);
        CHECK(a.chosen_cluster == b.chosen_cluster);
        CHECK(a.iterations == b.iterations);

        CHECK(std::is_sorted(a.members.begin(), a.members.end()));
        for (TokenId id : a.members) CHECK(a.assignment[id] == a.chosen_cluster);
    }
}

}  // TEST_SUITE
