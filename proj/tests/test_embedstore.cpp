#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "glitchhunter/embedstore.hpp"
#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"
#include "helpers.hpp"

using namespace glitchhunter;
using testutil::TempDir;
using testutil::thrown_errc;

namespace {

ModelBundle random_bundle(std::size_t n, std::size_t m, std::uint64_t seed) {
    ModelBundle b;
    b.model_name = "fixture-" + std::to_string(seed);
    b.vocab.strings.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.vocab.strings[i] = "tok_" + std::to_string(i);
    b.embeddings.rows = n;
    b.embeddings.cols = m;
    b.embeddings.data.resize(n * m);
    util::Rng rng(seed);
    for (auto& v : b.embeddings.data) v = float(rng.uniform(-4.0, 4.0));
    return b;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
    return true;
}

}  // namespace

TEST_SUITE("embedstore") {

TEST_CASE("one-cell bundle round-trips") {
    TempDir dir;
    ModelBundle b;
    b.model_name = "tiny";
    b.vocab.strings = {"only"};
    b.embeddings.rows = 1;
    b.embeddings.cols = 1;
    b.embeddings.data = {0.0f};
    embedstore::write_model_bundle(dir.path, b);
    auto loaded = embedstore::load_model_bundle(dir.path);
    CHECK(loaded.model_name == "tiny");
    CHECK(loaded.vocab.strings == b.vocab.strings);
    CHECK(loaded.embeddings.rows == 1);
    CHECK(loaded.embeddings.cols == 1);
    CHECK(bit_equal(loaded.embeddings.data, b.embeddings.data));
}

TEST_CASE("random bundles round-trip bit-exactly") {
    for (auto [n, m, seed] : {std::tuple<std::size_t, std::size_t, std::uint64_t>{4, 3, 1},
                              {100, 8, 2},
                              {17, 5, 3}}) {
        TempDir dir;
        auto b = random_bundle(n, m, seed);
        // vocab strings are arbitrary bytes, including empties and non-ascii
        b.vocab.strings[0] = "";
        b.vocab.strings[1] = " leading space";
        b.vocab.strings[2] = "r\xC3\xA9" "alis";
        embedstore::write_model_bundle(dir.path, b);
        auto loaded = embedstore::load_model_bundle(dir.path);
        CHECK(loaded.model_name == b.model_name);
        CHECK(loaded.vocab.strings == b.vocab.strings);
        CHECK(loaded.embeddings.rows == n);
        CHECK(loaded.embeddings.cols == m);
        CHECK(bit_equal(loaded.embeddings.data, b.embeddings.data));
    }
}

TEST_CASE("row spans address the stored values") {
    TempDir dir;
    ModelBundle b;
    b.model_name = "id2";
    b.vocab.strings = {"a", "b"};
    b.embeddings.rows = 2;
    b.embeddings.cols = 2;
    b.embeddings.data = {1.0f, 0.0f, 0.0f, 1.0f};
    embedstore::write_model_bundle(dir.path, b);
    auto loaded = embedstore::load_model_bundle(dir.path);
    auto r0 = loaded.embeddings.row(0);
    auto r1 = loaded.embeddings.row(1);
    CHECK(r0[0] == 1.0f);
    CHECK(r0[1] == 0.0f);
    CHECK(r1[0] == 0.0f);
    CHECK(r1[1] == 1.0f);
}

TEST_CASE("empty matrices are refused on write") {
    TempDir dir;
    ModelBundle b;
    b.model_name = "empty";
    CHECK(thrown_errc([&] { embedstore::write_model_bundle(dir.path, b); }) == Errc::EmptyMatrix);
    b.embeddings.rows = 3;
    b.embeddings.cols = 0;
    CHECK(thrown_errc([&] { embedstore::write_model_bundle(dir.path, b); }) == Errc::EmptyMatrix);
}

TEST_CASE("write validates buffer and vocab sizes") {
    TempDir dir;
    auto b = random_bundle(4, 3, 9);
    b.embeddings.data.pop_back();
    CHECK(thrown_errc([&] { embedstore::write_model_bundle(dir.path, b); }) == Errc::MetaMismatch);
    b = random_bundle(4, 3, 9);
    b.vocab.strings.pop_back();
    CHECK(thrown_errc([&] { embedstore::write_model_bundle(dir.path, b); }) ==
          Errc::VocabLengthMismatch);
}

TEST_CASE("load rejects malformed bundles with specific codes") {
    TempDir dir;
    auto b = random_bundle(3, 2, 7);
    embedstore::write_model_bundle(dir.path, b);

    SUBCASE("missing directory") {
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path / "absent"); }) ==
              Errc::MissingFile);
    }
    SUBCASE("meta without required fields") {
        std::ofstream(dir.path / "meta.json") << "{\"n\": 3}";
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) == Errc::MetaMismatch);
    }
    SUBCASE("negative dimension") {
        std::ofstream(dir.path / "meta.json")
            << "{\"n\": -3, \"m\": 2, \"model_name\": \"x\"}";
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) == Errc::MetaMismatch);
    }
    SUBCASE("zero dimension") {
        std::ofstream(dir.path / "meta.json")
            << "{\"n\": 0, \"m\": 2, \"model_name\": \"x\"}";
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) == Errc::EmptyMatrix);
    }
    SUBCASE("vocab length out of step with meta") {
        std::ofstream(dir.path / "vocab.json") << "[\"a\", \"b\"]";
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) ==
              Errc::VocabLengthMismatch);
    }
    SUBCASE("vocab not an array") {
        std::ofstream(dir.path / "vocab.json") << "{\"a\": 1}";
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) ==
              Errc::VocabLengthMismatch);
    }
    SUBCASE("truncated embeddings file") {
        std::filesystem::resize_file(dir.path / "embeddings.bin", 3 * 2 * 4 - 2);
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) == Errc::MetaMismatch);
    }
    SUBCASE("oversized embeddings file") {
        std::filesystem::resize_file(dir.path / "embeddings.bin", 3 * 2 * 4 + 4);
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) == Errc::MetaMismatch);
    }
    SUBCASE("non-finite entry") {
        // little-endian binary32 quiet NaN in the second slot
        std::fstream bin(dir.path / "embeddings.bin",
                         std::ios::binary | std::ios::in | std::ios::out);
        bin.seekp(4);
        const unsigned char nan_bytes[4] = {0x00, 0x00, 0xC0, 0x7F};
        bin.write(reinterpret_cast<const char*>(nan_bytes), 4);
        bin.close();
        CHECK(thrown_errc([&] { embedstore::load_model_bundle(dir.path); }) ==
              Errc::NonFiniteEntry);
    }
}

TEST_CASE("full vocabulary-scale matrix loads") {
    // llama-2 shape, written sparse so the fixture stays cheap on disk
    TempDir dir;
    const std::size_t n = 32000, m = 4096;
    {
        std::ofstream meta(dir.path / "meta.json");
        meta << "{\"n\": " << n << ", \"m\": " << m << ", \"model_name\": \"big\"}";
        std::ofstream vocab(dir.path / "vocab.json");
        vocab << "[";
        for (std::size_t i = 0; i < n; ++i) vocab << (i ? "," : "") << "\"t" << i << "\"";
        vocab << "]";
        std::ofstream bin(dir.path / "embeddings.bin", std::ios::binary);
    }
    std::filesystem::resize_file(dir.path / "embeddings.bin", std::uintmax_t(4) * n * m);
    auto loaded = embedstore::load_model_bundle(dir.path);
    CHECK(loaded.embeddings.rows == n);
    CHECK(loaded.embeddings.cols == m);
    CHECK(loaded.embeddings.data.size() == n * m);
    CHECK(loaded.embeddings.data[0] == 0.0f);
    CHECK(loaded.embeddings.data[n * m - 1] == 0.0f);
    CHECK(loaded.vocab.strings[n - 1] == "t31999");
}

TEST_CASE("gather_rows keeps the requested order and duplicates") {
    auto b = random_bundle(5, 3, 21);
    std::vector<TokenId> ids{2, 0, 2, 4};
    auto picked = embedstore::gather_rows(b.embeddings, ids);
    REQUIRE(picked.rows == 4);
    REQUIRE(picked.cols == 3);
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(picked.row(r)[c] == b.embeddings.row(ids[r])[c]);

    std::vector<TokenId> bad{1, 5};
    CHECK(thrown_errc([&] { embedstore::gather_rows(b.embeddings, bad); }) == Errc::OutOfRangeId);
}

}  // TEST_SUITE
