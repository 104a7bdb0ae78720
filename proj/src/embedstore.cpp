#include "glitchhunter/embedstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "glitchhunter/error.hpp"

namespace glitchhunter::embedstore {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::IoFailure, path.string() + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string());
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

}  // namespace

ModelBundle load_model_bundle(const std::filesystem::path& dir) {
    nlohmann::json meta = read_json_file(dir / "meta.json");
    if (!meta.contains("n") || !meta.contains("m") || !meta.contains("model_name") ||
        !meta["n"].is_number_integer() || !meta["m"].is_number_integer() ||
        !meta["model_name"].is_string()) {
        throw Error(Errc::MetaMismatch, "meta.json must carry integer n, m and string model_name");
    }
    std::int64_t n = meta["n"].get<std::int64_t>();
    std::int64_t m = meta["m"].get<std::int64_t>();
    if (n < 0 || m < 0) throw Error(Errc::MetaMismatch, "negative n or m in meta.json");
    if (n == 0 || m == 0) throw Error(Errc::EmptyMatrix, "meta.json declares an empty matrix");

    ModelBundle bundle;
    bundle.model_name = meta["model_name"].get<std::string>();

    nlohmann::json vocab = read_json_file(dir / "vocab.json");
    if (!vocab.is_array()) throw Error(Errc::VocabLengthMismatch, "vocab.json is not an array");
    if (std::int64_t(vocab.size()) != n) {
        throw Error(Errc::VocabLengthMismatch,
                    "vocab has " + std::to_string(vocab.size()) + " entries, meta says n=" +
                        std::to_string(n));
    }
    bundle.vocab.strings.reserve(std::size_t(n));
    for (const auto& entry : vocab) {
        if (!entry.is_string())
            throw Error(Errc::VocabLengthMismatch, "vocab.json entry is not a string");
        bundle.vocab.strings.push_back(entry.get<std::string>());
    }

    const std::filesystem::path bin = dir / "embeddings.bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(Errc::MissingFile, bin.string());
    in.seekg(0, std::ios::end);
    std::uint64_t byte_count = std::uint64_t(in.tellg());
    in.seekg(0, std::ios::beg);
    std::uint64_t expected = 4ull * std::uint64_t(n) * std::uint64_t(m);
    if (byte_count != expected) {
        throw Error(Errc::MetaMismatch, "embeddings.bin holds " + std::to_string(byte_count) +
                                            " bytes, meta implies " + std::to_string(expected));
    }

    bundle.embeddings.rows = std::size_t(n);
    bundle.embeddings.cols = std::size_t(m);
    bundle.embeddings.data.resize(std::size_t(n) * std::size_t(m));

    // Read in chunks and decode explicitly as little-endian binary32.
    constexpr std::size_t kChunkFloats = 1 << 20;
    std::vector<unsigned char> buf(kChunkFloats * 4);
    std::size_t written = 0;
    while (written < bundle.embeddings.data.size()) {
        std::size_t want = std::min(kChunkFloats, bundle.embeddings.data.size() - written);
        in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(want * 4));
        if (std::size_t(in.gcount()) != want * 4)
            throw Error(Errc::IoFailure, "short read from " + bin.string());
        for (std::size_t i = 0; i < want; ++i) {
            std::uint32_t u = std::uint32_t(buf[4 * i]) | (std::uint32_t(buf[4 * i + 1]) << 8) |
                              (std::uint32_t(buf[4 * i + 2]) << 16) |
                              (std::uint32_t(buf[4 * i + 3]) << 24);
            float f = std::bit_cast<float>(u);
            if (!std::isfinite(f))
                throw Error(Errc::NonFiniteEntry,
                            "non-finite value at flat index " + std::to_string(written + i));
            bundle.embeddings.data[written + i] = f;
        }
        written += want;
    }
    return bundle;
}

void write_model_bundle(const std::filesystem::path& dir, const ModelBundle& bundle) {
    if (bundle.embeddings.rows == 0 || bundle.embeddings.cols == 0)
        throw Error(Errc::EmptyMatrix, "refusing to write an empty matrix");
    if (bundle.embeddings.data.size() != bundle.embeddings.rows * bundle.embeddings.cols)
        throw Error(Errc::MetaMismatch, "matrix buffer does not match rows*cols");
    if (bundle.vocab.size() != bundle.embeddings.rows)
        throw Error(Errc::VocabLengthMismatch, "vocab size does not match matrix rows");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    nlohmann::ordered_json meta;
    meta["n"] = bundle.embeddings.rows;
    meta["m"] = bundle.embeddings.cols;
    meta["model_name"] = bundle.model_name;
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");

    nlohmann::json vocab = nlohmann::json::array();
    for (const auto& s : bundle.vocab.strings) vocab.push_back(s);
    write_text_file(dir / "vocab.json", vocab.dump() + "\n");

    std::ofstream out(dir / "embeddings.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot open embeddings.bin for writing");
    std::vector<unsigned char> buf;
    buf.reserve(std::min<std::size_t>(bundle.embeddings.data.size() * 4, std::size_t(1) << 22));
    for (float f : bundle.embeddings.data) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(f);
        buf.push_back((unsigned char)(u & 0xFF));
        buf.push_back((unsigned char)((u >> 8) & 0xFF));
        buf.push_back((unsigned char)((u >> 16) & 0xFF));
        buf.push_back((unsigned char)((u >> 24) & 0xFF));
        if (buf.size() >= (std::size_t(1) << 22)) {
            out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
            buf.clear();
        }
    }
    if (!buf.empty())
        out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!out) throw Error(Errc::IoFailure, "short write to embeddings.bin");
}

EmbeddingMatrix gather_rows(const EmbeddingMatrix& matrix, std::span<const TokenId> ids) {
    EmbeddingMatrix out;
    out.rows = ids.size();
    out.cols = matrix.cols;
    out.data.resize(out.rows * out.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= matrix.rows)
            throw Error(Errc::OutOfRangeId, "row " + std::to_string(ids[i]));
        std::memcpy(out.data.data() + i * out.cols, matrix.data.data() + std::size_t(ids[i]) * out.cols,
                    out.cols * sizeof(float));
    }
    return out;
}

}  // namespace glitchhunter::embedstore
