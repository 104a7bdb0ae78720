#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace glitchhunter {

using TokenId = std::uint32_t;

struct Vocabulary {
    std::vector<std::string> strings;

    std::size_t size() const { return strings.size(); }
    const std::string& at(TokenId id) const { return strings.at(id); }
};

// Row-major token embedding matrix. Values are stored as the 32-bit floats
// they arrive as on disk; all arithmetic downstream runs in double.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data.data() + i * cols, cols);
    }
    float* row_mut(std::size_t i) { return data.data() + i * cols; }
};

struct ModelBundle {
    std::string model_name;
    Vocabulary vocab;
    EmbeddingMatrix embeddings;
};

namespace embedstore {

// Directory layout: meta.json {"n","m","model_name"}, vocab.json (array of n
// strings), embeddings.bin (exactly 4*n*m bytes, little-endian binary32,
// row-major). load(write(b)) reproduces b bit-exactly.
ModelBundle load_model_bundle(const std::filesystem::path& dir);
void write_model_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);

// New matrix holding the selected rows in the given order.
EmbeddingMatrix gather_rows(const EmbeddingMatrix& matrix, std::span<const TokenId> ids);

}  // namespace embedstore
}  // namespace glitchhunter
