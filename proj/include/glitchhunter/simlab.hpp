#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glitchhunter/embedstore.hpp"

namespace glitchhunter::simlab {

struct SimSpec {
    std::size_t n = 2000;
    std::size_t m = 32;
    std::size_t glitch_count = 200;
    std::uint32_t cluster_count = 3;
    double cluster_tightness = 0.1;  // intra-cluster stddev relative to the global stddev of 1
    double scatter_fraction = 0.0;   // fraction of glitch tokens placed like normal tokens
    std::uint64_t seed = 42;
    std::string model_name = "simlab";
};

// Sentinel cluster id for tokens that are not clustered glitch tokens.
inline constexpr std::uint32_t kNoCluster = 0xFFFFFFFFu;

struct SimBundle {
    ModelBundle bundle;
    std::vector<TokenId> planted;           // sorted ascending
    std::vector<std::uint32_t> cluster_of;  // size n; kNoCluster for normals and scattered glitch
    SimSpec spec;
};

// Synthetic token string for id i. Cycles through five shapes: word concatenations,
// letter gibberish, symbol runs, backslash-mixed, and non-ASCII. Distinct ids always
// yield distinct strings, and the five shapes start with disjoint characters.
std::string synth_token_string(std::size_t i);

// Normal tokens ~ N(0, I). Clustered glitch tokens sit in cluster_count Gaussian
// blobs of stddev cluster_tightness whose centers huddle around a region center
// drawn from the global distribution, so the planted set is tight both within and
// across blobs. Deterministic per seed.
SimBundle generate(const SimSpec& spec);

// Writes the embedstore bundle plus truth.json (sorted planted id array).
void write(const SimBundle& sim, const std::filesystem::path& dir);

std::vector<TokenId> load_truth(const std::filesystem::path& path);

}  // namespace glitchhunter::simlab
