#pragma once

#include <cstdint>
#include <vector>

#include "glitchhunter/embedstore.hpp"
#include "glitchhunter/taxonomy.hpp"

namespace glitchhunter::baselines {

// Uniform sample without replacement of floor(fraction * n) token ids, sorted ascending.
// fraction must lie in (0, 1].
std::vector<TokenId> random_sampling(std::size_t n, double fraction, std::uint64_t seed);

// Same draw as random_sampling, then tokens whose trimmed lowercased string is a
// dictionary word are dropped before testing.
std::vector<TokenId> rule_based_sampling(const Vocabulary& vocab, double fraction,
                                         std::uint64_t seed,
                                         const taxonomy::WordList& words);

struct KMeansOptions {
    std::uint32_t k = 50;
    std::uint64_t seed = 0;
    std::uint32_t max_iters = 100;
    bool plusplus_seeding = true;
};

struct KMeansResult {
    std::vector<TokenId> members;      // tokens in the chosen cluster, sorted ascending
    std::uint32_t chosen_cluster = 0;  // cluster whose center is nearest the global mean
    std::vector<double> wcss_trace;    // within-cluster sum of squares after each iteration
    std::vector<std::uint32_t> assignment;
    std::uint32_t iterations = 0;
};

// Lloyd k-means on the embedding rows; candidates are the members of the cluster
// whose center lies nearest the mean of all rows. Deterministic for a fixed seed.
KMeansResult kmeans_centroid_cluster(const EmbeddingMatrix& matrix, const KMeansOptions& options);

}  // namespace glitchhunter::baselines
