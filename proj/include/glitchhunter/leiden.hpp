#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "glitchhunter/teg.hpp"

namespace glitchhunter::leiden {

// node -> community label; labels are dense 0..c-1, numbered by first
// occurrence in node order.
using Partition = std::vector<std::uint32_t>;

enum class Objective {
    // Constant Potts model: Q = sum_c [ w_int(c) - resolution * n_c(n_c-1)/2 ].
    Cpm,
    // Modularity with a resolution factor; the pair penalty scales with node
    // strengths and total weight instead of raw pair counts, so the same
    // resolution value stays meaningful across graph sizes.
    RbModularity,
};

struct LeidenParams {
    double resolution = 75.0;
    std::uint64_t seed = 0;
    Objective objective = Objective::Cpm;
    int max_passes = 100;
    // Independent seeded runs; the best-quality partition wins, ties keep the
    // earliest run. Deterministic for a fixed seed.
    int restarts = 2;
};

struct LeidenResult {
    Partition partition;
    // Quality of the flattened partition after each outer pass, on the
    // requested objective. Non-decreasing by construction.
    std::vector<double> pass_quality;
    double quality = 0.0;
};

double cpm_quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
                   double resolution);
double rb_quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
                  double resolution);
double quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
               double resolution, Objective objective);

LeidenResult run(const teg::TokenEmbeddingGraph& graph, const LeidenParams& params);

std::size_t community_count(const Partition& partition);
std::vector<std::vector<TokenId>> communities_of(const Partition& partition);

// JSON array, one community id per node.
void dump_partition_json(const Partition& partition, std::ostream& out);

}  // namespace glitchhunter::leiden
